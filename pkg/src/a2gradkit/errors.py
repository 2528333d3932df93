"""Exception types shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, RunAbort -> 3,
I/O problems (plain OSError) -> 4.
"""


class ConfigError(ValueError):
    """A configuration value is out of its documented range or inconsistent."""


class CapabilityError(ConfigError):
    """An oracle capability (exact gradient, known optimum) was required but absent."""


class ContractError(ValueError):
    """A call broke an API contract, e.g. mismatched vector dimensions."""


class RunAbort(RuntimeError):
    """An optimizer run produced a non-finite iterate and stopped.

    `iteration` is the step index at which the bad value first appeared.
    """

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration

    def __reduce__(self):
        return (RunAbort, (self.args[0], self.iteration))

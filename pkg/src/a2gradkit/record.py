"""Per-iteration metric tables and their CSV form.

Schema `# a2grad-kit v1`: row k describes the step that produced the state
after k+1 updates. Columns:

  k              step index, 0..K
  f_reported     objective at the reported point (xbar for the three-sequence
                 form, y for the two-sequence form; x itself for baselines);
                 NaN when the oracle has no objective or the row was skipped
                 by the objective cadence
  f_eval         objective at the gradient-evaluation point (equals
                 f_reported whenever the two coincide)
  suboptimality  f_reported - f*, NaN when the optimum is unknown
  h_inf          max-norm of the scaling vector used by the step (baselines:
                 max of sqrt(second moment); 0 for plain SGD)
  alpha, gamma   schedule values consumed by the step; NaN for baselines
  step_min/max   extremes of the effective per-coordinate step divisor's
                 reciprocal, 1/(gamma + beta*h) (baselines: lr/(sqrt(v)+eps))
  wall_nanos     monotonic wall time of the step

Wall time is excluded from the determinism guarantee, so the main CSV omits
it; it lives in a `<stem>.timing.csv` sidecar that `read_csv` merges back.
Floats are serialized with 17 significant digits, which round-trips float64
exactly.
"""

from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError

SCHEMA_HEADER = "# a2grad-kit v1"
_COLUMNS = ("k", "f_reported", "f_eval", "suboptimality", "h_inf",
            "alpha", "gamma", "step_min", "step_max")
_FLOAT_COLUMNS = _COLUMNS[1:]


@dataclass(eq=False)
class RunRecord:
    """Column arrays of one run; exactly K+1 rows with k increasing from 0."""

    k: np.ndarray
    f_reported: np.ndarray
    f_eval: np.ndarray
    suboptimality: np.ndarray
    h_inf: np.ndarray
    alpha: np.ndarray
    gamma: np.ndarray
    step_min: np.ndarray
    step_max: np.ndarray
    wall_nanos: np.ndarray

    @classmethod
    def empty(cls, n: int) -> "RunRecord":
        if n < 1:
            raise ConfigError(f"record length must be >= 1, got {n}")
        cols = {f.name: np.full(n, np.nan) for f in fields(cls)}
        cols["k"] = np.zeros(n, dtype=np.int64)
        cols["wall_nanos"] = np.zeros(n, dtype=np.int64)
        return cls(**cols)

    def __len__(self) -> int:
        return self.k.shape[0]

    def truncated(self, n: int) -> "RunRecord":
        """Copy of the first n rows (used when a run aborts mid-flight)."""
        return RunRecord(**{f.name: getattr(self, f.name)[:n].copy() for f in fields(self)})


def records_equal(a: RunRecord, b: RunRecord, include_wall: bool = False) -> bool:
    """Exact equality, NaN == NaN; wall times are compared only on request."""
    names = [f.name for f in fields(RunRecord)]
    if not include_wall:
        names.remove("wall_nanos")
    return all(np.array_equal(getattr(a, n), getattr(b, n), equal_nan=True) for n in names)


def _timing_path(path: Path) -> Path:
    return path.with_name(path.stem + ".timing.csv")


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(record: RunRecord, path) -> None:
    """Emit the main CSV plus the timing sidecar next to it."""
    path = Path(path)
    lines = [SCHEMA_HEADER, ",".join(_COLUMNS)]
    for i in range(len(record)):
        row = [str(int(record.k[i]))]
        row += [_fmt(float(getattr(record, c)[i])) for c in _FLOAT_COLUMNS]
        lines.append(",".join(row))
    path.write_text("\n".join(lines) + "\n")
    tlines = [SCHEMA_HEADER + " timing", "k,wall_nanos"]
    for i in range(len(record)):
        tlines.append(f"{int(record.k[i])},{int(record.wall_nanos[i])}")
    _timing_path(path).write_text("\n".join(tlines) + "\n")


def read_csv(path) -> RunRecord:
    """Parse a run CSV (and its timing sidecar when present) back exactly."""
    path = Path(path)
    text = path.read_text()
    lines = text.splitlines()
    if not lines or lines[0].strip() != SCHEMA_HEADER:
        raise ConfigError(f"{path}: not a '{SCHEMA_HEADER}' file")
    if len(lines) < 3 or lines[1].strip() != ",".join(_COLUMNS):
        raise ConfigError(f"{path}: unexpected column header")
    n = len(lines) - 2
    rec = RunRecord.empty(n)
    for i, line in enumerate(lines[2:]):
        parts = line.split(",")
        if len(parts) != len(_COLUMNS):
            raise ConfigError(f"{path}: row {i} has {len(parts)} fields")
        rec.k[i] = int(parts[0])
        for c, raw in zip(_FLOAT_COLUMNS, parts[1:]):
            getattr(rec, c)[i] = float(raw)
    tpath = _timing_path(path)
    if tpath.exists():
        tlines = tpath.read_text().splitlines()
        if len(tlines) - 2 == n:
            for i, line in enumerate(tlines[2:]):
                rec.wall_nanos[i] = int(line.split(",")[1])
    return rec

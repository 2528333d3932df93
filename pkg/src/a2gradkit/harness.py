"""Experiment configuration, sweeps, CSV emission, rate fitting, comparisons.

Configurations are YAML (key-value with nesting); serialization is canonical
(sorted keys), so serialize -> parse -> serialize is byte-identical. A config
names one problem, one method, a horizon, and repeat/seed bookkeeping:

    name: quad-uni
    seed: 7
    iters: 2000
    repeats: 3
    problem:
      kind: quadratic          # quadratic | logistic | logistic_csv | counterexample
      dim: 50
      condition: 100.0
      noise: {kind: gaussian, level: 1.0}
    method:
      kind: a2grad             # a2grad | sgd | adagrad | adam | amsgrad
      scheme: uniform
      lipschitz: auto
      beta: 10.0

Repeat r runs with seed `seed + r`. Per-run CSVs land in `<out>/run_<name>_
<seed>.csv` plus a timing sidecar; aborted runs leave a truncated CSV and a
`.err` sidecar. A summary CSV aggregates mean/stddev across completed repeats.
"""

import string
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import baselines, optimizer, problems
from .core import CAP_OBJECTIVE, has_capability
from .errors import ConfigError, RunAbort
from .record import RunRecord, records_equal, write_csv
from .schedule import MomentumSchedule

_NAME_CHARS = set(string.ascii_letters + string.digits + "-_.")

_CONFIG_KEYS = {"name", "problem", "method", "iters", "repeats", "seed",
                "objective_every", "parallel", "out"}
_PROBLEM_KEYS = {
    "quadratic": {"dim", "condition", "seed", "noise"},
    "logistic": {"n", "d", "classes", "separation", "seed", "mini_batch", "l2"},
    "logistic_csv": {"path", "classes", "mini_batch", "l2"},
    "counterexample": {"big"},
}
_METHOD_KEYS = {
    "a2grad": {"lipschitz", "beta", "scheme", "rho", "q", "delta", "form"},
    "baseline": {"learning_rate", "rate_policy", "beta1", "beta2", "eps",
                 "bias_correction", "second_moment"},
}


@dataclass
class ExperimentConfig:
    """One experiment: problem spec, method spec, horizon, repeats, seeds."""

    name: str
    problem: dict
    method: dict
    iters: int
    repeats: int = 1
    seed: int = 0
    objective_every: int = 1
    parallel: int = 1
    out: str | None = None

    def __post_init__(self):
        if not self.name or not set(self.name) <= _NAME_CHARS:
            raise ConfigError(f"name must be non-empty [A-Za-z0-9._-], got {self.name!r}")
        if self.iters < 1:
            raise ConfigError(f"iters (horizon) must be >= 1, got {self.iters}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.objective_every < 0:
            raise ConfigError(f"objective_every must be >= 0, got {self.objective_every}")
        if self.parallel < 1:
            raise ConfigError(f"parallel must be >= 1, got {self.parallel}")
        # Build both specs once so config errors surface at parse time.
        build_problem(self.problem)
        build_method(self.method)


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"config root must be a mapping, got {type(data).__name__}")
    unknown = set(data) - _CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    missing = {"name", "problem", "method", "iters"} - set(data)
    if missing:
        raise ConfigError(f"missing config keys: {sorted(missing)}")
    return ExperimentConfig(
        name=str(data["name"]),
        problem=dict(data["problem"]),
        method=dict(data["method"]),
        iters=int(data["iters"]),
        repeats=int(data.get("repeats", 1)),
        seed=int(data.get("seed", 0)),
        objective_every=int(data.get("objective_every", 1)),
        parallel=int(data.get("parallel", 1)),
        out=None if data.get("out") is None else str(data["out"]),
    )


def to_yaml(config: ExperimentConfig) -> str:
    return yaml.safe_dump(asdict(config), sort_keys=True, default_flow_style=False)


def from_yaml(text: str) -> ExperimentConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    return config_from_dict(data)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return from_yaml(path.read_text())


def _check_keys(spec: dict, allowed: set[str], what: str) -> None:
    unknown = set(spec) - allowed - {"kind"}
    if unknown:
        raise ConfigError(f"unknown {what} keys: {sorted(unknown)}")


def build_problem(spec: dict):
    """Instantiate the problem a spec names; fresh instance per call."""
    kind = spec.get("kind")
    if kind == "quadratic":
        _check_keys(spec, _PROBLEM_KEYS[kind], "problem")
        noise_spec = spec.get("noise", {"kind": "none"})
        noise = problems.NoiseModel(
            kind=str(noise_spec.get("kind", "none")),
            level=float(noise_spec.get("level", 0.0)),
        )
        return problems.make_quadratic(
            dim=int(spec.get("dim", 50)),
            condition_number=float(spec.get("condition", 100.0)),
            seed=int(spec.get("seed", 0)),
            noise=noise,
        )
    if kind == "logistic":
        _check_keys(spec, _PROBLEM_KEYS[kind], "problem")
        return problems.make_logistic_synthetic(
            n=int(spec.get("n", 2000)),
            d=int(spec.get("d", 50)),
            classes=int(spec.get("classes", 10)),
            separation=float(spec.get("separation", 3.0)),
            seed=int(spec.get("seed", 0)),
            mini_batch=int(spec.get("mini_batch", 128)),
            l2=float(spec.get("l2", 0.0)),
        )
    if kind == "logistic_csv":
        _check_keys(spec, _PROBLEM_KEYS[kind], "problem")
        if "path" not in spec:
            raise ConfigError("logistic_csv problem requires a path")
        return problems.load_dataset_csv(
            spec["path"],
            classes=None if spec.get("classes") is None else int(spec["classes"]),
            mini_batch=int(spec.get("mini_batch", 128)),
            l2=float(spec.get("l2", 0.0)),
        )
    if kind == "counterexample":
        _check_keys(spec, _PROBLEM_KEYS[kind], "problem")
        return baselines.make_periodic_counterexample(big=float(spec.get("big", 5.0)))
    raise ConfigError(f"unknown problem kind {kind!r}")


def _resolve_lipschitz(value, oracle) -> float:
    if value is None or value == "auto":
        if isinstance(oracle, problems.QuadraticProblem):
            return oracle.lipschitz_constant()
        if isinstance(oracle, problems.LogisticProblem):
            return oracle.lipschitz_bound()
        raise ConfigError(
            "lipschitz: auto needs a problem with known curvature; set it explicitly"
        )
    return float(value)


def _problem_projection(oracle) -> optimizer.ProjectionSpec:
    if hasattr(oracle, "default_projection"):
        return oracle.default_projection()
    return optimizer.ProjectionSpec()


def build_method(spec: dict, oracle=None):
    """Validate a method spec; with an oracle, return the runner closure.

    The runner signature is run(oracle, K, seed, objective_every) -> RunRecord.
    The problem's default projection (the counterexample's box) is adopted
    automatically where the method supports projections.
    """
    kind = spec.get("kind")
    if kind == "a2grad":
        _check_keys(spec, _METHOD_KEYS["a2grad"], "method")
        if oracle is None:
            return None

        projection = _problem_projection(oracle)
        form = str(spec.get("form", "three_sequence"))
        config = optimizer.A2GradConfig(
            lipschitz=_resolve_lipschitz(spec.get("lipschitz", "auto"), oracle),
            beta=float(spec.get("beta", 10.0)),
            scheme=str(spec.get("scheme", "uniform")),
            rho=float(spec.get("rho", 0.9)),
            q=None if spec.get("q") is None else float(spec["q"]),
            delta_mode=str(spec.get("delta", "heuristic")),
            projection=projection,
            form=form,
        )

        def runner(oracle, K, seed, objective_every):
            return optimizer.run(config, oracle, K, seed, objective_every=objective_every)

        return runner
    if kind in baselines.METHODS:
        _check_keys(spec, _METHOD_KEYS["baseline"], "method")
        if oracle is None:
            return None
        config = baselines.BaselineConfig(
            method=kind,
            learning_rate=float(spec.get("learning_rate", 0.01)),
            rate_policy=str(spec.get("rate_policy", "constant")),
            beta1=float(spec.get("beta1", 0.9)),
            beta2=float(spec.get("beta2", 0.99)),
            eps=float(spec.get("eps", 1e-8)),
            bias_correction=bool(spec.get("bias_correction", True)),
            second_moment=str(spec.get("second_moment", "ema")),
            projection=_problem_projection(oracle),
        )

        def runner(oracle, K, seed, objective_every):
            return baselines.run_baseline(config, oracle, K, seed, objective_every=objective_every)

        return runner
    raise ConfigError(f"unknown method kind {kind!r}")


def _run_one_repeat(config_data: dict, repeat: int):
    """Worker for one repeat; returns (seed, record, abort_iteration | None)."""
    config = config_from_dict(config_data)
    oracle = build_problem(config.problem)
    runner = build_method(config.method, oracle)
    seed = config.seed + repeat
    try:
        rec = runner(oracle, config.iters, seed, config.objective_every)
        return seed, rec, None
    except RunAbort as err:
        return seed, getattr(err, "partial", RunRecord.empty(1)), err.iteration


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    seeds: list[int]
    aborted: dict[int, int] = field(default_factory=dict)  # seed -> iteration
    run_paths: list[Path] = field(default_factory=list)
    summary_path: Path | None = None

    @property
    def completed(self) -> list[RunRecord]:
        return [r for r, s in zip(self.records, self.seeds) if s not in self.aborted]


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run R repeats with seeds seed..seed+R-1 and emit CSVs when out is set."""
    payload = asdict(config)
    results = []
    if config.parallel > 1 and config.repeats > 1:
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            futures = [pool.submit(_run_one_repeat, payload, r) for r in range(config.repeats)]
            results = [f.result() for f in futures]
    else:
        results = [_run_one_repeat(payload, r) for r in range(config.repeats)]

    out = ExperimentResult(config=config,
                           records=[rec for _, rec, _ in results],
                           seeds=[seed for seed, _, _ in results])
    for seed, _, abort_iter in results:
        if abort_iter is not None:
            out.aborted[seed] = abort_iter

    if config.out is not None:
        out_dir = Path(config.out)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for seed, rec, abort_iter in results:
                path = out_dir / f"run_{config.name}_{seed}.csv"
                write_csv(rec, path)
                out.run_paths.append(path)
                if abort_iter is not None:
                    path.with_suffix(".err").write_text(
                        f"run aborted: non-finite iterate at iteration {abort_iter}\n"
                    )
            completed = out.completed
            if completed:
                out.summary_path = out_dir / f"summary_{config.name}.csv"
                write_summary(completed, out.summary_path)
        except OSError as exc:
            raise OSError(f"writing experiment output under {out_dir}: {exc}") from exc
    return out


def write_summary(records: list[RunRecord], path) -> None:
    """Mean/stddev (population) of objective and suboptimality per k."""
    n = len(records[0])
    if any(len(r) != n for r in records):
        raise ConfigError("summary requires records of equal length")
    f = np.stack([r.f_reported for r in records])
    s = np.stack([r.suboptimality for r in records])
    lines = ["# a2grad-kit v1 summary", "k,f_mean,f_std,subopt_mean,subopt_std"]
    f_mean, f_std = f.mean(axis=0), f.std(axis=0)
    s_mean, s_std = s.mean(axis=0), s.std(axis=0)
    for i in range(n):
        vals = (f_mean[i], f_std[i], s_mean[i], s_std[i])
        lines.append(f"{int(records[0].k[i])}," + ",".join(f"{v:.17g}" for v in vals))
    Path(path).write_text("\n".join(lines) + "\n")


SWEEP_AXES = {
    "beta": ("method", "beta"),
    "lip": ("method", "lipschitz"),
    "rho": ("method", "rho"),
    "q": ("method", "q"),
    "lr": ("method", "learning_rate"),
}


def sweep_experiment(config: ExperimentConfig, axis: str, values) -> list[ExperimentResult]:
    """One experiment per grid value; names gain a `_<axis><value>` suffix."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}, expected one of {sorted(SWEEP_AXES)}")
    if not values:
        raise ConfigError("sweep needs at least one value")
    section, key = SWEEP_AXES[axis]
    results = []
    for value in values:
        data = asdict(config)
        data[section] = dict(data[section])
        data[section][key] = value
        tag = f"{value:g}" if isinstance(value, float) else str(value)
        data["name"] = f"{config.name}_{axis}{tag}"
        results.append(run_experiment(config_from_dict(data)))
    return results


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    k_lo: int
    k_hi: int


def fit_rate_arrays(k: np.ndarray, values: np.ndarray, k_lo: int, k_hi: int,
                    tail_width: int = 1) -> RateFit:
    """Least squares on (log k, log tail-averaged values) over [k_lo, k_hi].

    The tail average at k is the mean of the trailing `tail_width` values.
    Nonpositive averages cannot be logged; the window start is shrunk past
    the last one with a warning, and an empty window is a config error.
    """
    if tail_width < 1:
        raise ConfigError(f"tail_width must be >= 1, got {tail_width}")
    k = np.asarray(k)
    values = np.asarray(values, dtype=np.float64)
    if not (1 <= k_lo < k_hi <= int(k.max())):
        raise ConfigError(f"fit window [{k_lo}, {k_hi}] outside data range [1, {int(k.max())}]")
    need = np.flatnonzero((k >= k_lo - tail_width + 1) & (k <= k_hi))
    if need.size == 0 or not np.all(np.isfinite(values[need])):
        raise ConfigError(
            "suboptimality is not densely recorded over the fit window; "
            "rerun with objective_every=1"
        )
    kw = k[need]
    vw = values[need]
    mask = kw >= k_lo
    ks = kw[mask].astype(np.float64)
    if tail_width == 1:
        avg = vw[mask]
    else:
        csum = np.concatenate(([0.0], np.cumsum(vw)))
        idx = np.flatnonzero(mask)
        lo_idx = np.maximum(idx - tail_width + 1, 0)
        avg = (csum[idx + 1] - csum[lo_idx]) / (idx + 1 - lo_idx)
    bad = np.flatnonzero(avg <= 0.0)
    if bad.size:
        cut = bad[-1] + 1
        if cut >= avg.size:
            raise ConfigError("no positive suboptimality left in the fit window")
        new_lo = int(ks[cut])
        warnings.warn(
            f"fit window shrunk to [{new_lo}, {k_hi}]: nonpositive values at the "
            "numerical floor were excluded",
            stacklevel=2,
        )
        ks = ks[cut:]
        avg = avg[cut:]
    x = np.log(ks)
    y = np.log(avg)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot < 1e-300 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return RateFit(slope=float(slope), intercept=float(intercept), r_squared=r2,
                   k_lo=int(ks[0]), k_hi=int(ks[-1]))


def fit_rate(record: RunRecord, k_lo: int, k_hi: int, tail_width: int = 1) -> RateFit:
    return fit_rate_arrays(record.k, record.suboptimality, k_lo, k_hi, tail_width)


@dataclass(frozen=True)
class MethodSummary:
    name: str
    final_mean: float
    final_std: float
    best_mean: float
    best_std: float


@dataclass
class ComparisonTable:
    rows: list[MethodSummary]

    def to_text(self) -> str:
        header = f"{'method':<24} {'final':>14} {'final_std':>12} {'best':>14} {'best_std':>12}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.name:<24} {r.final_mean:>14.6g} {r.final_std:>12.3g} "
                f"{r.best_mean:>14.6g} {r.best_std:>12.3g}"
            )
        return "\n".join(lines)


def compare_methods(configs: list[ExperimentConfig]) -> ComparisonTable:
    """Final and best-seen objective per method, mean and stddev over repeats.

    All configs must share the problem spec and horizon; each must name a
    problem whose objective is computable.
    """
    if not configs:
        raise ConfigError("compare needs at least one config")
    first = configs[0]
    for cfg in configs[1:]:
        if cfg.problem != first.problem or cfg.iters != first.iters:
            raise ConfigError(
                f"config {cfg.name!r} differs from {first.name!r} in problem or horizon"
            )
    if not has_capability(build_problem(first.problem), CAP_OBJECTIVE):
        raise ConfigError("compare requires a problem with a computable objective")
    rows = []
    for cfg in configs:
        result = run_experiment(cfg)
        completed = result.completed
        if not completed:
            raise ConfigError(f"config {cfg.name!r}: every repeat aborted")
        finals = np.array([r.f_reported[-1] for r in completed])
        bests = np.array([np.nanmin(r.f_reported) for r in completed])
        rows.append(MethodSummary(
            name=cfg.name,
            final_mean=float(finals.mean()),
            final_std=float(finals.std()),
            best_mean=float(bests.mean()),
            best_std=float(bests.std()),
        ))
    return ComparisonTable(rows=rows)


def selftest(tmp_dir=None) -> list[tuple[str, bool, str]]:
    """Fast subset of the invariant suite; returns (name, ok, detail) rows."""
    import tempfile

    from .core import make_rng
    from .scaling import make_scaler, update_scaler
    from .schedule import steps_array, validate_conditions

    checks: list[tuple[str, bool, str]] = []

    sched = MomentumSchedule(lipschitz=1.0)
    alpha, gamma, lam, lam_alpha = steps_array(sched, 1000)
    k = np.arange(1001)
    ok = bool(
        np.allclose(lam, 0.5 * (k + 1) * (k + 2), rtol=1e-12)
        and np.allclose(lam_alpha * gamma, 2.0, rtol=1e-12)
        and validate_conditions(sched, 1000).ok
    )
    checks.append(("schedule closed forms and conditions", ok, "K=1000"))

    rng = make_rng(7)
    ok = True
    for scheme in ("uniform", "incremental", "exponential"):
        state = make_scaler(scheme, 4, rho=0.9)
        prev = np.zeros(4)
        for k_i in range(200):
            h = update_scaler(state, rng.standard_normal(4))
            cur = (k_i + 1) * h
            if np.any(cur < prev * (1.0 - 1e-12) - 1e-12):
                ok = False
            prev = cur
    checks.append(("scaler monotone growth", ok, "3 schemes x 200 steps"))

    quad = problems.make_quadratic(8, 50.0, seed=3,
                                   noise=problems.NoiseModel("gaussian", 0.5))
    cfg3 = optimizer.A2GradConfig(lipschitz=50.0, beta=5.0, scheme="uniform",
                                  delta_mode="exact", form="three_sequence")
    cfg2 = optimizer.A2GradConfig(lipschitz=50.0, beta=5.0, scheme="uniform",
                                  delta_mode="exact", form="two_sequence")
    s3 = optimizer.init_state(cfg3, np.zeros(8))
    s2 = optimizer.init_state(cfg2, np.zeros(8))
    r3, r2 = make_rng(11), make_rng(11)
    dev = 0.0
    for _ in range(50):
        i3 = optimizer.step_three_sequence(s3, cfg3, quad, r3)
        i2 = optimizer.step_two_sequence(s2, cfg2, quad, r2)
        scale = max(1.0, float(np.abs(i3.eval_point).max()))
        dev = max(dev, float(np.abs(i3.eval_point - i2.eval_point).max()) / scale)
    checks.append(("form equivalence", dev <= 1e-9, f"max rel dev {dev:.2e}"))

    rec_a = optimizer.run(cfg3, quad, 50, seed=5)
    rec_b = optimizer.run(cfg3, quad, 50, seed=5)
    checks.append(("determinism", records_equal(rec_a, rec_b), "same config, same seed"))

    with tempfile.TemporaryDirectory(dir=tmp_dir) as td:
        path = Path(td) / "roundtrip.csv"
        write_csv(rec_a, path)
        from .record import read_csv

        same = records_equal(read_csv(path), rec_a, include_wall=True)
    checks.append(("CSV round trip", same, str(len(rec_a)) + " rows"))
    return checks

"""Command line front end.

Verbs:
    run        execute one experiment (R repeats, per-run CSVs plus a summary)
    sweep      expand one comma-separated hyperparameter grid into experiments
    fit        least-squares rate slope on an existing run CSV
    compare    final/best objective table across method configs
    selftest   fast invariant checks (schedule, scalers, forms, CSV round trip)

Experiments come from a YAML config (``--config``); without one, a small
quadratic template is used and the ``--optimizer``/``--problem``/grid flags
fill it in. Flags always win over the config file.

Exit codes: 0 success, 2 configuration error, 3 runtime abort (non-finite
iterate), 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import asdict
from pathlib import Path

from . import harness
from .backend import ENV_VAR, active_backend
from .errors import ConfigError, RunAbort
from .record import read_csv

_OPTIMIZERS = {
    "a2grad-uni": {"kind": "a2grad", "scheme": "uniform"},
    "a2grad-inc": {"kind": "a2grad", "scheme": "incremental"},
    "a2grad-exp": {"kind": "a2grad", "scheme": "exponential"},
    "sgd": {"kind": "sgd"},
    "adagrad": {"kind": "adagrad"},
    "adam": {"kind": "adam"},
    "amsgrad": {"kind": "amsgrad"},
}

_PROBLEMS = {
    "quadratic": {"kind": "quadratic"},
    "logistic": {"kind": "logistic"},
    "counterexample": {"kind": "counterexample"},
}

_AXIS_FLAGS = ("beta", "lip", "rho", "q", "lr")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="a2grad-kit",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--backend",
        choices=("auto", "numba", "numpy"),
        default=None,
        help=f"kernel backend for this invocation (sets {ENV_VAR})",
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    run_p = verbs.add_parser("run", help="run one experiment config")
    _add_experiment_flags(run_p)
    run_p.set_defaults(func=_cmd_run)

    sweep_p = verbs.add_parser("sweep", help="run a hyperparameter grid")
    _add_experiment_flags(sweep_p)
    sweep_p.set_defaults(func=_cmd_sweep)

    fit_p = verbs.add_parser("fit", help="fit a log-log rate slope to a run CSV")
    fit_p.add_argument("--csv", required=True, help="run CSV emitted by `run`")
    fit_p.add_argument("--k-lo", type=int, required=True, dest="k_lo")
    fit_p.add_argument("--k-hi", type=int, required=True, dest="k_hi")
    fit_p.add_argument("--tail-width", type=int, default=1, dest="tail_width",
                       help="trailing average width damping stochastic jitter")
    fit_p.add_argument("--column", choices=("suboptimality", "f_reported"),
                       default="suboptimality")
    fit_p.set_defaults(func=_cmd_fit)

    cmp_p = verbs.add_parser("compare", help="table of final/best objective per method")
    cmp_p.add_argument("--config", action="append", required=True,
                       help="experiment config; repeat the flag, one per method")
    cmp_p.add_argument("--out", default=None, help="directory for comparison.txt")
    cmp_p.set_defaults(func=_cmd_compare)

    self_p = verbs.add_parser("selftest", help="fast invariant checks")
    self_p.add_argument("--out", default=None, help="scratch directory")
    self_p.set_defaults(func=_cmd_selftest)
    return parser


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="YAML experiment config")
    parser.add_argument("--out", default=None, help="output directory (default: .)")
    parser.add_argument("--seed", type=int, default=None, help="base seed; repeats use seed..seed+R-1")
    parser.add_argument("--iters", type=int, default=None, help="horizon K (run performs steps 0..K)")
    parser.add_argument("--repeats", type=int, default=None)
    parser.add_argument("--parallel", type=int, default=None, help="worker processes for repeats")
    parser.add_argument("--objective-every", type=int, default=None, dest="objective_every",
                        help="objective cadence: 1 every row, m every m-th row, 0 final only")
    parser.add_argument("--optimizer", choices=sorted(_OPTIMIZERS), default=None)
    parser.add_argument("--problem", choices=sorted(_PROBLEMS), default=None)
    parser.add_argument("--beta", default=None, help="A2Grad beta (comma grid under sweep)")
    parser.add_argument("--lip", default=None, help="Lipschitz constant or `auto`")
    parser.add_argument("--rho", default=None, help="exponential-scheme decay")
    parser.add_argument("--q", default=None, help="q-weighted scaler exponent in [0, 2]")
    parser.add_argument("--lr", default=None, help="baseline learning rate")


def _template_data(args) -> dict:
    opt = args.optimizer or "a2grad-uni"
    prob = args.problem or "quadratic"
    return {
        "name": f"{opt}_{prob}",
        "problem": dict(_PROBLEMS[prob]),
        "method": dict(_OPTIMIZERS[opt]),
        "iters": 1000,
    }


def _config_data(args) -> dict:
    """Merge the config file (or the template) with command-line overrides."""
    if args.config is None:
        data = _template_data(args)
    else:
        data = asdict(harness.load_config(args.config))
        if args.problem is not None:
            data["problem"] = dict(_PROBLEMS[args.problem])
        if args.optimizer is not None:
            override = dict(_OPTIMIZERS[args.optimizer])
            if data["method"].get("kind") == override["kind"]:
                override = {**data["method"], **override}
            data["method"] = override
    data["problem"] = dict(data["problem"])
    data["method"] = dict(data["method"])
    for key in ("out", "seed", "iters", "repeats", "parallel", "objective_every"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    if data.get("out") is None:
        data["out"] = "."
    return data


def _parse_axis_values(axis: str, text: str) -> list:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"--{axis}: empty value list")
    values = []
    for part in parts:
        if axis == "lip" and part == "auto":
            values.append("auto")
            continue
        try:
            values.append(float(part))
        except ValueError as exc:
            raise ConfigError(f"--{axis}: {part!r} is not a number") from exc
    return values


def _axis_requests(args) -> dict[str, list]:
    requests = {}
    for axis in _AXIS_FLAGS:
        raw = getattr(args, axis)
        if raw is not None:
            requests[axis] = _parse_axis_values(axis, str(raw))
    return requests


def _apply_scalar_axis(data: dict, axis: str, value) -> None:
    section, key = harness.SWEEP_AXES[axis]
    data[section][key] = value


def _report_result(result: harness.ExperimentResult) -> None:
    for seed, rec in zip(result.seeds, result.records):
        if seed in result.aborted:
            print(f"seed {seed}: ABORTED at iteration {result.aborted[seed]}")
            continue
        line = f"seed {seed}: rows={len(rec)} final f={rec.f_reported[-1]:.6g}"
        sub = float(rec.suboptimality[-1])
        if math.isfinite(sub):
            line += f" subopt={sub:.6g}"
        print(line)
    for path in result.run_paths:
        print(f"wrote {path}")
    if result.summary_path is not None:
        print(f"wrote {result.summary_path}")


def _cmd_run(args) -> int:
    data = _config_data(args)
    for axis, values in _axis_requests(args).items():
        if len(values) != 1:
            raise ConfigError(
                f"--{axis} takes a single value under `run`; use the sweep verb for grids"
            )
        _apply_scalar_axis(data, axis, values[0])
    result = harness.run_experiment(harness.config_from_dict(data))
    _report_result(result)
    return 3 if result.aborted else 0


def _cmd_sweep(args) -> int:
    data = _config_data(args)
    requests = _axis_requests(args)
    grids = {axis: vals for axis, vals in requests.items() if len(vals) > 1}
    if len(grids) != 1:
        raise ConfigError(
            "sweep needs exactly one of --beta/--lip/--rho/--q/--lr with a "
            "comma-separated grid of two or more values"
        )
    for axis, vals in requests.items():
        if len(vals) == 1:
            _apply_scalar_axis(data, axis, vals[0])
    ((axis, values),) = grids.items()
    config = harness.config_from_dict(data)
    results = harness.sweep_experiment(config, axis, values)
    any_abort = False
    for result in results:
        print(f"[{result.config.name}]")
        _report_result(result)
        any_abort = any_abort or bool(result.aborted)
    return 3 if any_abort else 0


def _cmd_fit(args) -> int:
    record = read_csv(args.csv)
    values = record.suboptimality if args.column == "suboptimality" else record.f_reported
    fit = harness.fit_rate_arrays(record.k, values, args.k_lo, args.k_hi, args.tail_width)
    print(
        f"slope={fit.slope:.6g} intercept={fit.intercept:.6g} "
        f"r_squared={fit.r_squared:.6g} window=[{fit.k_lo},{fit.k_hi}]"
    )
    return 0


def _cmd_compare(args) -> int:
    configs = [harness.load_config(path) for path in args.config]
    table = harness.compare_methods(configs)
    text = table.to_text()
    print(text)
    if args.out is not None:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = out_dir / "comparison.txt"
        path.write_text(text + "\n")
        print(f"wrote {path}")
    return 0


def _cmd_selftest(args) -> int:
    rows = harness.selftest(tmp_dir=args.out)
    failures = 0
    for name, ok, detail in rows:
        mark = "ok" if ok else "FAIL"
        print(f"{mark:4} {name} ({detail})")
        failures += 0 if ok else 1
    print(f"backend: {active_backend()}")
    return 0 if failures == 0 else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.backend is not None:
        os.environ[ENV_VAR] = args.backend
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except RunAbort as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())

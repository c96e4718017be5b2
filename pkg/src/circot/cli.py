"""Command-line front end.

Reports are JSON on stdout (or ``--out``), bulk output is CSV. Exit codes:
0 success or fail-to-reject, 3 reject, 4 usage error, 5 runtime error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from ._parallel import default_threads
from .core import DiscreteCircularMeasure, cot_exact, cot_grid, discretize_distribution, discretize_measure, wrap
from .distributions import parse_distribution
from .experiments import EXPERIMENTS, ExperimentConfig, default_config, run_experiment
from .inference import BootstrapSpec, bootstrap_distribution, calibrate, cott_one_sample, cott_two_sample
from .limitlaw import mc_limit_sample

SCHEMA = 1
EXIT_OK, EXIT_REJECT, EXIT_USAGE, EXIT_ERROR = 0, 3, 4, 5

_TURNS_PER = {"turns": 1.0, "radians": 1.0 / (2.0 * math.pi), "degrees": 1.0 / 360.0}
# flags left out of output headers so reruns compare byte for byte
_UNECHOED = {"func", "out", "threads"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_angles(path, unit: str = "turns") -> np.ndarray:
    """Angles from a text file, one per line, converted to turns in ``[0, 1)``.

    Blank lines and lines starting with ``#`` are skipped.
    """
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                v = float(s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: cannot parse {s!r} as an angle") from None
            if not math.isfinite(v):
                raise ValueError(f"{path}:{lineno}: angle is not finite")
            values.append(v)
    if not values:
        raise ValueError(f"{path}: no observations")
    return wrap(np.asarray(values) * _TURNS_PER[unit])


def _null(spec: str):
    try:
        return parse_distribution(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in _UNECHOED}


def _emit(text: str, out) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _report(args, payload: dict) -> None:
    body = {"schema": SCHEMA, "command": args.command, **payload, "args": _echo(args)}
    _emit(json.dumps(body, indent=2, sort_keys=False) + "\n", args.out)


def _csv(args, columns, rows) -> None:
    lines = [f"# circot {args.command}", f"# schema: {SCHEMA}"]
    lines += [f"# {k}: {json.dumps(v)}" for k, v in _echo(args).items()]
    lines.append(",".join(columns))
    lines += [",".join(format(float(v), ".10g") for v in row) for row in rows]
    _emit("\n".join(lines) + "\n", args.out)


def cmd_distance(args) -> int:
    x = read_angles(args.file_x, args.unit)
    if (args.file_y is None) == (args.null is None):
        raise UsageError("give exactly one of a second file or --null")
    if args.exact and args.null is not None:
        raise UsageError("--exact needs two sample files, not a named null")
    mu = DiscreteCircularMeasure(x)
    if args.null is not None:
        D = args.grid or 1000
        cot = cot_grid(discretize_measure(mu, D), discretize_distribution(_null(args.null), D))
        _report(args, {"cot": cot, "method": "grid", "D": D, "n_x": x.size, "n_y": None})
        return EXIT_OK
    y = read_angles(args.file_y, args.unit)
    nu = DiscreteCircularMeasure(y)
    if args.grid:
        cot = cot_grid(discretize_measure(mu, args.grid), discretize_measure(nu, args.grid))
        _report(args, {"cot": cot, "method": "grid", "D": args.grid, "n_x": x.size, "n_y": y.size})
    else:
        _report(args, {"cot": cot_exact(mu, nu), "method": "exact", "D": None, "n_x": x.size, "n_y": y.size})
    return EXIT_OK


def cmd_test(args) -> int:
    x = read_angles(args.file, args.unit)
    res = cott_one_sample(
        x, _null(args.null), alpha=args.alpha, D=args.D, N=args.N, seed=args.seed, threads=args.threads
    )
    _report(args, res.to_dict())
    return EXIT_REJECT if res.reject else EXIT_OK


def cmd_test2(args) -> int:
    x = read_angles(args.file_x, args.unit)
    y = read_angles(args.file_y, args.unit)
    res = cott_two_sample(x, y, alpha=args.alpha, spec=BootstrapSpec(B=args.B, seed=args.seed), threads=args.threads)
    _report(args, res.to_dict())
    return EXIT_REJECT if res.reject else EXIT_OK


def cmd_simulate(args) -> int:
    draws = mc_limit_sample(_null(args.null), D=args.D, N=args.N, seed=args.seed, threads=args.threads)
    _csv(args, ["draw"], [(d,) for d in draws])
    return EXIT_OK


def _alphas(text: str) -> list[float]:
    try:
        alphas = [float(a) for a in text.split(",") if a.strip()]
    except ValueError:
        raise UsageError(f"cannot parse --alphas {text!r}") from None
    if not alphas or not all(0.0 < a < 1.0 for a in alphas):
        raise UsageError("--alphas must be comma-separated values in (0, 1)")
    return alphas


def cmd_quantiles(args) -> int:
    alphas = _alphas(args.alphas)
    cal = calibrate(_null(args.null), D=args.D, N=args.N, seed=args.seed, threads=args.threads)
    _csv(args, ["alpha", "quantile"], [(a, cal.critical_value(a)) for a in alphas])
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if args.id is not None:
            data.setdefault("experiment", args.id)
            if data["experiment"] != args.id:
                raise UsageError(f"--id {args.id} disagrees with config experiment {data['experiment']!r}")
        if "experiment" not in data:
            raise UsageError("config has no 'experiment' field; pass --id")
        config = ExperimentConfig.from_dict(data)
    elif args.id is None:
        raise UsageError("give --id or --config")
    else:
        config = default_config(args.id, full=args.full)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    _emit(run_experiment(config, threads=args.threads).to_csv(), args.out)
    return EXIT_OK


def cmd_bootstrap(args) -> int:
    x = read_angles(args.file, args.unit)
    spec = BootstrapSpec(mode=args.mode, m=args.m, B=args.B, seed=args.seed)
    null = _null(args.null) if args.null else None
    draws = bootstrap_distribution(x, spec, null=null, D=args.D, threads=args.threads)
    _csv(args, ["draw"], [(d,) for d in draws])
    return EXIT_OK


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0.0 < v < 1.0:
        raise argparse.ArgumentTypeError(f"expected a value in (0, 1), got {text}")
    return v


def _common(seed_default=0) -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=seed_default)
    common.add_argument("--threads", type=_positive, default=default_threads())
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--unit", choices=sorted(_TURNS_PER), default="turns", help="unit of angle files")
    return common


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="circot", description="Circular optimal transport distances and tests.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("distance", parents=[_common()], help="COT distance between two samples or a sample and a null")
    s.add_argument("file_x")
    s.add_argument("file_y", nargs="?")
    s.add_argument("--null", default=None)
    how = s.add_mutually_exclusive_group()
    how.add_argument("--grid", type=_positive, default=None, metavar="D")
    how.add_argument("--exact", action="store_true")
    s.set_defaults(func=cmd_distance)

    s = sub.add_parser("test", parents=[_common()], help="one-sample COT goodness-of-fit test")
    s.add_argument("file")
    s.add_argument("--null", default="uniform")
    s.add_argument("--alpha", type=_unit_interval, default=0.05)
    s.add_argument("--D", type=_positive, default=1000)
    s.add_argument("--N", type=_positive, default=100_000)
    s.set_defaults(func=cmd_test)

    s = sub.add_parser("test2", parents=[_common()], help="two-sample COT test")
    s.add_argument("file_x")
    s.add_argument("file_y")
    s.add_argument("--alpha", type=_unit_interval, default=0.05)
    s.add_argument("--B", type=_positive, default=2000)
    s.set_defaults(func=cmd_test2)

    s = sub.add_parser("simulate", parents=[_common()], help="draws from the limit law under a null")
    s.add_argument("--null", default="uniform")
    s.add_argument("--D", type=_positive, default=1000)
    s.add_argument("--N", type=_positive, default=100_000)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("quantiles", parents=[_common()], help="critical values of the limit law")
    s.add_argument("--null", default="uniform")
    s.add_argument("--alphas", default="0.1,0.05,0.01")
    s.add_argument("--D", type=_positive, default=1000)
    s.add_argument("--N", type=_positive, default=100_000)
    s.set_defaults(func=cmd_quantiles)

    s = sub.add_parser("experiment", parents=[_common(None)], help="run a seeded experiment and write CSV")
    s.add_argument("--id", choices=sorted(EXPERIMENTS), default=None)
    s.add_argument("--config", default=None, help="JSON file with ExperimentConfig fields")
    s.add_argument("--full", action="store_true", help="full-scale N and reps")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("bootstrap", parents=[_common()], help="bootstrap draws of the scaled COT distance")
    s.add_argument("file")
    s.add_argument("--mode", choices=["m_of_n", "n_of_n"], default="m_of_n")
    s.add_argument("--m", type=_positive, default=None)
    s.add_argument("--B", type=_positive, default=2000)
    s.add_argument("--null", default=None, help="fixed null for the n_of_n mode")
    s.add_argument("--D", type=_positive, default=1000)
    s.set_defaults(func=cmd_bootstrap)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"circot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"circot {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

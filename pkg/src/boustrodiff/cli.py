"""Command-line interface.

Spacing and offsets are in the unit frame (polygon scaled so its enclosing
circle has radius 0.5); angles are given in degrees.  Exit status is 0 on
success, 1 for invalid input, 2 for file I/O problems.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

from . import __version__
from .discrete import ScoreParams, StartCorner, TransectField, build_path, discrete_score
from .diffable import score_and_gradient
from .errors import BoustroError
from .experiments import Axis, grid_vs_gd, parity_csv, parity_experiment, random_convex_polygon, surface_sample
from .geometry import load_polygon_json, normalize, rotate
from .optimize import OptimizerConfig, Schedule, optimize


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let values such as "-0.05,0.05,3" or "-1e-3" through as arguments
        self._negative_number_matcher = re.compile(r"^-\.?\d[\d.eE+\-,]*$")

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _number(kind, lo=None, hi=None, lo_open=False, hi_open=False):
    def parse(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {kind.__name__}, got {text!r}") from None
        if kind is float and not math.isfinite(value):
            raise argparse.ArgumentTypeError(f"must be finite, got {text}")
        if lo is not None and (value <= lo if lo_open else value < lo):
            raise argparse.ArgumentTypeError(f"must be {'>' if lo_open else '>='} {lo}, got {text}")
        if hi is not None and (value >= hi if hi_open else value > hi):
            raise argparse.ArgumentTypeError(f"must be {'<' if hi_open else '<='} {hi}, got {text}")
        return value

    parse.__name__ = kind.__name__
    return parse


positive = _number(float, lo=0, lo_open=True)
non_negative = _number(float, lo=0)
unit_weight = _number(float, lo=0, hi=1)
spacing_type = _number(float, lo=0, hi=1, lo_open=True)
finite = _number(float)
count = _number(int, lo=1)
ppt_type = _number(int, lo=2)
momentum_type = _number(float, lo=0, hi=1, hi_open=True)


def _float_list(text):
    try:
        values = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("expected at least one value")
    return values


def _anneal(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected T0,T1,N, got {text!r}")
    try:
        t0, t1, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected T0,T1,N, got {text!r}") from None
    if not (t0 > 0 and t1 > 0 and n >= 0):
        raise argparse.ArgumentTypeError("temperatures must be > 0 and N >= 0")
    return Schedule(t0, t1, n)


def _range(text):
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected START,STOP,N, got {text!r}")
    try:
        start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START,STOP,N, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("N must be >= 1")
    return start, stop, n


def _add_scoring(p, temp=1000.0, ppt=1000):
    p.add_argument("--spacing", type=spacing_type, default=0.1, help="transect spacing, unit frame (default 0.1)")
    p.add_argument("--offset", type=finite, default=0.0, help="lateral offset of the field, unit frame")
    p.add_argument("--temp", type=positive, default=temp, help=f"sigmoid temperature (default {temp:g})")
    p.add_argument("--ppt", type=ppt_type, default=ppt, help=f"quadrature points per transect (default {ppt})")
    p.add_argument("--a", type=unit_weight, default=0.5, help="weight on mean length")
    p.add_argument("--b", type=unit_weight, default=0.5, help="weight on 1 - std of lengths")


def _add_optimizer(p, grid_offset=5):
    p.add_argument("--mode", choices=("grid", "gd", "hybrid"), default="hybrid")
    p.add_argument("--grid-theta", type=count, default=180, help="lattice steps over [0, 180) degrees")
    p.add_argument("--grid-offset", type=count, default=grid_offset, help=f"lattice steps over one spacing (default {grid_offset})")
    p.add_argument("--lr-theta", type=positive, default=0.01)
    p.add_argument("--lr-offset", type=positive, default=0.005)
    p.add_argument("--momentum", type=momentum_type, default=0.8)
    p.add_argument("--iters", type=_number(int, lo=0), default=100)
    p.add_argument("--tol", type=non_negative, default=1e-7)
    p.add_argument("--anneal", type=_anneal, default=None, metavar="T0,T1,N", help="geometric temperature ramp")


def _add_common(p):
    p.add_argument("--seed", type=_number(int, lo=0), default=0)
    p.add_argument("--threads", type=_number(int, lo=0), default=1, help="worker threads, 0 = one per CPU")
    p.add_argument("--out", type=Path, default=None, help="output file (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="boustrodiff", description="Score and optimize boustrophedon transects over convex polygons.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("score", help="discrete and relaxed fitness at one pose")
    p.add_argument("--polygon", type=Path, required=True)
    p.add_argument("--theta-deg", type=finite, default=0.0)
    _add_scoring(p)
    _add_common(p)

    p = sub.add_parser("optimize", help="search for the best angle and offset")
    p.add_argument("--polygon", type=Path, required=True)
    p.add_argument("--path-out", type=Path, default=None, help="also write the waypoint plan here")
    p.add_argument("--start-corner", choices=[c.value for c in StartCorner], default="bottom_left")
    p.add_argument("--no-trace", action="store_true", help="omit the trace from the report")
    _add_scoring(p)
    _add_optimizer(p)
    _add_common(p)

    p = sub.add_parser("surface", help="relaxed fitness over a theta/offset/temperature lattice (CSV)")
    p.add_argument("--polygon", type=Path, required=True)
    p.add_argument("--theta-deg", type=finite, default=0.0, help="fixed angle when theta is not swept")
    p.add_argument("--theta-range", type=_range, metavar="START,STOP,N", help="sweep angle in degrees")
    p.add_argument("--offset-range", type=_range, metavar="START,STOP,N", help="sweep offset, unit frame")
    p.add_argument("--temp-range", type=_range, metavar="START,STOP,N", help="sweep temperature")
    _add_scoring(p, temp=10000.0)
    _add_common(p)

    p = sub.add_parser("parity", help="discrete vs relaxed error table (CSV)")
    p.add_argument("--samples", type=count, default=100)
    p.add_argument("--temps", type=_float_list, default=[1, 10, 100, 1000, 10000])
    p.add_argument("--ppts", type=_float_list, default=[100, 1000])
    p.add_argument("--a", type=unit_weight, default=0.5)
    p.add_argument("--b", type=unit_weight, default=0.5)
    _add_common(p)

    p = sub.add_parser("gridvsgd", help="lattice search vs gradient ascent on random polygons (JSON)")
    p.add_argument("--samples", type=count, default=100, help="number of random polygons")
    p.add_argument("--gd-init", choices=("random", "grid"), default="random")
    p.add_argument("--spacing", type=spacing_type, default=None, help="fixed spacing (default: random per polygon)")
    p.add_argument("--temp", type=positive, default=1000.0)
    p.add_argument("--ppt", type=ppt_type, default=200)
    p.add_argument("--a", type=unit_weight, default=0.5)
    p.add_argument("--b", type=unit_weight, default=0.5)
    _add_optimizer(p, grid_offset=1)
    _add_common(p)

    p = sub.add_parser("genpoly", help="random convex polygon (JSON)")
    p.add_argument("--sides", type=_number(int, lo=3, hi=9), default=6)
    _add_common(p)
    return parser


def _read_polygon(path: Path):
    try:
        obj = json.loads(path.read_text())
    except OSError as exc:
        raise IOFailure(f"--polygon: cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise IOFailure(f"--polygon: {path} is not valid JSON: {exc}") from None
    try:
        return load_polygon_json(obj)
    except BoustroError as exc:
        raise BoustroError(f"--polygon: {path}: {exc}") from None


class IOFailure(Exception):
    pass


def _emit(text: str, out: Path | None, flag: str = "--out") -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        out.write_text(text)
    except OSError as exc:
        raise IOFailure(f"{flag}: cannot write {out}: {exc.strerror or exc}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _params(args, temp=None) -> ScoreParams:
    if abs(args.a + args.b - 1) > 1e-9:
        raise BoustroError(f"--a/--b: weights must sum to 1, got {args.a} + {args.b}")
    return ScoreParams(args.a, args.b, temp if temp is not None else args.temp, args.ppt)


def _config(args) -> OptimizerConfig:
    return OptimizerConfig(
        mode=args.mode,
        theta_steps=args.grid_theta,
        offset_steps=args.grid_offset,
        lr_theta=args.lr_theta,
        lr_offset=args.lr_offset,
        momentum=args.momentum,
        max_iters=args.iters,
        tol=args.tol,
        schedule=args.anneal,
        seed=args.seed,
    )


def _cmd_score(args):
    poly = normalize(_read_polygon(args.polygon))
    theta = math.radians(args.theta_deg)
    field = TransectField(args.spacing, args.offset)
    params = _params(args)
    exact = discrete_score(rotate(poly.edges, theta), field, params)
    soft = score_and_gradient(poly, theta, args.offset, field, params)
    report = {
        "theta": theta,
        "x_offset": field.normalized_offset,
        "spacing": args.spacing,
        "discrete": exact.to_json(),
        "soft": soft.to_json(),
        "abs_error": abs(exact.fitness - soft.fitness),
    }
    _emit(_dumps(report), args.out)


def _cmd_optimize(args):
    poly = normalize(_read_polygon(args.polygon))
    field = TransectField(args.spacing, args.offset)
    result = optimize(poly, field, _params(args), _config(args))
    _emit(_dumps(result.to_json(include_trace=not args.no_trace)), args.out)
    if args.path_out is not None:
        plan = build_path(poly, result.best_theta, field.with_offset(result.best_offset), args.start_corner)
        _emit(_dumps(plan.to_json()), args.path_out, "--path-out")


def _cmd_surface(args):
    poly = normalize(_read_polygon(args.polygon))
    axes = []
    if args.theta_range:
        a, b, n = args.theta_range
        axes.append(Axis("theta", math.radians(a), math.radians(b), n))
    if args.offset_range:
        axes.append(Axis("x_offset", *args.offset_range))
    if args.temp_range:
        if args.temp_range[0] <= 0 or args.temp_range[1] <= 0:
            raise BoustroError("--temp-range: temperatures must be > 0")
        axes.append(Axis("temperature", *args.temp_range))
    if not 1 <= len(axes) <= 2:
        raise BoustroError("surface: give one or two of --theta-range, --offset-range, --temp-range")
    grid = surface_sample(poly, axes, TransectField(args.spacing, args.offset), _params(args), math.radians(args.theta_deg))
    _emit(grid.to_csv(), args.out)


def _cmd_parity(args):
    if abs(args.a + args.b - 1) > 1e-9:
        raise BoustroError(f"--a/--b: weights must sum to 1, got {args.a} + {args.b}")
    ppts = []
    for p in args.ppts:
        if p != int(p) or p < 2:
            raise BoustroError(f"--ppts: values must be integers >= 2, got {p:g}")
        ppts.append(int(p))
    for t in args.temps:
        if not t > 0:
            raise BoustroError(f"--temps: values must be > 0, got {t:g}")
    rows = parity_experiment(args.seed, args.temps, ppts, samples=args.samples, a=args.a, b=args.b, threads=args.threads)
    _emit(parity_csv(rows), args.out)


def _cmd_gridvsgd(args):
    report = grid_vs_gd(
        seed=args.seed,
        n_polygons=args.samples,
        cfg=_config(args),
        params=_params(args),
        spacing=args.spacing,
        gd_init=args.gd_init,
        threads=args.threads,
    )
    _emit(_dumps(report.to_json()), args.out)


def _cmd_genpoly(args):
    poly = random_convex_polygon(args.seed, args.sides)
    _emit(_dumps(poly.to_json()), args.out)


COMMANDS = {
    "score": _cmd_score,
    "optimize": _cmd_optimize,
    "surface": _cmd_surface,
    "parity": _cmd_parity,
    "gridvsgd": _cmd_gridvsgd,
    "genpoly": _cmd_genpoly,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except IOFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoustroError as exc:
        flag = "" if str(exc).startswith("--") else "invalid input: "
        print(f"error: {flag}{exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

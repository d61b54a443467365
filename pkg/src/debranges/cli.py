"""Command-line front end.

Subcommands: ``kernel``, ``factorize``, ``gauge``, ``pipeline``, ``dpp``,
``normality``.  Exit codes: 0 on pass, 1 on a failed check, 2 on usage or
validation errors.  Reports embed the tool version and the fully resolved
configuration, so identical configurations produce byte-identical output.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .dpp import (
    TestFunction,
    dpp_sample,
    empirical_intensity,
    expectation_product,
    mc_estimate,
    sample_occupancy,
    samples_jsonl,
    truncate,
)
from .kernels import KernelSpec, kernel_grid, kernel_matrix_csv, normality_witness
from .krein import FiniteRankSpace, PipelineStageError, run_pipeline
from .spaces import Multiplier, bessel_hb, factorization_check, gauge_check, sine_hb

__all__ = ["main"]

_EXIT_OK = 0
_EXIT_CHECK_FAILED = 1
_EXIT_USAGE = 2


class _UsageError(Exception):
    pass


def _parse_grid(text: str) -> list[float]:
    """Grid syntax: 'a..b' (integers, inclusive), 'lo:hi:count', or 'v1,v2,...'."""
    text = text.strip()
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise _UsageError(f"empty integer range {text!r}")
        return [float(v) for v in range(lo, hi + 1)]
    if ":" in text:
        lo_s, hi_s, count_s = text.split(":")
        return [float(v) for v in np.linspace(float(lo_s), float(hi_s), int(count_s))]
    return [float(v) for v in text.split(",") if v.strip()]


def _emit(args, payload: str) -> None:
    if args.out is None:
        sys.stdout.write(payload)
    else:
        with open(args.out, "w") as fh:
            fh.write(payload)


def _report(args, command: str, config: dict, result: dict) -> str:
    doc = {
        "tool": "debranges",
        "version": __version__,
        "command": command,
        "config": config,
        "result": result,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _kernel_spec(args) -> KernelSpec:
    family = args.family.replace("-", "_")
    if family == "discrete_sine":
        if args.b is None:
            raise _UsageError("discrete-sine requires --b in (0, pi/2)")
        return KernelSpec(family, b=args.b, allow_wide_b=getattr(args, "allow_wide_b", False))
    if family == "continuous_sine":
        if args.b is None:
            raise _UsageError("continuous-sine requires --b > 0")
        return KernelSpec(family, b=args.b)
    if family == "bessel":
        if args.s is None:
            raise _UsageError("bessel requires --s > -1")
        return KernelSpec(family, s=args.s)
    raise _UsageError(f"unsupported family {args.family!r}")


def _cmd_kernel(args) -> int:
    spec = _kernel_spec(args)
    grid = _parse_grid(args.grid)
    km = kernel_grid(spec, grid)
    if args.format == "csv":
        _emit(args, kernel_matrix_csv(km))
    else:
        config = {"family": args.family, "b": args.b, "s": args.s, "grid": grid}
        rows = [[float(x), float(y), float(km.entries[i, j])] for i, x in enumerate(grid) for j, y in enumerate(grid)]
        _emit(args, _report(args, "kernel", config, {"rows": rows}))
    return _EXIT_OK


def _cmd_factorize(args) -> int:
    family = args.family.replace("-", "_")
    if family == "continuous_sine":
        if args.b is None or not (args.b > 0):
            raise _UsageError("continuous-sine requires --b > 0")
        spec = KernelSpec(family, b=args.b)
        hb = sine_hb(args.b)
        phi = Multiplier.constant(1.0 / math.sqrt(math.pi))
        grid = _parse_grid(args.grid) if args.grid else [float(v) for v in np.linspace(-2.0, 2.0, 10)]
        rep = factorization_check(spec.evaluate, phi, hb, grid, fit_constant=False, tolerance=1e-13)
    elif family == "bessel":
        if args.s is None or not (args.s > -1):
            raise _UsageError("bessel requires --s > -1")
        spec = KernelSpec(family, s=args.s)
        hb = bessel_hb(args.s)
        phi = Multiplier.power(args.s / 2.0)
        grid = _parse_grid(args.grid) if args.grid else [0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 40.0]
        rep = factorization_check(spec.evaluate, phi, hb, grid, fit_constant=True, tolerance=1e-9)
    else:
        raise _UsageError("factorize supports families continuous-sine and bessel")
    config = {"family": args.family, "b": args.b, "s": args.s, "grid": list(map(float, grid))}
    _emit(args, _report(args, "factorize", config, rep.to_json()))
    return _EXIT_OK if rep.passed else _EXIT_CHECK_FAILED


def _load_space(path: str) -> FiniteRankSpace:
    with open(path) as fh:
        data = json.load(fh)
    return FiniteRankSpace.from_json_dict(data)


def _cmd_pipeline(args) -> int:
    space = _load_space(args.space)
    config = {"space": args.space, "theta": args.theta, "w": [args.w_re, args.w_im]}
    try:
        art = run_pipeline(space, w=complex(args.w_re, args.w_im), theta=args.theta)
    except PipelineStageError as exc:
        _emit(args, _report(args, "pipeline", config, {"pass": False, "failed_stage": exc.stage, "error": str(exc)}))
        return _EXIT_CHECK_FAILED
    result = art.report()
    result["pass"] = True
    _emit(args, _report(args, "pipeline", config, result))
    return _EXIT_OK


def _cmd_gauge(args) -> int:
    space = _load_space(args.space)
    config = {"space": args.space, "theta1": args.theta1, "theta2": args.theta2}
    try:
        a1 = run_pipeline(space, theta=args.theta1)
        a2 = run_pipeline(space, theta=args.theta2)
    except PipelineStageError as exc:
        _emit(args, _report(args, "gauge", config, {"pass": False, "failed_stage": exc.stage, "error": str(exc)}))
        return _EXIT_CHECK_FAILED
    grid = np.linspace(space.points.min(), space.points.max(), 9)
    rep = gauge_check(a1.E, a2.E, grid)
    _emit(args, _report(args, "gauge", config, rep.to_json()))
    return _EXIT_OK if (rep.constancy_residual <= 1e-8 and rep.zero_free) else _EXIT_CHECK_FAILED


def _cmd_dpp(args) -> int:
    if args.trials < 1000:
        raise _UsageError(f"--trials must be >= 1000, got {args.trials}")
    spec = _kernel_spec(args)
    km = truncate(spec, args.N)
    g = TestFunction.indicator_bump(args.g_lo, args.g_hi, args.g_mult)
    det = expectation_product(km, g)
    est = mc_estimate(km, g, args.trials, args.seed)
    occ = sample_occupancy(km, args.trials, args.seed)
    inten = empirical_intensity(occ, km.points)
    passed = abs(est.mean - det) <= 3.0 * est.stderr if est.stderr > 0 else est.mean == det
    config = {
        "family": args.family,
        "b": args.b,
        "N": args.N,
        "trials": args.trials,
        "seed": args.seed,
        "g": {"lo": args.g_lo, "hi": args.g_hi, "mult": args.g_mult},
    }
    result = {
        "estimate": est.mean,
        "stderr": est.stderr,
        "determinant": det,
        "pass": bool(passed),
        "intensity": {
            "points": [float(p) for p in inten.points],
            "frequency": [float(v) for v in inten.frequency],
            "stderr": [float(v) for v in inten.stderr],
        },
    }
    if args.samples_out:
        configs = [dpp_sample(km, args.seed + i) for i in range(args.emit_samples)]
        with open(args.samples_out, "w") as fh:
            fh.write(samples_jsonl(configs))
    _emit(args, _report(args, "dpp", config, result))
    return _EXIT_OK if passed else _EXIT_CHECK_FAILED


def _cmd_normality(args) -> int:
    if args.n < 2:
        raise _UsageError(f"--n must be >= 2, got {args.n}")
    w = normality_witness(args.n)
    pointwise_ok = w.pointwise_ratio_bound <= 1.0 + 1e-12
    result = {
        "pointwise_ratio_bound": w.pointwise_ratio_bound,
        "norm_ratio": w.norm_ratio,
        "expected_norm_ratio": float(args.n - 1),
        "pass": bool(pointwise_ok),
    }
    _emit(args, _report(args, "normality", {"n": args.n}, result))
    return _EXIT_OK if pointwise_ok else _EXIT_CHECK_FAILED


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="debranges", description=__doc__)
    parser.add_argument("--config", help="JSON file with a full run configuration (overrides flags)")
    sub = parser.add_subparsers(dest="command")

    def common(p):
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)

    p = sub.add_parser("kernel", help="evaluate a kernel family on a grid")
    p.add_argument("--family", required=True, choices=("discrete-sine", "continuous-sine", "bessel"))
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--grid", required=True, help="'a..b' integers, 'lo:hi:count', or comma list")
    p.add_argument("--allow-wide-b", action="store_true", help="relax the discrete-sine band to (0, pi)")
    common(p)

    p = sub.add_parser("factorize", help="verify the multiplier factorization of a closed-form family")
    p.add_argument("--family", required=True, choices=("continuous-sine", "bessel"))
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--s", type=float, default=None)
    p.add_argument("--grid", default=None)
    common(p)

    p = sub.add_parser("pipeline", help="run the finite-rank reconstruction pipeline on a space file")
    p.add_argument("--space", required=True, help="JSON: {points, weights, n} or {points, weights, basis}")
    p.add_argument("--theta", type=float, default=0.0)
    p.add_argument("--w-re", type=float, default=0.0)
    p.add_argument("--w-im", type=float, default=1.0)
    common(p)

    p = sub.add_parser("gauge", help="compare the pairs built from two completions of the same space")
    p.add_argument("--space", required=True)
    p.add_argument("--theta1", type=float, default=0.0)
    p.add_argument("--theta2", type=float, default=1.0)
    common(p)

    p = sub.add_parser("dpp", help="sample the truncated kernel and check the determinant identity")
    p.add_argument("--family", required=True, choices=("discrete-sine",))
    p.add_argument("--b", type=float, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--g-mult", type=float, default=1.5)
    p.add_argument("--g-lo", type=float, default=-5.0)
    p.add_argument("--g-hi", type=float, default=5.0)
    p.add_argument("--samples-out", default=None, help="write sample configurations as JSON lines")
    p.add_argument("--emit-samples", type=int, default=100, help="how many configurations to write")
    common(p)

    p = sub.add_parser("normality", help="norm-versus-pointwise domination witness")
    p.add_argument("--n", type=int, required=True)
    common(p)

    return parser


_COMMANDS = {
    "kernel": _cmd_kernel,
    "factorize": _cmd_factorize,
    "pipeline": _cmd_pipeline,
    "gauge": _cmd_gauge,
    "dpp": _cmd_dpp,
    "normality": _cmd_normality,
}


def _join_grid_values(argv):
    # let '--grid -3..3' survive argparse's negative-number heuristic
    out = []
    it = iter(argv)
    for token in it:
        if token == "--grid":
            value = next(it, None)
            if value is None:
                out.append(token)
            else:
                out.append(f"{token}={value}")
        else:
            out.append(token)
    return out


def main(argv=None) -> int:
    parser = _build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_join_grid_values(argv))
    if args.config:
        with open(args.config) as fh:
            conf = json.load(fh)
        command = conf.pop("command", None)
        if command not in _COMMANDS:
            parser.error(f"config file must name a command from {sorted(_COMMANDS)}")
        flat = []
        for key, value in conf.items():
            flag = "--" + key.replace("_", "-")
            if isinstance(value, bool):
                if value:
                    flat.append(flag)
            else:
                flat.append(f"{flag}={value}")
        args = parser.parse_args([command, *flat])
    if args.command is None:
        parser.print_help()
        return _EXIT_USAGE
    if args.format is None:
        args.format = "csv" if args.command == "kernel" else "json"
    try:
        return _COMMANDS[args.command](args)
    except (_UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_USAGE
    except ArithmeticError as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return _EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())

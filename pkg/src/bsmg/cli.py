"""Command-line driver: ``python -m bsmg {solve,sweep,table,symbol-info}``.

Exit codes: 0 success, 2 configuration error, 3 a solve did not converge.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import analysis
from .errors import BSMGError, MaxIterationsExceeded
from .experiments import TABLE_IDS, METHODS, run_method, run_table
from .multigrid import STRUCTURES, build_aggregation_hierarchy, build_block_hierarchy
from .smoothers import SmootherSpec, admissible_range
from .symbols import coarse_symbol, estimate_zero_order, find_singularity, jacobi_bound, load_symbol

EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
PATHS = ("aggregate", "block")
SOLVE_HEADER = ["t", "N", "method", "path", "omega_pre", "omega_post", "alpha", "iters",
                "contraction", "setup_s", "solve_s", "max_iter"]
TABLE_HEADER = ["table", "t", "N", "column", "method", "expected", "iters", "diff", "setup_s", "solve_s"]


class UsageError(BSMGError):
    """Invalid command-line value."""


def fmt(x) -> str:
    """Reals with 12 significant digits; everything else via ``str``."""
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


def _real(x: float) -> float:
    return float(f"{float(x):.12g}")


def parse_t(text: str) -> list[int]:
    """``"15"``, ``"15:18"`` (inclusive) or ``"12,14,16"``."""
    try:
        if ":" in text:
            a, b = (int(s) for s in text.split(":"))
            ts = list(range(a, b + 1))
        else:
            ts = [int(s) for s in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse t value {text!r}") from None
    if not ts or min(ts) < 1 or max(ts) > 24:
        raise UsageError("t must lie in [1, 24]")
    return ts


def parse_range(text: str) -> tuple[float, float, int]:
    """``"a:b:k"`` for ``k`` equispaced values in ``[a, b]``."""
    try:
        a, b, k = text.split(":")
        lo, hi, k = float(a), float(b), int(k)
    except ValueError:
        raise UsageError(f"expected a:b:k, got {text!r}") from None
    if k < 1 or (k > 1 and hi < lo) or (k == 1 and hi != lo):
        raise UsageError(f"invalid grid {text!r}")
    return lo, hi, k


def _positive(name, value):
    if value is not None and not value > 0:
        raise UsageError(f"--{name} must be positive")


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _open_out(path):
    if path is None:
        return io.TextIOWrapper(sys.stdout.buffer, encoding="utf-8", newline="", write_through=True), False
    return open(path, "w", encoding="utf-8", newline=""), True


def _build(args, f, n):
    steps = args.steps
    if args.path == "aggregate":
        pre = post = scalar_pre = scalar_post = None
        if args.omega_post is not None:
            post = SmootherSpec("block", args.omega_post, steps)
            scalar_post = SmootherSpec("scalar", 0.5, steps)
        if args.omega_pre is not None:
            pre = SmootherSpec("block", args.omega_pre, steps)
            scalar_pre = SmootherSpec("scalar", 0.5, steps)
        elif post is not None:
            pre = SmootherSpec("block", args.omega_post, 0)
        if pre is not None and post is None:
            _, wmax = admissible_range("block", f)
            post = SmootherSpec("block", 0.5 * wmax, steps)
        return build_aggregation_hierarchy(f, n, args.structure, pre=pre, post=post,
                                           scalar_pre=scalar_pre, scalar_post=scalar_post,
                                           alpha=args.alpha)
    pre = SmootherSpec("block", args.omega_pre, steps) if args.omega_pre is not None else None
    post = SmootherSpec("block", args.omega_post, steps) if args.omega_post is not None else None
    from .bases import basis_for

    projector, name = "default", None
    try:
        basis_for(args.problem)
        projector, name = "geometric", args.problem
    except BSMGError:
        pass
    return build_block_hierarchy(f, n, args.structure, projector=projector, name=name,
                                 pre=pre, post=post, alpha=args.alpha)


def _level0_omegas(h):
    L = h.levels[0]
    om = lambda s: s.omega if s is not None and s.steps else 0.0  # noqa: E731
    return (om(L.pre), om(L.post)) if L.solve is None else (0.0, 0.0)


def cmd_solve(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"--method must be one of {METHODS}")
    for name in ("omega_pre", "omega_post", "alpha", "tol"):
        _positive(name.replace("_", "-"), getattr(args, name))
    f = load_symbol(args.problem)
    ts = parse_t(args.t)
    status = 0
    out, close = _open_out(args.out)
    try:
        w = _writer(out)
        w.writerow(SOLVE_HEADER)
        for t in ts:
            h = _build(args, f, 2 ** t)
            wpre, wpost = _level0_omegas(h)
            head = [t, h.levels[0].size, args.method, args.path, wpre, wpost, float(args.alpha)]
            try:
                rep = run_method(h, args.method, args.tol, args.max_iter)
                tail = [rep.iterations, rep.contraction, rep.setup_seconds, rep.solve_seconds, args.max_iter]
            except MaxIterationsExceeded as e:
                status = EXIT_NONCONVERGED
                r = e.report
                tail = [-1, r.contraction if r else float("nan"), h.setup_seconds,
                        r.solve_seconds if r else 0.0, args.max_iter]
            w.writerow([fmt(v) for v in head + tail])
    finally:
        if close:
            out.close()
        else:
            out.detach()
    return status


def cmd_sweep(args) -> int:
    f = load_symbol(args.problem)
    orange = parse_range(args.sweep_omega)
    arange = parse_range(args.sweep_alpha)
    res = analysis.sweep(f, orange, arange)
    out, close = _open_out(args.out)
    try:
        w = _writer(out)
        w.writerow(["alpha", "omega", "rho"])
        for row in res.rows():
            w.writerow([fmt(v) for v in row])
    finally:
        if close:
            out.close()
        else:
            out.detach()
    a, om = res.argmin
    best = {"alpha_est": _real(a), "omega_est": _real(om), "rho": _real(res.rho_min)}
    text = json.dumps(best) + "\n"
    if args.out is not None:
        sys.stdout.write(text)
    else:
        sys.stderr.write(text)
    return 0


def cmd_table(args) -> int:
    if args.table not in TABLE_IDS:
        raise UsageError(f"--table must be one of {TABLE_IDS}")
    ts = parse_t(args.t) if args.t else None
    status = 0
    out, close = _open_out(args.out)
    try:
        w = _writer(out)
        w.writerow(TABLE_HEADER)

        def emit(r):
            w.writerow([fmt(v) for v in (r.table, r.t, r.N, r.column, r.method, r.expected,
                                         r.iterations, "" if r.diff is None else r.diff,
                                         r.setup_seconds, r.solve_seconds)])
            out.flush()

        rows = run_table(args.table, ts, log=emit)
        if any(r.iterations < 0 for r in rows):
            status = EXIT_NONCONVERGED
    finally:
        if close:
            out.close()
        else:
            out.detach()
    return status


def symbol_report(f) -> dict:
    """Singularity, zero order, relaxation bound and coarse symbol of ``f``."""
    sing = find_singularity(f)
    g = coarse_symbol(f, sing.q)
    coarse = {str(k): _real(np.real(v)) if abs(np.imag(v)) < 1e-14 else [_real(np.real(v)), _real(np.imag(v))]
              for k, v in sorted(g.scalar_coeffs().items())}
    return {
        "d": f.d,
        "theta0": _real(sing.theta0),
        "jbar": int(sing.jbar),
        "q": {"re": [_real(x) for x in np.real(sing.q)], "im": [_real(x) for x in np.imag(sing.q)]},
        "beta": int(sing.order),
        "coarse_beta": _real(estimate_zero_order(g, sing.theta0)),
        "omega_max": _real(jacobi_bound(f)),
        "coarse_coefficients": coarse,
    }


def cmd_symbol_info(args) -> int:
    report = symbol_report(load_symbol(args.problem))
    text = json.dumps(report, indent=1) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bsmg", description="Block symbol multigrid experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="build a hierarchy and solve for one or more sizes")
    s.add_argument("--problem", required=True, help="builtin symbol name or JSON symbol file")
    s.add_argument("--structure", choices=STRUCTURES, default="circulant")
    s.add_argument("--t", default="10", help="t, a:b or comma list; n = 2^t blocks")
    s.add_argument("--method", default="vcycle", help="tgm, vcycle or pcg")
    s.add_argument("--path", choices=PATHS, default="aggregate")
    s.add_argument("--omega-pre", type=float)
    s.add_argument("--omega-post", type=float)
    s.add_argument("--alpha", type=float, default=1.0)
    s.add_argument("--steps", type=int, default=1)
    s.add_argument("--tol", type=float, default=1e-6)
    s.add_argument("--max-iter", type=int, default=1000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="spectral radius of the two-grid symbol on an (alpha, omega) grid")
    w.add_argument("--problem", required=True)
    w.add_argument("--sweep-omega", required=True, metavar="A:B:K")
    w.add_argument("--sweep-alpha", required=True, metavar="A:B:K")
    w.add_argument("--out")
    w.set_defaults(func=cmd_sweep)

    t = sub.add_parser("table", help="reproduce a table with a diff column")
    t.add_argument("--table", required=True)
    t.add_argument("--t", help="subset of the table's t values")
    t.add_argument("--out")
    t.set_defaults(func=cmd_table)

    i = sub.add_parser("symbol-info", help="singularity and coarse symbol report")
    i.add_argument("--problem", required=True)
    i.add_argument("--out")
    i.set_defaults(func=cmd_symbol_info)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (BSMGError, ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())

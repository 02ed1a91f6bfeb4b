"""Acceptance criteria 1-13, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL`` line. Run directly with
``python tests/test_acceptance.py`` or through pytest.
"""
import time

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from bsmg.analysis import TGMSymbol, approximation_constant, spectral_radius, tgm_symbol_samples
from bsmg.experiments import expectations, hierarchy_for, run_table
from bsmg.multigrid import build_aggregation_hierarchy, error_propagator
from bsmg.operators import BlockCirculantOperator
from bsmg.smoothers import admissible_range, verify_smoothing_property
from bsmg.symbols import (
    builtin_symbol,
    coarse_symbol,
    estimate_zero_order,
    find_singularity,
    jacobi_bound,
    rank2_norm,
)
from bsmg.transfer import Aggregation

from conftest import dense_block_circulant

ITER_TOL = expectations()["tolerance"]["iterations"]
RHO_TOL = expectations()["tolerance"]["rho"]
ALL_BUILTINS = ["toy(2)", "toy(4)", "toy(8)", "q2_fem", "qd_fem(3)", "qd_fem(4)", "qd_fem(8)",
                "bspline_2_0", "bspline_3_1", "bspline_3_0"]
BIG_T = [15, 16, 17, 18]


@pytest.fixture
def verdict(capsys):
    def emit(k, ok, detail=""):
        with capsys.disabled():
            print(f"\ncriterion {k}: {'PASS' if ok else 'FAIL'}  {detail}", flush=True)
        assert ok, detail
    return emit


def _table_check(tid, ts, columns=None):
    rows = run_table(tid, ts, columns=columns)
    bad = [r for r in rows if r.iterations < 0 or abs(r.diff) > ITER_TOL]
    by_col = {}
    for r in rows:
        by_col.setdefault(r.column, []).append(r.iterations)
    unsteady = {c: v for c, v in by_col.items() if max(v) != min(v)}
    return rows, bad, by_col, unsteady


def _fmt_bad(bad):
    return "; ".join(f"{r.table} t={r.t} {r.column}: {r.iterations} vs {r.expected}" for r in bad)


def test_criterion_01_coarse_symbol_identity(verdict):
    t0 = time.perf_counter()
    worst = 0.0
    for name in ALL_BUILTINS:
        f = builtin_symbol(name)
        q = find_singularity(f).q
        # independent coarse symbol: q^H fhat_j q coefficient by coefficient
        fq = type(f)({j: np.atleast_2d(q.conj() @ c @ q) for j, c in f.coeffs.items()})
        for n in (8, 16, 32):
            A = BlockCirculantOperator.from_symbol(f, n).to_dense()
            P = Aggregation(q, n).to_dense()
            worst = max(worst, np.abs(P.conj().T @ A @ P - dense_block_circulant(fq, n)).max())
    secs = time.perf_counter() - t0
    verdict(1, worst <= 1e-12 and secs < 1.0, f"max defect {worst:.2e}, {secs:.2f}s")


def test_criterion_02_norm_facts(verdict):
    names = ["toy(2)", "toy(4)", "toy(8)", "q2_fem", "bspline_2_0", "bspline_3_1", "bspline_3_0"]
    errs, rank2 = {}, {}
    for name in names:
        f = builtin_symbol(name)
        errs[name] = abs(2.0 / jacobi_bound(f) - 2.0)
        fm = f.coefficient(-1)
        u, s, vh = np.linalg.svd(fm)
        if f.r == 1 and s[1:].max(initial=0) < 1e-14:
            rank2[name] = abs(rank2_norm(f, u[:, 0] * s[0], vh[0]) - 2.0)
    ok = max(errs.values()) <= 1e-9 and max(rank2.values()) <= 1e-9
    verdict(2, ok, f"max |norm - 2| {max(errs.values()):.1e}; rank-2 closed form on {sorted(rank2)}")


def test_criterion_03_zero_order(verdict):
    orders = {}
    for name in ALL_BUILTINS:
        f = builtin_symbol(name)
        orders[name] = estimate_zero_order(coarse_symbol(f, find_singularity(f).q), 0.0)
    worst = max(abs(v - 2) for v in orders.values())
    verdict(3, worst <= 0.05, f"max |beta - 2| = {worst:.2e}")


def test_criterion_04_smoothing_property(verdict):
    t0 = time.perf_counter()
    failures = []
    for name in ALL_BUILTINS:
        f = builtin_symbol(name)
        A = BlockCirculantOperator.from_symbol(f, 32)
        _, wmax = admissible_range("block", f)
        for c in (0.25, 0.5, 0.75, 0.99):
            if not verify_smoothing_property(A, f.fhat0, c * wmax)[0]:
                failures.append(f"{name} at {c}")
        if verify_smoothing_property(A, f.fhat0, 1.05 * wmax)[0]:
            failures.append(f"{name} passes at 1.05")
    secs = time.perf_counter() - t0
    verdict(4, not failures and secs < 10, f"{secs:.1f}s {failures}")


def test_criterion_05_approximation_property(verdict):
    worst = np.inf
    for name in ALL_BUILTINS:
        f = builtin_symbol(name)
        sing = find_singularity(f)
        for n in (16, 32):
            gamma = approximation_constant(f, sing, n)
            A = BlockCirculantOperator.from_symbol(f, n).to_dense()
            P = Aggregation(sing.q, n).to_dense()
            M = gamma * A - (np.eye(A.shape[0]) - P @ P.conj().T)
            worst = min(worst, np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
    verdict(5, worst >= -1e-10, f"min eigenvalue {worst:.2e}")


def _big_table(k, tid, verdict, extra="", constant=False):
    t0 = time.perf_counter()
    rows, bad, by_col, unsteady = _table_check(tid, BIG_T)
    if not constant:
        unsteady = {}
    counts = ", ".join(f"{c}: {v[0] if len(set(v)) == 1 else v}" for c, v in by_col.items())
    secs = time.perf_counter() - t0
    verdict(k, not bad and not unsteady,
            f"{extra}[{counts}] {secs:.0f}s {_fmt_bad(bad)} {'varying: ' + str(unsteady) if unsteady else ''}")


def test_criterion_06_table2(verdict):
    _big_table(6, "T2", verdict, constant=True)


def test_criterion_07_table3(verdict):
    _big_table(7, "T3", verdict, "qd_fem(d) from exact Lagrange assembly ")


def test_criterion_08_table4(verdict):
    _big_table(8, "T4", verdict)


def test_criterion_09_over_relaxation(verdict):
    rho_err = []
    for item in expectations()["rho"]:
        s = TGMSymbol.build(builtin_symbol(item["problem"]), item["omega"], item["omega"], item["alpha"])
        r = spectral_radius(s)
        rho_err.append(abs(r - item["expected"]))
    bad_all = []
    for tid in ("T5", "T6", "T7", "T8", "T9", "T10"):
        _, bad, _, _ = _table_check(tid, None)
        bad_all += bad
    ok = max(rho_err) <= RHO_TOL and not bad_all
    verdict(9, ok, f"max rho error {max(rho_err):.4f}; {_fmt_bad(bad_all) or 'all table cells within 2'}")


def _min_setup(col, t, reps=3):
    best = np.inf
    for _ in range(reps):
        best = min(best, hierarchy_for(col, 2 ** t, "toeplitz").setup_seconds)
    return best


def test_criterion_10_pcg(verdict):
    ts = list(range(12, 17))
    bad_all, unsteady_all, summary = [], {}, []
    for tid in ("T11", "T12"):
        _, bad, by_col, unsteady = _table_check(tid, ts)
        bad_all += bad
        unsteady_all.update(unsteady)
        summary.append(", ".join(f"{c}: {v[0]}" for c, v in by_col.items() if len(set(v)) == 1))
    order = []
    for tid in ("T11", "T12"):
        cols = expectations()["tables"][tid]["columns"]
        for blk, agg in zip(cols[:3], cols[3:]):
            order.append(_min_setup(agg, 15) < _min_setup(blk, 15))
    ok = not bad_all and not unsteady_all and all(order)
    verdict(10, ok, f"[{'; '.join(summary)}] setup agg<block at t=15: {sum(order)}/{len(order)} "
                    f"{_fmt_bad(bad_all)} {unsteady_all or ''}")


def test_criterion_11_fem_assembly(verdict):
    f = builtin_symbol("qd_fem(2)")
    printed = {0: np.array([[16, -8], [-8, 14]]) / 3, 1: np.array([[0, -8], [0, 1]]) / 3,
               -1: np.array([[0, 0], [-8, 1]]) / 3}
    offsets = set(f.offsets) | set(printed)
    err = max(np.abs(f.coefficient(j) - printed.get(j, 0)).max() for j in offsets)
    verdict(11, err <= 1e-12, f"max coefficient error {err:.2e}")


def test_criterion_12_block_vs_scalar(verdict):
    rows = run_table("T1")
    block = {}
    scalar8 = []
    for r in rows:
        if r.column.startswith("block"):
            block.setdefault(r.column, []).append(r.iterations)
        elif r.column == "scalar d=8":
            scalar8.append(r.iterations)
    ok_block = all(0 < min(v) and max(v) <= 15 and max(v) - min(v) <= 1 for v in block.values())
    ok_scalar = all(it < 0 or it > 100 for it in scalar8)
    verdict(12, ok_block and ok_scalar, f"block {block}; scalar d=8 {scalar8}")


def test_criterion_13_symbol_matrix_consistency(verdict):
    f = builtin_symbol("q2_fem")
    n = 64
    h = build_aggregation_hierarchy(f, n).two_grid()
    lam = np.linalg.eigvals(error_propagator(h))
    s = TGMSymbol.build(f, omega_pre=0.0, omega_post=0.5, alpha=1.0)
    mu = np.linalg.eigvals(tgm_symbol_samples(s, n)).ravel()
    cost = np.abs(lam[:, None] - mu[None, :])
    i, j = linear_sum_assignment(cost)
    worst = cost[i, j].max()
    verdict(13, worst <= 1e-8, f"max matched eigenvalue gap {worst:.2e} over {lam.size} eigenvalues")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))

"""Conjugate gradients preconditioned by one V-cycle."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .errors import BreakdownNonSPD, MaxIterationsExceeded
from .multigrid import MultigridHierarchy, SolveReport, vcycle


@dataclass(frozen=True)
class PCGConfig:
    """Stopping rule and optional V-cycle preconditioner."""

    tol: float = 1e-6
    max_iter: int = 10000
    preconditioner: MultigridHierarchy | None = None


def _apply_prec(cfg: PCGConfig, r):
    if cfg.preconditioner is None:
        return r.copy()
    return vcycle(cfg.preconditioner, 0, r, np.zeros_like(r))


def pcg(A, b, cfg: PCGConfig | None = None, x0=None):
    """Preconditioned conjugate gradients on a Hermitian positive (semi)definite ``A``.

    The preconditioner is one V-cycle on a zero initial guess. With equal pre- and
    post-smoothing the cycle is a symmetric operator, as CG requires.

    Raises:
        BreakdownNonSPD: a search direction with non-positive curvature.
        MaxIterationsExceeded: tolerance not reached; carries report and iterate.
    """
    cfg = cfg or PCGConfig()
    t0 = time.perf_counter()
    setup = cfg.preconditioner.setup_seconds if cfg.preconditioner is not None else 0.0
    b = np.asarray(b)
    nb = np.linalg.norm(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.result_type(b, x0))
    if nb == 0:
        return np.zeros_like(b), SolveReport(0, [], 0.0, setup, 0.0)
    r = b - A.matvec(x)
    r0 = np.linalg.norm(r) / nb
    hist = []
    if r0 < cfg.tol:
        return x, SolveReport(0, hist, 0.0, setup, time.perf_counter() - t0)
    z = _apply_prec(cfg, r)
    p = z.copy()
    rz = np.vdot(r, z)
    for _ in range(cfg.max_iter):
        Ap = A.matvec(p)
        curv = np.real(np.vdot(p, Ap))
        if not curv > 0:
            raise BreakdownNonSPD(f"non-positive curvature {curv:.3e} at iteration {len(hist) + 1}")
        a = rz / curv
        x = x + a * p
        r = r - a * Ap
        rel = float(np.linalg.norm(r) / nb)
        hist.append(rel)
        if rel < cfg.tol:
            k = len(hist)
            return x, SolveReport(k, hist, float((rel / r0) ** (1 / k)), setup,
                                  time.perf_counter() - t0)
        z = _apply_prec(cfg, r)
        rz_new = np.vdot(r, z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    k = len(hist)
    rep = SolveReport(k, hist, float((hist[-1] / r0) ** (1 / k)), setup, time.perf_counter() - t0, False)
    raise MaxIterationsExceeded(f"PCG did not converge in {k} iterations", report=rep, x=x)


def preconditioner_symmetry_defect(h: MultigridHierarchy, trials: int = 5, seed: int = 0) -> float:
    """``max |<M u, v> - <u, M v>| / (||u|| ||v||)`` over random pairs."""
    rng = np.random.default_rng(seed)
    N = h.levels[0].size
    worst = 0.0
    for _ in range(trials):
        u, v = rng.standard_normal(N), rng.standard_normal(N)
        Mu = vcycle(h, 0, u, np.zeros(N))
        Mv = vcycle(h, 0, v, np.zeros(N))
        worst = max(worst, abs(np.vdot(Mu, v) - np.vdot(u, Mv)) / (np.linalg.norm(u) * np.linalg.norm(v)))
    return float(worst)

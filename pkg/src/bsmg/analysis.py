"""Symbol-level convergence prediction for the aggregation two-grid method.

With ``P = I_n (x) q`` the two-grid error propagator of ``C_n(f)`` is block
diagonalized by the block Fourier transform; at each frequency it is

    g = (I - w_post fhat0^{-1} f) (I - alpha / f~ * q q^H f) (I - w_pre fhat0^{-1} f),

with ``f~ = q^H f q``.
"""
from __future__ import annotations

import csv
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import MaxIterationsExceeded, SingularCoarse
from .symbols import SingularityInfo, TrigMatrixPolynomial, evaluate, find_singularity

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class TGMSymbol:
    """Ingredients of the two-grid iteration-matrix symbol."""

    f: TrigMatrixPolynomial
    q: np.ndarray
    omega_pre: float = 0.0
    omega_post: float = 0.5
    alpha: float = 1.0

    @classmethod
    def build(cls, f, omega_pre=0.0, omega_post=0.5, alpha=1.0, sing: SingularityInfo | None = None):
        sing = sing or find_singularity(f)
        return cls(f, np.asarray(sing.q), omega_pre, omega_post, alpha)

    @property
    def fhat0(self) -> np.ndarray:
        return self.f.fhat0

    def coarse(self, theta):
        fv = evaluate(self.f, theta)
        return np.real(np.einsum("i,...ij,j->...", self.q.conj(), fv, self.q)), fv


def _g_batch(s: TGMSymbol, theta, singular: str = "raise"):
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    ft, fv = s.coarse(theta)
    d = s.f.d
    eye = np.eye(d)
    dinv = np.linalg.inv(s.fhat0)
    sm = dinv @ fv
    pre = eye - s.omega_pre * sm
    post = eye - s.omega_post * sm
    Q = np.outer(s.q, s.q.conj())
    fscale = sum(abs(complex(s.q.conj() @ c @ s.q)) for c in s.f.coeffs.values())
    bad = np.abs(ft) < 1e-14 * fscale
    if np.any(bad) and singular == "raise":
        raise SingularCoarse(f"coarse symbol vanishes at theta={theta[bad][0]:.6g}")
    inv_ft = np.where(bad, 0.0, 1.0 / np.where(bad, 1.0, ft))
    mid = eye - s.alpha * inv_ft[:, None, None] * (Q @ fv)
    return post @ mid @ pre


def tgm_symbol_eval(s: TGMSymbol, theta: float) -> np.ndarray:
    """``g(theta)``; raises SingularCoarse where ``f~`` vanishes."""
    return _g_batch(s, theta)[0]


def tgm_symbol_samples(s: TGMSymbol, n: int) -> np.ndarray:
    """``g`` on ``2 pi i / n``; at the singular frequency the coarse term is dropped,
    which is what a pseudo-inverse coarse solve does."""
    return _g_batch(s, TWO_PI * np.arange(n) / n, singular="pseudo")


def _rho_at(s, theta):
    return np.abs(np.linalg.eigvals(_g_batch(s, theta))).max(axis=-1)


def spectral_radius(s: TGMSymbol, samples: int = 1024) -> float:
    """Sampled ``max |lambda(g(theta))|`` on ``(k + 1/2) 2 pi / samples``, refined at the argmax.

    The half-step offset keeps every sample off the singular frequency when it
    is a grid angle.
    """
    if samples < 256:
        raise ValueError("at least 256 samples are required")
    h = TWO_PI / samples
    theta = (np.arange(samples) + 0.5) * h
    rho = _rho_at(s, theta)
    i = int(np.argmax(rho))
    best = float(rho[i])
    lo, hi = theta[i] - 0.5 * h, theta[i] + 0.5 * h
    try:
        res = minimize_scalar(lambda t: -float(_rho_at(s, t)[0]), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        best = max(best, -float(res.fun))
    except SingularCoarse:
        pass
    return best


@dataclass
class SweepResult:
    """Spectral radii on an ``alpha x omega`` grid (rows: alpha)."""

    alpha_grid: np.ndarray
    omega_grid: np.ndarray
    rho: np.ndarray

    @property
    def argmin(self) -> tuple[float, float]:
        i, j = np.unravel_index(int(np.argmin(self.rho)), self.rho.shape)
        return float(self.alpha_grid[i]), float(self.omega_grid[j])

    @property
    def rho_min(self) -> float:
        return float(self.rho.min())

    def rows(self):
        """``(alpha, omega, rho)`` row-major in alpha, then omega."""
        for i, a in enumerate(self.alpha_grid):
            for j, w in enumerate(self.omega_grid):
                yield float(a), float(w), float(self.rho[i, j])

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["alpha", "omega", "rho"])
            for a, om, r in self.rows():
                w.writerow([f"{a:.12g}", f"{om:.12g}", f"{r:.12g}"])


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BSMG_THREADS", "1")))
    except ValueError:
        return 1


def sweep(f: TrigMatrixPolynomial, omega_range: tuple[float, float, int],
          alpha_range: tuple[float, float, int], samples: int = 1024,
          sing: SingularityInfo | None = None) -> SweepResult:
    """Spectral radius with ``omega_pre = omega_post = omega`` on an equispaced grid.

    ``BSMG_THREADS`` caps the worker count; cells are written by index so the
    result does not depend on scheduling.
    """
    sing = sing or find_singularity(f)
    omegas = np.linspace(*omega_range[:2], int(omega_range[2]))
    alphas = np.linspace(*alpha_range[:2], int(alpha_range[2]))
    rho = np.empty((alphas.size, omegas.size))
    cells = [(i, j) for i in range(alphas.size) for j in range(omegas.size)]

    def cell(ij):
        i, j = ij
        s = TGMSymbol(f, np.asarray(sing.q), omegas[j], omegas[j], alphas[i])
        return ij, spectral_radius(s, samples)

    nthreads = min(_threads(), len(cells))
    if nthreads > 1:
        with ThreadPoolExecutor(nthreads) as ex:
            results = list(ex.map(cell, cells))
    else:
        results = [cell(ij) for ij in cells]
    for (i, j), r in results:
        rho[i, j] = r
    return SweepResult(alphas, omegas, rho)


def empirical_best_pair(f: TrigMatrixPolynomial, n: int, alphas, omegas,
                        structure: str = "toeplitz", max_iter: int = 500,
                        rhs_seed: int = 0) -> tuple[float, float]:
    """Pair minimizing two-grid iterations on the actual matrix.

    Ties go to the smaller ``alpha``, then the smaller ``omega``.
    """
    from .experiments import overrelaxed_hierarchy, reference_rhs
    from .multigrid import tgm_solve

    best = None
    for a in sorted(alphas):
        for w in sorted(omegas):
            h = overrelaxed_hierarchy(f, n, structure, a, w)
            b = reference_rhs(h.levels[0].A, rhs_seed)
            try:
                it = tgm_solve(h, b, max_iter=max_iter)[1].iterations
            except MaxIterationsExceeded:
                continue
            if best is None or it < best[0]:
                best = (it, float(a), float(w))
    if best is None:
        raise MaxIterationsExceeded("no pair on the grid converged")
    return best[1], best[2]


def approximation_constant(f: TrigMatrixPolynomial, sing: SingularityInfo, n: int) -> float:
    """``gamma = max(gamma1, gamma2)`` certifying ``gamma C_n(f) >= I - P P^H``.

    ``gamma1`` is the largest ``1 / lambda_min(f(theta_j))`` over grid angles
    away from ``theta0``; ``gamma2`` is the inverse smallest eigenvalue of
    ``f(theta0)`` restricted to the complement of ``q``.
    """
    theta = TWO_PI * np.arange(n) / n
    away = np.abs(np.angle(np.exp(1j * (theta - sing.theta0)))) > 1e-12
    g1 = 0.0
    if np.any(away):
        lmin = np.linalg.eigvalsh(evaluate(f, theta[away]))[:, 0]
        g1 = float(np.max(1.0 / lmin))
    w = np.linalg.eigvalsh(evaluate(f, sing.theta0))
    g2 = float(1.0 / w[1]) if w.size > 1 else 0.0
    return max(g1, g2)

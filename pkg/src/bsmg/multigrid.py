"""Two-grid and V-cycle solvers with an over-relaxed coarse-grid correction.

Two hierarchies are built from a symbol ``f``:

* the aggregation path: ``P = I_n (x) q`` on the finest level turns the block
  system into a scalar one, followed by scalar levels with linear interpolation;
* the block path: block-preserving cuts on every level, block size kept.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, MaxIterationsExceeded
from .operators import (
    BlockCirculantOperator,
    BlockToeplitzOperator,
    SparseLevelMatrix,
    coarse_factor,
    galerkin_product,
)
from .smoothers import BlockJacobi, ScalarJacobi, SmootherSpec, admissible_range
from .symbols import SingularityInfo, TrigMatrixPolynomial, find_singularity
from .transfer import Aggregation, BlockCut, GridTransfer, ScalarCut, default_block_cut_symbol

STRUCTURES = ("circulant", "toeplitz")


@dataclass
class Level:
    """One level: matrix, transfer to the next level and smoothers.

    ``solve`` is set on the last level only and returns an exact (pseudo-)solution.
    """

    A: object
    transfer: GridTransfer | None = None
    pre: SmootherSpec | None = None
    post: SmootherSpec | None = None
    smoothers: dict = field(default_factory=dict)
    solve: Callable | None = None
    scalar_diagonal: str = "diag"

    @property
    def size(self) -> int:
        return self.A.shape[0]


@dataclass
class MultigridHierarchy:
    """Levels from fine to coarse; ``alpha`` scales the finest coarse-grid correction."""

    levels: list
    alpha: float = 1.0
    coarsest_max: int = 64
    structure: str = "circulant"
    setup_seconds: float = 0.0

    @property
    def depth(self) -> int:
        return len(self.levels)

    def with_alpha(self, alpha: float) -> "MultigridHierarchy":
        return replace(self, alpha=alpha)

    def two_grid(self) -> "MultigridHierarchy":
        """Finest level plus an exact solve on the first coarse level."""
        if self.depth < 2:
            return self
        t0 = time.perf_counter()
        coarse = self.levels[1]
        exact = Level(coarse.A, solve=coarse.solve if self.depth == 2 else coarse_factor(coarse.A))
        return replace(self, levels=[self.levels[0], exact],
                       setup_seconds=self.setup_seconds + time.perf_counter() - t0)


@dataclass
class SolveReport:
    """Iteration count, relative residual history and timings of one solve."""

    iterations: int
    residual_history: list
    contraction: float
    setup_seconds: float = 0.0
    solve_seconds: float = 0.0
    converged: bool = True


def _diag_blocks(A, d):
    if isinstance(A, (BlockCirculantOperator, BlockToeplitzOperator)):
        return A.block_diagonal()
    blocks = A.block_diagonal()
    if np.allclose(blocks, blocks[:1], atol=0, rtol=1e-14):
        return blocks[0]
    return blocks


def _smoother(level: Level, kind: str, scalar_diagonal: str = "diag"):
    key = (kind, scalar_diagonal)
    if key not in level.smoothers:
        A = level.A
        d = getattr(A, "d", 1)
        if kind == "block":
            level.smoothers[key] = BlockJacobi(_diag_blocks(A, d))
        else:
            dv = np.real(A.diagonal())
            level.smoothers[key] = ScalarJacobi(dv.min() if scalar_diagonal == "min" else dv)
    return level.smoothers[key]


def _make_level(A, transfer, pre, post, scalar_diagonal="diag"):
    lv = Level(A, transfer, pre, post, scalar_diagonal=scalar_diagonal)
    for spec in (pre, post):
        if spec is not None and spec.steps:
            _smoother(lv, spec.kind, scalar_diagonal)
    return lv


def _smooth(level: Level, spec: SmootherSpec | None, x, b):
    if spec is None:
        return x
    M = _smoother(level, spec.kind, level.scalar_diagonal)
    for _ in range(spec.steps):
        x = x + spec.omega * M.apply(b - level.A.matvec(x))
    return x


def vcycle(h: MultigridHierarchy, level: int, b, x=None):
    """One V-cycle from ``level`` down; returns the updated iterate."""
    L = h.levels[level]
    if L.solve is not None:
        return L.solve(b)
    if x is None:
        x = np.zeros_like(b)
    x = _smooth(L, L.pre, x, b)
    r = b - L.A.matvec(x)
    y = vcycle(h, level + 1, L.transfer.apply_transpose(r))
    corr = L.transfer.apply(y)
    x = x + (h.alpha * corr if level == 0 else corr)
    return _smooth(L, L.post, x, b)


def _finish_report(hist, r0, setup, t0, converged):
    k = len(hist)
    contraction = float((hist[-1] / r0) ** (1.0 / k)) if k and r0 > 0 and hist[-1] > 0 else 0.0
    return SolveReport(k, hist, contraction, setup, time.perf_counter() - t0, converged)


def solve(h: MultigridHierarchy, b, tol: float = 1e-6, max_iter: int = 10000, x0=None):
    """Stationary V-cycle iteration until ``||r|| / ||b|| < tol``.

    Raises:
        MaxIterationsExceeded: carries the report and the last iterate.
    """
    t0 = time.perf_counter()
    A = h.levels[0].A
    b = np.asarray(b)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=np.result_type(b, x0))
    nb = np.linalg.norm(b)
    if nb == 0:
        return np.zeros_like(b), SolveReport(0, [], 0.0, h.setup_seconds, 0.0)
    r0 = np.linalg.norm(b - A.matvec(x)) / nb
    hist = []
    if r0 < tol:
        return x, _finish_report(hist, r0, h.setup_seconds, t0, True)
    for _ in range(max_iter):
        x = vcycle(h, 0, b, x)
        rel = float(np.linalg.norm(b - A.matvec(x)) / nb)
        hist.append(rel)
        if rel < tol:
            return x, _finish_report(hist, r0, h.setup_seconds, t0, True)
        if not np.isfinite(rel):
            break
    rep = _finish_report(hist, r0, h.setup_seconds, t0, False)
    raise MaxIterationsExceeded(f"no convergence after {len(hist)} iterations "
                                f"(relative residual {hist[-1]:.3e})", report=rep, x=x)


def tgm_solve(h: MultigridHierarchy, b, tol: float = 1e-6, max_iter: int = 10000, x0=None):
    """:func:`solve` on the two-grid truncation of ``h``."""
    return solve(h.two_grid(), b, tol, max_iter, x0)


# -- builders -------------------------------------------------------------------

def _fine_operator(f, n, structure):
    if structure == "circulant":
        return BlockCirculantOperator.from_symbol(f, n)
    if structure == "toeplitz":
        return SparseLevelMatrix(BlockToeplitzOperator(f, n).to_sparse(), d=f.d)
    raise ConfigError(f"structure must be one of {STRUCTURES}, got {structure!r}")


def _default_block_specs(f, pre, post):
    if pre is None or post is None:
        _, wmax = admissible_range("block", f)
        wpre, wpost = 0.75 * wmax, 0.5 * wmax
        pre = pre or SmootherSpec("block", wpre, 0)
        post = post or SmootherSpec("block", wpost, 1)
    return pre, post


def _finish(levels, A, alpha, coarsest_max, structure, t0):
    levels.append(Level(A, solve=coarse_factor(A)))
    return MultigridHierarchy(levels, alpha, coarsest_max, structure, time.perf_counter() - t0)


def build_aggregation_hierarchy(f: TrigMatrixPolynomial, n: int, structure: str = "circulant",
                                sing: SingularityInfo | None = None,
                                pre: SmootherSpec | None = None, post: SmootherSpec | None = None,
                                scalar_pre: SmootherSpec | None = None,
                                scalar_post: SmootherSpec | None = None,
                                alpha: float = 1.0, coarsest_max: int = 64) -> MultigridHierarchy:
    """Aggregation on the finest level, then scalar levels with linear interpolation.

    Defaults: one block Jacobi post-smoothing step with ``omega = omega_max / 2``
    on the finest level and one scalar Jacobi post-smoothing step with
    ``omega = 1/2`` on scalar levels.
    """
    t0 = time.perf_counter()
    if structure == "circulant" and (n < 1 or n & (n - 1)):
        raise ConfigError("circulant problems need n = 2^t")
    sing = sing or find_singularity(f)
    pre, post = _default_block_specs(f, pre, post)
    scalar_pre = scalar_pre or SmootherSpec("scalar", 0.5, 0)
    scalar_post = scalar_post or SmootherSpec("scalar", 0.5, 1)
    A = _fine_operator(f, n, structure)
    levels = []
    if A.shape[0] <= coarsest_max:
        return _finish(levels, A, alpha, coarsest_max, structure, t0)
    P = Aggregation(sing.q, n, structure)
    levels.append(_make_level(A, P, pre, post))
    A = galerkin_product(A, P)
    while A.shape[0] > coarsest_max and A.shape[0] % 2 == 0:
        P = ScalarCut(A.shape[0], structure=structure)
        levels.append(_make_level(A, P, scalar_pre, scalar_post))
        A = galerkin_product(A, P)
    return _finish(levels, A, alpha, coarsest_max, structure, t0)


def _cut_factory(f, sing, c, projector, name, structure):
    if projector is None or projector == "default":
        p = default_block_cut_symbol(sing or find_singularity(f), c)
        return lambda m: BlockCut(p, m, structure=structure)
    if projector == "geometric":
        from .bases import basis_for, refinement_symbol

        if name is None:
            raise ConfigError("the geometric projector needs the builtin symbol name")
        r = refinement_symbol(basis_for(name))
        if structure == "toeplitz":
            r = r.shifted(-1)
            return lambda m: BlockCut(r, m, parity="even", structure="toeplitz")
        return lambda m: BlockCut(r, m, parity="odd", structure="circulant")
    if isinstance(projector, TrigMatrixPolynomial):
        return lambda m: BlockCut(projector, m, structure=structure)
    raise ConfigError(f"unknown projector {projector!r}")


def build_block_hierarchy(f: TrigMatrixPolynomial, n: int, structure: str = "circulant",
                          c: float = 1.0, projector=None, name: str | None = None,
                          sing: SingularityInfo | None = None,
                          pre: SmootherSpec | None = None, post: SmootherSpec | None = None,
                          scalar_diagonal: str = "diag", alpha: float = 1.0,
                          coarsest_max: int = 64) -> MultigridHierarchy:
    """Block-preserving cuts on every level; the block size never changes.

    Args:
        projector: ``None``/``"default"`` for :func:`default_block_cut_symbol` with
            constant ``c``, ``"geometric"`` for the two-scale relation of the basis
            behind ``name``, or an explicit symbol.
        scalar_diagonal: with scalar smoothers, ``"diag"`` inverts the diagonal
            and ``"min"`` its smallest entry times the identity.
    """
    t0 = time.perf_counter()
    if structure == "circulant" and (n < 1 or n & (n - 1)):
        raise ConfigError("circulant problems need n = 2^t")
    if pre is None or post is None:
        _, wmax = admissible_range("block", f)
        pre = pre or SmootherSpec("block", 0.75 * wmax, 1)
        post = post or SmootherSpec("block", 0.5 * wmax, 1)
    make_cut = _cut_factory(f, sing, c, projector, name, structure)
    A = _fine_operator(f, n, structure)
    levels = []
    m = n
    while A.shape[0] > coarsest_max and m % 2 == 0:
        P = make_cut(m)
        levels.append(_make_level(A, P, pre, post, scalar_diagonal))
        A = galerkin_product(A, P)
        m //= 2
    return _finish(levels, A, alpha, coarsest_max, structure, t0)


def error_propagator(h: MultigridHierarchy, n_max: int = 1024) -> np.ndarray:
    """Dense error-propagation matrix of one cycle (columns from ``b = 0``)."""
    N = h.levels[0].size
    if N > n_max:
        from .errors import TooLarge

        raise TooLarge(f"propagator of size {N} exceeds {n_max}")
    eye = np.eye(N)
    return np.column_stack([vcycle(h, 0, np.zeros(N), eye[:, i]) for i in range(N)])

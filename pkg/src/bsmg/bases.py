"""Piecewise-polynomial bases on a uniform 1D grid.

Each basis is described by ``d`` generator functions on a grid of unit spacing,
so that the degrees of freedom of block ``i`` are ``phi_r(x - i)``. This gives

* stiffness symbols ``f`` whose coefficient ``fhat_j`` couples block ``i`` with
  block ``i - j`` (the convention of :mod:`bsmg.symbols`), and
* two-scale refinement symbols ``p``: the coarse function ``phi_r(x/2 - J)``
  expands on fine generators as ``sum_l sum_r' p_l[r', r] phi_r'(x - 2J - l)``.

For the Lagrange and C^0 B-spline families the last generator of a block is the
vertex function at ``x = 1``; the others live on the element ``[0, 1]``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import legendre
from scipy.interpolate import BSpline

from .errors import UnknownSymbol
from .symbols import TrigMatrixPolynomial


@dataclass(frozen=True)
class GeneratorBasis:
    """``d`` compactly supported generators and their supports."""

    generators: Sequence[Callable[[np.ndarray], np.ndarray]]
    supports: Sequence[tuple[float, float]]
    degree: int
    pieces: int = 1  # polynomial pieces per unit cell

    @property
    def d(self) -> int:
        return len(self.generators)


def _lagrange_element(nodes: np.ndarray, a: int):
    """Lagrange basis polynomial ``a`` on the reference nodes, zero outside [0, 1]."""
    others = np.delete(nodes, a)
    denom = np.prod(nodes[a] - others)

    def phi(x):
        x = np.asarray(x, dtype=float)
        val = np.prod([x - o for o in others], axis=0) / denom if others.size else np.ones_like(x)
        return np.where((x >= 0) & (x <= 1), val, 0.0)

    return phi


def _vertex(left, right):
    """Glue ``left`` on [0, 1] with ``right`` shifted to [1, 2]."""
    def phi(x):
        x = np.asarray(x, dtype=float)
        return np.where(x <= 1, left(x), right(x - 1.0))
    return phi


def lagrange_basis(d: int) -> GeneratorBasis:
    """Degree-``d`` continuous Lagrange basis on equispaced nodes."""
    if d < 1:
        raise ValueError("degree must be positive")
    nodes = np.linspace(0.0, 1.0, d + 1)
    shapes = [_lagrange_element(nodes, a) for a in range(d + 1)]
    gens = shapes[1:d] + [_vertex(shapes[d], shapes[0])]
    sups = [(0.0, 1.0)] * (d - 1) + [(0.0, 2.0)]
    return GeneratorBasis(gens, sups, d)


def _bernstein(p: int, a: int):
    bern = BSpline(np.r_[np.zeros(p + 1), np.ones(p + 1)], np.eye(p + 1)[a], p, extrapolate=False)

    def phi(x):
        return np.nan_to_num(bern(np.asarray(x, dtype=float)))
    return phi


def _spline_piece(knots):
    b = BSpline.basis_element(np.asarray(knots, dtype=float), extrapolate=False)

    def phi(x):
        return np.nan_to_num(b(np.asarray(x, dtype=float)))
    return phi


def bspline_basis(p: int, k: int) -> GeneratorBasis:
    """B-splines of degree ``p`` and continuity ``C^k`` (``k = 0`` or ``k = p - 2``).

    Knots are repeated ``p - k`` times so that each element contributes
    ``d = p - k`` degrees of freedom.
    """
    if k == 0:
        shapes = [_bernstein(p, a) for a in range(p + 1)]
        gens = shapes[1:p] + [_vertex(shapes[p], shapes[0])]
        sups = [(0.0, 1.0)] * (p - 1) + [(0.0, 2.0)]
        return GeneratorBasis(gens, sups, p)
    mult = p - k
    if mult < 1 or k < 0:
        raise UnknownSymbol(f"unsupported spline space ({p},{k})")
    # knot vector with every integer repeated ``mult`` times; the generators are
    # the ``mult`` B-splines whose first knot lies at 0
    knots = np.repeat(np.arange(-p - 2, p + 4), mult).astype(float)
    start = int(np.searchsorted(knots, 0.0))
    gens, sups = [], []
    for r in range(mult):
        loc = knots[start + r:start + r + p + 2]
        gens.append(_spline_piece(loc))
        sups.append((float(loc[0]), float(loc[-1])))
    return GeneratorBasis(gens, sups, p)


def _gauss(npts):
    x, w = legendre.leggauss(npts)
    return (x + 1) / 2, w / 2


def stiffness_symbol(basis: GeneratorBasis) -> TrigMatrixPolynomial:
    """Symbol of ``int phi_a'(x - i) phi_b'(x - k) dx`` by Gauss quadrature per polynomial piece.

    Derivatives use a five-point stencil, exact for generators of degree <= 4.
    """
    lo = int(np.floor(min(s[0] for s in basis.supports)))
    hi = int(np.ceil(max(s[1] for s in basis.supports)))
    xg, wg = _gauss(basis.degree + 2)
    m = basis.pieces
    xg = (np.arange(m)[:, None] + xg[None, :]).ravel() / m
    wg = np.tile(wg, m) / m
    h = 1e-3 / m
    coeffs = {}
    span = hi - lo
    for j in range(-span, span + 1):
        block = np.zeros((basis.d, basis.d))
        for cell in range(lo - span, hi + span):
            x = cell + xg
            for a, pa in enumerate(basis.generators):
                da = _derivative(pa, x, h)
                if not np.any(da):
                    continue
                for b, pb in enumerate(basis.generators):
                    # block i = j, block k = 0
                    db = _derivative(pb, x + j, h)
                    block[a, b] += np.sum(wg * da * db)
        if np.any(np.abs(block) > 1e-12):
            coeffs[j] = block
    return TrigMatrixPolynomial(coeffs)


def _derivative(phi, x, h):
    # Gauss points are interior to cells, so the stencil never straddles a
    # breakpoint; the five-point rule is exact for degree <= 4
    return (8 * (phi(x + h) - phi(x - h)) - (phi(x + 2 * h) - phi(x - 2 * h))) / (12 * h)


def lagrange_stiffness_symbol(d: int) -> TrigMatrixPolynomial:
    """Stiffness symbol of the degree-``d`` Lagrange FEM, assembled exactly.

    Derivatives of the reference shape functions are integrated with a
    ``(d+1)``-point Gauss rule, which is exact for the degree ``2d - 2`` integrands.
    Interior nodes of element ``i`` come first in block ``i``, the right vertex
    last, so ``d = 2`` reproduces the tabulated ``Q_2`` coefficients.
    """
    if d < 1:
        raise UnknownSymbol("degree must be positive")
    nodes = np.linspace(0.0, 1.0, d + 1)
    vinv = np.linalg.inv(np.vander(nodes, d + 1, increasing=True))
    xg, wg = _gauss(d + 1)
    powers = np.arange(d + 1)
    dvander = np.where(powers > 0, powers * xg[:, None] ** np.maximum(powers - 1, 0), 0.0)
    grads = dvander @ vinv
    k = (grads * wg[:, None]).T @ grads
    f0 = k[1:, 1:].copy()
    f0[-1, -1] += k[0, 0]
    f1 = np.zeros((d, d))
    f1[:, -1] = k[1:, 0]
    return TrigMatrixPolynomial({0: f0, 1: f1})


def refinement_symbol(basis: GeneratorBasis, samples_per_cell: int = 9) -> TrigMatrixPolynomial:
    """Two-scale relation of the generators as a (non-Hermitian) symbol.

    Solves ``phi_r(x/2) = sum_l sum_r' R_l[r', r] phi_r'(x - l)`` in the least
    squares sense on interior sample points and returns ``{l: R_l}``.
    """
    lo = min(s[0] for s in basis.supports)
    hi = max(s[1] for s in basis.supports)
    shifts = list(range(int(np.floor(2 * lo - hi)) - 1, int(np.ceil(2 * hi - lo)) + 2))
    cells = np.arange(int(np.floor(2 * lo)), int(np.ceil(2 * hi)))
    offs = (np.arange(samples_per_cell) + 0.5) / samples_per_cell
    x = (cells[:, None] + offs[None, :]).ravel()
    # a refinable generator only needs fine generators inside its own support
    cols = [(l, rp) for l in shifts for rp in range(basis.d)
            if basis.supports[rp][0] + l >= 2 * lo - 1e-12
            and basis.supports[rp][1] + l <= 2 * hi + 1e-12]
    mat = np.column_stack([basis.generators[rp](x - l) for l, rp in cols])
    rhs = np.column_stack([g(x / 2.0) for g in basis.generators])
    sol, *_ = np.linalg.lstsq(mat, rhs, rcond=None)
    resid = np.max(np.abs(mat @ sol - rhs))
    if resid > 1e-9:
        raise ValueError(f"generators are not refinable (residual {resid:.2e})")
    out = {}
    for idx, (l, rp) in enumerate(cols):
        row = np.where(np.abs(sol[idx]) < 1e-12, 0.0, sol[idx])
        out.setdefault(l, np.zeros((basis.d, basis.d)))[rp] = row
    return TrigMatrixPolynomial({l: c for l, c in out.items() if np.any(c)}, hermitian=False)


def toy_basis(d: int) -> GeneratorBasis:
    """Hat functions of width ``2/d`` centred at ``r/d``: linear FEM on a grid of spacing ``1/d``."""
    def hat(c):
        def phi(x):
            return np.maximum(0.0, 1.0 - np.abs(d * (np.asarray(x, dtype=float) - c)))
        return phi
    gens = [hat((r + 1) / d) for r in range(d)]
    sups = [((r) / d, (r + 2) / d) for r in range(d)]
    return GeneratorBasis(gens, sups, 1, pieces=d)


def basis_for(name: str) -> GeneratorBasis:
    """Generator basis behind a builtin symbol name."""
    from .symbols import _PARAM_RE

    fixed = {
        "q2_fem": lambda: lagrange_basis(2),
        "bspline_2_0": lambda: bspline_basis(2, 0),
        "bspline_3_0": lambda: bspline_basis(3, 0),
        "bspline_3_1": lambda: bspline_basis(3, 1),
    }
    if name in fixed:
        return fixed[name]()
    m = _PARAM_RE.match(name.strip())
    if m is None:
        raise UnknownSymbol(f"no generator basis for {name!r}")
    d = int(m.group(2))
    return toy_basis(d) if m.group(1) == "toy" else lagrange_basis(d)

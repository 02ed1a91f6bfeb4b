"""Matrix-valued trigonometric polynomials (generating functions) and their analysis.

A symbol ``f`` of block size ``d`` is stored through its Fourier coefficients,

    f(theta) = sum_j fhat_j * exp(1j * j * theta),

with ``fhat_j`` a ``d x d`` complex matrix. The block Toeplitz matrix generated
by ``f`` has ``fhat_{i-k}`` in block position ``(i, k)``.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import (
    ConfigError,
    MultipleSingularities,
    NoSingularity,
    NotAZero,
    ShapeMismatch,
    SingularDiagonal,
    UnknownSymbol,
)

TWO_PI = 2.0 * np.pi


class TrigMatrixPolynomial:
    """Matrix-valued trigonometric polynomial with finitely many coefficients.

    Args:
        coeffs: mapping ``offset -> (d, d)`` array.
        hermitian: when True (the default) the symbol is required to satisfy
            ``fhat_{-j} = fhat_j^H``; a missing half of a conjugate pair is
            synthesized, a present but inconsistent one raises ``ValueError``.
            Grid-transfer symbols are general and pass ``hermitian=False``.
    """

    def __init__(self, coeffs: Mapping[int, object], hermitian: bool = True):
        items = {}
        d = None
        for j, c in coeffs.items():
            a = np.array(c, dtype=complex)
            if a.ndim == 0:
                a = a.reshape(1, 1)
            if a.ndim != 2 or a.shape[0] != a.shape[1]:
                raise ValueError(f"coefficient {j} is not a square matrix")
            if d is None:
                d = a.shape[0]
            elif a.shape[0] != d:
                raise ValueError("coefficients have inconsistent block sizes")
            items[int(j)] = a
        if d is None:
            raise ValueError("a symbol needs at least one coefficient")
        if hermitian:
            for j in list(items):
                partner = items[j].conj().T
                if -j not in items:
                    items[-j] = partner
                elif not np.allclose(items[-j], partner, atol=1e-13, rtol=0):
                    raise ValueError(f"coefficients {j} and {-j} are not conjugate transposes")
            items[0] = 0.5 * (items.setdefault(0, np.zeros((d, d), complex))
                              + items[0].conj().T)
        for a in items.values():
            a.setflags(write=False)
        self._coeffs = dict(sorted(items.items()))
        self.d = d
        self.hermitian = hermitian

    @property
    def coeffs(self) -> dict[int, np.ndarray]:
        return dict(self._coeffs)

    @property
    def offsets(self) -> list[int]:
        return list(self._coeffs)

    @property
    def r(self) -> int:
        """Band half-width (largest ``|offset|`` with a nonzero coefficient)."""
        nz = [abs(j) for j, c in self._coeffs.items() if np.any(c != 0)]
        return max(nz, default=0)

    @property
    def is_real(self) -> bool:
        return all(not np.any(c.imag) for c in self._coeffs.values())

    def coefficient(self, j: int) -> np.ndarray:
        c = self._coeffs.get(j)
        if c is None:
            return np.zeros((self.d, self.d), dtype=complex)
        return c

    @property
    def fhat0(self) -> np.ndarray:
        return self.coefficient(0)

    def __call__(self, theta):
        return evaluate(self, theta)

    def __repr__(self):
        return f"{type(self).__name__}(d={self.d}, offsets={self.offsets})"

    def __eq__(self, other):
        if not isinstance(other, TrigMatrixPolynomial) or other.d != self.d:
            return NotImplemented
        keys = set(self._coeffs) | set(other._coeffs)
        return all(np.array_equal(self.coefficient(j), other.coefficient(j)) for j in keys)

    __hash__ = None

    def allclose(self, other: "TrigMatrixPolynomial", atol: float = 1e-12) -> bool:
        keys = set(self._coeffs) | set(other._coeffs)
        return other.d == self.d and all(
            np.allclose(self.coefficient(j), other.coefficient(j), atol=atol, rtol=0) for j in keys
        )

    def conj_transpose(self) -> "TrigMatrixPolynomial":
        """Symbol of the adjoint matrix: ``theta -> f(theta)^H``."""
        return TrigMatrixPolynomial(
            {-j: c.conj().T for j, c in self._coeffs.items()}, hermitian=False
        )

    def scaled(self, s: float) -> "TrigMatrixPolynomial":
        return type(self)._from_coeffs({j: s * c for j, c in self._coeffs.items()}, self.hermitian)

    def shifted(self, k: int) -> "TrigMatrixPolynomial":
        """Multiply by ``exp(1j*k*theta)`` (a general, non-Hermitian result)."""
        return TrigMatrixPolynomial({j + k: c for j, c in self._coeffs.items()}, hermitian=False)

    @classmethod
    def _from_coeffs(cls, coeffs, hermitian):
        if cls is ScalarTrigPolynomial:
            return ScalarTrigPolynomial({j: c[0, 0] for j, c in coeffs.items()})
        return cls(coeffs, hermitian=hermitian)

    # -- JSON -------------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "coefficients": [
                {"offset": j, "re": c.real.tolist(), "im": c.imag.tolist()}
                for j, c in self._coeffs.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrigMatrixPolynomial":
        try:
            d = int(data["d"])
            coeffs = {}
            for entry in data["coefficients"]:
                re_part = np.asarray(entry["re"], dtype=float)
                im_part = np.asarray(entry.get("im", np.zeros_like(re_part)), dtype=float)
                if re_part.shape != (d, d) or im_part.shape != (d, d):
                    raise ValueError(f"offset {entry['offset']}: expected {d}x{d} matrices")
                coeffs[int(entry["offset"])] = re_part + 1j * im_part
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed symbol description: {exc}") from exc
        try:
            return TrigMatrixPolynomial(coeffs)
        except ValueError as exc:
            raise ConfigError(f"malformed symbol description: {exc}") from exc


class ScalarTrigPolynomial(TrigMatrixPolynomial):
    """Real-valued scalar trigonometric polynomial (a ``d = 1`` symbol)."""

    def __init__(self, coeffs: Mapping[int, complex]):
        super().__init__({j: np.array([[c]], dtype=complex) for j, c in coeffs.items()})

    def __call__(self, theta):
        return evaluate(self, theta)[..., 0, 0].real

    def scalar_coeffs(self) -> dict[int, complex]:
        return {j: complex(c[0, 0]) for j, c in self._coeffs.items()}


@dataclass(frozen=True)
class SingularityInfo:
    """Location and shape of the (unique) zero eigenvalue of a symbol."""

    theta0: float
    jbar: int
    q: np.ndarray
    order: int


# -- evaluation ---------------------------------------------------------------

def evaluate(f: TrigMatrixPolynomial, theta):
    """Evaluate ``f`` at one angle or an array of angles.

    Returns an array of shape ``np.shape(theta) + (d, d)``.
    """
    theta = np.asarray(theta, dtype=float)
    out = np.zeros(theta.shape + (f.d, f.d), dtype=complex)
    for j, c in f._coeffs.items():
        out += np.exp(1j * j * theta)[..., None, None] * c
    if f.hermitian:
        out = 0.5 * (out + np.swapaxes(out, -1, -2).conj())
    return out


def eigen_at(f: TrigMatrixPolynomial, theta: float):
    """Ascending eigenvalues and orthonormal eigenvectors of ``f(theta)``."""
    return np.linalg.eigh(evaluate(f, theta))


def _lambda_min(f, theta):
    return np.linalg.eigvalsh(evaluate(f, theta))[..., 0]


def _symbol_scale(f, grid):
    return float(np.max(np.abs(np.linalg.eigvalsh(evaluate(f, grid)))))


def _refine_min(func, center, halfwidth, tol=1e-12, noise=0.0):
    res = minimize_scalar(func, bounds=(center - halfwidth, center + halfwidth),
                          method="bounded", options={"xatol": tol})
    # near a quadratic minimum the objective is flat to round-off, so keep the
    # grid point unless refinement is a genuine improvement
    if res.fun < func(center) - noise:
        return float(res.x), float(res.fun)
    return float(center), float(func(center))


def find_singularity(f: TrigMatrixPolynomial, grid_size: int = 4096) -> SingularityInfo:
    """Locate the unique angle where exactly one eigenvalue of ``f`` vanishes.

    Raises:
        NoSingularity: the smallest eigenvalue stays above ``1e-8 * ||f||``.
        MultipleSingularities: more than one vanishing point, or a zero
            eigenvalue of multiplicity larger than one.
    """
    grid = TWO_PI * np.arange(grid_size) / grid_size
    lmin = _lambda_min(f, grid)
    scale = _symbol_scale(f, grid)
    tol = 1e-8 * scale
    h = TWO_PI / grid_size

    def objective(t):
        return float(_lambda_min(f, t))

    # candidate basins: cyclic local minima that are small relative to the symbol
    prev, nxt = np.roll(lmin, 1), np.roll(lmin, -1)
    cand = np.flatnonzero((lmin <= prev) & (lmin <= nxt) & (lmin < 1e-3 * scale))
    zeros = []
    for i in cand:
        t, val = _refine_min(objective, grid[i], h, noise=1e-13 * scale)
        if val <= tol:
            zeros.append(t % TWO_PI)
    if not zeros:
        raise NoSingularity(f"min eigenvalue {lmin.min():.3e} exceeds tolerance {tol:.3e}")
    clusters = sorted(zeros)
    distinct = [clusters[0]]
    for t in clusters[1:]:
        if min(abs(t - distinct[-1]), TWO_PI - abs(t - distinct[-1])) > 2 * h:
            distinct.append(t)
    if len(distinct) > 1 and min(abs(distinct[-1] - distinct[0]),
                                 TWO_PI - abs(distinct[-1] - distinct[0])) <= 2 * h:
        distinct.pop()
    if len(distinct) > 1:
        raise MultipleSingularities(f"symbol vanishes at {len(distinct)} angles: {distinct}")
    theta0 = distinct[0]
    if abs(theta0) < 1e-10 or abs(theta0 - TWO_PI) < 1e-10:
        theta0 = 0.0
    w, v = eigen_at(f, theta0)
    if w[1:].size and w[1] <= tol:
        raise MultipleSingularities("zero eigenvalue is not simple")
    q = _normalize_phase(v[:, 0])
    beta = _zero_order(lambda t: _lambda_min(f, t), theta0, noise=1e-14 * scale)
    order = max(2, 2 * int(round(beta / 2.0)))
    return SingularityInfo(theta0=float(theta0), jbar=1, q=q, order=order)


def _normalize_phase(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    if not np.any(np.abs(v.imag) > 1e-14):
        v = v.real.astype(complex)
    return v


def coarse_symbol(f: TrigMatrixPolynomial, q) -> ScalarTrigPolynomial:
    """Scalar symbol ``theta -> q^H f(theta) q`` of the aggregated coarse matrix."""
    q = np.asarray(q, dtype=complex).reshape(-1)
    if q.size != f.d:
        raise ShapeMismatch(f"vector of length {q.size} for a {f.d}x{f.d} symbol")
    return ScalarTrigPolynomial({j: q.conj() @ c @ q for j, c in f._coeffs.items()})


def _zero_order(func, theta0, noise=0.0, ks=range(6, 17)):
    hs = np.array([2.0 ** (-k) for k in ks])
    vals = np.array([float(np.real(func(theta0 + h))) for h in hs])
    # values below the round-off floor carry no slope information
    keep = vals > 1e3 * noise
    if keep.sum() < 3:
        keep = np.argsort(hs)[::-1][:3]
    slope, _ = np.polyfit(np.log(hs[keep]), np.log(np.abs(vals[keep])), 1)
    return float(slope)


def estimate_zero_order(g: ScalarTrigPolynomial, theta0: float) -> float:
    """Order of the zero of ``g`` at ``theta0`` from a log-log fit on dyadic offsets."""
    grid = TWO_PI * np.arange(1024) / 1024
    gmax = float(np.max(np.abs(g(grid))))
    if abs(g(theta0)) > 1e-8 * gmax:
        raise NotAZero(f"g(theta0) = {g(theta0):.3e} is not a zero")
    noise = np.finfo(float).eps * sum(abs(c) for c in g.scalar_coeffs().values())
    return _zero_order(g, theta0, noise=noise)


# -- relaxation bounds --------------------------------------------------------

def inverse_sqrt(m: np.ndarray) -> np.ndarray:
    """Hermitian inverse square root; raises SingularDiagonal unless ``m`` is HPD."""
    w, v = np.linalg.eigh(m)
    if w[0] <= 0:
        raise SingularDiagonal(f"matrix is not positive definite (lambda_min = {w[0]:.3e})")
    return (v / np.sqrt(w)) @ v.conj().T


def scaled_symbol_norm(f: TrigMatrixPolynomial, scaling: np.ndarray, samples: int = 1024) -> float:
    """``sup_theta lambda_max(D^{-1/2} f(theta) D^{-1/2})`` for an HPD ``D``."""
    h = inverse_sqrt(np.asarray(scaling, dtype=complex))
    grid = TWO_PI * np.arange(max(samples, 1024)) / max(samples, 1024)

    def lam(t):
        return np.linalg.eigvalsh(h @ evaluate(f, t) @ h)[..., -1]

    vals = lam(grid)
    i = int(np.argmax(vals))
    step = grid[1] - grid[0]
    res = minimize_scalar(lambda t: -float(lam(t)), bounds=(grid[i] - step, grid[i] + step),
                          method="bounded", options={"xatol": 1e-12})
    return max(float(vals[i]), -float(res.fun))


def jacobi_bound(f: TrigMatrixPolynomial, samples: int = 1024) -> float:
    """Upper end of the admissible relaxation range of block Jacobi."""
    return 2.0 / scaled_symbol_norm(f, f.fhat0, samples)


def rank2_norm(f: TrigMatrixPolynomial, u, v) -> float:
    """Closed-form ``||fhat0^{-1/2} f fhat0^{-1/2}||_inf`` for rank-one off-diagonal terms.

    Requires ``f = fhat0 + u v^T e^{-i theta} + v u^T e^{i theta}``. The maximum
    over ``cos(theta) in [-1, 1]`` of the closed-form eigenvalue is attained at an
    endpoint since the expression is convex in ``cos(theta)``.
    """
    u = np.asarray(u, dtype=complex).reshape(-1)
    v = np.asarray(v, dtype=complex).reshape(-1)
    if f.r > 1:
        raise ShapeMismatch("symbol has degree larger than one")
    if not np.allclose(f.coefficient(-1), np.outer(u, v), atol=1e-12, rtol=0):
        raise ShapeMismatch("fhat_{-1} differs from u v^T")
    h = inverse_sqrt(f.fhat0)
    w, z = h @ u, h @ v
    s = np.real(z @ w)
    wz2 = np.real(np.vdot(w, w) * np.vdot(z, z))

    def top(c):
        return s * c + np.sqrt(max(s * s * (c * c - 1.0) + wz2, 0.0))

    return 1.0 + max(top(1.0), top(-1.0))


# -- constructions ------------------------------------------------------------

def scalar_to_block(g: ScalarTrigPolynomial, d: int) -> TrigMatrixPolynomial:
    """Re-block a scalar symbol so that ``T_{nd}(g) = T_n(g^[d])``."""
    if d < 1:
        raise ValueError("block size must be positive")
    gc = g.scalar_coeffs()
    r = max((abs(j) for j in gc), default=0)
    span = r // d + 1
    out = {}
    for ell in range(-span, span + 1):
        block = np.zeros((d, d), dtype=complex)
        for a in range(d):
            for b in range(d):
                block[a, b] = gc.get(a - b + ell * d, 0.0)
        if np.any(block):
            out[ell] = block
    return TrigMatrixPolynomial(out)


def laplacian_1d() -> ScalarTrigPolynomial:
    """``2 - 2 cos(theta)``."""
    return ScalarTrigPolynomial({0: 2.0, 1: -1.0, -1: -1.0})


def _q2_fem():
    return TrigMatrixPolynomial({
        0: np.array([[16.0, -8.0], [-8.0, 14.0]]) / 3.0,
        1: np.array([[0.0, -8.0], [0.0, 1.0]]) / 3.0,
    })


def _bspline_2_0():
    return TrigMatrixPolynomial({
        0: np.array([[4.0, -2.0], [-2.0, 8.0]]) / 3.0,
        1: np.array([[0.0, -2.0], [0.0, -2.0]]) / 3.0,
    })


def _bspline_3_1():
    return TrigMatrixPolynomial({
        0: np.array([[48.0, 0.0], [0.0, 48.0]]) / 40.0,
        1: np.array([[-15.0, -15.0], [-3.0, -15.0]]) / 40.0,
    })


def _bspline_3_0():
    # (3,3) entry of the off-diagonal coefficient is -3: the stiffness of the
    # C^0 cubic basis has zero row sums, which a +3 would break.
    return TrigMatrixPolynomial({
        0: np.array([[12.0, 3.0, -6.0], [3.0, 12.0, -9.0], [-6.0, -9.0, 36.0]]) / 10.0,
        1: np.array([[0.0, 0.0, -9.0], [0.0, 0.0, -6.0], [0.0, 0.0, -3.0]]) / 10.0,
    })


_PARAM_RE = re.compile(r"^(toy|qd_fem)\((\d+)\)$")

BUILTIN_NAMES = ("toy(d)", "q2_fem", "qd_fem(d)", "bspline_2_0", "bspline_3_1", "bspline_3_0")


def builtin_symbol(name: str) -> TrigMatrixPolynomial:
    """One of the example symbols, by name.

    ``toy(d)`` is ``2 - 2cos`` re-blocked with block size ``d``; ``qd_fem(d)`` is
    the degree-``d`` Lagrange FEM stiffness symbol; ``q2_fem`` and the three
    ``bspline_p_k`` symbols are the tabulated coefficient sets.
    """
    name = name.strip()
    fixed = {
        "q2_fem": _q2_fem,
        "bspline_2_0": _bspline_2_0,
        "bspline_3_1": _bspline_3_1,
        "bspline_3_0": _bspline_3_0,
    }
    if name in fixed:
        return fixed[name]()
    m = _PARAM_RE.match(name)
    if m is None:
        raise UnknownSymbol(f"unknown symbol {name!r}; expected one of {BUILTIN_NAMES}")
    d = int(m.group(2))
    if d < 1:
        raise UnknownSymbol("block size must be positive")
    if m.group(1) == "toy":
        return scalar_to_block(laplacian_1d(), d)
    from .bases import lagrange_stiffness_symbol

    return lagrange_stiffness_symbol(d)


def load_symbol(source: str) -> TrigMatrixPolynomial:
    """Builtin name or path to a JSON symbol file."""
    try:
        return builtin_symbol(source)
    except UnknownSymbol:
        pass
    try:
        with open(source, encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise UnknownSymbol(f"{source!r} is neither a builtin symbol nor a file") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON ({exc})") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a JSON object")
    return TrigMatrixPolynomial.from_dict(data)


def dump_symbol(f: TrigMatrixPolynomial, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(f.to_dict(), fh, indent=1)

"""Grid transfer operators and the projector-condition checker.

Three prolongations are provided:

* :class:`Aggregation` ``P = I_n (x) q`` maps a scalar coarse vector onto blocks
  along the singular eigenvector ``q`` (no reduction of ``n``).
* :class:`BlockCut` ``P = M_n(p) (K (x) I_d)`` keeps the block size and halves the
  number of blocks, with ``M_n`` the circulant or Toeplitz matrix of ``p``.
* :class:`ScalarCut` is the ``d = 1`` case with ``p = 1 + cos``.

The cut ``K`` places coarse entry ``k`` at fine index ``2k`` for parity ``"odd"``
(the circulant choice) and at ``2k + 1`` for parity ``"even"`` (the Toeplitz
choice, which drops the boundary point).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, OddSize, SingularNormalization
from .symbols import (
    ScalarTrigPolynomial,
    SingularityInfo,
    TrigMatrixPolynomial,
    evaluate,
)

STRUCTURES = ("circulant", "toeplitz")


def _default_parity(structure):
    return "odd" if structure == "circulant" else "even"


class GridTransfer:
    """Common interface: ``apply`` (coarse to fine) and ``apply_transpose`` (fine to coarse)."""

    n: int
    k: int
    d: int
    coarse_d: int
    structure: str

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n * self.d, self.k * self.coarse_d)

    def _check_coarse(self, y):
        y = np.asarray(y)
        if y.shape[0] != self.shape[1]:
            raise DimensionMismatch(f"coarse vector of length {y.shape[0]}, expected {self.shape[1]}")
        return y

    def _check_fine(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.shape[0]:
            raise DimensionMismatch(f"fine vector of length {x.shape[0]}, expected {self.shape[0]}")
        return x

    def to_dense(self) -> np.ndarray:
        from .operators import DENSE_CAP
        from .errors import TooLarge

        if max(self.shape) > DENSE_CAP:
            raise TooLarge(f"dense assembly of size {max(self.shape)} exceeds {DENSE_CAP}")
        return self.to_sparse().toarray()


class IdentityTransfer(GridTransfer):
    def __init__(self, n: int, d: int = 1):
        self.n = self.k = n
        self.d = self.coarse_d = d
        self.structure = "any"

    def apply(self, y):
        return np.array(self._check_coarse(y), copy=True)

    def apply_transpose(self, x):
        return np.array(self._check_fine(x), copy=True)

    def to_sparse(self):
        return sp.identity(self.n * self.d, format="csr")


class Aggregation(GridTransfer):
    """``I_n (x) q`` with ``q`` normalized to unit length."""

    def __init__(self, q, n: int, structure: str = "circulant"):
        q = np.asarray(q, dtype=complex).reshape(-1)
        nrm = np.linalg.norm(q)
        if nrm == 0:
            raise ValueError("aggregation vector must be nonzero")
        q = q / nrm
        if not np.any(q.imag):
            q = q.real
        self.q = q
        self.n = self.k = n
        self.d, self.coarse_d = q.size, 1
        self.structure = structure

    def apply(self, y):
        y = self._check_coarse(y)
        return (y[:, None] * self.q[None, :]).reshape(-1)

    def apply_transpose(self, x):
        x = self._check_fine(x)
        return x.reshape(self.n, self.d) @ self.q.conj()

    def to_sparse(self):
        return sp.kron(sp.identity(self.n, format="csr"), sp.csr_matrix(self.q[:, None]), format="csr")


class BlockCut(GridTransfer):
    """``M_n(p) (K (x) I_d)``, stored as a sparse matrix built from the coefficients of ``p``."""

    def __init__(self, p: TrigMatrixPolynomial, n: int, parity: str | None = None,
                 structure: str = "circulant"):
        if structure not in STRUCTURES:
            raise ValueError(f"structure must be one of {STRUCTURES}")
        parity = parity or _default_parity(structure)
        if parity not in ("odd", "even"):
            raise ValueError("parity must be 'odd' or 'even'")
        if n % 2:
            raise OddSize(f"a cut needs an even number of blocks, got {n}")
        self.p = p
        self.n, self.k = n, n // 2
        self.d = self.coarse_d = p.d
        self.parity, self.structure = parity, structure
        self._P = self._assemble()
        self._PH = sp.csr_matrix(self._P.conj().T)

    def _assemble(self):
        d, n, k = self.d, self.n, self.k
        s = 0 if self.parity == "odd" else 1
        real = self.p.is_real
        rows, cols, vals = [], [], []
        rr, cc = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
        J = np.arange(k)
        for l, c in self.p.coeffs.items():
            if not np.any(c):
                continue
            fine = 2 * J + s + l
            if self.structure == "circulant":
                fine = fine % n
                keep = np.ones(k, dtype=bool)
            else:
                keep = (fine >= 0) & (fine < n)
            jj, fb = J[keep], fine[keep]
            rows.append((fb[:, None, None] * d + rr).ravel())
            cols.append((jj[:, None, None] * d + cc).ravel())
            vals.append(np.broadcast_to(c.real if real else c, (jj.size, d, d)).ravel())
        if not rows:
            return sp.csr_matrix(self.shape)
        P = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=self.shape)
        P = sp.csr_matrix(P)
        P.eliminate_zeros()
        return P

    def apply(self, y):
        return self._P @ self._check_coarse(y)

    def apply_transpose(self, x):
        return self._PH @ self._check_fine(x)

    def to_sparse(self):
        return self._P


def linear_interpolation_symbol() -> ScalarTrigPolynomial:
    """``1 + cos(theta)``."""
    return ScalarTrigPolynomial({0: 1.0, 1: 0.5, -1: 0.5})


class ScalarCut(BlockCut):
    """Scalar cut with ``p = 1 + cos`` unless another scalar symbol is given."""

    def __init__(self, n: int, p: ScalarTrigPolynomial | None = None, parity: str | None = None,
                 structure: str = "circulant"):
        super().__init__(p or linear_interpolation_symbol(), n, parity, structure)


# -- projector symbols --------------------------------------------------------

def default_block_cut_symbol(sing: SingularityInfo, c: float = 1.0) -> TrigMatrixPolynomial:
    """``p(theta) = (1 + cos(theta - theta0)) q q^H + c (I - q q^H)``."""
    if c <= 0:
        raise ValueError("c must be positive")
    q = np.asarray(sing.q, dtype=complex)
    Q = np.outer(q, q.conj())
    eye = np.eye(q.size)
    ph = np.exp(-1j * sing.theta0)
    return TrigMatrixPolynomial({0: Q + c * (eye - Q), 1: 0.5 * ph * Q, -1: 0.5 * np.conj(ph) * Q},
                                hermitian=False)


def default_block_cut(f: TrigMatrixPolynomial, sing: SingularityInfo, c: float = 1.0,
                      n: int = 2, structure: str = "circulant") -> BlockCut:
    """Block-preserving cut built from :func:`default_block_cut_symbol`."""
    if sing.q.size != f.d:
        raise DimensionMismatch("singular vector does not match the symbol size")
    return BlockCut(default_block_cut_symbol(sing, c), n, structure=structure)


def geometric_block_cut(name: str, n: int, structure: str = "circulant") -> BlockCut:
    """Cut whose prolongation is the two-scale relation of the basis behind ``name``.

    For the Toeplitz alignment (coarse block ``J`` at fine block ``2J + 1``) the
    refinement symbol is shifted by one block.
    """
    from .bases import basis_for, refinement_symbol

    r = refinement_symbol(basis_for(name))
    if structure == "toeplitz":
        return BlockCut(r.shifted(-1), n, parity="even", structure="toeplitz")
    return BlockCut(r, n, parity="odd", structure="circulant")


# -- conditions -----------------------------------------------------------------

@dataclass
class ProjectorReport:
    """Outcome of :func:`check_projector_conditions` with numerical witnesses."""

    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    witnesses: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return self.cond_i and self.cond_ii and self.cond_iii


def _normalizer(p, theta):
    a = evaluate(p, theta)
    b = evaluate(p, theta + np.pi)
    return a, np.swapaxes(a, -1, -2).conj() @ a + np.swapaxes(b, -1, -2).conj() @ b


def projector_s(p: TrigMatrixPolynomial, theta: float) -> np.ndarray:
    """``s = p (p^H p + p(.+pi)^H p(.+pi))^{-1} p^H`` at one angle."""
    a, m = _normalizer(p, np.asarray(theta, dtype=float))
    w = np.linalg.eigvalsh(m)
    if w[0] <= 1e-14 * max(w[-1], 1.0):
        raise SingularNormalization(f"normalization is singular at theta={float(theta):.6g}")
    return a @ np.linalg.solve(m, a.conj().T)


def check_projector_conditions(p: TrigMatrixPolynomial, f: TrigMatrixPolynomial,
                               sing: SingularityInfo, samples: int = 1024) -> ProjectorReport:
    """Numerical check of the three block projector conditions.

    (i) positive definiteness of the normalization on a uniform grid;
    (ii) ``s(theta0) q = q``;
    (iii) boundedness of ``(1 - q^H s(theta) q) / lambda(f(theta))`` on
    ``theta0 + 2^-k``, ``k = 4..14``: the tail must be bounded and settle within 10%.
    The Rayleigh quotient on the fixed vector ``q`` stands in for the eigenvalue of
    ``s`` that tends to one.
    """
    if p.d != f.d:
        raise DimensionMismatch("projector and symbol have different block sizes")
    theta = 2 * np.pi * np.arange(samples) / samples
    _, m = _normalizer(p, theta)
    lam = np.linalg.eigvalsh(m)
    mins = lam[:, 0]
    i_ok = bool(mins.min() > 1e-12 * max(lam[:, -1].max(), 1.0))
    wit = {"min_normalization_eig": float(mins.min()),
           "argmin_theta": float(theta[int(np.argmin(mins))])}
    q = np.asarray(sing.q, dtype=complex)
    s0 = projector_s(p, sing.theta0)
    err = float(np.linalg.norm(s0 @ q - q))
    wit["s_theta0_defect"] = err
    ii_ok = err <= 1e-8
    hs = 2.0 ** -np.arange(4, 15)
    ratios = []
    for h in hs:
        t = sing.theta0 + h
        lf = np.linalg.eigvalsh(evaluate(f, t))[sing.jbar - 1]
        st = projector_s(p, t)
        ratios.append(float((1.0 - np.real(q.conj() @ st @ q)) / lf))
    ratios = np.array(ratios)
    tail = ratios[-4:]
    spread = tail.max() - tail.min()
    iii_ok = bool(np.all(np.isfinite(tail)) and np.abs(tail).max() < 1e8
                  and spread <= 0.1 * np.abs(tail).max() + 1e-6)
    wit["ratios"] = ratios.tolist()
    return ProjectorReport(i_ok, ii_ok, iii_ok, wit)

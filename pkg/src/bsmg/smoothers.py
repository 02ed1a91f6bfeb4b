"""Relaxed block and scalar Jacobi smoothers.

One step of either smoother reads ``x <- x + omega * D^{-1} (b - A x)`` with
``D = I_n (x) fhat0`` (block) or a positive diagonal (scalar).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatch, SingularDiagonal, TooLarge
from .operators import assemble_dense
from .symbols import TrigMatrixPolynomial, scaled_symbol_norm

KINDS = ("block", "scalar")


@dataclass(frozen=True)
class SmootherSpec:
    """Which smoother, its relaxation parameter and the number of sweeps."""

    kind: str = "block"
    omega: float = 0.5
    steps: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"smoother kind must be one of {KINDS}, got {self.kind!r}")
        if not self.omega > 0:
            raise ConfigError("relaxation parameter must be positive")
        if self.steps < 0 or int(self.steps) != self.steps:
            raise ConfigError("number of smoothing steps must be a non-negative integer")


class BlockJacobi:
    """Inverse of ``blockdiag(D_1, ..., D_n)`` applied blockwise.

    Args:
        blocks: one ``(d, d)`` block used for every grid point, or ``(n, d, d)``.
    """

    def __init__(self, blocks):
        b = np.asarray(blocks)
        if b.ndim == 2:
            b = b[None]
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionMismatch("blocks must have shape (d, d) or (n, d, d)")
        lam = np.linalg.eigvalsh(0.5 * (b + np.swapaxes(b, 1, 2).conj()))
        if lam[:, 0].min() <= 0:
            raise SingularDiagonal(f"diagonal block not positive definite (lambda_min={lam[:, 0].min():.3e})")
        self.d = b.shape[1]
        self.constant = b.shape[0] == 1
        inv = np.linalg.inv(b)
        self._inv_t = np.swapaxes(inv, 1, 2)
        self._inv = inv

    def apply(self, r):
        rb = np.asarray(r).reshape(-1, self.d)
        if self.constant:
            return (rb @ self._inv_t[0]).reshape(-1)
        if rb.shape[0] != self._inv.shape[0]:
            raise DimensionMismatch("residual does not match the number of diagonal blocks")
        return np.einsum("nij,nj->ni", self._inv, rb).reshape(-1)


class ScalarJacobi:
    """Inverse of a positive diagonal (a scalar or one value per unknown)."""

    def __init__(self, dvals):
        dv = np.asarray(dvals, dtype=float)
        if np.any(dv <= 0):
            raise SingularDiagonal("diagonal entries must be positive")
        self._inv = 1.0 / dv

    def apply(self, r):
        return self._inv * np.asarray(r)


def _relax(A, M, omega, x, b):
    return x + omega * M.apply(b - A.matvec(x))


def block_jacobi_step(A, fhat0, omega: float, x, b):
    """``x + omega (I_n (x) fhat0)^{-1} (b - A x)``."""
    return _relax(A, BlockJacobi(fhat0), omega, x, b)


def scalar_jacobi_step(A, dvals, omega: float, x, b):
    """``x + omega D^{-1} (b - A x)`` with ``D = diag(dvals)``."""
    return _relax(A, ScalarJacobi(dvals), omega, x, b)


def admissible_range(kind: str, f: TrigMatrixPolynomial, diagonal: str = "diag",
                     samples: int = 1024) -> tuple[float, float]:
    """``(0, omega_max)`` with ``omega_max = 2 / sup lambda_max(D^{-1/2} f D^{-1/2})``.

    Args:
        kind: ``"block"`` uses ``D = fhat0``; ``"scalar"`` uses the diagonal.
        diagonal: for the scalar smoother, ``"diag"`` scales by ``diag(fhat0)``
            and ``"min"`` by ``min(diag(fhat0)) I``, the matrix the scalar
            smoother actually inverts.
    """
    f0 = f.fhat0
    if kind == "block":
        D = f0
    elif kind == "scalar":
        dg = np.real(np.diag(f0))
        if diagonal == "diag":
            D = np.diag(dg)
        elif diagonal == "min":
            D = dg.min() * np.eye(f.d)
        else:
            raise ConfigError("diagonal must be 'diag' or 'min'")
    else:
        raise ConfigError(f"smoother kind must be one of {KINDS}")
    return 0.0, 2.0 / scaled_symbol_norm(f, D, samples)


def default_omegas(omega_max: float) -> tuple[float, float]:
    """``(omega_pre, omega_post) = (3/4, 1/2) * omega_max``."""
    post = 0.5 * omega_max
    return 1.5 * post, post


def verify_smoothing_property(A, fhat0, omega: float) -> tuple[bool, float]:
    """Smallest eigenvalue of ``2 omega D^{-1} - omega^2 D^{-1} A D^{-1}``.

    Returns ``(a_post > 0, a_post)``; ``A`` must have at most 1024 rows.
    """
    if A.shape[0] > 1024:
        raise TooLarge("smoothing-property check is limited to 1024 unknowns")
    M = assemble_dense(A)
    n = M.shape[0] // np.asarray(fhat0).shape[0]
    dinv = np.kron(np.eye(n), np.linalg.inv(np.asarray(fhat0)))
    S = 2 * omega * dinv - omega ** 2 * dinv @ M @ dinv
    a_post = float(np.linalg.eigvalsh(0.5 * (S + S.conj().T))[0])
    return a_post > 0, a_post

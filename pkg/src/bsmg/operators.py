"""Structured level matrices: block circulant, block Toeplitz and sparse Galerkin products.

Block circulants are kept as frequency samples ``F[m] = f(2 pi m / n)`` and
applied with the FFT::

    y = fft(F * ifft(x))          (blockwise along the grid axis)

For real matrices this reduces to ``y = irfft(conj(F) * rfft(x))`` over the
non-negative frequencies.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import DimensionMismatch, OddSize, TooLarge
from .symbols import TrigMatrixPolynomial, evaluate

DENSE_CAP = 4096


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def grid(n: int) -> np.ndarray:
    """Angles ``2 pi m / n``, ``m = 0..n-1``."""
    return 2.0 * np.pi * np.arange(n) / n


class BlockCirculantOperator:
    """``C_n(f)`` stored through its ``n`` frequency samples of size ``d x d``.

    Args:
        samples: array of shape ``(n, d, d)``; ``n`` must be a power of two.
        hermitian: whether the samples are Hermitian (true for level matrices,
            false for grid-transfer symbols).
    """

    def __init__(self, samples, hermitian: bool = True):
        s = np.asarray(samples, dtype=complex)
        if s.ndim == 1:
            s = s[:, None, None]
        if s.ndim != 3 or s.shape[1] != s.shape[2]:
            raise DimensionMismatch("samples must have shape (n, d, d)")
        n = s.shape[0]
        if not _is_power_of_two(n):
            raise DimensionMismatch(f"circulant size {n} is not a power of two")
        if hermitian:
            s = 0.5 * (s + np.swapaxes(s, 1, 2).conj())
        s.setflags(write=False)
        self.samples = s
        self.n, self.d = n, s.shape[1]
        self.hermitian = hermitian
        mirror = s[(-np.arange(n)) % n]
        self.real = bool(np.allclose(mirror, s.conj(), atol=1e-13 * (1 + np.abs(s).max()), rtol=0))
        if self.real:
            half = s[: n // 2 + 1].conj()
            self._half = half

    @classmethod
    def from_symbol(cls, f: TrigMatrixPolynomial, n: int) -> "BlockCirculantOperator":
        return cls(evaluate(f, grid(n)), hermitian=f.hermitian)

    @property
    def shape(self) -> tuple[int, int]:
        N = self.n * self.d
        return (N, N)

    @property
    def dtype(self):
        return np.float64 if self.real else np.complex128

    def _check(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.n * self.d:
            raise DimensionMismatch(f"vector of length {x.shape[0]} for an operator of size {self.n * self.d}")
        return x

    def matvec(self, x):
        """``C_n(f) @ x``; real inputs to a real operator stay real."""
        x = self._check(x)
        xb = x.reshape(self.n, self.d)
        if self.real and not np.iscomplexobj(x):
            X = np.fft.rfft(xb, axis=0)
            Y = np.einsum("mij,mj->mi", self._half, X)
            return np.fft.irfft(Y, n=self.n, axis=0).reshape(-1)
        X = np.fft.ifft(xb, axis=0)
        Y = np.einsum("mij,mj->mi", self.samples, X)
        return np.fft.fft(Y, axis=0).reshape(-1)

    def rmatvec(self, x):
        """``C_n(f)^H @ x``."""
        return self.adjoint().matvec(x)

    def adjoint(self) -> "BlockCirculantOperator":
        if self.hermitian:
            return self
        return BlockCirculantOperator(np.swapaxes(self.samples, 1, 2).conj(), hermitian=False)

    def __matmul__(self, x):
        return self.matvec(x)

    def block(self, k: int) -> np.ndarray:
        """Block ``(i, i - k)`` (identical for every ``i``)."""
        m = np.arange(self.n)
        return np.einsum("m,mij->ij", np.exp(-2j * np.pi * m * k / self.n), self.samples) / self.n

    def block_diagonal(self) -> np.ndarray:
        b = self.block(0)
        return b.real if self.real else b

    def diagonal(self) -> np.ndarray:
        return np.tile(np.diag(self.block_diagonal()), self.n)

    def pinv_solve(self, b, rtol: float = 1e-10):
        """Minimum-norm least-squares solution, frequency by frequency.

        Eigenvalues below ``rtol * max|lambda|`` are treated as zero, which
        handles the one-dimensional kernel of a circulant with a vanishing symbol.
        """
        if not hasattr(self, "_pinv"):
            w, v = np.linalg.eigh(self.samples) if self.hermitian else (None, None)
            if self.hermitian:
                cut = rtol * np.abs(w).max()
                winv = np.where(np.abs(w) > cut, 1.0 / np.where(w == 0, 1, w), 0.0)
                self._pinv = BlockCirculantOperator(
                    np.einsum("mij,mj,mkj->mik", v, winv, v.conj()), hermitian=True)
            else:
                self._pinv = BlockCirculantOperator(np.linalg.pinv(self.samples, rcond=rtol),
                                                    hermitian=False)
        return self._pinv.matvec(b)

    def to_dense(self) -> np.ndarray:
        N = self.n * self.d
        if N > DENSE_CAP:
            raise TooLarge(f"dense assembly of size {N} exceeds {DENSE_CAP}")
        blocks = [self.block(k) for k in range(self.n)]
        out = np.zeros((N, N), dtype=complex)
        d = self.d
        for i in range(self.n):
            for k in range(self.n):
                out[i * d:(i + 1) * d, k * d:(k + 1) * d] = blocks[(i - k) % self.n]
        return out.real if self.real else out

    def to_sparse(self, drop: float = 1e-13) -> sp.csr_matrix:
        """Sparse copy keeping the block diagonals whose entries exceed ``drop``."""
        d, n = self.d, self.n
        scale = max(np.abs(self.samples).max(), 1.0)
        mats = []
        for k in range(n):
            b = self.block(k)
            if np.abs(b).max() > drop * scale:
                b = b.real if self.real else b
                shift = sp.csr_matrix((np.ones(n), (np.arange(n), (np.arange(n) - k) % n)), shape=(n, n))
                mats.append(sp.kron(shift, sp.csr_matrix(b)))
        if not mats:
            return sp.csr_matrix((n * d, n * d))
        return sp.csr_matrix(sum(mats[1:], mats[0]))


class BlockToeplitzOperator:
    """``T_n(f)`` with optional sparse correction ``T_n(f) + E``."""

    def __init__(self, f: TrigMatrixPolynomial, n: int, correction=None):
        if n < 1:
            raise DimensionMismatch("block count must be positive")
        self.symbol = f
        self.n, self.d = n, f.d
        self.bands = {j: c for j, c in f.coeffs.items() if np.any(c) and abs(j) < n}
        self.correction = None if correction is None else sp.csr_matrix(correction)
        if self.correction is not None and self.correction.shape != self.shape:
            raise DimensionMismatch("correction has the wrong shape")
        self.real = f.is_real and (self.correction is None or not np.iscomplexobj(self.correction.data))
        m = 2 * n
        col = np.zeros((m, f.d, f.d), dtype=complex)
        for j, c in self.bands.items():
            col[j % m] = c
        # circulant of size 2n whose leading n x n block is T_n(f)
        self._embed = np.fft.fft(col, axis=0)

    @property
    def shape(self) -> tuple[int, int]:
        N = self.n * self.d
        return (N, N)

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.n * self.d:
            raise DimensionMismatch(f"vector of length {x.shape[0]} for an operator of size {self.n * self.d}")
        xb = np.zeros((2 * self.n, self.d), dtype=complex)
        xb[: self.n] = x.reshape(self.n, self.d)
        y = np.fft.ifft(np.einsum("mij,mj->mi", self._embed, np.fft.fft(xb, axis=0)), axis=0)
        y = y[: self.n].reshape(-1)
        if self.correction is not None:
            y = y + self.correction @ x
        return y.real if self.real and not np.iscomplexobj(x) else y

    def __matmul__(self, x):
        return self.matvec(x)

    def block_diagonal(self) -> np.ndarray:
        b = self.symbol.fhat0
        return b.real if self.real else b

    def to_sparse(self) -> sp.csr_matrix:
        n = self.n
        mats = [sp.kron(sp.eye(n, k=-j), sp.csr_matrix(c.real if self.real else c))
                for j, c in self.bands.items()]
        out = sp.csr_matrix(sum(mats[1:], mats[0])) if mats else sp.csr_matrix(self.shape)
        if self.correction is not None:
            out = out + self.correction
        return sp.csr_matrix(out)

    def to_dense(self) -> np.ndarray:
        if self.n * self.d > DENSE_CAP:
            raise TooLarge(f"dense assembly of size {self.n * self.d} exceeds {DENSE_CAP}")
        return self.to_sparse().toarray()


class SparseLevelMatrix:
    """Sparse Hermitian level matrix (Galerkin products on non-circulant paths)."""

    def __init__(self, matrix, d: int = 1):
        m = sp.csr_matrix(matrix)
        if m.shape[0] != m.shape[1]:
            raise DimensionMismatch("level matrix must be square")
        if m.shape[0] % d:
            raise DimensionMismatch("size is not a multiple of the block size")
        self.matrix = m
        self.d = d
        self.n = m.shape[0] // d
        self.real = not np.iscomplexobj(m.data)

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, x):
        x = np.asarray(x)
        if x.shape[0] != self.matrix.shape[0]:
            raise DimensionMismatch(f"vector of length {x.shape[0]} for an operator of size {self.matrix.shape[0]}")
        return self.matrix @ x

    def __matmul__(self, x):
        return self.matvec(x)

    def block_diagonal(self) -> np.ndarray:
        """All diagonal blocks, shape ``(n, d, d)``."""
        d, n = self.d, self.n
        m = self.matrix
        if d == 1:
            return m.diagonal().reshape(n, 1, 1)
        bsr = sp.bsr_matrix(m, blocksize=(d, d))
        out = np.zeros((n, d, d), dtype=m.dtype)
        for i in range(n):
            start, stop = bsr.indptr[i], bsr.indptr[i + 1]
            hit = np.flatnonzero(bsr.indices[start:stop] == i)
            if hit.size:
                out[i] = bsr.data[start + hit[0]]
        return out

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def to_sparse(self) -> sp.csr_matrix:
        return self.matrix

    def to_dense(self) -> np.ndarray:
        if self.matrix.shape[0] > DENSE_CAP:
            raise TooLarge(f"dense assembly of size {self.matrix.shape[0]} exceeds {DENSE_CAP}")
        return self.matrix.toarray()


def circulant_matvec(A: BlockCirculantOperator, x):
    return A.matvec(x)


def toeplitz_matvec(A: BlockToeplitzOperator, x):
    return A.matvec(x)


def assemble_dense(A) -> np.ndarray:
    """Dense copy of any operator or transfer that offers ``to_dense``."""
    if sp.issparse(A):
        if max(A.shape) > DENSE_CAP:
            raise TooLarge(f"dense assembly of size {max(A.shape)} exceeds {DENSE_CAP}")
        return A.toarray()
    if isinstance(A, np.ndarray):
        return A
    return A.to_dense()


def as_sparse(A) -> sp.csr_matrix:
    if sp.issparse(A):
        return sp.csr_matrix(A)
    return A.to_sparse()


def galerkin_product(A, P):
    """Coarse operator ``P^H A P`` in the cheapest exact representation.

    Circulant levels stay circulant: aggregation maps ``f`` to the scalar samples
    ``q^H f q``; a circulant cut folds the samples of ``p^H f p`` onto the coarse
    grid, ``h[m] = (g[m] + g[m + n/2]) / 2``. Everything else goes through an
    explicit sparse triple product.
    """
    from .transfer import Aggregation, BlockCut, IdentityTransfer

    if isinstance(P, IdentityTransfer):
        return A
    if A.shape[0] != P.shape[0]:
        raise DimensionMismatch(f"transfer with {P.shape[0]} rows for a level of size {A.shape[0]}")
    if isinstance(A, BlockCirculantOperator) and getattr(P, "structure", None) == "circulant":
        if isinstance(P, Aggregation):
            q = P.q
            s = np.einsum("i,mij,j->m", q.conj(), A.samples, q)
            return BlockCirculantOperator(s[:, None, None])
        if isinstance(P, BlockCut):
            if A.n % 2:
                raise OddSize("a cut needs an even number of blocks")
            ps = evaluate(P.p, grid(A.n))
            g = np.einsum("mji,mjk,mkl->mil", ps.conj(), A.samples, ps)
            h = A.n // 2
            return BlockCirculantOperator(0.5 * (g[:h] + g[h:]))
    Ps = P.to_sparse()
    C = Ps.conj().T @ as_sparse(A) @ Ps
    C = 0.5 * (C + C.conj().T)
    C.eliminate_zeros()
    return SparseLevelMatrix(C, d=P.coarse_d)


def coarse_factor(A, rtol: float = 1e-10):
    """Exact (pseudo-)inverse solver for a coarse level.

    Circulants divide by their samples; small matrices use a Hermitian
    pseudo-inverse (circulant kernels survive Galerkin products); large sparse
    matrices use a sparse LU factorization.
    """
    if isinstance(A, BlockCirculantOperator):
        return lambda b: A.pinv_solve(b, rtol)
    N = A.shape[0]
    if N <= 1024:
        M = assemble_dense(A) if not sp.issparse(A) else A.toarray()
        Minv = sla.pinvh(M, rtol=rtol)
        return lambda b: Minv @ b
    from scipy.sparse.linalg import splu

    lu = splu(sp.csc_matrix(as_sparse(A)))
    return lu.solve

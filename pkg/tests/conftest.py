import numpy as np
import pytest

BUILTINS = ["toy(2)", "q2_fem", "qd_fem(4)", "bspline_2_0", "bspline_3_1", "bspline_3_0"]


def dense_block_toeplitz(f, n):
    """Independent assembly: block (i, k) is the Fourier coefficient ``i - k``."""
    d = f.d
    A = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        for k in range(n):
            A[i * d:(i + 1) * d, k * d:(k + 1) * d] = f.coefficient(i - k)
    return A


def dense_block_circulant(f, n):
    """Wrapped Fourier coefficients; valid when ``n > 2 r``."""
    d = f.d
    A = np.zeros((n * d, n * d), dtype=complex)
    for i in range(n):
        for k in range(n):
            A[i * d:(i + 1) * d, k * d:(k + 1) * d] = sum(
                (c for j, c in f.coeffs.items() if (i - k - j) % n == 0), np.zeros((d, d)))
    return A


@pytest.fixture
def rng():
    return np.random.default_rng(1234)

import numpy as np
import pytest

from bsmg.errors import ConfigError, SingularDiagonal, TooLarge
from bsmg.operators import BlockCirculantOperator
from bsmg.smoothers import (
    BlockJacobi,
    ScalarJacobi,
    SmootherSpec,
    admissible_range,
    block_jacobi_step,
    default_omegas,
    scalar_jacobi_step,
    verify_smoothing_property,
)
from bsmg.symbols import builtin_symbol


def test_block_jacobi_apply(rng):
    f0 = builtin_symbol("bspline_3_0").fhat0.real
    M = BlockJacobi(f0)
    r = rng.standard_normal(12)
    ref = np.linalg.solve(np.kron(np.eye(4), f0), r)
    assert np.allclose(M.apply(r), ref)


def test_block_jacobi_varying_blocks(rng):
    blocks = np.array([np.eye(2) * (k + 1) for k in range(3)])
    assert np.allclose(BlockJacobi(blocks).apply(np.ones(6)), np.repeat(1 / np.arange(1, 4), 2))


def test_singular_diagonal():
    with pytest.raises(SingularDiagonal):
        BlockJacobi(np.array([[1.0, 0], [0, 0]]))
    with pytest.raises(SingularDiagonal):
        ScalarJacobi([1.0, 0.0])


def test_steps_reduce_error_on_q2(rng):
    f = builtin_symbol("q2_fem")
    A = BlockCirculantOperator.from_symbol(f, 32)
    x_true = rng.standard_normal(64)
    x_true -= x_true.reshape(32, 2).mean()  # stay off the kernel
    b = A.matvec(x_true)
    x = np.zeros(64)
    e0 = np.linalg.norm(A.matvec(x - x_true))
    for _ in range(5):
        x = block_jacobi_step(A, f.fhat0.real, 0.5, x, b)
    assert np.linalg.norm(A.matvec(x - x_true)) < e0
    y = scalar_jacobi_step(A, np.real(A.diagonal()), 0.3, np.zeros(64), b)
    assert y.shape == (64,)


@pytest.mark.parametrize("kind,omega,steps", [("chebyshev", 0.5, 1), ("block", 0.0, 1), ("block", 0.5, -1)])
def test_spec_validation(kind, omega, steps):
    with pytest.raises(ConfigError):
        SmootherSpec(kind, omega, steps)


def test_admissible_ranges_q2():
    f = builtin_symbol("q2_fem")
    lo, hi = admissible_range("block", f)
    assert lo == 0 and abs(hi - 1.0) < 1e-9
    # independent oracle: dense sampling of D^{-1} f with D = min diag
    th = np.linspace(0, 2 * np.pi, 4001)
    dmin = np.diag(f.fhat0.real).min()
    lam = max(np.linalg.eigvalsh(f(t)).max() for t in th) / dmin
    assert abs(admissible_range("scalar", f, "min")[1] - 2 / lam) < 1e-6
    with pytest.raises(ConfigError):
        admissible_range("scalar", f, "max")


def test_default_omegas():
    assert default_omegas(1.0) == (0.75, 0.5)


@pytest.mark.parametrize("name", ["q2_fem", "bspline_3_0"])
def test_smoothing_property_threshold(name):
    f = builtin_symbol(name)
    A = BlockCirculantOperator.from_symbol(f, 32)
    _, wmax = admissible_range("block", f)
    assert verify_smoothing_property(A, f.fhat0, 0.5 * wmax)[0]
    ok, a = verify_smoothing_property(A, f.fhat0, 1.05 * wmax)
    assert not ok and a < 0


def test_smoothing_property_size_cap():
    A = BlockCirculantOperator.from_symbol(builtin_symbol("q2_fem"), 1024)
    with pytest.raises(TooLarge):
        verify_smoothing_property(A, np.eye(2), 0.5)

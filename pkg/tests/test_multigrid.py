import numpy as np
import pytest

from bsmg.errors import ConfigError, MaxIterationsExceeded, TooLarge
from bsmg.experiments import overrelaxed_hierarchy, reference_rhs
from bsmg.multigrid import (
    build_aggregation_hierarchy,
    build_block_hierarchy,
    error_propagator,
    solve,
    tgm_solve,
)
from bsmg.operators import assemble_dense
from bsmg.smoothers import SmootherSpec
from bsmg.symbols import builtin_symbol, find_singularity
from bsmg.transfer import Aggregation


def _dense_tgm(f, n, alpha, w_pre, w_post):
    """Two-grid propagator assembled from dense matrices and a pseudo-inverse."""
    from bsmg.operators import BlockCirculantOperator

    A = BlockCirculantOperator.from_symbol(f, n).to_dense()
    P = Aggregation(find_singularity(f).q, n).to_dense()
    N = A.shape[0]
    Dinv = np.kron(np.eye(n), np.linalg.inv(f.fhat0.real))
    S = lambda w: np.eye(N) - w * Dinv @ A  # noqa: E731
    CGC = np.eye(N) - alpha * P @ np.linalg.pinv(P.T @ A @ P, rcond=1e-10, hermitian=True) @ P.T @ A
    return S(w_post) @ CGC @ S(w_pre)


@pytest.mark.parametrize("alpha,omega", [(1.0, 0.5), (2.2, 0.75)])
def test_two_grid_propagator_matches_dense(alpha, omega):
    f = builtin_symbol("toy(2)")
    h = overrelaxed_hierarchy(f, 64, "circulant", alpha, omega).two_grid()
    E = error_propagator(h)
    ref = _dense_tgm(f, 64, alpha, omega, omega)
    # both act identically off the constant kernel
    N = E.shape[0]
    Z = np.eye(N) - np.ones((N, N)) / N
    assert np.allclose(Z @ E @ Z, Z @ ref @ Z, atol=1e-10)


def test_propagator_size_cap():
    h = build_aggregation_hierarchy(builtin_symbol("q2_fem"), 1024)
    with pytest.raises(TooLarge):
        error_propagator(h)


@pytest.mark.parametrize("name", ["toy(2)", "q2_fem", "bspline_2_0"])
def test_aggregation_counts_level_independent(name):
    f = builtin_symbol(name)
    counts = []
    for t in (10, 12, 14):
        h = build_aggregation_hierarchy(f, 2 ** t)
        counts.append(solve(h, reference_rhs(h.levels[0].A))[1].iterations)
    assert max(counts) - min(counts) <= 1


def test_hierarchy_shapes():
    h = build_aggregation_hierarchy(builtin_symbol("q2_fem"), 256)
    sizes = [L.size for L in h.levels]
    assert sizes[0] == 512 and sizes[1] == 256
    assert all(a == 2 * b for a, b in zip(sizes[1:], sizes[2:]))
    assert sizes[-1] <= 64
    assert h.levels[-1].solve is not None


@pytest.mark.parametrize("structure", ["circulant", "toeplitz"])
def test_block_hierarchy_converges(structure):
    f = builtin_symbol("q2_fem")
    for projector in ("default", "geometric"):
        h = build_block_hierarchy(f, 256, structure, projector=projector, name="q2_fem")
        x, rep = solve(h, reference_rhs(h.levels[0].A))
        assert rep.converged and rep.iterations < 40
        assert all(L.A.shape[0] % 2 == 0 for L in h.levels)


def test_toeplitz_solution_accuracy():
    f = builtin_symbol("bspline_2_0")
    h = build_aggregation_hierarchy(f, 512, "toeplitz")
    A = h.levels[0].A
    b = reference_rhs(A)
    x, rep = tgm_solve(h, b)
    assert np.linalg.norm(A.matvec(x) - b) < 1e-6 * np.linalg.norm(b)
    x_true = np.random.default_rng(0).random(A.shape[0])
    assert np.allclose(x, x_true, atol=1e-2)


def test_max_iterations_report():
    h = build_aggregation_hierarchy(builtin_symbol("q2_fem"), 256)
    b = reference_rhs(h.levels[0].A)
    with pytest.raises(MaxIterationsExceeded) as ei:
        solve(h, b, max_iter=3)
    assert ei.value.report.iterations == 3 and not ei.value.report.converged
    assert ei.value.x.shape == b.shape


def test_zero_rhs():
    h = build_aggregation_hierarchy(builtin_symbol("q2_fem"), 128)
    x, rep = solve(h, np.zeros(256))
    assert rep.iterations == 0 and not np.any(x)


def test_builder_errors():
    f = builtin_symbol("q2_fem")
    with pytest.raises(ConfigError):
        build_aggregation_hierarchy(f, 100)
    with pytest.raises(ConfigError):
        build_aggregation_hierarchy(f, 128, "banded")
    with pytest.raises(ConfigError):
        build_block_hierarchy(f, 128, projector="geometric")


def test_with_alpha_and_custom_smoothers():
    f = builtin_symbol("toy(2)")
    spec = SmootherSpec("block", 0.75, 1)
    h = build_aggregation_hierarchy(f, 256, pre=spec, post=spec)
    a = tgm_solve(h, reference_rhs(h.levels[0].A))[1].iterations
    b = tgm_solve(h.with_alpha(2.2), reference_rhs(h.levels[0].A))[1].iterations
    assert b < a


def test_small_problem_direct():
    h = build_aggregation_hierarchy(builtin_symbol("q2_fem"), 16)
    assert h.depth == 1
    A = h.levels[0].A
    b = reference_rhs(A)
    x, rep = solve(h, b)
    assert rep.iterations == 1
    assert np.allclose(assemble_dense(A) @ x, b)

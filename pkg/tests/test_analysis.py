import numpy as np
import pytest

from bsmg.analysis import (
    TGMSymbol,
    approximation_constant,
    empirical_best_pair,
    spectral_radius,
    sweep,
    tgm_symbol_eval,
    tgm_symbol_samples,
)
from bsmg.errors import SingularCoarse
from bsmg.experiments import overrelaxed_hierarchy
from bsmg.multigrid import build_aggregation_hierarchy, error_propagator
from bsmg.operators import BlockCirculantOperator
from bsmg.symbols import builtin_symbol, find_singularity
from bsmg.transfer import Aggregation


@pytest.mark.parametrize("name,alpha,omega,rho", [
    ("toy(2)", 2.2, 0.75, 0.308), ("toy(2)", 1.0, 0.75, 0.5),
    ("q2_fem", 2.6, 0.725, 0.363), ("q2_fem", 1.0, 0.725, 0.571),
    ("bspline_2_0", 1.3, 0.85, 0.149), ("bspline_2_0", 1.0, 0.85, 0.250)])
def test_printed_spectral_radii(name, alpha, omega, rho):
    s = TGMSymbol.build(builtin_symbol(name), omega, omega, alpha)
    assert abs(spectral_radius(s) - rho) <= 0.01


def test_symbol_singular_at_theta0():
    s = TGMSymbol.build(builtin_symbol("q2_fem"))
    with pytest.raises(SingularCoarse):
        tgm_symbol_eval(s, 0.0)
    assert tgm_symbol_eval(s, 0.1).shape == (2, 2)


@pytest.mark.parametrize("name", ["q2_fem", "bspline_3_0"])
def test_symbol_matches_propagator_spectrum(name):
    f = builtin_symbol(name)
    n = 64
    h = build_aggregation_hierarchy(f, n).two_grid()
    ev = np.sort_complex(np.round(np.linalg.eigvals(error_propagator(h)), 9))
    s = TGMSymbol.build(f)
    sym = np.sort_complex(np.round(np.linalg.eigvals(tgm_symbol_samples(s, n)).ravel(), 9))
    assert np.allclose(ev, sym, atol=1e-8)


def test_spectral_radius_sample_floor():
    with pytest.raises(ValueError):
        spectral_radius(TGMSymbol.build(builtin_symbol("q2_fem")), samples=16)


def test_sweep_grid_and_argmin():
    f = builtin_symbol("toy(2)")
    res = sweep(f, (0.5, 0.9, 17), (1.0, 3.0, 11))
    assert res.rho.shape == (11, 17)
    assert len(list(res.rows())) == 187
    a, w = res.argmin
    assert (a, w) == pytest.approx((2.2, 0.75))


def test_sweep_threads_deterministic(monkeypatch):
    f = builtin_symbol("bspline_2_0")
    r1 = sweep(f, (0.7, 1.0, 4), (1.0, 1.6, 3))
    monkeypatch.setenv("BSMG_THREADS", "3")
    r2 = sweep(f, (0.7, 1.0, 4), (1.0, 1.6, 3))
    assert np.array_equal(r1.rho, r2.rho)


def test_sweep_csv(tmp_path):
    res = sweep(builtin_symbol("bspline_2_0"), (0.85, 0.85, 1), (1.3, 1.3, 1))
    p = tmp_path / "s.csv"
    res.write_csv(str(p))
    lines = p.read_text().splitlines()
    assert lines[0] == "alpha,omega,rho" and len(lines) == 2


@pytest.mark.parametrize("name", ["toy(2)", "q2_fem", "bspline_3_1"])
@pytest.mark.parametrize("n", [16, 32])
def test_approximation_property(name, n):
    f = builtin_symbol(name)
    sing = find_singularity(f)
    gamma = approximation_constant(f, sing, n)
    A = BlockCirculantOperator.from_symbol(f, n).to_dense()
    P = Aggregation(sing.q, n).to_dense()
    M = gamma * A - (np.eye(A.shape[0]) - P @ P.conj().T)
    assert np.linalg.eigvalsh(M).min() >= -1e-10


def test_empirical_best_pair_small_grid():
    f = builtin_symbol("toy(2)")
    a, w = empirical_best_pair(f, 256, [1.0, 1.8], [0.75, 0.775])
    assert a == 1.8

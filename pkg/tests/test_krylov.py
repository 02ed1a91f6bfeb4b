import numpy as np
import pytest
import scipy.sparse as sp

from bsmg.errors import BreakdownNonSPD, MaxIterationsExceeded
from bsmg.experiments import overrelaxed_hierarchy, reference_rhs
from bsmg.krylov import PCGConfig, pcg, preconditioner_symmetry_defect
from bsmg.multigrid import build_block_hierarchy
from bsmg.operators import SparseLevelMatrix
from bsmg.symbols import builtin_symbol


def test_plain_cg_matches_direct(rng):
    M = sp.diags([-1, 2.5, -1], [-1, 0, 1], shape=(50, 50), format="csr")
    A = SparseLevelMatrix(M)
    b = rng.standard_normal(50)
    x, rep = pcg(A, b, PCGConfig(tol=1e-10))
    assert np.allclose(x, np.linalg.solve(M.toarray(), b), atol=1e-8)
    assert rep.converged


def test_indefinite_breaks_down():
    A = SparseLevelMatrix(sp.diags([1.0, -1.0, 1.0]))
    with pytest.raises(BreakdownNonSPD):
        pcg(A, np.array([0.0, 1.0, 0.0]))


def test_max_iter():
    M = sp.diags([-1, 2.0, -1], [-1, 0, 1], shape=(400, 400), format="csr")
    with pytest.raises(MaxIterationsExceeded) as ei:
        pcg(SparseLevelMatrix(M), np.ones(400), PCGConfig(max_iter=5))
    assert ei.value.report.iterations == 5


@pytest.mark.parametrize("path", ["aggregate", "block"])
def test_vcycle_preconditioner_is_symmetric_and_fast(path):
    f = builtin_symbol("q2_fem")
    if path == "aggregate":
        h = overrelaxed_hierarchy(f, 1024, "toeplitz", 1.8, 0.7)
    else:
        from bsmg.smoothers import SmootherSpec

        spec = SmootherSpec("block", 0.6, 1)
        h = build_block_hierarchy(f, 1024, "toeplitz", projector="geometric", name="q2_fem", pre=spec, post=spec)
    assert preconditioner_symmetry_defect(h) < 1e-10
    A = h.levels[0].A
    b = reference_rhs(A)
    x, rep = pcg(A, b, PCGConfig(preconditioner=h))
    assert rep.iterations <= 10
    plain = pcg(A, b, PCGConfig(max_iter=5000))[1].iterations
    assert plain > 5 * rep.iterations

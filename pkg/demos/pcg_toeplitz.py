"""One V-cycle as a CG preconditioner on block Toeplitz systems: aggregate versus block path.

    python demos/pcg_toeplitz.py
"""
from bsmg.experiments import expectations, hierarchy_for, reference_rhs
from bsmg.krylov import PCGConfig, pcg

t = 14
for tid in ("T11", "T12"):
    for col in expectations()["tables"][tid]["columns"]:
        h = hierarchy_for(col, 2 ** t, "toeplitz")
        A = h.levels[0].A
        _, rep = pcg(A, reference_rhs(A), PCGConfig(preconditioner=h))
        print(f"{col['problem']:<12} {col['label']:<18} it {rep.iterations:>2}  "
              f"setup {h.setup_seconds:.3f}s  solve {rep.solve_seconds:.3f}s")

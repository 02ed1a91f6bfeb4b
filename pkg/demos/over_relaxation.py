"""Pick (alpha, omega) from the two-grid symbol, then check it on the matrices.

    python demos/over_relaxation.py
"""
from bsmg.analysis import TGMSymbol, spectral_radius, sweep
from bsmg.experiments import overrelaxed_hierarchy, reference_rhs
from bsmg.multigrid import solve, tgm_solve
from bsmg.symbols import builtin_symbol

GRIDS = {
    "toy(2)": ((0.5, 0.9, 17), (1.0, 3.0, 11)),
    "q2_fem": ((0.5, 0.9, 13), (1.0, 3.4, 16)),
    "bspline_2_0": ((0.7, 1.0, 13), (1.0, 1.6, 13)),
}

for name, (om, al) in GRIDS.items():
    f = builtin_symbol(name)
    res = sweep(f, om, al)
    a, w = res.argmin
    rho1 = spectral_radius(TGMSymbol.build(f, w, w, 1.0))
    print(f"{name}: best (alpha, omega) = ({a:.3g}, {w:.4g}), rho = {res.rho_min:.3f}; alpha = 1 gives {rho1:.3f}")
    for structure in ("circulant", "toeplitz"):
        for alpha in (a, 1.0):
            h = overrelaxed_hierarchy(f, 2 ** 12, structure, alpha, w)
            b = reference_rhs(h.levels[0].A)
            print(f"    {structure:<9} alpha={alpha:<4.3g} tgm {tgm_solve(h, b)[1].iterations:>3}"
                  f"  v-cycle {solve(h, b)[1].iterations:>3}")

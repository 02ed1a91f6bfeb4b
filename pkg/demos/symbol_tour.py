"""Spectral facts of the builtin symbols: where they vanish, the Jacobi bound, the coarse symbol.

    python demos/symbol_tour.py
"""
import numpy as np

from bsmg.cli import symbol_report
from bsmg.symbols import builtin_symbol

NAMES = ["toy(2)", "toy(4)", "q2_fem", "qd_fem(3)", "bspline_2_0", "bspline_3_1", "bspline_3_0"]

print(f"{'symbol':<12} {'d':>2} {'theta0':>7} {'beta':>4} {'omega_max':>9}  coarse symbol")
for name in NAMES:
    rep = symbol_report(builtin_symbol(name))
    c = rep["coarse_coefficients"]
    # every coarse symbol is c (2 - 2cos): report c
    scale = c["0"] / 2 if isinstance(c["0"], float) else np.nan
    print(f"{name:<12} {rep['d']:>2} {rep['theta0']:>7.3f} {rep['beta']:>4} {rep['omega_max']:>9.6f}"
          f"  {scale:.6g} (2 - 2cos)")

"""Two-grid and V-cycle counts with the aggregation hierarchy on block circulants.

Counts stay flat as the grid is refined. Pass ``--t 15:17`` for the sizes of the
printed tables (a few minutes on one core).

    python demos/aggregation_counts.py --t 10:12
"""
import argparse

from bsmg.cli import parse_t
from bsmg.experiments import reference_rhs
from bsmg.multigrid import build_aggregation_hierarchy, solve, tgm_solve
from bsmg.symbols import builtin_symbol

ap = argparse.ArgumentParser()
ap.add_argument("--t", default="10:12")
args = ap.parse_args()

problems = ["toy(2)", "toy(4)", "q2_fem", "qd_fem(4)", "bspline_2_0", "bspline_3_1", "bspline_3_0"]
ts = parse_t(args.t)
print("problem      " + "".join(f"  t={t:<2} tgm/v " for t in ts))
for name in problems:
    f = builtin_symbol(name)
    cells = []
    for t in ts:
        h = build_aggregation_hierarchy(f, 2 ** t)
        b = reference_rhs(h.levels[0].A)
        cells.append(f"{tgm_solve(h, b)[1].iterations:>5}/{solve(h, b)[1].iterations:<5}")
    print(f"{name:<12} " + "  ".join(cells))

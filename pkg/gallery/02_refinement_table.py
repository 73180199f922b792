"""Discrete inf-sup constants under uniform refinement, k = 1.

The coarsest mesh has 144 spans on the interface and every level doubles
both mesh directions.  The harmonic order is tied to the mesh through
``N = floor(c n)``.  For ``c < 1/2`` the constant sits on the closed form
value; at ``c = 1/2`` there are ``n + 1`` multipliers for ``n`` trace dofs
and the constant collapses.

Pass ``--levels 4`` to include the finest level (about a minute).
"""
import argparse
import time

from harmonic_mortar import AnnulusGeometry, analytic_beta, infsup_sweep
from harmonic_mortar.cli import format_grid

parser = argparse.ArgumentParser()
parser.add_argument("--levels", type=int, default=3)
args = parser.parse_args()

geom = AnnulusGeometry()
t0 = time.perf_counter()
results = infsup_sweep(geom, range(1, args.levels + 1), [1], [1 / 4, 1 / 3, 3 / 8, 1 / 2])
print(format_grid(results))
print(f"closed form beta = {analytic_beta(geom).min:.6f}; {time.perf_counter() - t0:.1f} s")

# with h the span width in theta / pi the criterion value N h / k equals 2 c,
# so c = 1/2 sits exactly on the sufficient bound
for r in results:
    if r.level == 1:
        print(f"c = {r.c:.4f}: N = {r.N:3d}, dim M_N = {r.dim_MN:3d}, N h/k = {r.criterion_value:.3f}, "
              f"{'stable' if r.stable else 'unstable'}")

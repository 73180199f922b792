"""Manufactured solution on the coupled stator/rotor problem.

``u = sin(pi (r - r_shaft) / (r_outer - r_shaft)) cos(3 theta)`` vanishes on
both Dirichlet circles and is smooth across the air gap.  The rings use
different angular meshes (48 and 32 spans at the base level), so the
interface is genuinely nonmatching.  The H1 error should drop like h^k and
the cos(3 theta) multiplier coefficient should approach du/dr on the gap.
"""
from harmonic_mortar.cli import convergence_table
from harmonic_mortar.config import parse_config

cfg = parse_config({
    "discretization": {"n_theta": {"stator": 48, "rotor": 32},
                       "degrees": [1, 2, 3], "levels": [1, 2, 3, 4]},
    "multiplier": {"N": [4]},
})

print(" k  level     dofs    H1 error    rate   lambda rel. error")
for k, level, h, dofs, err, rate, lam in convergence_table(cfg):
    print(f"{k:2d} {level:6d} {dofs:8d}  {err:10.3e}  {rate:6.3f}   {lam:10.3e}")

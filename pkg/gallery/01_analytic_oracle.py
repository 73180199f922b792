"""Closed-form inf-sup constants of the stator annulus.

For a harmonic multiplier ``cos(n theta)`` on the air-gap circle the Riesz
representer in ``R1 < r < R2`` (zero on the outer circle) separates, so
each angular order has its own constant.  The smallest one is mode 0,
``beta = sqrt(R1 ln(R2 / R1))``, and high orders approach ``sqrt(R1)``.
"""
import math

from harmonic_mortar import AnnulusGeometry, analytic_beta

geom = AnnulusGeometry()
ab = analytic_beta(geom, n_max=40)

print(f"R1 = {geom.r_gamma}, R2 = {geom.r_outer}")
for n in (0, 1, 2, 4, 8, 16, 40):
    print(f"  n = {n:2d}   beta_n = {ab.beta[n]:.8f}")

print(f"min over modes   : {ab.min:.8f} (mode {ab.argmin})")
print(f"sqrt(R1 ln R2/R1): {math.sqrt(geom.r_gamma * math.log(geom.r_outer / geom.r_gamma)):.8f}")
print(f"sqrt(R1)         : {math.sqrt(geom.r_gamma):.8f}")

"""
Operators, characteristic numbers and sectors
=============================================

An operator is a finite matrix ``B``.  Its characteristic numbers are the
reciprocals ``lam = 1/mu`` of the nonzero eigenvalues, and the whole theory
lives on the sector that encloses its numerical range.
"""
import numpy as np

from lidskii import (OperatorSpec, characteristic_numbers, estimate_sector,
                     resolvent_apply, verify_resolvent_bound)
from lidskii.families import random_sectorial

# A dense operator whose numerical range sits inside a sector of
# semi-angle 0.4 around the positive axis.
B = random_sectorial(6, 0.4, seed=1)
print("dimension", B.dimension, " norm", round(B.norm, 4))
print("characteristic numbers:")
for lam in characteristic_numbers(B):
    print("   ", np.round(lam, 5))

# The sector is found from quasi-random probes of the numerical range and
# then refined by root-finding on each edge.
sector = estimate_sector(B)
print("\nsector vertex", sector.vertex, " semi-angle", round(sector.semi_angle, 5),
      "(construction bound 0.4)")

# The resolvent (I - lam B)^{-1} f is an LU solve with iterative refinement.
f = np.ones(6)
lam = 2.0 * np.exp(2.0j)
u = resolvent_apply(B, lam, f)
print("\nresidual of (I - lam B) u = f:",
      np.linalg.norm(u - lam * (B.dense @ u) - f))

# Off the sector the resolvent is bounded by 1/sin of the angular gap.
phi = 0.5 * (sector.semi_angle + np.pi / 2)
report = verify_resolvent_bound(B, "ray", {"angle": phi, "sector": sector})
print("ray at angle %.3f: max violation %.2e over %d probes"
      % (phi, report.max_violation, report.probes))

# Operators with known Jordan data keep that structure alongside the matrix.
J = OperatorSpec.from_jordan([(0.5, 2), (0.25, 1)])
print("\nJordan operator eigenvalues", J.eigenvalues())

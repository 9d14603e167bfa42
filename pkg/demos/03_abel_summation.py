"""
Abel-regularized summation
==========================

Each coefficient is damped by ``exp(-lam^alpha t)`` and, on a Jordan chain,
mixed with its neighbours through the polynomials ``P_m``.  As ``t -> 0``
the regularized coefficients return to the raw ones at rate ``t``.
"""
import numpy as np

from lidskii import (eval_abel_polynomial, group_schedule, grouped_partial_sums,
                     raw_coefficients, regularized_coefficients, spectral_decomposition)
from lidskii.abel import default_schedule_parameters
from lidskii.families import sectorial_structured

alpha = 2.0
print("P_m(zeta = 1.3, t = 0.5):")
for m in range(5):
    print("   m = %d  %s" % (m, np.round(eval_abel_polynomial(m, alpha, 1.3, 0.5), 8)))

op = sectorial_structured([(1.0, 3), (0.5, 2), (0.3, 1)], seed=4, eta=0.2)
d = spectral_decomposition(op)
f = np.ones(6)
c = raw_coefficients(d, f)

print("\nmax |c_n(t) - c_n| / t:")
for t in (1e-1, 1e-2, 1e-3, 1e-4):
    ct = regularized_coefficients(d, c, t, alpha).values
    print("   t = %.0e  %.6f" % (t, np.abs(ct - c).max() / t))

# Groups of characteristic numbers are summed block by block; the block
# norms are what must form a convergent series.
tau, K = default_schedule_parameters(d, alpha)
schedule = group_schedule(d, tau, K)
sums = grouped_partial_sums(d, regularized_coefficients(d, c, 0.5, alpha), schedule)
print("\nschedule blocks", schedule.blocks, " in-group constant %.3f" % schedule.in_group_constant)
print("block norms", np.round(sums.group_norms, 6))
print("total at t = 0.5", np.round(sums.total, 6))

"""
Contour integral versus grouped sums
====================================

The semigroup ``S_t f`` is a contour integral of
``exp(-lam^alpha t) B (I - lam B)^{-1} f`` around the sector.  In finite
dimension it must equal the sum of all grouped partial sums, and each pole
contributes exactly one group.
"""
import numpy as np

from lidskii import (build_contour, estimate_sector, grouped_partial_sums,
                     integrate_resolvent_functional, raw_coefficients,
                     regularized_coefficients, residue_at_pole, spectral_decomposition)
from lidskii.abel import default_schedule_parameters, group_schedule, group_vectors
from lidskii.families import random_sectorial

alpha, t = 1.5, 0.1
op = random_sectorial(8, 0.3, seed=0)
sector = estimate_sector(op)
f = np.random.default_rng(0).normal(size=8)

contour = build_contour("gamma_B", op, sector, t, alpha)
q = integrate_resolvent_functional(op, f, t, alpha, contour)
print("contour: %d panels, quadrature error %.1e, truncation bound %.1e"
      % (q.panels_used, q.panel_error_estimate, q.truncation_bound))

d = spectral_decomposition(op)
rc = regularized_coefficients(d, raw_coefficients(d, f), t, alpha)
tau, K = default_schedule_parameters(d, alpha)
sums = grouped_partial_sums(d, rc, group_schedule(d, tau, K))
print("relative gap to the grouped sums: %.2e"
      % (np.linalg.norm(q.value - sums.total) / np.linalg.norm(sums.total)))

# A small circle around one characteristic number picks up minus its group.
g = d.finite_groups[0]
res = residue_at_pole(op, f, t, alpha, g)
v = group_vectors(d, rc)[0]
print("residue at lam = %s vs group: %.2e"
      % (np.round(g.lam, 4), np.linalg.norm(res + v) / np.linalg.norm(v)))

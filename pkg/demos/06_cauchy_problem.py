"""
The fractional Cauchy problem
=============================

``u(t) = S_t h`` solves ``D^{1/alpha}_- u = W u`` with ``u(0) = h``, where
``B = W^{-1}``.  Three backends compute ``u`` and an independent
Riemann-Liouville evaluator checks the equation itself.
"""
import numpy as np

from lidskii import CauchyProblem, gamma_tail_identity, solve_cauchy, verify_solution
from lidskii.families import diagonal_family, sectorial_structured

grid = np.linspace(0.1, 1.5, 8)
h = np.random.default_rng(10).normal(size=4)
h /= np.linalg.norm(h)

prob = CauchyProblem(diagonal_family(4, 10), h, 2.0)
runs = {b: solve_cauchy(prob, grid, b) for b in ("contour", "series", "eigen")}
for b, tr in runs.items():
    print("%-8s |u(1.5)| = %.12f" % (b, np.linalg.norm(tr.values[-1])))

report = verify_solution(prob, runs["contour"])
for name, chk in report.checks.items():
    state = "skipped" if chk.skipped else ("pass" if chk.passed else "FAIL")
    print("check %-12s %-7s value %.2e" % (name, state, chk.value))

# A single Jordan block: no eigenvector basis, the same checks apply.
W = sectorial_structured([(1.5, 3)], seed=10, eta=0.2)
hj = np.ones(3) / np.sqrt(3)
pj = CauchyProblem(W, hj, 2.0)
tj = solve_cauchy(pj, grid, "contour")
print("\nJordan W: residual %.2e" % verify_solution(pj, tj).checks["residual"].value)

# The scalar identity behind the derivative of exp(-lam^alpha t).
for lam, a in ((1.0, 2.0), (1 + 1j, 2.0), (2.5, 3.0)):
    chk = gamma_tail_identity(lam, a)
    print("Gamma tail lam=%s alpha=%.1f: rel err %.1e" % (lam, a, chk.rel_err))

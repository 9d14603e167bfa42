"""
Convergence exponents and beta profiles
=======================================

For a sequence of moduli ``a_n`` the convergence exponent is the infimum of
``s`` with ``sum a_n^{-s} < inf``.  It is read off the slope of
``ln n(r)`` against ``ln r``; the genus is the smallest ``p`` with
``sum a_n^{-(p+1)}`` finite.
"""
import numpy as np

from lidskii import beta_profile, convergence_exponent, counting_function, generate_model_sequence

for rho in (0.5, 1.0, 2.0):
    seq = generate_model_sequence("power", terms=10 ** 6, rho=rho)
    rep = convergence_exponent(seq)
    print("a_n = n^(1/%.1f):  rho_hat %.4f  genus %d  n(100) = %d"
          % (rho, rep.rho_hat, rep.genus, counting_function(seq, 100.0)))

# The slowly thinned sequence E1 has exponent 1 but a counting function
# that falls short of r by iterated logarithms.
e1 = generate_model_sequence("E1", terms=20000, rho=1.0)
print("\nE1: rho_hat %.3f" % convergence_exponent(e1).rho_hat)

# beta(r) ln r is expected to tend to zero only when the exponent avoids
# the genus and genus + 1.  Here both equal 1, and the product grows.
prof = beta_profile(e1, 1, 1.0, [1e2, 1e3, 1e4, 1e5, 1e6])
for r, b, bl in prof.rows():
    print("   r = %.0e  beta %.5f  beta ln r %.3f" % (r, b, bl))
print("ratio last/first = %.2f (a decaying trend would need < 1/3)"
      % (prof.beta_ln_r[-1] / prof.beta_ln_r[0]))

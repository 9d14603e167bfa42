"""
Jordan chains and the biorthogonal system
=========================================

``decompose`` groups eigenvalues, builds Jordan chains
``B e_0 = mu e_0``, ``B e_i = mu e_i + e_{i-1}``, and pairs them with
adjoint chains so that every vector has a computable coefficient.
"""
import numpy as np

from lidskii import chain_residuals, raw_coefficients, riesz_projector, spectral_decomposition
from lidskii.families import sectorial_structured

# Two chains of length 3 and 2 plus a simple eigenvalue, hidden behind a
# random change of basis.
op = sectorial_structured([(1.0, 3), (0.5, 2), (0.3, 1)], seed=4, eta=0.2)
d = spectral_decomposition(op)

for g in d.groups:
    print("mu = %-22s algebraic %d  geometric %d" %
          (np.round(g.mu, 6), g.algebraic_multiplicity, g.geometric_multiplicity))

fwd, adj = chain_residuals(op, d)
print("\nchain residuals: forward %.1e  adjoint %.1e" % (fwd, adj))

# Biorthogonality: the adjoint matrix G satisfies G^H E = I.
E, G = d.root_matrix(), d.adjoint_matrix()
print("|G^H E - I| =", np.abs(G.conj().T @ E - np.eye(d.dimension)).max())

# Coefficients c_n = (f, g_n) reproduce f exactly in finite dimension.
f = np.arange(1.0, 7.0)
c = raw_coefficients(d, f)
print("|E c - f| =", np.linalg.norm(E @ c - f))

# The Riesz projector of a group, as a contour integral around its eigenvalue,
# is idempotent.
P = riesz_projector(op, d.groups[0])
print("|P^2 - P| =", np.abs(P @ P - P).max())

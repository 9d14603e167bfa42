"""Jordan chains, biorthogonal systems and Riesz projectors.

Chains are stored with the eigenvector first: ``B e_0 = mu e_0`` and
``B e_j = mu e_j + e_{j-1}``.  The adjoint chain satisfies
``B^* g_k = conj(mu) g_k`` and ``B^* g_{j-1} = conj(mu) g_{j-1} + g_j`` and
the flattened systems are biorthogonal, ``(e_m, g_n) = delta_{mn}`` with the
inner product ``(x, y) = y^H x``.
"""
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import ChainConstructionError, ForeignPoleError, PairingConditionError
from .operators import vector_to_json

__all__ = ["JordanChain", "SpectralGroup", "SpectralDecomposition",
           "decompose", "build_biorthogonal", "spectral_decomposition",
           "riesz_projector", "raw_coefficients", "chain_residuals",
           "decomposition_to_json"]

PAIRING_CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class JordanChain:
    """One Jordan chain.

    ``vectors`` is an ``(n, k+1)`` array whose columns are
    ``e_0, ..., e_k``; ``adjoint`` has the same shape (or is None before
    :func:`build_biorthogonal`).
    """
    mu: complex
    vectors: np.ndarray
    adjoint: np.ndarray = None
    index: int = 0

    @property
    def length(self):
        return self.vectors.shape[1]


@dataclass(frozen=True, eq=False)
class SpectralGroup:
    """Root vectors belonging to one eigenvalue ``mu``.

    ``lam`` is the characteristic number ``1/mu`` (``inf`` when ``mu = 0``).
    """
    mu: complex
    lam: complex
    chains: tuple

    @property
    def algebraic_multiplicity(self):
        return sum(c.length for c in self.chains)

    @property
    def geometric_multiplicity(self):
        return len(self.chains)

    @property
    def finite(self):
        return self.mu != 0


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalue groups ordered by increasing ``|lam|`` (then by ``arg lam``)."""
    groups: tuple
    dimension: int

    @property
    def total_root_count(self):
        return sum(g.algebraic_multiplicity for g in self.groups)

    @property
    def has_adjoint(self):
        return all(c.adjoint is not None for g in self.groups for c in g.chains)

    def chains(self):
        """Iterate over ``(group_index, chain, offset)`` in flattened order."""
        k = 0
        for q, g in enumerate(self.groups):
            for c in g.chains:
                yield q, c, k
                k += c.length

    def root_matrix(self):
        """``(n, N)`` matrix of all root vectors in flattened order."""
        return np.hstack([c.vectors for _, c, _ in self.chains()])

    def adjoint_matrix(self):
        if not self.has_adjoint:
            raise ValueError("biorthogonal system has not been built")
        return np.hstack([c.adjoint for _, c, _ in self.chains()])

    def group_slices(self):
        """Flattened index range of each group."""
        out, k = [], 0
        for g in self.groups:
            m = g.algebraic_multiplicity
            out.append(slice(k, k + m))
            k += m
        return out

    @property
    def finite_groups(self):
        return tuple(g for g in self.groups if g.finite)

    def characteristic_moduli(self):
        return np.array([abs(g.lam) for g in self.groups if g.finite])


def _group_key(mu):
    if mu == 0:
        return (np.inf, 0.0)
    lam = 1.0 / mu
    return (abs(lam), float(np.angle(lam)))


def _make_groups(items, dimension):
    """``items`` is a list of ``(mu, [vector arrays])``; sort and wrap."""
    items = sorted(items, key=lambda it: _group_key(it[0]))
    groups = []
    for mu, chain_arrays in items:
        mu = complex(mu)
        lam = complex(np.inf) if mu == 0 else 1.0 / mu
        chains = tuple(JordanChain(mu, np.asarray(E, dtype=complex), None, i)
                       for i, E in enumerate(chain_arrays))
        groups.append(SpectralGroup(mu, lam, chains))
    return SpectralDecomposition(tuple(groups), dimension)


def _decompose_structured(op):
    s = op.structured
    P = np.asarray(s.basis)
    byval = {}
    order = []
    k = 0
    for b in s.blocks:
        if b.eigenvalue not in byval:
            byval[b.eigenvalue] = []
            order.append(b.eigenvalue)
        byval[b.eigenvalue].append(P[:, k:k + b.size].copy())
        k += b.size
    return _make_groups([(mu, byval[mu]) for mu in order], op.dimension)


def _cluster(values, tol):
    """Single-linkage clusters of complex values within ``tol``."""
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= tol:
                parent[find(i)] = find(j)
    clusters = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    return [np.array(v) for v in clusters.values()]


def _null_space(M, atol):
    u, s, vh = scipy.linalg.svd(M)
    rank = int(np.sum(s > atol))
    return vh[rank:].conj().T


def _nilpotent_chains(N, atol):
    """Jordan chains of a (numerically) nilpotent matrix ``N``.

    Returns a list of ``(m, L)`` arrays with columns ``e_0 .. e_{L-1}``
    such that ``N e_0 = 0`` and ``N e_j = e_{j-1}``.
    """
    m = N.shape[0]
    scale = max(1.0, np.linalg.norm(N, 2))
    kernels = [np.zeros((m, 0), dtype=complex)]
    power = np.eye(m, dtype=complex)
    while kernels[-1].shape[1] < m:
        power = N @ power
        j = len(kernels)
        K = _null_space(power, atol * scale ** (j - 1))
        if K.shape[1] <= kernels[-1].shape[1]:
            raise ChainConstructionError(
                "restricted operator is not nilpotent at the requested rank "
                "tolerance", residual=float(np.linalg.norm(power)))
        kernels.append(K)
        if j > m:
            raise ChainConstructionError("nilpotency index exceeds dimension")
    J = len(kernels) - 1
    tops = []  # (top vector, length)
    for level in range(J, 0, -1):
        existing = [np.linalg.matrix_power(N, L - level) @ v for v, L in tops]
        need = (kernels[level].shape[1] - kernels[level - 1].shape[1]) - len(existing)
        if need < 0:
            raise ChainConstructionError("inconsistent kernel staircase")
        if need == 0:
            continue
        span = np.hstack([kernels[level - 1]] + [e[:, None] for e in existing])
        K = kernels[level]
        if span.shape[1]:
            Q, _ = np.linalg.qr(span)
            K = K - Q @ (Q.conj().T @ K)
        u, s, _ = scipy.linalg.svd(K)
        for i in range(need):
            tops.append((u[:, i], level))
    chains = []
    for v, L in tops:
        cols = [v]
        for _ in range(L - 1):
            cols.append(N @ cols[-1])
        E = np.column_stack(cols[::-1])
        E = E / np.linalg.norm(E[:, 0])
        chains.append(E)
    return chains


def chain_residuals(op, decomp):
    """Worst relative residuals of the forward and adjoint chain relations."""
    B = op.dense
    nb = max(op.norm, 1e-300)
    fwd = 0.0
    adj = 0.0
    for _, c, _ in decomp.chains():
        E = c.vectors
        R = B @ E - c.mu * E
        R[:, 1:] -= E[:, :-1]
        fwd = max(fwd, float(np.max(np.linalg.norm(R, axis=0)
                                    / (nb * np.linalg.norm(E, axis=0)))))
        if c.adjoint is not None:
            G = c.adjoint
            S = B.conj().T @ G - np.conj(c.mu) * G
            S[:, :-1] -= G[:, 1:]
            adj = max(adj, float(np.max(np.linalg.norm(S, axis=0)
                                        / (nb * np.linalg.norm(G, axis=0)))))
    return fwd, adj


def decompose(op, rank_tolerance=1e-6, cluster_tolerance=1e-4,
              chain_tolerance=1e-7):
    """Split ``B`` into eigenvalue groups with Jordan chains.

    Parameters
    ----------
    op : OperatorSpec
        With a structured form the declared blocks are reproduced exactly.
    rank_tolerance : float
        Relative threshold used for numerical rank decisions on the
        nilpotent part of each cluster (dense path).
    cluster_tolerance : float
        Eigenvalues closer than ``cluster_tolerance * ||B||`` are merged into
        one group (dense path).
    chain_tolerance : float
        Largest admissible relative chain residual on the dense path.

    Returns
    -------
    SpectralDecomposition
        Chains carry no adjoint vectors yet; see :func:`build_biorthogonal`.
    """
    if op.structured is not None:
        return _decompose_structured(op)
    B = op.dense
    n = op.dimension
    nb = op.norm
    if nb == 0:
        return _make_groups([(0.0, [np.eye(n, dtype=complex)[:, [i]]
                                    for i in range(n)])], n)
    w = op.eigenvalues()
    clusters = _cluster(w, cluster_tolerance * nb)
    items = []
    for idx in clusters:
        mu = complex(np.mean(w[idx]))
        radius = max(np.max(np.abs(w[idx] - mu)), 1e-14 * nb)
        sel = radius + 0.5 * cluster_tolerance * nb
        T, Z, sdim = scipy.linalg.schur(
            B, output="complex", sort=lambda x, mu=mu, sel=sel: abs(x - mu) <= sel)
        if sdim != len(idx):
            raise ChainConstructionError(
                f"Schur reordering isolated {sdim} eigenvalues near {mu}, "
                f"expected {len(idx)}")
        T11 = T[:sdim, :sdim]
        Z1 = Z[:, :sdim]
        Nmat = T11 - mu * np.eye(sdim)
        atol = max(rank_tolerance, 10 * radius / nb)
        small = _nilpotent_chains(Nmat, atol * nb)
        chains = [Z1 @ E for E in small]
        for i, E in enumerate(chains):
            chains[i] = E / np.linalg.norm(E[:, 0])
        if abs(mu) <= 1e-14 * nb:
            mu = 0.0
        items.append((mu, chains))
    decomp = _make_groups(items, n)
    fwd, _ = chain_residuals(op, decomp)
    if fwd > chain_tolerance:
        raise ChainConstructionError(
            f"dense-path Jordan chains have relative residual {fwd:.3e} "
            f"(limit {chain_tolerance:.1e}); supply a structured Jordan form",
            residual=fwd)
    return decomp


def build_biorthogonal(decomp, op=None):
    """Attach adjoint chains so that ``(e_m, g_n) = delta_{mn}``.

    The adjoint vectors are the conjugated rows of ``E^{-1}`` where ``E`` is
    the flattened root matrix; every pairing denominator equals one.

    Parameters
    ----------
    decomp : SpectralDecomposition
    op : OperatorSpec, optional
        Only used to verify the dimension.

    Returns
    -------
    SpectralDecomposition
    """
    E = decomp.root_matrix()
    if op is not None and E.shape[0] != op.dimension:
        raise ValueError("decomposition does not belong to this operator")
    if E.shape[0] != E.shape[1]:
        raise ValueError("root vectors do not span the space")
    cond = np.linalg.cond(E)
    if not np.isfinite(cond) or cond > PAIRING_CONDITION_LIMIT:
        raise PairingConditionError(
            f"biorthogonal pairing is ill-conditioned (condition number {cond:.3e})",
            condition=cond)
    G = np.linalg.inv(E).conj().T
    groups = []
    k = 0
    for g in decomp.groups:
        chains = []
        for c in g.chains:
            chains.append(replace(c, adjoint=G[:, k:k + c.length].copy()))
            k += c.length
        groups.append(replace(g, chains=tuple(chains)))
    return SpectralDecomposition(tuple(groups), decomp.dimension)


def spectral_decomposition(op, **kwargs):
    """:func:`decompose` followed by :func:`build_biorthogonal`."""
    return build_biorthogonal(decompose(op, **kwargs), op)


def raw_coefficients(decomp, f):
    """Expansion coefficients ``c_n = (f, g_n) / (e_n, g_n)``.

    Returns the coefficients in flattened numbering, so that
    ``root_matrix() @ c`` reproduces ``f``.
    """
    f = np.asarray(f, dtype=complex)
    E = decomp.root_matrix()
    G = decomp.adjoint_matrix()
    num = G.conj().T @ f
    den = np.einsum("ij,ij->j", G.conj(), E)
    return num / den


def _group_mu(op, group):
    if isinstance(group, SpectralGroup):
        return complex(group.mu)
    return complex(group)


def riesz_projector(op, group, radius=None, panels=128):
    """Riesz projector onto the root subspace of one eigenvalue.

    Computes ``(1/2 pi i) \\oint (zI - B)^{-1} dz`` over the circle
    ``|z - mu| = radius`` with the trapezoidal rule.

    Parameters
    ----------
    op : OperatorSpec
    group : SpectralGroup or complex
        Eigenvalue ``mu`` (or the group holding it).
    radius : float, optional
        Circle radius in the ``mu``-plane; defaults to a third of the
        distance to the nearest other eigenvalue.
    panels : int
        Number of trapezoidal nodes.

    Returns
    -------
    (n, n) complex ndarray
    """
    mu = _group_mu(op, group)
    B = op.dense
    n = op.dimension
    w = op.eigenvalues()
    own_tol = 1e-4 * max(op.norm, 1e-300)
    d = np.abs(w - mu)
    own = d <= own_tol
    if not own.any():
        raise ValueError(f"{mu} is not an eigenvalue of the operator")
    others = w[~own]
    if radius is None:
        radius = (np.min(np.abs(others - mu)) / 3.0) if others.size else 1.0
        radius = max(radius, 10 * float(d[own].max()))
    if others.size:
        dist = np.abs(others - mu)
        j = int(np.argmin(dist))
        if dist[j] <= radius * (1 + 1e-9):
            raise ForeignPoleError(
                f"circle of radius {radius} around {mu} reaches eigenvalue "
                f"{others[j]}", pole=complex(others[j]))
    phi = 2 * np.pi * np.arange(panels) / panels
    z = mu + radius * np.exp(1j * phi)
    M = z[:, None, None] * np.eye(n)[None] - B[None]
    R = np.linalg.inv(M)
    wts = radius * np.exp(1j * phi) / panels
    return np.einsum("k,kij->ij", wts, R)


def decomposition_to_json(decomp):
    """Serialize groups to ``{"mu", "lambda", "chains": [{"e", "g"}]}``."""
    out = []
    for g in decomp.groups:
        lam = g.lam
        chains = []
        for c in g.chains:
            ch = {"e": [vector_to_json(v) for v in c.vectors.T]}
            if c.adjoint is not None:
                ch["g"] = [vector_to_json(v) for v in c.adjoint.T]
            chains.append(ch)
        out.append({"mu": [g.mu.real, g.mu.imag],
                    "lambda": ([lam.real, lam.imag] if np.isfinite(lam) else None),
                    "chains": chains})
    return {"dimension": decomp.dimension, "groups": out}

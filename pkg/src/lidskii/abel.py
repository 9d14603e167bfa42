"""Abel regularization of root-vector expansions.

The regularization polynomials are

.. math::

    P^\\alpha_m(\\zeta^{-1}, t) = \\frac{e^{t\\zeta^{-\\alpha}}}{m!}
        \\frac{d^m}{d\\zeta^m} e^{-t\\zeta^{-\\alpha}},

evaluated from the recurrence ``Q_0 = 1``,
``Q_{j+1} = Q_j' + t alpha zeta^{-alpha-1} Q_j``, ``P_m = Q_m / m!``.  Each
``Q_m`` is a finite sum of monomials ``a(alpha) t^p zeta^{-p alpha - j}`` with
integer polynomial coefficients ``a``, so no numerical differentiation is
involved.
"""
from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import DomainError

__all__ = ["MAX_DEGREE", "abel_terms", "eval_abel_polynomial",
           "RegularizedCoefficients", "regularized_coefficients",
           "SummationSchedule", "group_schedule", "default_schedule_parameters",
           "GroupedSums", "grouped_partial_sums"]

MAX_DEGREE = 32


def _poly_add(a, b):
    n = max(len(a), len(b))
    return tuple((a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                 for i in range(n))


def _poly_mul_linear(a, c0, c1):
    """``a(x) * (c0 + c1 x)`` with integer coefficients."""
    out = [0] * (len(a) + 1)
    for i, ai in enumerate(a):
        out[i] += ai * c0
        out[i + 1] += ai * c1
    return tuple(out)


@lru_cache(maxsize=None)
def abel_terms(m):
    """Monomials of ``Q_m``.

    Returns a tuple of ``((p, j), coeffs)`` where ``coeffs[i]`` multiplies
    ``alpha**i`` and the monomial is ``t**p * zeta**(-p*alpha - j)``.
    """
    if m < 0:
        raise DomainError("degree must be nonnegative")
    if m > MAX_DEGREE:
        raise DomainError(f"degree {m} exceeds the cap {MAX_DEGREE}")
    if m == 0:
        return (((0, 0), (1,)),)
    new = {}
    for (p, j), a in abel_terms(m - 1):
        # d/dzeta of zeta^(-p alpha - j)
        d = _poly_mul_linear(a, -j, -p)
        if any(d):
            key = (p, j + 1)
            new[key] = _poly_add(new.get(key, ()), d)
        # multiplication by t alpha zeta^(-alpha - 1)
        key = (p + 1, j + 1)
        new[key] = _poly_add(new.get(key, ()), (0,) + a)
    return tuple(sorted((k, v) for k, v in new.items() if any(v)))


def eval_abel_polynomial(m, alpha, zeta, t):
    """Evaluate ``P^alpha_m`` at ``zeta`` and ``t``.

    Parameters
    ----------
    m : int
        Degree, ``0 <= m <= MAX_DEGREE``.
    alpha : float
        Positive order.
    zeta : complex
        Nonzero point; powers use the principal branch.
    t : float
        Nonnegative parameter.

    Returns
    -------
    complex
    """
    zeta = complex(zeta)
    if zeta == 0:
        raise DomainError("zeta must be nonzero")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    if t < 0:
        raise DomainError("t must be nonnegative")
    terms = abel_terms(int(m))
    if m == 0:
        return 1.0 + 0j
    if t == 0:
        return 0j
    logz = np.log(zeta)
    total = 0j
    for (p, j), a in terms:
        coef = 0.0
        for c in reversed(a):
            coef = coef * alpha + c
        total += coef * t ** p * np.exp((-p * alpha - j) * logz)
    return complex(total / math.factorial(m))


@dataclass(frozen=True, eq=False)
class RegularizedCoefficients:
    t: float
    alpha: float
    values: np.ndarray


def _principal_power(z, a):
    return np.exp(a * np.log(z))


def regularized_coefficients(decomp, c, t, alpha):
    """Regularized coefficients ``c_n(t)``.

    For a chain ``e_0, ..., e_k`` of the eigenvalue ``mu = 1/lam``

    .. math::

        c_i(t) = e^{-\\lambda^\\alpha t}
                 \\sum_{m=0}^{k-i} P^\\alpha_m(\\mu, t)\\, c_{i+m}.

    Root vectors of the eigenvalue zero get coefficient zero for ``t > 0``.

    Parameters
    ----------
    decomp : SpectralDecomposition
    c : array_like
        Raw coefficients in flattened numbering.
    t : float
        Positive regularization parameter.
    alpha : float
        Positive order.

    Returns
    -------
    RegularizedCoefficients
    """
    c = np.asarray(c, dtype=complex)
    if c.shape != (decomp.total_root_count,):
        raise ValueError(f"expected {decomp.total_root_count} coefficients, "
                         f"got shape {c.shape}")
    if t <= 0:
        raise DomainError("t must be positive")
    if alpha <= 0:
        raise DomainError("alpha must be positive")
    out = np.zeros_like(c)
    cache = {}
    for q, chain, off in decomp.chains():
        g = decomp.groups[q]
        if not g.finite:
            continue
        k = chain.length - 1
        if q not in cache:
            kmax = max(ch.length for ch in g.chains) - 1
            E = np.exp(-t * _principal_power(g.lam, alpha))
            P = [eval_abel_polynomial(m, alpha, g.mu, t) for m in range(kmax + 1)]
            cache[q] = (E, P)
        E, P = cache[q]
        seg = c[off:off + k + 1]
        for i in range(k + 1):
            out[off + i] = E * sum(P[m] * seg[i + m] for m in range(k + 1 - i))
    return RegularizedCoefficients(float(t), float(alpha), out)


@dataclass(frozen=True)
class SummationSchedule:
    """Grouping indices ``N_0 = 0 < N_1 < ... `` over the finite groups.

    ``gaps[i]`` and ``required[i]`` are the modulus gap between the groups
    ``i`` and ``i+1`` (0-based) and the threshold ``K |lam_{i+1}|^{1-1/tau}``.
    ``in_group_constant`` is the largest ratio ``gap / |lam|^{1-1/tau}``
    among gaps that are not boundaries.
    """
    boundaries: tuple
    tau: float
    K: float
    gaps: tuple
    required: tuple
    in_group_constant: float
    single_group: bool

    @property
    def blocks(self):
        b = self.boundaries
        return [(b[i], b[i + 1]) for i in range(len(b) - 1)]

    def to_json(self):
        return {"boundaries": list(self.boundaries), "tau": self.tau, "K": self.K,
                "gaps": list(self.gaps), "required": list(self.required),
                "in_group_constant": self.in_group_constant,
                "single_group": self.single_group}


def default_schedule_parameters(decomp, alpha):
    """``(tau, K)`` defaults: ``tau = 1/(2 alpha)`` and
    ``K = 0.5 min(1, first modulus gap)``."""
    m = decomp.characteristic_moduli()
    gap = m[1] - m[0] if m.size > 1 else 1.0
    return 1.0 / (2.0 * alpha), 0.5 * min(1.0, gap if gap > 0 else 1.0)


def group_schedule(decomp, tau, K):
    """Place a boundary wherever the modulus gap condition holds.

    Parameters
    ----------
    decomp : SpectralDecomposition or array_like
        Decomposition (or directly the ordered characteristic moduli).
    tau, K : float
        Positive gap parameters.

    Returns
    -------
    SummationSchedule
    """
    if tau <= 0 or K <= 0:
        raise DomainError("tau and K must be positive")
    if hasattr(decomp, "characteristic_moduli"):
        m = decomp.characteristic_moduli()
    else:
        m = np.asarray(decomp, dtype=float)
    if np.any(np.diff(m) < 0):
        raise ValueError("moduli must be nondecreasing")
    q = 1.0 - 1.0 / tau
    boundaries = [0]
    gaps, required = [], []
    C = 0.0
    for i in range(1, m.size):
        gap = float(m[i] - m[i - 1])
        req = float(K * m[i] ** q)
        gaps.append(gap)
        required.append(req)
        if gap >= req:
            boundaries.append(i)
        else:
            C = max(C, gap / m[i] ** q)
    if m.size:
        boundaries.append(int(m.size))
    single = m.size > 1 and len(boundaries) == 2
    return SummationSchedule(tuple(boundaries), float(tau), float(K),
                             tuple(gaps), tuple(required), float(C), bool(single))


@dataclass(frozen=True, eq=False)
class GroupedSums:
    group_vectors: list
    group_norms: np.ndarray
    total: np.ndarray


def group_vectors(decomp, coeffs):
    """``sum_xi sum_i e_{q_xi+i} c_{q_xi+i}`` for every finite group ``q``."""
    values = coeffs.values if isinstance(coeffs, RegularizedCoefficients) else coeffs
    values = np.asarray(values, dtype=complex)
    n = decomp.dimension
    out = [np.zeros(n, dtype=complex) for _ in decomp.groups]
    for q, chain, off in decomp.chains():
        out[q] = out[q] + chain.vectors @ values[off:off + chain.length]
    return [v for v, g in zip(out, decomp.groups) if g.finite]


def grouped_partial_sums(decomp, coeffs, schedule):
    """Sum the regularized expansion block by block.

    Parameters
    ----------
    decomp : SpectralDecomposition
    coeffs : RegularizedCoefficients
    schedule : SummationSchedule

    Returns
    -------
    GroupedSums
        ``group_vectors[nu]`` is the sum over finite groups
        ``N_nu < q <= N_{nu+1}``; ``total`` is their sum.
    """
    per_group = group_vectors(decomp, coeffs)
    if schedule.boundaries[-1] > len(per_group):
        raise ValueError(
            f"schedule covers {schedule.boundaries[-1]} groups but the "
            f"decomposition has {len(per_group)} finite groups")
    n = decomp.dimension
    vecs = []
    for a, b in schedule.blocks:
        v = np.zeros(n, dtype=complex)
        for q in range(a, b):
            v = v + per_group[q]
        vecs.append(v)
    norms = np.array([np.linalg.norm(v) for v in vecs])
    total = np.sum(vecs, axis=0) if vecs else np.zeros(n, dtype=complex)
    return GroupedSums(vecs, norms, total)

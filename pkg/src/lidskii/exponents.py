"""Counting functions, convergence exponents and canonical products.

A :class:`ModulusSequence` holds a finite prefix of points ``a_n`` ordered by
modulus.  Sequences produced by :func:`generate_model_sequence` remember their
generating rule, so they can be extended on demand and carry analytic tail
sums; plain materialized sequences are either finite (the whole sequence) or
a prefix of unknown continuation.
"""
from dataclasses import dataclass, field
import math

import numpy as np
import scipy.integrate
import scipy.optimize
import scipy.special

from .errors import DivergentIntegralError, DomainError, HorizonError

__all__ = ["ModulusSequence", "ExponentReport", "BetaProfile", "CircleBoundResult",
           "generate_model_sequence", "counting_function", "convergence_exponent",
           "series_converges", "upper_density", "beta_profile", "canonical_product",
           "circle_gamma", "circle_bound_value", "circle_resolvent_bound",
           "load_sequence_csv", "operator_order"]

MAX_TERMS = 2 ** 25

MODELS = ("power", "geometric", "E1", "E2")


@dataclass(frozen=True, eq=False)
class ModulusSequence:
    """Points ``a_1, a_2, ...`` with nondecreasing moduli.

    Parameters
    ----------
    points : array_like
        Materialized prefix (complex or real, nonzero).
    finite : bool
        True when ``points`` is the whole sequence.
    model : str or None
        Generating rule (``"power"``, ``"geometric"``, ``"E1"`` or ``"E2"``).
    params : dict
        Parameters of the generating rule.
    """
    points: np.ndarray
    finite: bool = True
    model: str = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.atleast_1d(np.asarray(self.points))
        if not np.iscomplexobj(pts):
            pts = pts.astype(float)
        mods = np.abs(pts)
        if mods.size and mods.min() <= 0:
            raise DomainError("sequence points must be nonzero")
        if np.any(np.diff(mods) < 0):
            order = np.argsort(mods, kind="stable")
            pts, mods = pts[order], mods[order]
        pts.setflags(write=False)
        mods.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_moduli", mods)

    @property
    def moduli(self):
        return self._moduli

    def __len__(self):
        return self.points.size

    def extend(self, terms):
        """Sequence with at least ``terms`` materialized points."""
        if terms <= len(self):
            return self
        if self.model is None:
            if self.finite:
                return self
            raise HorizonError(f"only {len(self)} points are available, {terms} requested")
        return generate_model_sequence(self.model, terms=int(terms), **self.params)

    def covering(self, r):
        """Sequence whose materialized prefix reaches modulus ``r``."""
        seq = self
        if self.finite or (len(seq) and seq.moduli[-1] >= r):
            return seq
        if self.model is None:
            raise HorizonError(f"materialized prefix ends at {seq.moduli[-1]:.6g} < {r:.6g}")
        n = max(len(seq), 16)
        while seq.moduli[-1] < r:
            n *= 2
            if n > MAX_TERMS:
                raise HorizonError(
                    f"radius {r:.6g} needs more than {MAX_TERMS} generated points")
            seq = seq.extend(n)
        return seq

    def tail_sum(self, s):
        """``sum_{k > N} |a_k|^{-s}`` beyond the materialized prefix.

        Exact (Hurwitz zeta, geometric series) or a midpoint integral
        estimate for the logarithmic models; ``inf`` when the tail diverges;
        None when the continuation is unknown.
        """
        N = len(self)
        if self.finite:
            return 0.0
        if self.model == "power":
            x = s / self.params["rho"]
            return float(scipy.special.zeta(x, N + 1)) if x > 1 else np.inf
        if self.model == "geometric":
            b = self.params["base"]
            return float(b ** (-(N + 1) * s) / (1 - b ** (-s)))
        if self.model == "E1":
            rho = self.params["rho"]
            if s <= rho:
                return np.inf
            u0 = np.log(_e1_invert(np.array([N + 0.5]), rho)[0])

            def g(u):
                lu = np.log(u)
                return np.exp((rho - s) * (u - u0)) * (rho - 1 / u - 1 / (u * lu)) / (u * lu)

            val, _ = scipy.integrate.quad(g, u0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
            return float(val * np.exp((rho - s) * u0))
        if self.model == "E2":
            kappa, q = self.params["kappa"], self.params["q"]
            if s * kappa <= 1:
                return np.inf
            x0 = N + 0.5

            def g(v):
                x = x0 * np.exp(v)
                return x * _e2_value(x, kappa, q) ** (-s)

            val, _ = scipy.integrate.quad(g, 0, np.inf, epsabs=0, epsrel=1e-12, limit=400)
            return float(val)
        return None


def _e1_counting(r, rho):
    lr = np.log(r)
    return r ** rho / (lr * np.log(lr))


def _e1_start(rho):
    """Smallest ``log r >= e`` beyond which the E1 counting function increases."""
    def h(x):
        return rho * x * np.log(x) - np.log(x) - 1.0
    x0 = np.e
    if h(x0) < 0:
        hi = 2 * x0
        while h(hi) < 0:
            hi *= 2
        x0 = scipy.optimize.brentq(h, x0, hi, xtol=1e-14)
    return float(x0)


def _e1_invert(k, rho):
    """Solve ``N(r) = k`` for ``r`` on the increasing branch (vectorized)."""
    k = np.asarray(k, dtype=float)
    x0 = _e1_start(rho)
    target = np.log(k)

    def g(x):
        return rho * x - np.log(x) - np.log(np.log(x)) - target

    def dg(x):
        return rho - 1 / x - 1 / (x * np.log(x))

    x = np.maximum(x0, (target + 10.0) / rho)
    while np.any(g(x) < 0):
        x = np.where(g(x) < 0, 2 * x, x)
    # Newton from the right converges monotonically (g is convex, increasing)
    for _ in range(100):
        step = g(x) / dg(x)
        x = np.maximum(x - step, x0)
        if np.all(np.abs(step) <= 1e-15 * x):
            break
    return np.exp(x)


def _e2_value(x, kappa, q):
    x = np.asarray(x, dtype=float)
    L = np.log(x + q)
    return (x * L * np.log(L)) ** kappa


def generate_model_sequence(kind, terms=1000, **params):
    """Deterministic model sequences.

    Parameters
    ----------
    kind : {"power", "geometric", "E1", "E2"}
        ``power``: ``a_n = n^{1/rho}``.  ``geometric``: ``a_n = base^n``.
        ``E1``: realizes the counting function
        ``n(r) = r^rho / (ln r ln ln r)`` by inversion on the integer grid.
        ``E2``: ``a_i = i^kappa ln^kappa(i+q) (ln ln(i+q))^kappa``.
    terms : int
        Number of points to materialize.
    **params
        ``rho`` (power, E1), ``base`` (geometric), ``kappa`` and ``q`` (E2).

    Returns
    -------
    ModulusSequence
    """
    if terms < 1:
        raise DomainError("terms must be positive")
    if terms > MAX_TERMS:
        raise HorizonError(f"{terms} terms exceed the generation limit {MAX_TERMS}")
    k = np.arange(1, terms + 1, dtype=float)
    if kind == "power":
        rho = float(params["rho"])
        if rho <= 0:
            raise DomainError("rho must be positive")
        inv = 1.0 / rho
        pts = k ** int(inv) if float(inv).is_integer() else k ** inv
        return ModulusSequence(pts.astype(float), False, kind, {"rho": rho})
    if kind == "geometric":
        base = float(params.get("base", 2.0))
        if base <= 1:
            raise DomainError("base must exceed 1")
        if terms * np.log(base) > 700:
            raise DomainError("geometric sequence overflows double precision")
        return ModulusSequence(base ** k, False, kind, {"base": base})
    if kind == "E1":
        rho = float(params["rho"])
        if rho <= 0:
            raise DomainError("rho must be positive")
        r0 = np.exp(_e1_start(rho))
        k_start = max(1, int(np.ceil(_e1_counting(r0, rho))))
        pts = np.empty(terms)
        head = k < k_start
        pts[head] = r0 * k[head] / k_start
        if (~head).any():
            pts[~head] = _e1_invert(k[~head], rho)
        return ModulusSequence(pts, False, kind, {"rho": rho})
    if kind == "E2":
        kappa = float(params["kappa"])
        q = float(params["q"])
        if not 0 < kappa <= 1:
            raise DomainError("kappa must lie in (0, 1]")
        if not q > np.exp(np.e) - 1:
            raise DomainError("q must exceed e^e - 1")
        return ModulusSequence(_e2_value(k, kappa, q), False, kind,
                               {"kappa": kappa, "q": q})
    raise DomainError(f"unknown model {kind!r}")


def load_sequence_csv(path):
    """Read one modulus (or ``re,im`` pair) per line; the result is finite."""
    vals = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p for p in line.replace(";", ",").split(",") if p.strip()]
            try:
                nums = [float(p) for p in parts]
            except ValueError:
                continue  # header
            vals.append(complex(nums[0], nums[1]) if len(nums) == 2 else nums[0])
    if not vals:
        raise DomainError(f"no sequence values in {path}")
    return ModulusSequence(np.array(vals), True)


def counting_function(seq, r):
    """``n(r) = #{n : |a_n| < r}`` (strict inequality)."""
    if r <= 0:
        raise DomainError("r must be positive")
    seq = seq.covering(r)
    return int(np.searchsorted(seq.moduli, r, side="left"))


def series_converges(moduli, s, rho_hat=None, band=0.15, slope_limit=-0.25,
                     blocks=6):
    """Finite-horizon verdict on the convergence of ``sum |a_n|^{-s}``.

    Clear cases are decided by comparing ``s`` with the fitted exponent
    ``rho_hat``.  Near ``s = rho_hat`` the dyadic block sums
    ``B_j = sum_{2^j <= n < 2^{j+1}} |a_n|^{-s}`` of the last ``blocks``
    complete blocks are fitted on a log2 scale; a slope below
    ``slope_limit`` counts as convergence.
    """
    if rho_hat is not None:
        if s > rho_hat + band:
            return True
        if s < rho_hat - band:
            return False
    a = np.asarray(moduli, dtype=float)
    J = int(np.floor(np.log2(a.size + 1)))  # blocks 0..J-1 are complete
    if J < blocks + 2:
        raise HorizonError("horizon too short for the dyadic block test")
    terms = a ** (-float(s))
    sums = np.array([terms[2 ** j - 1:2 ** (j + 1) - 1].sum() for j in range(J)])
    js = np.arange(J - blocks, J)
    y = np.log2(sums[js])
    slope = np.polyfit(js, y, 1)[0]
    return bool(slope < slope_limit)


@dataclass(frozen=True)
class ExponentReport:
    """Convergence exponent ``rho_hat``, genus ``p`` and upper density."""
    rho_hat: float
    genus: int
    density_hat: float
    window: tuple
    window_points: int
    residual_rms: float
    near_integer: bool
    horizon: int

    def to_json(self):
        return {"rho_hat": self.rho_hat, "genus": self.genus,
                "density_hat": self.density_hat,
                "window": list(self.window), "window_points": self.window_points,
                "residual_rms": self.residual_rms, "near_integer": self.near_integer,
                "horizon": self.horizon}


def convergence_exponent(seq, horizon=None, min_points=100):
    """Estimate the convergence exponent and genus from a finite horizon.

    ``rho_hat`` is the least-squares slope of ``log n`` against ``log |a_n|``
    over the last two decades of moduli (extended to the last ``min_points``
    points when the two decades hold fewer).  The genus is the smallest ``p``
    for which :func:`series_converges` accepts ``sum |a_n|^{-(p+1)}``.

    Parameters
    ----------
    seq : ModulusSequence
    horizon : int, optional
        Number of terms used (defaults to the materialized length).
    min_points : int
        Minimum size of the fit window.

    Returns
    -------
    ExponentReport
    """
    horizon = len(seq) if horizon is None else int(horizon)
    seq = seq.extend(horizon)
    a = seq.moduli[:horizon]
    if seq.finite and seq.model is None:
        return ExponentReport(0.0, 0, 0.0, (float(a[0]), float(a[-1])) if a.size else (0.0, 0.0),
                              int(a.size), 0.0, True, int(a.size))
    if a.size < min_points:
        raise HorizonError(f"horizon {a.size} holds fewer than {min_points} points")
    top = a[-1]
    idx = np.nonzero(a >= top / 100.0)[0]
    if idx.size < min_points:
        idx = np.arange(a.size - min_points, a.size)
    x = np.log(a[idx])
    y = np.log(idx + 1.0)
    if np.ptp(x) == 0:
        raise HorizonError("fit window has no spread in modulus")
    coef = np.polyfit(x, y, 1)
    rho_hat = max(float(coef[0]), 0.0)
    resid = y - np.polyval(coef, x)
    p = 0
    while not series_converges(a, p + 1, rho_hat):
        p += 1
        if p > 64:
            raise HorizonError("genus exceeds 64; horizon inconclusive")
    dens = upper_density(seq, rho_hat, horizon) if rho_hat > 0 else 0.0
    near = abs(rho_hat - round(rho_hat)) < 0.05
    return ExponentReport(rho_hat, int(p), float(dens),
                          (float(a[idx[0]]), float(a[idx[-1]])), int(idx.size),
                          float(np.sqrt(np.mean(resid ** 2))), bool(near), int(horizon))


def upper_density(seq, rho, horizon=None, radius=None):
    """Sup of ``n(r) / r^rho`` over ``r`` in the last decade ``[R/10, R]``.

    ``R`` is the modulus of the last point within the horizon unless
    ``radius`` is given.
    """
    if rho <= 0:
        raise DomainError("rho must be positive")
    horizon = len(seq) if horizon is None else int(horizon)
    seq = seq.extend(horizon)
    a = seq.moduli[:horizon]
    R = float(a[-1]) if radius is None else float(radius)
    lo = R / 10.0
    cand = [lo]
    inside = a[(a >= lo) & (a < R)]
    cand.extend(inside.tolist())
    r = np.array(cand)
    # just to the right of each point the count includes it
    n = np.searchsorted(a, r, side="right").astype(float)
    n[0] = np.searchsorted(a, lo, side="left")
    with np.errstate(divide="ignore"):
        vals = n / r ** rho
    return float(np.max(vals))


@dataclass(frozen=True, eq=False)
class BetaProfile:
    r: np.ndarray
    beta: np.ndarray
    beta_ln_r: np.ndarray
    p: int
    rho1: float
    truncation_bound: np.ndarray

    def rows(self):
        return [(float(r), float(b), float(bl)) for r, b, bl in
                zip(self.r, self.beta, self.beta_ln_r)]


def _beta_values(a, tail, p, rho1, r):
    """Piecewise-exact ``beta(r)`` for sorted moduli ``a`` plus a tail sum."""
    r = np.asarray(r, dtype=float)
    n = np.searchsorted(a, r, side="left")
    if p == 0:
        cum = np.concatenate([[0.0], np.cumsum(np.log(a))])
        A = n * np.log(r) - cum[n]
    else:
        cum = np.concatenate([[0.0], np.cumsum(a ** (-float(p)))])
        A = (cum[n] - n * r ** (-float(p))) / p
    suf = np.concatenate([np.cumsum((a ** (-(p + 1.0)))[::-1])[::-1], [0.0]])
    Bt = (n * r ** (-(p + 1.0)) + suf[n] + tail) / (p + 1.0)
    return r ** (p - rho1) * (A + r * Bt)


def beta_profile(seq, p, rho1, r_grid, tail_exponent=None):
    """Evaluate

    .. math::

        \\beta(r) = r^{p-\\rho_1}\\Big(\\int_0^r \\frac{n(t)}{t^{p+1}}\\,dt
                    + r\\int_r^\\infty \\frac{n(t)}{t^{p+2}}\\,dt\\Big)

    by exact integration of the step function ``n(t)``.

    Parameters
    ----------
    seq : ModulusSequence
        Model sequences contribute an analytic tail; finite sequences need
        none; other prefixes use a power-law tail extrapolation whose size
        is reported in ``truncation_bound``.
    p : int
        Nonnegative integer.
    rho1 : float
        Positive exponent.
    r_grid : array_like
        Positive radii.
    tail_exponent : float, optional
        Asymptotic exponent of ``n(t)`` beyond a materialized prefix.

    Returns
    -------
    BetaProfile
    """
    if p < 0 or int(p) != p:
        raise DomainError("p must be a nonnegative integer")
    if rho1 <= 0:
        raise DomainError("rho1 must be positive")
    r = np.asarray(r_grid, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radii must be positive")
    p = int(p)
    if len(seq) == 0:
        z = np.zeros_like(r)
        return BetaProfile(r, z, z.copy(), p, float(rho1), z.copy())
    seq = seq.covering(float(r.max()))
    a = np.asarray(seq.moduli, dtype=float)
    bound = np.zeros_like(r)
    tail = seq.tail_sum(p + 1.0)
    if tail is None:
        rho_t = tail_exponent
        if rho_t is None:
            rho_t = convergence_exponent(seq, min_points=min(100, len(seq))).rho_hat
        if p + 1 <= rho_t:
            raise DivergentIntegralError(
                "the tail integral diverges for this p; supply a model sequence "
                "or an asymptotic tail exponent below p+1")
        N = a.size
        est = N * rho_t * a[-1] ** (-(p + 1.0)) / (p + 1.0 - rho_t)
        bound = r ** (p - rho1) * r * est / (p + 1.0)
        tail = 0.0
    elif not np.isfinite(tail):
        raise DivergentIntegralError("model tail diverges for this p")
    beta = _beta_values(a, tail, p, rho1, r)
    return BetaProfile(r, beta, beta * np.log(r), p, float(rho1), bound)


def _primary_log(u, p):
    out = np.log1p(-u)
    for j in range(1, p + 1):
        out = out + u ** j / j
    return out


def canonical_product(seq, p, z, terms=None):
    """Truncated canonical product ``prod_{n <= terms} G(z / a_n, p)``.

    ``G(u, 0) = 1 - u`` and ``G(u, p) = (1 - u) exp(u + ... + u^p / p)``.
    """
    if p < 0 or int(p) != p:
        raise DomainError("p must be a nonnegative integer")
    terms = len(seq) if terms is None else int(terms)
    if terms > len(seq):
        seq = seq.extend(terms)
        if terms > len(seq):
            raise DomainError(f"only {len(seq)} terms available")
    a = np.asarray(seq.points[:terms], dtype=complex)
    if np.any(a == 0):
        raise DomainError("canonical product needs nonzero points")
    z = complex(z)
    if z == 0:
        return 1.0 + 0j
    u = z / a
    if np.any(u == 1):
        return 0j
    return complex(np.exp(np.sum(_primary_log(u, int(p)))))


# --------------------------------------------------------- circle bounds

@dataclass(frozen=True)
class CircleBoundResult:
    R_tilde: float
    max_norm: float
    bound: float
    gamma: float
    satisfied: bool
    radii_scanned: int

    def to_json(self):
        return {"R_tilde": self.R_tilde, "max_norm": self.max_norm, "bound": self.bound,
                "gamma": self.gamma, "satisfied": self.satisfied,
                "radii_scanned": self.radii_scanned}


def _power_moduli(op, m):
    from .operators import singular_values
    M = np.linalg.matrix_power(op.dense, m + 1)
    s = singular_values(type(op).from_dense(M))
    s = s[s > 1e-14 * max(s.max(), 1e-300)] if s.size else s
    return np.sort(1.0 / s)


def circle_gamma(op, radius, delta, varrho):
    """``gamma(|lam|) = beta(|lam|^{m+1}) + (2 + ln(12e/delta)) (2e)^varrho
    beta(|2e lam|^{m+1})`` with ``beta`` built from the singular values of
    ``B^{m+1}`` (``p = 0``, exponent ``varrho/(m+1)``)."""
    m = int(math.floor(varrho))
    a = _power_moduli(op, m)
    rho1 = varrho / (m + 1)
    if a.size == 0:
        return 0.0
    b = _beta_values(a, 0.0, 0, rho1, [radius ** (m + 1), (2 * np.e * radius) ** (m + 1)])
    return float(b[0] + (2 + np.log(12 * np.e / delta)) * (2 * np.e) ** varrho * b[1])


def circle_bound_value(radius, gamma, varrho):
    """``exp(gamma |lam|^varrho) |lam|^m`` with ``m = floor(varrho)``."""
    m = int(math.floor(varrho))
    return float(np.exp(gamma * radius ** varrho) * radius ** m)


def circle_resolvent_bound(op, R, delta, varrho, probes=256, radii=64):
    """Scan circles ``(1-delta) R < |lam| < R`` for the resolvent bound.

    Parameters
    ----------
    op : OperatorSpec
    R : float
        Outer radius.
    delta : float
        Relative ring width in ``(0, 1)``.
    varrho : float
        Exponent at least the convergence exponent (any ``varrho >= 0`` for a
        finite matrix).
    probes : int
        Angular probes per circle (the angle 0 is always included).
    radii : int
        Number of radii in the open ring.

    Returns
    -------
    CircleBoundResult
        The radius with the smallest maximal resolvent norm, that norm, the
        bound at that radius and whether the bound holds.
    """
    if not 0 < delta < 1:
        raise DomainError("delta must lie in (0, 1)")
    if R <= 0 or varrho < 0:
        raise DomainError("R must be positive and varrho nonnegative")
    B = op.dense
    n = op.dimension
    rs = np.linspace((1 - delta) * R, R, radii + 2)[1:-1]
    ang = 2 * np.pi * np.arange(probes) / probes
    best = None
    for rad in rs:
        lam = rad * np.exp(1j * ang)
        M = np.eye(n)[None] - lam[:, None, None] * B[None]
        s = np.linalg.svd(M, compute_uv=False)[:, -1]
        if np.any(s <= 1e-14):
            continue
        mx = float(np.max(1.0 / s))
        if best is None or mx < best[1]:
            best = (float(rad), mx)
    if best is None:
        raise HorizonError("every scanned circle passes through a characteristic number")
    rad, mx = best
    gam = circle_gamma(op, rad, delta, varrho)
    bnd = circle_bound_value(rad, gam, varrho)
    return CircleBoundResult(rad, mx, bnd, gam, bool(mx <= bnd), int(rs.size))


def operator_order(op, skip=0):
    """Fit ``s_n(B) <= C n^{-mu}`` to the singular values.

    Parameters
    ----------
    op : OperatorSpec
    skip : int
        Leading singular values left out of the fit.

    Returns
    -------
    mu : float
        Least-squares decay exponent of ``ln s_n`` against ``ln n``.
    C : float
        Smallest constant making the bound hold for every ``n`` with that
        ``mu``.
    """
    from .operators import singular_values
    s = np.sort(singular_values(op))[::-1]
    s = s[s > 1e-14 * max(s.max(), 1e-300)] if s.size else s
    n = np.arange(1, s.size + 1, dtype=float)
    if s.size - skip < 2:
        raise DomainError("need at least two nonzero singular values")
    mu = -float(np.polyfit(np.log(n[skip:]), np.log(s[skip:]), 1)[0])
    return mu, float(np.max(s * n ** mu))

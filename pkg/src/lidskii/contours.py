"""Contour integrals of the resolvent functional.

The integrand is ``F(lam) = exp(-lam^alpha t) B (I - lam B)^{-1} f`` and the
integral is ``(1/2 pi i) \\int_C F(lam) dlam``.

Two contours are supported.

``gamma_B``
    Rays ``arg lam = +-(theta + eps)`` joined by the arc ``|lam| = r``.
    The lower ray is traversed inward, then the arc counterclockwise, then
    the upper ray outward.  With this traversal the integral equals the sum
    of all group contributions ``sum_xi sum_i e_{q_xi+i} c_{q_xi+i}(t)``.

``Gamma_A``
    The boundary of ``L_0(theta_0 + eps) ∩ L_iota(theta_iota + eps)`` with
    vertex ``iota < 0``, cut off by the arc ``|lam| = r`` and traversed in the
    same sense.

Residues are computed on small counterclockwise circles and are therefore
the negatives of the group contributions.
"""
from dataclasses import dataclass, field
import heapq

import numpy as np
import scipy.optimize
import scipy.special

from .errors import ContourError, ForeignPoleError, QuadratureError
from .operators import SectorEstimate, characteristic_numbers, resolvent_solve_batch

__all__ = ["Segment", "ContourSpec", "QuadratureResult", "ContourEvaluator",
           "build_contour", "integrate_resolvent_functional",
           "contour_evaluator", "residue_at_pole", "verify_resolvent_bound",
           "ResolventBoundReport"]

# Gauss-Kronrod 15/7 abscissae and weights on [-1, 1].
_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_X15 = np.concatenate([-_XGK[:7], [0.0], _XGK[6::-1]])
_W15 = np.concatenate([_WGK[:7], [_WGK[7]], _WGK[6::-1]])
_W7 = np.zeros(15)
_W7[[1, 3, 5]] = _WG[:3]
_W7[7] = _WG[3]
_W7[[13, 11, 9]] = _WG[:3]


@dataclass(frozen=True)
class Segment:
    """Straight line ``z0 -> z1`` or arc ``radius * exp(i phi)``, ``phi0 -> phi1``.

    ``breaks`` are the initial panel boundaries in the parameter ``s`` on
    ``[0, 1]``; segment ends (contour corners) are always panel boundaries.
    """
    kind: str
    z0: complex = 0j
    z1: complex = 0j
    radius: float = 0.0
    phi0: float = 0.0
    phi1: float = 0.0
    breaks: tuple = (0.0, 1.0)

    def point(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "line":
            return self.z0 + (self.z1 - self.z0) * s
        return self.radius * np.exp(1j * (self.phi0 + (self.phi1 - self.phi0) * s))

    def derivative(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "line":
            return np.full(s.shape, self.z1 - self.z0, dtype=complex)
        return 1j * (self.phi1 - self.phi0) * self.point(s)

    def distance(self, z):
        """Distance from the points ``z`` to the segment."""
        z = np.asarray(z, dtype=complex)
        if self.kind == "line":
            d = self.z1 - self.z0
            s = np.clip(np.real((z - self.z0) * np.conj(d)) / abs(d) ** 2, 0, 1)
            return np.abs(z - (self.z0 + d * s))
        lo, hi = sorted((self.phi0, self.phi1))
        ang = np.clip(np.angle(z), lo, hi)
        return np.abs(z - self.radius * np.exp(1j * ang))

    def to_json(self):
        if self.kind == "line":
            return {"kind": "line", "start": [self.z0.real, self.z0.imag],
                    "end": [self.z1.real, self.z1.imag], "breaks": list(self.breaks)}
        return {"kind": "arc", "radius": self.radius, "phi_start": self.phi0,
                "phi_end": self.phi1, "breaks": list(self.breaks)}


def _geometric_breaks(near, length, reverse=False):
    """Panel boundaries growing geometrically away from distance ``near``."""
    near = max(near, 1e-3 * length, 1e-300)
    K = int(max(2, np.ceil(np.log2((near + length) / near))))
    u = near * ((near + length) / near) ** (np.arange(K + 1) / K) - near
    s = u / length
    s[0], s[-1] = 0.0, 1.0
    if reverse:
        s = 1.0 - s[::-1]
    return tuple(float(x) for x in s)


def _arc(radius, phi0, phi1, panels=8):
    return Segment("arc", radius=float(radius), phi0=float(phi0), phi1=float(phi1),
                   breaks=tuple(float(x) for x in np.linspace(0, 1, panels + 1)))


def _line(z0, z1, outward):
    z0, z1 = complex(z0), complex(z1)
    length = abs(z1 - z0)
    near = abs(z0) if outward else abs(z1)
    return Segment("line", z0=z0, z1=z1,
                   breaks=_geometric_breaks(near, length, reverse=not outward))


@dataclass(frozen=True, eq=False)
class ContourSpec:
    """Parameterized integration contour.

    Attributes
    ----------
    kind : {"gamma_B", "Gamma_A"}
    r : float
        Arc radius, smaller than every characteristic-number modulus.
    theta : float
        Sector semi-angle at the origin (``theta_0`` for ``Gamma_A``).
    epsilon : float
        Ray opening increment.
    R_max : float
        Truncation radius of the infinite rays.
    alpha : float
        Order used to size ``R_max``.
    iota, theta_iota : float or None
        Vertex and semi-angle of the second sector (``Gamma_A`` only).
    segments : tuple of Segment
        Traversal in the fixed orientation (lower ray inward, arc
        counterclockwise, upper ray outward).
    """
    kind: str
    r: float
    theta: float
    epsilon: float
    R_max: float
    alpha: float
    segments: tuple
    iota: float = None
    theta_iota: float = None
    resolvent_constant: float = 0.0
    tail_angle: float = 0.0
    corner: complex = None
    orientation: str = "lower ray inward, arc counterclockwise, upper ray outward"

    @property
    def panels(self):
        return sum(len(s.breaks) - 1 for s in self.segments)

    def truncation_bound(self, t, f_norm=1.0):
        """Bound on the neglected ray tails beyond ``R_max``.

        Uses ``||B (I - lam B)^{-1}|| <= resolvent_constant / |lam|`` on the
        rays and ``|exp(-lam^alpha t)| <= exp(-t |lam|^alpha cos(alpha phi))``
        with the steepest admissible tail angle ``phi``; the radial integral
        ``int_R^inf exp(-c s^alpha) ds / s`` equals ``E_1(c R^alpha) / alpha``.
        """
        t = float(np.min(np.atleast_1d(t)))
        c = t * np.cos(self.alpha * self.tail_angle)
        if c <= 0:
            return float("inf")
        x = c * self.R_max ** self.alpha
        return float(f_norm * self.resolvent_constant / np.pi
                     * scipy.special.exp1(x) / self.alpha)

    def min_distance(self, points):
        points = np.asarray(points, dtype=complex)
        if points.size == 0:
            return np.inf
        return float(min(np.min(s.distance(points)) for s in self.segments))

    def to_json(self):
        out = {"kind": self.kind, "r": self.r, "theta": self.theta,
               "epsilon": self.epsilon, "R_max": self.R_max, "alpha": self.alpha,
               "orientation": self.orientation, "panels": self.panels,
               "segments": [s.to_json() for s in self.segments]}
        if self.kind == "Gamma_A":
            out["iota"] = self.iota
            out["theta_iota"] = self.theta_iota
        return out


def _solve_rmax(spec_kwargs, t, alpha, tolerance, floor):
    """Smallest ``R >= floor`` whose truncation bound (unit ``f``) is below
    ``tolerance``."""
    probe = ContourSpec(R_max=floor, **spec_kwargs)
    if probe.truncation_bound(t) <= tolerance:
        return floor
    c = t * np.cos(alpha * spec_kwargs["tail_angle"])
    if c <= 0:
        raise ContourError("rays do not lie in the decay sector |arg| < pi/(2 alpha)")
    K = spec_kwargs["resolvent_constant"] / (np.pi * alpha)

    def g(x):
        return np.log(K * scipy.special.exp1(x)) - np.log(tolerance)

    lo = c * floor ** alpha
    hi = max(lo, 1.0)
    while g(hi) > 0:
        hi *= 2.0
    x = scipy.optimize.brentq(g, lo, hi, xtol=1e-12, rtol=1e-14)
    return float((x / c) ** (1.0 / alpha) * (1 + 1e-12))


def build_contour(kind, op, sector, t, alpha, tolerance=1e-12, epsilon=None, r=None,
                  vertex_sector=None):
    """Construct an integration contour for ``exp(-lam^alpha t) B (I - lam B)^{-1}``.

    Parameters
    ----------
    kind : {"gamma_B", "Gamma_A"}
    op : OperatorSpec
        The compact operator ``B`` (for ``Gamma_A`` this is ``A = W^{-1}``).
    sector : SectorEstimate
        Sector of the numerical range of ``op`` with vertex 0.
    t : float or array_like
        Time(s) at which the integral will be evaluated; the smallest one
        sizes ``R_max``.
    alpha : float
        Positive order.
    tolerance : float
        Admissible truncation error per unit ``||f||``.
    epsilon : float, optional
        Opening increment; by default half of the remaining room below
        ``pi / (2 alpha)``.
    r : float, optional
        Arc radius; by default half the smallest characteristic-number modulus.
    vertex_sector : SectorEstimate, optional
        For ``Gamma_A``: sector of ``W = A^{-1}`` with negative vertex ``iota``.

    Returns
    -------
    ContourSpec
    """
    if alpha <= 0:
        raise ContourError("alpha must be positive")
    t_min = float(np.min(np.atleast_1d(t)))
    if t_min <= 0:
        raise ContourError("t must be positive")
    if sector.vertex != 0:
        raise ContourError("the sector of B must have its vertex at the origin")
    lams = characteristic_numbers(op)
    mods = np.abs(lams)
    lam_min = float(mods.min()) if mods.size else np.inf
    lam_max = float(mods.max()) if mods.size else 1.0
    limit = np.pi / (2 * alpha)
    theta = float(sector.semi_angle)

    if kind == "gamma_B":
        if not sector.contained or theta >= limit:
            raise ContourError(
                f"sector semi-angle {theta:.6g} is too wide for alpha={alpha} "
                f"(needs < {limit:.6g})")
        eps = 0.5 * (limit - theta) if epsilon is None else float(epsilon)
        phi = theta + eps
        if eps <= 0 or phi >= limit:
            raise ContourError("theta + epsilon must stay below pi/(2 alpha)")
        if r is None:
            r = 0.5 * lam_min if np.isfinite(lam_min) else 1.0
        if not r < lam_min:
            raise ContourError(f"arc radius {r} is not below the smallest "
                               f"characteristic-number modulus {lam_min}")
        common = dict(kind=kind, r=float(r), theta=theta, epsilon=eps, alpha=float(alpha),
                      segments=(), resolvent_constant=1.0 + 1.0 / np.sin(eps),
                      tail_angle=phi)
        R = _solve_rmax(common, t_min, alpha, tolerance, max(2 * r, 1.5 * lam_max))
        common["segments"] = (
            _line(R * np.exp(-1j * phi), r * np.exp(-1j * phi), outward=False),
            _arc(r, -phi, phi),
            _line(r * np.exp(1j * phi), R * np.exp(1j * phi), outward=True))
        spec = ContourSpec(R_max=R, **common)
    elif kind == "Gamma_A":
        if vertex_sector is None:
            raise ContourError("Gamma_A needs the sector of W with a negative vertex")
        iota = float(vertex_sector.vertex)
        th_i = float(vertex_sector.semi_angle)
        if iota >= 0:
            raise ContourError("Gamma_A needs a negative vertex iota")
        if not vertex_sector.contained or th_i >= limit:
            raise ContourError(
                f"vertex sector semi-angle {th_i:.6g} is too wide for alpha={alpha}")
        eps = 0.5 * (limit - th_i) if epsilon is None else float(epsilon)
        phi_i = th_i + eps
        phi0 = theta + eps
        if eps <= 0 or phi_i >= limit:
            raise ContourError("theta_iota + epsilon must stay below pi/(2 alpha)")
        if not sector.contained or phi0 >= np.pi:
            raise ContourError("sector of A at the origin is too wide")
        if phi0 <= phi_i:
            # the vertex sector never binds; the contour is a plain sector contour
            return build_contour("gamma_B", op, SectorEstimate(0.0, theta, sector.samples),
                                 t, alpha, tolerance, eps, r)
        corner_mod = abs(iota) * np.sin(phi_i) / np.sin(phi0 - phi_i)
        if r is None:
            r = 0.5 * min(lam_min, corner_mod)
        if not r < lam_min:
            raise ContourError(f"arc radius {r} is not below the smallest "
                               f"characteristic-number modulus {lam_min}")
        if not r < corner_mod:
            raise ContourError("arc radius exceeds the corner of the two sectors")
        X = corner_mod * np.exp(1j * phi0)
        floor = max(1.5 * lam_max, 2 * corner_mod, 2 * abs(iota), 2 * r)

        def far(R):
            U = -iota * np.cos(phi_i) + np.sqrt(iota ** 2 * np.cos(phi_i) ** 2
                                                - iota ** 2 + R ** 2)
            return iota + U * np.exp(1j * phi_i)

        # resolvent bound ||A (I - lam A)^{-1}|| <= 1 / (|lam - iota| sin eps)
        # <= R/(R-|iota|) / (|lam| sin eps); radial length factor 1/cos(...)
        def constants(R):
            phi_R = float(np.angle(far(R)))
            k = (R / (R - abs(iota))) / (np.sin(eps) * np.cos(phi_R - phi_i))
            return k, phi_R

        R = floor
        for _ in range(50):
            k, phi_R = constants(R)
            common = dict(kind=kind, r=float(r), theta=theta, epsilon=eps,
                          alpha=float(alpha), segments=(), iota=iota, theta_iota=th_i,
                          resolvent_constant=k, tail_angle=phi_R, corner=complex(X))
            R_new = _solve_rmax(common, t_min, alpha, tolerance, floor)
            if R_new <= R * (1 + 1e-12):
                break
            R = R_new
        else:
            raise ContourError("could not size the truncation radius")
        k, phi_R = constants(R)
        common.update(resolvent_constant=k, tail_angle=phi_R)
        Z = far(R)
        common["segments"] = (
            _line(np.conj(Z), np.conj(X), outward=False),
            _line(np.conj(X), r * np.exp(-1j * phi0), outward=False),
            _arc(r, -phi0, phi0),
            _line(r * np.exp(1j * phi0), X, outward=True),
            _line(X, Z, outward=True))
        spec = ContourSpec(R_max=float(R), **common)
    else:
        raise ContourError(f"unknown contour kind {kind!r}")

    if lams.size:
        margin = 1e-8 * max(lam_min, 1e-300)
        d = spec.min_distance(lams)
        if d <= margin:
            raise ContourError(f"contour passes within {d:.3e} of a characteristic number")
    return spec


@dataclass(frozen=True, eq=False)
class QuadratureResult:
    """Value of a contour integral with its error bookkeeping.

    ``value`` has shape ``(n,)`` for scalar ``t`` and ``(len(t), n)``
    otherwise.  ``trace`` (optional) lists ``(segment, s, lam, |F(lam)|)`` at
    the panel midpoints.
    """
    value: np.ndarray
    panel_error_estimate: float
    panels_used: int
    truncation_bound: float
    trace: list = field(default=None, repr=False)
    nodes: np.ndarray = field(default=None, repr=False)
    weights: np.ndarray = field(default=None, repr=False)
    vectors: np.ndarray = field(default=None, repr=False)


def _principal_power(z, a):
    return np.exp(a * np.log(z))


class _Integrand:
    def __init__(self, op, f, t, alpha):
        self.B = op.dense
        self.BT = self.B.T
        self.f = np.asarray(f, dtype=complex)
        self.t = np.atleast_1d(np.asarray(t, dtype=float))
        self.alpha = alpha

    def vectors(self, lam):
        y = resolvent_solve_batch(self.B, lam, self.f)
        return y @ self.BT

    def __call__(self, lam):
        V = self.vectors(lam)
        expo = np.exp(-np.outer(_principal_power(lam, self.alpha), self.t))
        return expo[:, :, None] * V[:, None, :], V


def _panel(seg, a, b, F):
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    s = mid + half * _X15
    lam = seg.point(s)
    dz = seg.derivative(s)
    vals, V = F(lam)
    w = vals * dz[:, None, None]
    K = half * np.tensordot(_W15, w, axes=(0, 0))
    G = half * np.tensordot(_W7, w, axes=(0, 0))
    err = float(np.max(np.linalg.norm(K - G, axis=-1)))
    return K, err, (lam, half * _W15 * dz, V)


def integrate_resolvent_functional(op, f, t, alpha, contour, tolerance=1e-12,
                                   max_panels=20000, keep_nodes=False, trace=False):
    """``(1/2 pi i) \\int exp(-lam^alpha t) B (I - lam B)^{-1} f dlam``.

    Parameters
    ----------
    op : OperatorSpec
    f : (n,) array_like
    t : float or array_like
        One or several positive times, integrated on shared panels.
    alpha : float
    contour : ContourSpec
    tolerance : float
        Target for the summed panel error estimate, relative to ``||f||``.
    max_panels : int
        Budget before :class:`QuadratureError` is raised.
    keep_nodes : bool
        Keep nodes, weights and resolvent vectors of the final panels (used
        by :class:`ContourEvaluator`).
    trace : bool
        Record panel midpoints and integrand norms.

    Returns
    -------
    QuadratureResult
    """
    f = np.asarray(f, dtype=complex)
    scalar_t = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(tt <= 0):
        raise ValueError("t must be positive")
    F = _Integrand(op, f, tt, alpha)
    fn = float(np.linalg.norm(f))
    if fn == 0:
        zero = np.zeros((tt.size, op.dimension), dtype=complex)
        kw = {}
        if keep_nodes:
            kw = {"nodes": np.zeros(0, dtype=complex), "weights": np.zeros(0, dtype=complex),
                  "vectors": np.zeros((0, op.dimension), dtype=complex)}
        return QuadratureResult(zero[0] if scalar_t else zero, 0.0, 0, 0.0, **kw)
    lams = characteristic_numbers(op)
    if lams.size and contour.min_distance(lams) <= 1e-8 * float(np.min(np.abs(lams))):
        raise ContourError("contour passes within the margin of a characteristic number")
    atol = tolerance * fn
    heap = []
    total = 0.0
    counter = 0
    panels = {}
    for si, seg in enumerate(contour.segments):
        for a, b in zip(seg.breaks[:-1], seg.breaks[1:]):
            K, err, nd = _panel(seg, a, b, F)
            panels[counter] = (si, a, b, K, err, nd)
            heapq.heappush(heap, (-err, counter))
            total += err
            counter += 1
    while total > atol:
        if len(panels) >= max_panels:
            raise QuadratureError(
                f"panel budget {max_panels} exhausted with error estimate {total:.3e}",
                estimate=total)
        negerr, key = heapq.heappop(heap)
        si, a, b, K, err, _ = panels.pop(key)
        total -= err
        seg = contour.segments[si]
        m = 0.5 * (a + b)
        if not (a < m < b):
            raise QuadratureError("panel width underflow", estimate=total)
        for lo, hi in ((a, m), (m, b)):
            K2, e2, nd2 = _panel(seg, lo, hi, F)
            panels[counter] = (si, lo, hi, K2, e2, nd2)
            heapq.heappush(heap, (-e2, counter))
            total += e2
            counter += 1
    order = sorted(panels.values(), key=lambda p: (p[0], p[1]))
    value = sum(p[3] for p in order) / (2j * np.pi)
    err = sum(p[4] for p in order) / (2 * np.pi)
    kw = {}
    if keep_nodes:
        kw["nodes"] = np.concatenate([p[5][0] for p in order])
        kw["weights"] = np.concatenate([p[5][1] for p in order]) / (2j * np.pi)
        kw["vectors"] = np.concatenate([p[5][2] for p in order])
    if trace:
        rows = []
        for si, a, b, K, e, nd in order:
            lam = nd[0][7]
            vals = np.exp(-_principal_power(lam, alpha) * tt[0]) * nd[2][7]
            rows.append((si, 0.5 * (a + b), complex(lam), float(np.linalg.norm(vals)), e))
        kw["trace"] = rows
    return QuadratureResult(value[0] if scalar_t else value, float(err), len(order),
                            contour.truncation_bound(tt, fn), **kw)


class ContourEvaluator:
    """Reusable quadrature for ``t -> (1/2 pi i) \\int exp(-lam^alpha t) v(lam) dlam``.

    Panels are refined for a set of probe times; evaluation at other times
    ``t >= min(t_probe)`` reuses the same nodes and resolvent vectors.
    """

    def __init__(self, result, alpha, t_min, truncation):
        self.nodes = result.nodes
        self.weights = result.weights
        self.vectors = result.vectors
        self.alpha = alpha
        self.t_min = t_min
        self.panel_error_estimate = result.panel_error_estimate
        self.truncation_bound = truncation
        self._wv = self.weights[:, None] * self.vectors
        self._la = _principal_power(self.nodes, alpha)

    def __call__(self, t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(tt < self.t_min * (1 - 1e-12)):
            raise ValueError(f"evaluator is valid for t >= {self.t_min}")
        E = np.exp(-np.outer(tt, self._la))
        out = E @ self._wv
        return out[0] if np.ndim(t) == 0 else out


def contour_evaluator(op, f, alpha, contour, t_probe, tolerance=1e-12, max_panels=20000):
    """Build a :class:`ContourEvaluator` refined at the times ``t_probe``."""
    t_probe = np.atleast_1d(np.asarray(t_probe, dtype=float))
    res = integrate_resolvent_functional(op, f, t_probe, alpha, contour, tolerance,
                                         max_panels, keep_nodes=True)
    return ContourEvaluator(res, alpha, float(t_probe.min()),
                            contour.truncation_bound(t_probe, np.linalg.norm(f)))


def _group_lam(group):
    if hasattr(group, "lam"):
        return complex(group.lam)
    return complex(group)


def residue_at_pole(op, f, t, alpha, group, radius=None, max_nodes=4096, rtol=1e-14):
    """Residue of ``exp(-lam^alpha t) B (I - lam B)^{-1} f`` at ``lam_q``.

    Computed as ``(1/2 pi i) \\oint`` over a small counterclockwise circle
    with the trapezoidal rule; nodes are doubled until the value settles.

    Parameters
    ----------
    op : OperatorSpec
    f : (n,) array_like
    t, alpha : float
    group : SpectralGroup or complex
        The characteristic number ``lam_q`` (or its group).
    radius : float, optional
        Circle radius; chosen automatically from the distance to the other
        poles, the branch cut and the growth of the exponential factor.

    Returns
    -------
    (n,) complex ndarray
        Equals minus the group contribution.
    """
    lam_q = _group_lam(group)
    if not np.isfinite(lam_q):
        return np.zeros(op.dimension, dtype=complex)
    lams = characteristic_numbers(op)
    own = np.abs(lams - lam_q) <= 1e-6 * abs(lam_q)
    others = lams[~own]
    d_branch = abs(lam_q) if lam_q.real >= 0 else abs(lam_q.imag)
    if radius is None:
        cand = [0.5 * abs(lam_q), 0.5 * d_branch]
        if others.size:
            cand.append(0.4 * float(np.min(np.abs(others - lam_q))))
        grow = alpha * abs(lam_q) ** (alpha - 1) * t
        if grow > 0:
            cand.append(1.0 / grow)
        radius = min(cand)
    if radius >= d_branch:
        raise ForeignPoleError("circle crosses the branch cut of lam^alpha")
    if others.size:
        dist = np.abs(others - lam_q)
        j = int(np.argmin(dist))
        if dist[j] <= radius * (1 + 1e-9):
            raise ForeignPoleError(
                f"circle of radius {radius} around {lam_q} reaches the "
                f"characteristic number {others[j]}", pole=complex(others[j]))
    F = _Integrand(op, f, [t], alpha)
    prev = None
    N = 32
    while True:
        phi = 2 * np.pi * np.arange(N) / N
        z = lam_q + radius * np.exp(1j * phi)
        vals, _ = F(z)
        val = (radius * np.exp(1j * phi)) @ vals[:, 0, :] / N
        if prev is not None and np.linalg.norm(val - prev) <= rtol * max(
                np.linalg.norm(val), 1e-300):
            return val
        if N >= max_nodes:
            if prev is not None and np.linalg.norm(val - prev) <= 1e-10 * max(
                    np.linalg.norm(val), 1e-300):
                return val
            raise QuadratureError("residue quadrature did not settle",
                                  estimate=float(np.linalg.norm(val - prev)))
        prev = val
        N *= 2


@dataclass(frozen=True)
class ResolventBoundReport:
    max_violation: float
    satisfied: bool
    witness: complex
    max_norm: float
    probes: int


def _resolvent_norms(B, lam):
    n = B.shape[0]
    M = np.eye(n)[None] - lam[:, None, None] * B[None]
    s = np.linalg.svd(M, compute_uv=False)
    smin = s[:, -1]
    with np.errstate(divide="ignore"):
        return np.where(smin > 0, 1.0 / smin, np.inf)


def verify_resolvent_bound(op, kind, params, probes=256, slack=1e-12):
    """Sample a locus and compare resolvent norms with the bound for that locus.

    Parameters
    ----------
    op : OperatorSpec
    kind : {"ray", "sector", "circle"}
        ``ray``: ``params = {"angle": phi, "sector": SectorEstimate}``
        (optional ``"radii"``); bound ``1/sin(min|phi -+ theta|)``.
        ``sector``: ``params`` holds ``theta0``, ``iota``, ``theta_iota``
        and ``epsilon`` for ``op = A``; bound ``1/sin eps`` on the origin
        sector edges and ``1 + |lam| / (|lam - iota| sin eps)`` on the vertex
        sector edges.
        ``circle``: forwarded to :func:`lidskii.exponents.circle_resolvent_bound`.
    probes : int
        Number of sample points.

    Returns
    -------
    ResolventBoundReport
    """
    B = op.dense
    nb = max(op.norm, 1e-300)
    if kind == "ray":
        phi = float(params["angle"])
        sector = params["sector"]
        theta = sector.semi_angle
        phi_w = (phi + np.pi) % (2 * np.pi) - np.pi
        if abs(phi_w) <= theta or np.isclose(np.sin(phi_w), 0.0):
            raise ValueError("the ray must avoid the sector and the real axis")
        radii = params.get("radii")
        if radii is None:
            radii = np.geomspace(1e-3 / nb, 1e3 / nb, probes)
        lam = np.asarray(radii) * np.exp(1j * phi)
        psi = min(abs(phi_w - theta), abs(phi_w + theta))
        bound = np.full(lam.shape, 1.0 / np.sin(psi))
    elif kind == "sector":
        th0, iota, thi, eps = (float(params[k]) for k in
                               ("theta0", "iota", "theta_iota", "epsilon"))
        phi0, phii = th0 + eps, thi + eps
        if phi0 <= phii:
            raise ValueError("the vertex sector does not bind")
        X = abs(iota) * np.sin(phii) / np.sin(phi0 - phii)
        R = float(params.get("R", 10 * max(X, 1.0)))
        h = probes // 4
        s0 = np.geomspace(1e-3 * X, X, h, endpoint=False)
        u0 = np.linspace(0, 1, probes - 2 * h + 1)[1:]
        P = X * np.exp(1j * phi0)
        Z = iota + (R + abs(iota)) * np.exp(1j * phii)
        edge0 = s0 * np.exp(1j * phi0)
        edgei = P + (Z - P) * u0
        lam = np.concatenate([edge0, np.conj(edge0), edgei, np.conj(edgei)])
        b0 = np.full(2 * edge0.size, 1.0 / np.sin(eps))
        bi = 1.0 + np.abs(edgei) / (np.abs(edgei - iota) * np.sin(eps))
        bound = np.concatenate([b0, np.concatenate([bi, bi])])
    elif kind == "circle":
        from .exponents import circle_resolvent_bound
        res = circle_resolvent_bound(op, params["R"], params["delta"], params["varrho"],
                                     probes=probes, radii=params.get("radii", 64))
        return ResolventBoundReport(float(res.max_norm - res.bound), bool(res.satisfied),
                                    complex(res.R_tilde), float(res.max_norm), probes)
    else:
        raise ValueError(f"unknown bound kind {kind!r}")
    norms = _resolvent_norms(B, lam)
    if not np.all(np.isfinite(norms)):
        raise ForeignPoleError("the sampled locus meets the spectrum")
    viol = norms - bound
    j = int(np.argmax(viol))
    return ResolventBoundReport(float(viol[j]), bool(viol[j] <= slack), complex(lam[j]),
                                float(norms.max()), int(lam.size))

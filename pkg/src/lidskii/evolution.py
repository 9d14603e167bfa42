"""Fractional Cauchy problem ``D^{1/alpha}_- u = W u``, ``u(0) = h``.

With ``A = W^{-1}`` the solution is

.. math::

    u(t) = \\frac{1}{2\\pi i}\\int_{\\gamma} e^{-\\lambda^\\alpha t}
           A (I - \\lambda A)^{-1} h \\, d\\lambda,

which equals the regularized root-vector series of ``A``.  The right-sided
Riemann-Liouville derivative

.. math::

    D^{1/\\alpha}_- f(t) = -\\frac{1}{\\Gamma(1 - 1/\\alpha)} \\frac{d}{dt}
                          \\int_0^\\infty f(t + x) x^{-1/\\alpha} dx

is evaluated independently to check the equation.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate
import scipy.linalg
import scipy.special

from .abel import regularized_coefficients
from .contours import build_contour, contour_evaluator
from .errors import (ContourError, DivergentIntegralError, DomainError,
                     HorizonError)
from .jordan import raw_coefficients, spectral_decomposition
from .operators import OperatorSpec, estimate_sector

__all__ = ["CauchyProblem", "Trajectory", "invert_operator", "solve_cauchy",
           "solution_function", "rl_fractional_derivative", "GammaTailCheck",
           "gamma_tail_identity", "CheckResult", "SolutionReport", "verify_solution",
           "INITIAL_SCHEDULE"]

BACKENDS = ("contour", "series", "eigen")
INITIAL_SCHEDULE = tuple(10.0 ** -k for k in range(1, 7))


def invert_operator(W, label=None):
    """``A = W^{-1}``, keeping an exact Jordan form when ``W`` has one.

    For a block ``J = w I + N`` the inverse ``J^{-1}`` has the single
    eigenvalue ``1/w``; with ``M = J^{-1} - I/w`` and ``v`` the last unit
    vector, the columns ``M^{k-1} v, ..., M v, v`` form its Jordan chain.
    """
    label = W.label + "^-1" if label is None else label
    if W.structured is None:
        cond = np.linalg.cond(W.dense)
        if not np.isfinite(cond) or cond > 1e14:
            raise DomainError(f"W is singular (condition number {cond:.3e})")
        return OperatorSpec(np.linalg.inv(W.dense), None, label)
    blocks = []
    cols = []
    for b in W.structured.blocks:
        w = b.eigenvalue
        if w == 0:
            raise DomainError("W is singular (zero eigenvalue)")
        k = b.size
        J = w * np.eye(k, dtype=complex) + np.diag(np.ones(k - 1), 1)
        M = scipy.linalg.solve_triangular(J, np.eye(k, dtype=complex)) - np.eye(k) / w
        v = np.zeros(k, dtype=complex)
        v[-1] = 1.0
        chain = [v]
        for _ in range(k - 1):
            chain.append(M @ chain[-1])
        cols.append(np.column_stack(chain[::-1]))
        blocks.append((1.0 / w, k))
    C = scipy.linalg.block_diag(*cols)
    return OperatorSpec.from_jordan(blocks, np.asarray(W.structured.basis) @ C, label)


@dataclass(frozen=True, eq=False)
class CauchyProblem:
    """Problem data: invertible ``W``, initial value ``h`` and order ``alpha > 1``.

    ``sector`` is the numerical-range sector of ``A = W^{-1}`` (estimated
    when omitted).
    """
    W: OperatorSpec
    h: np.ndarray
    alpha: float
    sector: object = None
    A: OperatorSpec = field(default=None, repr=False)
    condition: float = field(default=None)

    def __post_init__(self):
        if not self.alpha > 1:
            raise DomainError("alpha must exceed 1")
        h = np.asarray(self.h, dtype=complex)
        if h.shape != (self.W.dimension,):
            raise DomainError(f"h has shape {h.shape}, expected ({self.W.dimension},)")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "condition", float(np.linalg.cond(self.W.dense)))
        if self.A is None:
            object.__setattr__(self, "A", invert_operator(self.W))
        if self.sector is None:
            object.__setattr__(self, "sector", estimate_sector(self.A))

    @property
    def decay_rates(self):
        """``Re w^alpha`` over the eigenvalues ``w`` of ``W``."""
        w = self.W.eigenvalues()
        return np.real(np.exp(self.alpha * np.log(w)))

    def in_decay_sector(self):
        w = self.W.eigenvalues()
        return bool(np.all(np.abs(np.angle(w)) < np.pi / (2 * self.alpha)))


@dataclass(frozen=True, eq=False)
class Trajectory:
    t_grid: np.ndarray
    values: np.ndarray
    backend: str
    error_estimates: np.ndarray
    evaluator: object = field(default=None, repr=False)

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
            raise DomainError("t_grid must be strictly increasing and positive")
        if not np.all(np.isfinite(self.values)):
            raise DomainError("trajectory has non-finite values")

    def rows(self):
        """``(t, component, re, im, error_estimate)`` rows."""
        out = []
        for t, v, e in zip(self.t_grid, self.values, self.error_estimates):
            for i, z in enumerate(v):
                out.append((float(t), i, float(z.real), float(z.imag), float(e)))
        return out


def _is_normal(M, tol=1e-10):
    C = M @ M.conj().T - M.conj().T @ M
    return np.linalg.norm(C) <= tol * max(np.linalg.norm(M) ** 2, 1e-300)


def _series_function(problem):
    d = spectral_decomposition(problem.A)
    c = raw_coefficients(d, problem.h)
    E = d.root_matrix()
    scale = float(np.sum(np.abs(c) * np.linalg.norm(E, axis=0)))

    def u(t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.array([E @ regularized_coefficients(d, c, s, problem.alpha).values
                        for s in tt])
        return out[0] if np.ndim(t) == 0 else out

    u.error = 64 * np.finfo(float).eps * scale
    return u


def _eigen_function(problem):
    W = problem.W.dense
    if not _is_normal(W):
        raise DomainError("the eigen-oracle backend needs a normal W")
    T, Z = scipy.linalg.schur(W, output="complex")
    w = np.diag(T)
    coef = Z.conj().T @ problem.h
    wa = np.exp(problem.alpha * np.log(w))

    def u(t):
        tt = np.atleast_1d(np.asarray(t, dtype=float))
        out = (np.exp(-np.outer(tt, wa)) * coef[None, :]) @ Z.T
        return out[0] if np.ndim(t) == 0 else out

    u.error = 64 * np.finfo(float).eps * float(np.linalg.norm(problem.h))
    return u


def _contour_function(problem, t_min, t_max, tolerance, kind="gamma_B", vertex=None):
    A = problem.A
    sector = problem.sector
    vertex_sector = None
    if kind == "Gamma_A":
        if vertex is None:
            raise ContourError("Gamma_A needs a negative vertex for the sector of W")
        vertex_sector = estimate_sector(problem.W, vertex_hint=vertex)
    elif sector.semi_angle >= np.pi / (2 * problem.alpha):
        raise ContourError(
            f"sector of A (semi-angle {sector.semi_angle:.6g}) is too wide for "
            f"alpha={problem.alpha}; select the Gamma_A contour with a vertex")
    probes = np.geomspace(t_min, max(t_max, t_min), 4)
    contour = build_contour(kind, A, sector, t_min, problem.alpha, tolerance,
                            vertex_sector=vertex_sector)
    ev = contour_evaluator(A, problem.h, problem.alpha, contour, probes, tolerance)

    def u(t):
        return ev(t)

    u.error = ev.panel_error_estimate + ev.truncation_bound
    u.contour = contour
    return u


def solution_function(problem, backend="contour", t_min=None, t_max=1.0,
                      tolerance=1e-12, contour_kind="gamma_B", vertex=None):
    """Callable ``u(t)`` for a backend; ``u.error`` is its error estimate.

    The contour backend is valid for ``t >= t_min``.
    """
    if backend == "series":
        return _series_function(problem)
    if backend == "eigen":
        return _eigen_function(problem)
    if backend == "contour":
        if t_min is None:
            raise ValueError("the contour backend needs t_min")
        return _contour_function(problem, t_min, t_max, tolerance, contour_kind, vertex)
    raise ValueError(f"unknown backend {backend!r}")


def solve_cauchy(problem, t_grid, backend="contour", tolerance=1e-12,
                 contour_kind="gamma_B", vertex=None):
    """Solve the fractional Cauchy problem on a time grid.

    Parameters
    ----------
    problem : CauchyProblem
    t_grid : array_like
        Strictly increasing positive times.
    backend : {"contour", "series", "eigen"}
        Contour quadrature, regularized root-vector series, or the
        eigendecomposition oracle (normal ``W`` only).
    tolerance : float
        Quadrature and truncation tolerance (contour backend).
    contour_kind : {"gamma_B", "Gamma_A"}
    vertex : float, optional
        Negative vertex of the sector of ``W`` (``Gamma_A`` only).

    Returns
    -------
    Trajectory
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0 or np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing and positive")
    u = solution_function(problem, backend, float(t.min()), float(t.max()), tolerance,
                          contour_kind, vertex)
    vals = np.atleast_2d(u(t))
    errs = np.full(t.size, float(u.error))
    return Trajectory(t, vals, backend, errs, u)


def _gl_rule(breaks, order=16):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1], breaks[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _inner_integral(f, taus, alpha, horizon, panels, tolerance):
    """``(alpha/(alpha-1)) int_0^S f(tau + s^beta) ds`` for each ``tau``."""
    beta = alpha / (alpha - 1.0)
    S = horizon ** (1.0 / beta)
    prev = None
    k = panels
    for _ in range(8):
        geo = S * np.geomspace(2.0 ** -40, 1.0 / k, 41)
        breaks = np.concatenate([[0.0], geo[:-1], S * np.arange(1, k + 1) / k])
        s, w = _gl_rule(breaks)
        x = s ** beta
        pts = (taus[:, None] + x[None, :]).ravel()
        vals = np.asarray(f(pts))
        vals = vals.reshape(taus.size, s.size, -1)
        val = (beta * np.einsum("k,tkn->tn", w, vals))
        if prev is not None:
            diff = np.max(np.linalg.norm(val - prev, axis=-1))
            if diff <= tolerance * max(np.max(np.linalg.norm(val, axis=-1)), 1e-300):
                return val, float(diff)
        prev = val
        k *= 2
    raise HorizonError("inner Riemann-Liouville quadrature did not converge")


def rl_fractional_derivative(samples, alpha, t, horizon, tolerance=1e-12, step=None,
                             panels=32, full_output=False):
    """Right-sided Riemann-Liouville derivative ``D^{1/alpha}_- f(t)``.

    The inner integral is computed after the substitution
    ``x = s^{alpha/(alpha-1)}``, which removes the ``x^{-1/alpha}``
    singularity, with composite Gauss-Legendre panels (geometrically graded
    near ``s = 0``).  The outer derivative is a five-point central difference.

    Parameters
    ----------
    samples : callable or Trajectory
        ``f(times) -> array`` of shape ``(len(times), n)`` or
        ``(len(times),)``; a :class:`Trajectory` uses its evaluator.
    alpha : float
        Order parameter, ``alpha > 1``.
    t : float
        Evaluation time, positive.
    horizon : float
        Integration is cut at ``x = horizon``.
    tolerance : float
        Relative tolerance for the quadrature and the tail bound.
    step : float, optional
        Difference step; defaults to ``min(1e-3, t/4)``.
    full_output : bool
        Also return a dict with ``tail_bound`` and ``quadrature_error``.

    Returns
    -------
    value : ndarray
    info : dict, only with ``full_output``
    """
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    if t <= 0:
        raise DomainError("t must be positive")
    f = samples.evaluator if isinstance(samples, Trajectory) else samples
    if f is None:
        raise DomainError("trajectory carries no evaluator")
    scalar = np.ndim(f(np.array([t]))[0]) == 0

    def F(x):
        v = np.asarray(f(np.asarray(x)))
        return v.reshape(len(x), -1)

    X = float(horizon)
    ends = np.linalg.norm(F(np.array([t + X / 2, t + X])), axis=-1)
    if ends[1] > 0:
        if not np.isfinite(ends).all() or ends[0] <= ends[1]:
            raise DivergentIntegralError("integrand does not decay along x")
        kappa = np.log(ends[0] / ends[1]) / (X / 2)
        tail = X ** (-1.0 / alpha) * ends[1] / kappa
    else:
        tail = 0.0
    h = min(1e-3, t / 4.0) if step is None else float(step)
    taus = t + h * np.arange(-2, 3)
    I, qerr = _inner_integral(F, taus, alpha, X, panels, tolerance)
    scale = max(np.max(np.linalg.norm(I, axis=-1)), 1e-300)
    if tail > tolerance * scale:
        raise HorizonError(f"tail bound {tail:.3e} exceeds the tolerance; enlarge the horizon")
    dI = (I[0] - 8 * I[1] + 8 * I[3] - I[4]) / (12 * h)
    val = -dI / scipy.special.gamma(1.0 - 1.0 / alpha)
    if scalar:
        val = val[0]
    if full_output:
        return val, {"tail_bound": float(tail), "quadrature_error": qerr, "step": h}
    return val


@dataclass(frozen=True)
class GammaTailCheck:
    lhs: complex
    rhs: complex
    rel_err: float


def gamma_tail_identity(lam, alpha, tolerance=1e-13):
    """Check ``int_0^inf x^{-1/alpha} exp(-lam^alpha x) dx = Gamma(1-1/alpha) lam^{1-alpha}``.

    The piece over ``[0, 1]`` is computed after ``x = s^{alpha/(alpha-1)}``;
    the tail uses Fourier-weighted quadrature when it oscillates, so the
    conditionally convergent case ``Re lam^alpha = 0`` is admissible.
    """
    if not alpha > 1:
        raise DomainError("alpha must exceed 1")
    lam = complex(lam)
    if lam == 0:
        raise DomainError("lam must be nonzero")
    if abs(np.angle(lam)) > np.pi / (2 * alpha) * (1 + 1e-12):
        raise DomainError("need |arg lam| <= pi/(2 alpha)")
    c = np.exp(alpha * np.log(lam))
    a, b = max(c.real, 0.0), c.imag
    rhs = scipy.special.gamma(1.0 - 1.0 / alpha) * np.exp((1.0 - alpha) * np.log(lam))
    beta = alpha / (alpha - 1.0)
    kw = dict(epsabs=max(tolerance, 1e-12) * abs(rhs), epsrel=0.0, limit=2000)

    def head(s, part):
        v = np.exp(-c * s ** beta)
        return v.real if part == 0 else v.imag

    h_re = scipy.integrate.quad(head, 0.0, 1.0, args=(0,), **kw)[0]
    h_im = scipy.integrate.quad(head, 0.0, 1.0, args=(1,), **kw)[0]
    env = lambda x: x ** (-1.0 / alpha) * np.exp(-a * (x - 1.0))
    scale = np.exp(-a)
    if abs(b) <= a:
        osc = lambda x, part: env(x) * (np.cos(b * x) if part == 0 else -np.sin(b * x))
        t_re = scipy.integrate.quad(osc, 1.0, np.inf, args=(0,), **kw)[0]
        t_im = scipy.integrate.quad(osc, 1.0, np.inf, args=(1,), **kw)[0] if b else 0.0
    else:
        fkw = dict(epsabs=max(tolerance, 1e-12) * abs(rhs) / max(scale, 1e-300), limlst=200)
        t_re = scipy.integrate.quad(env, 1.0, np.inf, weight="cos", wvar=abs(b), **fkw)[0]
        t_im = -np.sign(b) * scipy.integrate.quad(env, 1.0, np.inf, weight="sin",
                                                   wvar=abs(b), **fkw)[0]
    lhs = beta * complex(h_re, h_im) + scale * complex(t_re, t_im)
    return GammaTailCheck(lhs, complex(rhs), float(abs(lhs - rhs) / abs(rhs)))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float = None
    skipped: bool = False
    reason: str = ""
    label: str = ""
    details: dict = field(default_factory=dict)

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "value": self.value,
                "skipped": self.skipped, "reason": self.reason, "label": self.label,
                "details": self.details}


@dataclass(frozen=True)
class SolutionReport:
    checks: dict

    @property
    def passed(self):
        return all(c.passed for c in self.checks.values() if not c.skipped)

    def to_json(self):
        return {"passed": self.passed,
                "checks": {k: v.to_json() for k, v in sorted(self.checks.items())}}


def verify_solution(problem, trajectory, checks=("residual", "initial", "contraction"),
                    residual_limit=1e-4, initial_limit=1e-3, max_spacing=None,
                    tolerance=1e-12, contour_kind="gamma_B", vertex=None):
    """Check a trajectory against the equation, the initial value and contraction.

    Parameters
    ----------
    problem : CauchyProblem
    trajectory : Trajectory
    checks : iterable of {"residual", "initial", "contraction"}
    residual_limit : float
        Largest admissible ``||D u - W u|| / ||W u||`` on interior points.
    initial_limit : float
        Largest admissible ``||u(1e-6) - h|| / ||h||``.
    max_spacing : float, optional
        Skip the residual check when the grid spacing exceeds this bound.

    Returns
    -------
    SolutionReport
    """
    out = {}
    t = trajectory.t_grid
    backend = trajectory.backend
    W = problem.W.dense
    if "residual" in checks:
        interior = t[1:-1]
        if interior.size == 0:
            out["residual"] = CheckResult("residual", False, skipped=True,
                                          reason="grid too coarse: no interior points")
        elif max_spacing is not None and np.max(np.diff(t)) > max_spacing:
            out["residual"] = CheckResult(
                "residual", False, skipped=True,
                reason=f"grid too coarse: spacing exceeds {max_spacing}")
        else:
            rates = problem.decay_rates
            if np.any(rates <= 0):
                out["residual"] = CheckResult(
                    "residual", False, skipped=True,
                    reason="spectrum outside the decay sector; integral diverges")
            else:
                horizon = (np.log(1.0 / tolerance) + 12.0) / float(rates.min())
                steps = np.minimum(1e-3, interior / 4.0)
                u = solution_function(problem, backend,
                                      float(np.min(interior - 2 * steps)) * 0.999,
                                      float(t.max() + horizon), tolerance,
                                      contour_kind, vertex)
                worst = 0.0
                for s, hstep in zip(interior, steps):
                    Du = rl_fractional_derivative(u, problem.alpha, float(s), horizon,
                                                  tolerance=1e-13, step=float(hstep))
                    Wu = W @ u(float(s))
                    worst = max(worst, float(np.linalg.norm(Du - Wu) / np.linalg.norm(Wu)))
                out["residual"] = CheckResult("residual", worst <= residual_limit, worst,
                                              details={"horizon": horizon,
                                                       "points": int(interior.size)})
    if "initial" in checks:
        ts = np.array(INITIAL_SCHEDULE)
        u = solution_function(problem, backend, float(ts.min()), float(ts.max()),
                              tolerance, contour_kind, vertex)
        hn = max(float(np.linalg.norm(problem.h)), 1e-300)
        diffs = np.linalg.norm(np.atleast_2d(u(ts)) - problem.h[None, :], axis=1) / hn
        mono = bool(np.all(np.diff(diffs) < 0))
        out["initial"] = CheckResult(
            "initial", mono and diffs[-1] <= initial_limit, float(diffs[-1]),
            details={"t": ts.tolist(), "relative_distance": diffs.tolist(),
                     "monotone": mono})
    if "contraction" in checks:
        if not problem.in_decay_sector():
            out["contraction"] = CheckResult(
                "contraction", False, skipped=True, label="surrogate",
                reason="spectrum of W is outside the decay sector")
        else:
            norms = np.linalg.norm(trajectory.values, axis=1)
            slack = 1e-12 * max(float(np.linalg.norm(problem.h)), 1e-300)
            inc = float(np.max(np.diff(norms))) if norms.size > 1 else 0.0
            out["contraction"] = CheckResult(
                "contraction", bool(inc <= slack), inc, label="surrogate",
                details={"norms": norms.tolist()})
    return SolutionReport(out)

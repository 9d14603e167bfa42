import numpy as np
import pytest
import scipy.special
from hypothesis import given, settings, strategies as st

from lidskii.errors import ContourError, DivergentIntegralError, DomainError, HorizonError
from lidskii.evolution import (CauchyProblem, gamma_tail_identity, invert_operator,
                               rl_fractional_derivative, solve_cauchy, verify_solution)
from lidskii.families import diagonal_family, normal_sectorial, sectorial_structured
from lidskii.operators import OperatorSpec

GRID = np.linspace(0.1, 1.5, 8)


def test_invert_structured_operator(rng):
    W = OperatorSpec.from_jordan([(1.5, 3), (0.8 + 0.2j, 1)], np.eye(4) + 0.2 * rng.normal(size=(4, 4)))
    A = invert_operator(W)
    assert np.allclose(A.dense, np.linalg.inv(W.dense), atol=1e-12)
    assert sorted(b.size for b in A.structured.blocks) == [1, 3]
    assert np.allclose(sorted(abs(b.eigenvalue) for b in A.structured.blocks),
                       sorted([1 / 1.5, 1 / abs(0.8 + 0.2j)]))


def test_singular_w_rejected():
    with pytest.raises(DomainError):
        CauchyProblem(OperatorSpec.from_dense(np.diag([1.0, 0.0])), [1.0, 1.0], 2.0)
    with pytest.raises(DomainError):
        CauchyProblem(OperatorSpec.from_dense(np.diag([1.0, 2.0])), [1.0, 1.0], 1.0)


def test_normal_w_closed_form(rng):
    w = np.array([0.8, 1.3, 2.0])
    h = rng.normal(size=3)
    prob = CauchyProblem(OperatorSpec.from_dense(np.diag(w)), h, 2.0)
    exact = np.exp(-np.outer(GRID, w ** 2)) * h[None, :]
    for backend in ("contour", "series", "eigen"):
        tr = solve_cauchy(prob, GRID, backend)
        assert np.max(np.abs(tr.values - exact)) < 1e-10, backend


def test_zero_initial_value_gives_zero():
    prob = CauchyProblem(diagonal_family(3, 1), np.zeros(3), 2.0)
    for backend in ("contour", "series", "eigen"):
        assert np.all(np.abs(solve_cauchy(prob, GRID, backend).values) < 1e-300 + 1e-15)


def test_jordan_w_backends_agree(rng):
    W = sectorial_structured([(1.2, 2), (2.0, 1)], seed=5, eta=0.2)
    h = rng.normal(size=3) + 1j * rng.normal(size=3)
    prob = CauchyProblem(W, h, 2.0)
    a = solve_cauchy(prob, GRID, "contour").values
    b = solve_cauchy(prob, GRID, "series").values
    assert np.max(np.abs(a - b)) < 1e-6


def test_eigen_backend_needs_normal_w():
    prob = CauchyProblem(sectorial_structured([(1.2, 2)], seed=1), np.ones(2), 2.0)
    with pytest.raises(DomainError):
        solve_cauchy(prob, GRID, "eigen")


def test_wide_sector_needs_vertex_contour():
    W = OperatorSpec.from_dense(np.diag([1 + 1.2j, 1 - 1.2j, 2.0]))
    prob = CauchyProblem(W, np.ones(3), 2.0)
    with pytest.raises(ContourError):
        solve_cauchy(prob, GRID, "contour")


def test_vertex_contour_backend():
    W = OperatorSpec.from_dense(np.diag([1 + 0.4j, 1 - 0.4j, 2.0]))
    prob = CauchyProblem(W, np.ones(3), 2.0)
    a = solve_cauchy(prob, GRID, "contour", contour_kind="Gamma_A", vertex=-1.0).values
    b = solve_cauchy(prob, GRID, "eigen").values
    assert np.max(np.abs(a - b)) < 1e-10


def test_bad_grid_rejected():
    prob = CauchyProblem(diagonal_family(2, 0), np.ones(2), 2.0)
    with pytest.raises(DomainError):
        solve_cauchy(prob, [0.5, 0.2], "series")


def test_rl_derivative_of_exponential():
    f = lambda x: np.exp(-np.asarray(x))
    assert abs(rl_fractional_derivative(f, 2.0, 0.5, 60.0) - np.exp(-0.5)) < 1e-9
    c = 2.0 + 1.0j
    g = lambda x: np.exp(-c * np.asarray(x))
    for a in (1.5, 2.0, 3.0):
        val = rl_fractional_derivative(g, a, 0.7, 40.0)
        ref = np.exp(np.log(c) / a) * np.exp(-c * 0.7)
        assert abs(val - ref) < 1e-8 * abs(ref)


def test_rl_derivative_is_linear():
    f = lambda x: np.exp(-np.asarray(x))
    g = lambda x: np.exp(-3 * np.asarray(x))
    fg = lambda x: 2 * f(x) - 0.5 * g(x)
    lhs = rl_fractional_derivative(fg, 2.0, 0.4, 60.0)
    rhs = 2 * rl_fractional_derivative(f, 2.0, 0.4, 60.0) - 0.5 * rl_fractional_derivative(g, 2.0, 0.4, 60.0)
    assert abs(lhs - rhs) < 1e-10


def test_rl_errors():
    grow = lambda x: np.exp(np.asarray(x))
    with pytest.raises(DivergentIntegralError):
        rl_fractional_derivative(grow, 2.0, 0.5, 30.0)
    slow = lambda x: np.exp(-0.1 * np.asarray(x))
    with pytest.raises(HorizonError):
        rl_fractional_derivative(slow, 2.0, 0.5, 10.0)


def test_gamma_tail_examples():
    for a in (1.5, 2.0, 3.0):
        chk = gamma_tail_identity(1.0, a)
        assert abs(chk.lhs - scipy.special.gamma(1 - 1 / a)) < 1e-12
    chk = gamma_tail_identity(4.0, 2.0)
    assert abs(chk.lhs - np.sqrt(np.pi) / 4) < 1e-12
    assert gamma_tail_identity(1 + 1j, 2.0).rel_err < 1e-8
    with pytest.raises(DomainError):
        gamma_tail_identity(-1.0, 2.0)


def test_verify_diagonal():
    prob = CauchyProblem(diagonal_family(3, 2), np.ones(3) / np.sqrt(3), 2.0)
    rep = verify_solution(prob, solve_cauchy(prob, GRID, "series"))
    assert rep.passed
    assert rep.checks["residual"].value <= 1e-4
    assert rep.checks["contraction"].label == "surrogate"
    d = rep.checks["initial"].details["relative_distance"]
    assert all(x > y for x, y in zip(d, d[1:])) and d[-1] <= 1e-3


def test_verify_skips_with_reasons():
    prob = CauchyProblem(diagonal_family(2, 2), np.ones(2), 2.0)
    rep = verify_solution(prob, solve_cauchy(prob, [0.2, 0.4], "series"),
                          checks=("residual",))
    assert rep.checks["residual"].skipped and "coarse" in rep.checks["residual"].reason
    W = OperatorSpec.from_dense(np.diag([1 + 1.2j, 1 - 1.2j]))
    prob = CauchyProblem(W, np.ones(2), 2.0)
    rep = verify_solution(prob, solve_cauchy(prob, GRID, "series"), checks=("contraction",))
    assert rep.checks["contraction"].skipped


def test_equal_data_equal_trajectories(rng):
    W = sectorial_structured([(1.5, 2), (0.9, 1)], seed=9, eta=0.2)
    h = rng.normal(size=3)
    a = solve_cauchy(CauchyProblem(W, h, 2.0), GRID, "contour").values
    b = solve_cauchy(CauchyProblem(W, h.copy(), 2.0), GRID, "contour").values
    assert np.array_equal(a, b)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([1.5, 2.0, 2.5]))
def test_normal_backends_agree(seed, alpha):
    W = normal_sectorial(4, 0.9 * np.pi / (2 * alpha) * 0.5, seed)
    h = np.random.default_rng(seed).normal(size=4)
    prob = CauchyProblem(W, h, alpha)
    ref = solve_cauchy(prob, GRID, "eigen").values
    for b in ("contour", "series"):
        assert np.max(np.abs(solve_cauchy(prob, GRID, b).values - ref)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(st.floats(1.1, 3.0), st.floats(0.2, 6.0), st.floats(-0.95, 0.95))
def test_gamma_tail_identity_holds(alpha, r, frac):
    lam = r * np.exp(1j * frac * np.pi / (2 * alpha))
    assert gamma_tail_identity(lam, alpha).rel_err < 1e-8

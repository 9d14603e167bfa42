import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lidskii.errors import DomainError, HorizonError
from lidskii.exponents import (ModulusSequence, beta_profile, canonical_product,
                               convergence_exponent, counting_function,
                               generate_model_sequence, circle_bound_value,
                               circle_resolvent_bound, load_sequence_csv, series_converges,
                               operator_order, upper_density)
from lidskii.families import random_sectorial
from lidskii.operators import OperatorSpec


def test_counting_examples():
    seq = ModulusSequence([1.0, 2.0, 3.0])
    assert counting_function(seq, 2.5) == 2
    assert counting_function(seq, 1.0) == 0
    sq = generate_model_sequence("power", terms=200, rho=0.5)
    assert counting_function(sq, 1e4) == 99


@pytest.mark.parametrize("kind,params,rho,genus", [
    ("power", {"rho": 0.5}, 0.5, 0),
    ("power", {"rho": 1.0}, 1.0, 1),
    ("geometric", {"base": 2.0}, 0.0, 0),
])
def test_exponent_examples(kind, params, rho, genus):
    rep = convergence_exponent(generate_model_sequence(kind, terms=20000 if kind == "power"
                                                       else 200, **params))
    assert abs(rep.rho_hat - rho) <= 0.05
    assert rep.genus == genus


def test_exponent_needs_enough_points():
    with pytest.raises(HorizonError):
        convergence_exponent(ModulusSequence(np.arange(1.0, 50.0), finite=False))


def test_density_examples():
    seq = generate_model_sequence("power", terms=40000, rho=2.0)
    assert abs(upper_density(seq, 2.0) - 1.0) < 0.01
    assert upper_density(ModulusSequence([1.0, 2.0]), 1.0, radius=1e8) == pytest.approx(2e-7)
    e1 = generate_model_sequence("E1", terms=20000, rho=1.0)
    d = [upper_density(e1, 1.0, horizon=h) for h in (2000, 20000)]
    assert d[1] < d[0]


def test_beta_examples():
    empty = ModulusSequence([])
    assert np.all(beta_profile(empty, 0, 1.0, [10.0, 100.0]).beta == 0)
    sq = generate_model_sequence("power", terms=100, rho=0.5)
    b = beta_profile(sq, 0, 0.75, np.geomspace(1e2, 1e8, 7)).beta
    assert np.all(np.diff(b) < 0) and b[-1] < 0.2 * b[0]


def test_beta_closed_form_for_single_point():
    # n(t) = 1 for t > 2; p = 0, rho1 = 1: beta(r) = (ln(r/2) + 1) / r
    seq = ModulusSequence([2.0])
    r = np.array([3.0, 10.0, 50.0])
    b = beta_profile(seq, 0, 1.0, r).beta
    assert np.allclose(b, (np.log(r / 2) + 1) / r, rtol=1e-14)


def test_canonical_product_examples():
    assert canonical_product(ModulusSequence([2.0]), 0, 1.0) == 0.5
    sq = generate_model_sequence("power", terms=50, rho=0.5)
    assert canonical_product(sq, 0, 0.0) == 1


def test_canonical_product_growth_bound():
    sq = generate_model_sequence("power", terms=4000, rho=0.5)
    for r in (10.0, 100.0, 1000.0):
        z = r * np.exp(1j * np.linspace(0, 2 * np.pi, 64, endpoint=False))
        prod = np.array([canonical_product(sq, 0, w) for w in z])
        b = beta_profile(sq, 0, 0.75, [r]).beta[0]
        assert np.all(np.abs(prod) <= np.exp(b * r ** 0.75))


def test_e2_first_term():
    e2 = generate_model_sequence("E2", terms=10, kappa=1.0, q=15)
    assert abs(e2.moduli[0] - np.log(16) * np.log(np.log(16))) < 1e-14
    assert abs(e2.moduli[0] - 2.8274) < 1e-4


def test_e2_partial_sums_keep_growing():
    e2 = generate_model_sequence("E2", terms=200_000, kappa=1.0, q=15)
    s = np.cumsum(1.0 / e2.moduli)
    marks = s[[999, 9999, 99_999, 199_999]]
    assert np.all(np.diff(marks) > 0)
    # the block sums shrink slower than any geometric rate
    assert (marks[3] - marks[2]) > 0.1 * (marks[2] - marks[1])


def test_e1_counting_consistency():
    e1 = generate_model_sequence("E1", terms=20000, rho=1.0)
    for r in np.geomspace(100, float(e1.moduli[-1]) * 0.9, 8):
        target = r / (np.log(r) * np.log(np.log(r)))
        assert abs(counting_function(e1, r) - target) <= 1.0


def test_series_oracle_examples():
    n2 = generate_model_sequence("power", terms=20000, rho=0.5).moduli
    assert series_converges(n2, 1.0)
    n1 = generate_model_sequence("power", terms=20000, rho=1.0).moduli
    assert not series_converges(n1, 1.0)
    assert series_converges(n1, 2.0)


def test_csv_loader(tmp_path):
    p = tmp_path / "seq.csv"
    p.write_text("3.0\n1.0\n2.0,0.5\n")
    seq = load_sequence_csv(str(p))
    assert seq.finite and len(seq) == 3
    assert np.allclose(seq.moduli, sorted([3.0, 1.0, abs(2 + 0.5j)]))


def test_scalar_circle_scan():
    res = circle_resolvent_bound(OperatorSpec.from_dense([[0.5]]), 10.0, 0.5, 1.0)
    assert 5.0 < res.R_tilde < 10.0
    assert abs(res.max_norm - 1 / abs(1 - res.R_tilde / 2)) < 1e-12
    assert res.satisfied


def test_diagonal_ring_without_poles():
    res = circle_resolvent_bound(OperatorSpec.from_dense(np.diag([0.5, 0.25])), 1.5, 0.3, 1.0)
    assert res.satisfied


def test_bound_value_without_growth():
    assert circle_bound_value(3.0, 0.0, 1.5) == 3.0
    assert circle_bound_value(3.0, 0.0, 2.0) == 9.0


def test_operator_order_of_power_diagonal():
    op = OperatorSpec.from_dense(np.diag(np.arange(1, 41, dtype=float) ** -1.5))
    mu, C = operator_order(op)
    assert mu == pytest.approx(1.5, abs=1e-12)
    assert C == pytest.approx(1.0, abs=1e-12)


def test_operator_order_rejects_rank_one():
    with pytest.raises(DomainError):
        operator_order(OperatorSpec.from_dense([[2.0, 0.0], [0.0, 0.0]]))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_operator_order_constant_bounds_every_value(seed):
    op = random_sectorial(6, 0.3, seed)
    mu, C = operator_order(op)
    s = np.sort(np.linalg.svd(op.dense, compute_uv=False))[::-1]
    assert np.all(s <= C * np.arange(1, 7) ** -mu * (1 + 1e-12))


def test_model_validation():
    with pytest.raises(DomainError):
        generate_model_sequence("power", terms=0, rho=1.0)
    with pytest.raises(HorizonError):
        generate_model_sequence("power", terms=2 ** 26, rho=1.0)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(0.01, 1e3), min_size=1, max_size=40), st.floats(0.01, 2e3))
def test_counting_matches_enumeration(points, r):
    seq = ModulusSequence(points)
    assert counting_function(seq, r) == sum(1 for x in points if x < r)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.3, 3.0))
def test_power_sequence_exponent(rho):
    rep = convergence_exponent(generate_model_sequence("power", terms=20000, rho=rho))
    assert abs(rep.rho_hat - rho) <= 0.05


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 1000), st.floats(0.3, 1.5))
def test_circle_scan_on_sectorial_operators(seed, scale):
    op = random_sectorial(4, 0.5, seed)
    top = float(np.max(1 / np.abs(op.eigenvalues())))
    assert circle_resolvent_bound(op, 4 * top * scale, 0.5, 1.0).satisfied

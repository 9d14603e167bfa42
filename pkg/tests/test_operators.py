import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lidskii.errors import OperatorFormatError, SingularBasisError, SingularResolventError
from lidskii.families import random_sectorial
from lidskii.operators import (OperatorSpec, adjoint_apply, characteristic_numbers,
                               estimate_sector, fredholm_determinant, load_operator,
                               operator_to_json, resolvent_apply, resolvent_solve_batch,
                               singular_values)

JORDAN2 = [[0.5, 1.0], [0.0, 0.5]]


def test_scalar_json_roundtrip():
    op = load_operator('{"dimension": 1, "entries": [[[2.0, 0.0]]]}')
    assert op.dimension == 1
    assert op.dense[0, 0] == 2.0
    again = load_operator(operator_to_json(op))
    assert np.array_equal(again.dense, op.dense)


def test_structured_identity_basis_gives_jordan_block():
    op = load_operator({"structured": {"blocks": [{"eigenvalue": 0.5, "size": 2}],
                                       "basis": [[1, 0], [0, 1]]}})
    assert np.array_equal(op.dense, np.array(JORDAN2, dtype=complex))
    assert np.allclose(op.eigenvalues(), [0.5, 0.5])


def test_structured_random_basis_reconstructs(rng):
    P = np.eye(3) + 0.2 * rng.normal(size=(3, 3))
    op = OperatorSpec.from_jordan([(0.7, 3)], P)
    J = np.array([[0.7, 1, 0], [0, 0.7, 1], [0, 0, 0.7]])
    assert np.linalg.norm(op.dense - P @ J @ np.linalg.inv(P)) <= 1e-12 * np.linalg.norm(op.dense)


@pytest.mark.parametrize("bad", [
    '{"entries": [[[1, 0], [2, 0]]]}',
    '{"entries": [[[1, 0]]], "dimension": 2}',
    '{"entries": [[["x", 0]]]}',
    '[1, 2]',
    '{"entries": [[[NaN, 0]]]}',
])
def test_malformed_operator_rejected(bad):
    with pytest.raises(OperatorFormatError):
        load_operator(bad)


def test_missing_file_rejected(tmp_path):
    with pytest.raises(OperatorFormatError, match="cannot read"):
        load_operator(str(tmp_path / "nope.json"))


def test_singular_basis_rejected():
    with pytest.raises(SingularBasisError):
        OperatorSpec.from_jordan([(1.0, 1), (2.0, 1)], [[1, 1], [1, 1]])


def test_resolvent_examples():
    assert np.allclose(resolvent_apply(OperatorSpec.from_dense([[0.5]]), 1.0, [1.0]), [2.0])
    op = OperatorSpec.from_dense(JORDAN2)
    assert np.allclose(resolvent_apply(op, 1.0, [0.0, 1.0]), [4.0, 2.0], atol=1e-14)
    f = np.array([1.0, -2.0])
    assert np.array_equal(resolvent_apply(op, 0.0, f), f)


def test_resolvent_at_pole_names_it():
    op = OperatorSpec.from_dense(np.diag([0.5, 0.25]))
    with pytest.raises(SingularResolventError) as info:
        resolvent_apply(op, 2.0, [1.0, 1.0])
    assert abs(info.value.pole - 2.0) < 1e-12


def test_characteristic_numbers_diagonal():
    lam = characteristic_numbers(OperatorSpec.from_dense(np.diag([0.5, 0.25])))
    assert np.allclose(sorted(lam.real), [2.0, 4.0])


def test_singular_values_examples(rng):
    assert np.allclose(singular_values(OperatorSpec.from_dense(np.diag([3.0, 1.0]))), [3, 1])
    assert np.allclose(singular_values(OperatorSpec.from_dense([[0, 1], [0, 0]])), [1, 0])
    B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    gram = np.sort(np.sqrt(np.abs(np.linalg.eigvalsh(B.conj().T @ B))))[::-1]
    assert np.allclose(singular_values(OperatorSpec.from_dense(B)), gram, atol=1e-10)


def test_fredholm_determinant_examples(rng):
    op = OperatorSpec.from_dense(np.diag([0.5, 1 / 3]))
    assert fredholm_determinant(op, 0.0) == 1.0
    assert abs(fredholm_determinant(op, 1.0) - 1 / 3) < 1e-15
    for _ in range(50):
        B = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        lam = complex(rng.normal(), rng.normal())
        o = OperatorSpec.from_dense(B)
        bound = np.prod(1 + abs(lam) * singular_values(o))
        assert abs(fredholm_determinant(o, lam)) <= bound * (1 + 1e-12)


def test_adjoint_examples(rng):
    S = rng.normal(size=(3, 3))
    S = S + S.T
    f = rng.normal(size=3)
    assert np.allclose(adjoint_apply(OperatorSpec.from_dense(S), f), S @ f)
    assert np.allclose(adjoint_apply(OperatorSpec.from_dense([[0, 1], [0, 0]]), [1, 0]), [0, 1])


def test_sector_examples():
    s = estimate_sector(OperatorSpec.from_dense(np.diag([1.0, 2.0])))
    assert s.vertex == 0 and s.semi_angle <= 1e-12
    s = estimate_sector(OperatorSpec.from_dense(np.diag([1 + 1j, 1 - 1j])))
    assert abs(s.semi_angle - np.pi / 4) <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_sector_of_sectorial_construction(seed):
    theta = 0.4
    op = random_sectorial(6, theta, seed)
    s = estimate_sector(op)
    assert s.contained and s.semi_angle <= theta + 1e-10


def test_sector_of_operator_surrounding_origin():
    s = estimate_sector(OperatorSpec.from_dense(np.diag([1.0, -1.0, 1j])))
    assert not s.contained and s.semi_angle == np.pi


complex_entries = st.complex_numbers(max_magnitude=2.0, allow_nan=False, allow_infinity=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(complex_entries, min_size=9, max_size=9), complex_entries,
       st.lists(complex_entries, min_size=3, max_size=3))
def test_resolvent_solves_system(entries, lam, f):
    B = np.array(entries).reshape(3, 3)
    op = OperatorSpec.from_dense(B)
    M = np.eye(3) - lam * B
    if np.linalg.cond(M) > 1e8:
        return
    x = resolvent_apply(op, lam, f)
    assert np.linalg.norm(M @ x - f) <= 1e-10 * (1 + np.linalg.norm(f))
    y = resolvent_solve_batch(B, np.array([lam, lam]), np.array(f))
    assert y.shape == (2, 3)
    assert np.allclose(y[0], x, atol=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 1.3))
def test_rayleigh_quotients_inside_estimated_sector(seed, theta):
    op = random_sectorial(5, theta, seed)
    s = estimate_sector(op)
    g = np.random.default_rng(seed).normal(size=(5, 200)) + 1j * np.random.default_rng(
        seed + 1).normal(size=(5, 200))
    q = np.einsum("ij,ij->j", g.conj(), op.dense @ g) / np.einsum("ij,ij->j", g.conj(), g)
    assert all(s.contains(z, slack=1e-9) for z in q)


@settings(max_examples=30, deadline=None)
@given(st.lists(complex_entries, min_size=4, max_size=4),
       st.lists(complex_entries, min_size=2, max_size=2),
       st.lists(complex_entries, min_size=2, max_size=2))
def test_adjoint_inner_product_identity(entries, f, g):
    op = OperatorSpec.from_dense(np.array(entries).reshape(2, 2))
    f, g = np.array(f), np.array(g)
    lhs = np.vdot(g, op.dense @ f)
    rhs = np.vdot(adjoint_apply(op, g), f)
    assert abs(lhs - rhs) <= 1e-13 * (1 + np.linalg.norm(f) * np.linalg.norm(g) * 8)


def test_operator_json_is_valid_json():
    op = OperatorSpec.from_jordan([(0.5, 2)], np.eye(2))
    json.dumps(operator_to_json(op))

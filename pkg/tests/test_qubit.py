import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qprotect import qubit as q

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def random_operator(rng):
    return rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))


def test_basis_states_are_orthonormal():
    for a in (q.KET_0, q.KET_1, q.KET_PLUS, q.KET_MINUS):
        assert q.squared_norm(a) == pytest.approx(1.0, abs=1e-15)
    assert abs(q.inner(q.KET_0, q.KET_1)) < 1e-15
    assert abs(q.inner(q.KET_PLUS, q.KET_MINUS)) < 1e-15
    np.testing.assert_allclose(q.KET_PLUS, np.array([1, 1]) / math.sqrt(2))


def test_plane_states_at_the_poles():
    np.testing.assert_allclose(q.ket_plane(0.0, 0.3), q.KET_PLUS, atol=1e-15)
    psi = q.ket_plane(math.pi, 0.0)
    assert abs(abs(q.inner(q.KET_MINUS, psi)) - 1) < 1e-15


def test_plane_state_bloch_vector(rng):
    for _ in range(200):
        theta, phi = rng.uniform(-math.pi, math.pi, 2)
        b = q.bloch(q.outer(q.ket_plane(theta, phi)))
        expected = (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))
        np.testing.assert_allclose(b.as_array(), expected, atol=1e-12)


def test_pole_paulis_match_logical_paulis():
    np.testing.assert_array_equal(q.PM_SIGMA_1, q.PAULI_Z)
    np.testing.assert_array_equal(q.PM_SIGMA_2, -q.PAULI_Y)
    np.testing.assert_array_equal(q.PM_SIGMA_3, q.PAULI_X)
    # |+> is the +1 eigenvector of the third pole Pauli
    np.testing.assert_allclose(q.apply(q.PM_SIGMA_3, q.KET_PLUS), q.KET_PLUS, atol=1e-15)


def test_trace_is_cyclic(rng):
    for _ in range(1000):
        a, b = random_operator(rng), random_operator(rng)
        assert abs(q.trace(q.compose(a, b)) - q.trace(q.compose(b, a))) < 1e-12


def test_dagger_reverses_products(rng):
    for _ in range(100):
        a, b = random_operator(rng), random_operator(rng)
        np.testing.assert_allclose(q.dagger(a @ b), q.dagger(b) @ q.dagger(a), atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-1, 1))
def test_bloch_round_trip(x, y, z):
    n = math.sqrt(x * x + y * y + z * z)
    if n > 1:
        x, y, z = x / n, y / n, z / n
    rho = q.from_bloch((x, y, z))
    assert q.is_density_matrix(rho, atol=1e-12)
    np.testing.assert_allclose(q.bloch(rho).as_array(), (x, y, z), atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(angles, angles)
def test_pure_state_self_fidelity(theta, phi):
    psi = q.ket_plane(theta, phi)
    assert q.fidelity_pure(psi, q.outer(psi)) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_orthogonal_and_mixed():
    assert q.fidelity_pure(q.KET_0, q.outer(q.KET_1)) == 0.0
    assert q.fidelity_pure(q.KET_PLUS, q.IDENTITY / 2) == pytest.approx(0.5)


def test_fidelity_rejects_unnormalized_state():
    with pytest.raises(ValueError):
        q.fidelity_pure(2 * q.KET_0, q.outer(q.KET_0))


def test_predicates():
    assert q.is_unitary(q.PAULI_X)
    assert not q.is_unitary(2 * q.IDENTITY)
    assert q.is_hermitian(q.PAULI_Y)
    assert not q.is_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))
    assert not q.is_density_matrix(np.diag([1.5, -0.5]).astype(complex))

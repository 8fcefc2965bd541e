import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qlmeas.errors import InvalidOperatorError, InvalidStateError
from qlmeas.linalg import (I2, PAULI, TwoQubitState, bloch_to_density,
                           correlation_tensor, density_to_bloch, frobenius,
                           is_hermitian, partial_trace, require_density,
                           tensor, two_qubit_assemble)

from conftest import random_bloch

unit = st.floats(-1.0, 1.0, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


def test_pauli_algebra():
    # sigma_i sigma_j = delta_ij I + i eps_ijk sigma_k
    eps = np.zeros((3, 3, 3))
    for i, j, k in [(0, 1, 2), (1, 2, 0), (2, 0, 1)]:
        eps[i, j, k] = 1.0
        eps[j, i, k] = -1.0
    for i in range(3):
        for j in range(3):
            want = (i == j) * I2 + 1j * sum(
                eps[i, j, k] * PAULI[k] for k in range(3))
            np.testing.assert_allclose(PAULI[i] @ PAULI[j], want,
                                       atol=1e-15)


def test_pauli_traceless_hermitian():
    for s in PAULI:
        assert abs(np.trace(s)) == 0.0
        assert is_hermitian(s)


@given(seeds)
@settings(max_examples=50, deadline=None)
def test_bloch_density_round_trip(seed):
    rng = np.random.default_rng(seed)
    n = random_bloch(rng)
    rho = bloch_to_density(n)
    assert is_hermitian(rho)
    assert abs(np.trace(rho) - 1.0) < 1e-14
    assert np.linalg.eigvalsh(rho)[0] > -1e-14
    np.testing.assert_allclose(density_to_bloch(rho), n, atol=1e-14)


def test_bloch_to_density_rejects_long_vectors():
    with pytest.raises(InvalidStateError):
        bloch_to_density([1.0, 1.0, 0.0])


def test_require_density_rejects_bad_inputs():
    with pytest.raises(InvalidOperatorError):
        require_density(np.array([[0.5, 0.5j], [0.5j, 0.5]]))  # not herm
    with pytest.raises(InvalidOperatorError):
        require_density(np.array([[0.7, 0.0], [0.0, 0.7]]))  # trace 1.4
    with pytest.raises(InvalidOperatorError):
        require_density(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_require_density_accepts_valid():
    rho = bloch_to_density([0.1, 0.2, -0.3])
    out = require_density(rho)
    np.testing.assert_array_equal(out, rho)


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_partial_trace_inverts_tensor(seed):
    rng = np.random.default_rng(seed)
    ra = bloch_to_density(random_bloch(rng))
    rb = bloch_to_density(random_bloch(rng))
    joint = tensor(ra, rb)
    np.testing.assert_allclose(partial_trace(joint, "A"), ra, atol=1e-14)
    np.testing.assert_allclose(partial_trace(joint, "B"), rb, atol=1e-14)


def test_tensor_against_kron():
    a = np.arange(4, dtype=complex).reshape(2, 2)
    b = (np.arange(4, dtype=complex) * 1j).reshape(2, 2)
    np.testing.assert_array_equal(tensor(a, b), np.kron(a, b))


def test_partial_trace_requires_valid_axis():
    with pytest.raises(ValueError):
        partial_trace(np.eye(4, dtype=complex), "C")


@given(seeds)
@settings(max_examples=40, deadline=None)
def test_product_state_round_trips(seed):
    # T = outer(nA, nB) makes the state a product; the correlation
    # tensor read back from the assembled matrix must return it
    rng = np.random.default_rng(seed)
    na, nb = random_bloch(rng), random_bloch(rng)
    st2 = TwoQubitState(na, nb, np.outer(na, nb))
    rho = two_qubit_assemble(st2)
    np.testing.assert_allclose(rho, tensor(bloch_to_density(na),
                                           bloch_to_density(nb)),
                               atol=1e-14)
    np.testing.assert_allclose(correlation_tensor(rho), np.outer(na, nb),
                               atol=1e-13)
    np.testing.assert_allclose(density_to_bloch(partial_trace(rho, "A")),
                               na, atol=1e-13)


def test_two_qubit_state_rejects_unphysical_correlations():
    # maximal classical correlation plus aligned marginals is not a
    # positive operator
    with pytest.raises(InvalidStateError):
        TwoQubitState([0.0, 0.0, 1.0], [0.0, 0.0, -1.0], np.eye(3))


def test_correlated_state_marginals():
    v = 1.0 / np.sqrt(6.0)
    T = np.diag([v, -v, 1.0 / np.sqrt(3.0)])
    st2 = TwoQubitState([0, 0, v], [0, 0, v], T)
    rho = two_qubit_assemble(st2)
    w = np.linalg.eigvalsh(rho)
    assert w[0] > -1e-12
    np.testing.assert_allclose(density_to_bloch(partial_trace(rho, "A")),
                               [0, 0, v], atol=1e-14)
    np.testing.assert_allclose(correlation_tensor(rho), T, atol=1e-14)


def test_frobenius_matches_numpy():
    a = np.array([[1.0 + 2j, 3.0], [0.5j, -1.0]])
    assert frobenius(a) == pytest.approx(np.linalg.norm(a), rel=1e-15)

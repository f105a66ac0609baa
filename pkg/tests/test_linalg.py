import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from qdarwin import linalg
from qdarwin.errors import InputError, ResourceError
from qdarwin.randomized import random_density_matrix, random_hermitian, random_psd

seeds = st.integers(0, 2**32 - 1)


def ket(*amps):
    v = np.asarray(amps, dtype=complex)
    return np.outer(v, v.conj())


def test_tensor_identity():
    assert np.allclose(linalg.tensor_product(np.eye(2), np.eye(2)), np.eye(4))


def test_tensor_basis_order():
    out = linalg.tensor_product(ket(1, 0), ket(0, 1))
    assert np.allclose(out, np.diag([0, 1, 0, 0]))


def test_tensor_trace_factorises(rng):
    a, b = rng.normal(size=(2, 2, 2))
    assert np.isclose(np.trace(linalg.tensor_product(a, b)), np.trace(a) * np.trace(b))


def test_tensor_cap():
    with pytest.raises(ResourceError):
        linalg.tensor_product(np.eye(64), np.eye(64), cap=1024)


def test_partial_trace_product(rng):
    ra, rb = random_density_matrix(2, rng), random_density_matrix(3, rng)
    rho = np.kron(ra, rb)
    assert np.allclose(linalg.partial_trace(rho, [2, 3], [0]), ra)
    assert np.allclose(linalg.partial_trace(rho, [2, 3], [1]), rb)


def test_partial_trace_bell():
    bell = ket(1, 0, 0, 1) / 2
    for keep in ([0], [1]):
        assert np.allclose(linalg.partial_trace(bell, [2, 2], keep), np.eye(2) / 2)


def test_partial_trace_sequential_equals_joint(rng):
    rho = random_density_matrix(12, rng)
    joint = linalg.partial_trace(rho, [2, 3, 2], [0])
    step = linalg.partial_trace(rho, [2, 3, 2], [0, 1])
    step = linalg.partial_trace(step, [2, 3], [0])
    assert np.allclose(joint, step, atol=1e-13)


def test_partial_trace_bad_dims():
    with pytest.raises(InputError):
        linalg.partial_trace(np.eye(4) / 4, [2, 3], [0])


@pytest.mark.parametrize("d", [2, 3, 8])
def test_entropy_pure_and_maximally_mixed(d, rng):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    psi /= np.linalg.norm(psi)
    assert abs(linalg.von_neumann_entropy(np.outer(psi, psi.conj()))) < 1e-12
    assert np.isclose(linalg.von_neumann_entropy(np.eye(d) / d), np.log2(d))


def test_entropy_diag():
    assert np.isclose(linalg.von_neumann_entropy(np.diag([0.8, 0.2])), 0.721928, atol=1e-6)


def test_entropy_matches_logm(rng):
    rho = random_density_matrix(5, rng)
    oracle = -np.trace(rho @ sla.logm(rho)).real / np.log(2)
    assert np.isclose(linalg.von_neumann_entropy(rho), oracle, atol=1e-10)


def test_invalid_state_rejected():
    with pytest.raises(InputError):
        linalg.von_neumann_entropy(np.diag([1.2, -0.2]))


@pytest.mark.parametrize("c", [0.0, 0.3, 1.0])
def test_fractional_power_identity(c):
    assert np.allclose(linalg.fractional_power(np.eye(3), c), np.eye(3))


def test_fractional_power_examples():
    assert np.allclose(linalg.fractional_power(np.diag([4.0, 1.0]), 0.5), np.diag([2, 1]))
    assert np.allclose(linalg.fractional_power(np.diag([0.0, 1.0]), 0.5), np.diag([0, 1]))
    assert np.allclose(linalg.fractional_power(np.diag([0.0, 1.0]), 0.0), np.diag([0, 1]))


def test_fractional_power_matches_scipy(rng):
    a = random_psd(4, rng)
    assert np.allclose(linalg.fractional_power(a, 0.5), sla.sqrtm(a), atol=1e-10)
    assert np.allclose(linalg.fractional_power(a, 0.3), sla.fractional_matrix_power(a, 0.3), atol=1e-10)


def test_fractional_power_rejects_negative():
    with pytest.raises(InputError):
        linalg.fractional_power(np.diag([1.0, -0.1]), 0.5)


@pytest.mark.parametrize(
    "a, expected",
    [(np.diag([1.0, -2.0]), 3.0), (np.zeros((3, 3)), 0.0), (ket(1, 0) - ket(0, 1), 2.0)],
)
def test_trace_norm_examples(a, expected):
    assert np.isclose(linalg.trace_norm(a), expected)


def test_trace_norm_rejects_non_hermitian():
    with pytest.raises(InputError):
        linalg.trace_norm(np.array([[0, 1], [0, 0]]))


def test_fidelity_examples(rng):
    rho = random_density_matrix(3, rng)
    assert np.isclose(linalg.fidelity(rho, rho), 1.0)
    assert np.isclose(linalg.fidelity(ket(1, 0), ket(0, 1)), 0.0)
    assert np.isclose(linalg.fidelity(ket(1, 0), ket(1, 1) / 2), 0.5)
    with pytest.raises(InputError):
        linalg.fidelity(np.eye(2) / 2, np.eye(3) / 3)


def test_fidelity_matches_sqrtm(rng):
    r, s = random_density_matrix(3, rng), random_density_matrix(3, rng)
    sr = sla.sqrtm(r)
    oracle = np.trace(sla.sqrtm(sr @ s @ sr)).real ** 2
    assert np.isclose(linalg.fidelity(r, s), oracle, atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_tensor_associative(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3))
    left = linalg.tensor_product(linalg.tensor_product(a, b), c)
    right = linalg.tensor_product(a, linalg.tensor_product(b, c))
    assert np.max(np.abs(left - right)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from([[2, 2], [2, 3, 2], [4, 2]]))
def test_partial_trace_keeps_trace(seed, dims):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(int(np.prod(dims)), rng)
    keep = [int(rng.integers(len(dims)))]
    assert abs(np.trace(linalg.partial_trace(rho, dims, keep)) - 1.0) <= 1e-10


@settings(max_examples=25, deadline=None)
@given(seeds, st.integers(2, 8), st.integers(2, 8))
def test_entropy_additive(seed, da, db):
    rng = np.random.default_rng(seed)
    r, s = random_density_matrix(da, rng), random_density_matrix(db, rng)
    joint = linalg.von_neumann_entropy(np.kron(r, s))
    assert abs(joint - linalg.von_neumann_entropy(r) - linalg.von_neumann_entropy(s)) <= 1e-8


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 6), st.sampled_from([0.1, 0.5, 0.9]))
def test_fractional_power_interpolates(seed, d, c):
    rng = np.random.default_rng(seed)
    a = random_psd(d, rng, rank=int(rng.integers(1, d + 1)))
    prod = linalg.fractional_power(a, c) @ linalg.fractional_power(a, 1 - c)
    assert np.allclose(prod, a, atol=1e-8)


@settings(max_examples=30, deadline=None)
@given(seeds, st.integers(2, 6), st.floats(-3, 3))
def test_trace_norm_is_a_norm(seed, d, scale):
    rng = np.random.default_rng(seed)
    a, b = random_hermitian(d, rng), random_hermitian(d, rng)
    assert linalg.trace_norm(a + b) <= linalg.trace_norm(a) + linalg.trace_norm(b) + 1e-10
    assert np.isclose(linalg.trace_norm(scale * a), abs(scale) * linalg.trace_norm(a), atol=1e-10)

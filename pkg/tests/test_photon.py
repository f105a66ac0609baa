import math

import numpy as np
import pytest
import scipy.integrate as si
import scipy.linalg as sla
from hypothesis import given, settings
from hypothesis import strategies as st

from qdarwin.chernoff import chernoff_overlap
from qdarwin.errors import InputError
from qdarwin.photon import (
    MatrixKernel,
    SkyModel,
    SmallAngleKernel,
    blackbody_spectrum,
    build_sky_model,
    build_sky_partition,
    decoherence_increment,
    decoherence_time,
    load_kernel_file,
    photon_chernoff_overlap,
    photon_conditional_projector,
    photon_redundancy_rate,
    photon_state_overlap,
    receptivity,
    receptivity_parts,
    write_kernel_file,
)
from qdarwin.randomized import random_unitary

seeds = st.integers(0, 2**32 - 1)


def cap_area(theta):
    return 2 * math.pi * (1 - math.cos(theta))


@pytest.fixture(scope="module")
def sky():
    return build_sky_model(200, cap_half_angle=0.5, n_nodes=6, coupling=0.2)


def random_matrix_model(rng, n=40, nodes=3, cap=0.8):
    part = build_sky_partition(n, cap)
    spec = blackbody_spectrum(1.0, nodes)
    mats = np.array([[random_unitary(part.n_cells, rng) for _ in range(2)] for _ in range(nodes)])
    return SkyModel(part, spec, MatrixKernel(mats))


@pytest.mark.parametrize("n", [12, 100, 401, 1000])
def test_full_sphere_area(n):
    part = build_sky_partition(n)
    assert part.patch_area == pytest.approx(4 * math.pi, rel=1e-3)
    assert np.allclose(np.linalg.norm(part.directions, axis=1), 1.0)


@pytest.mark.parametrize("n", [100, 400, 1000])
def test_hemisphere_area(n):
    part = build_sky_partition(n, math.pi / 2, (0.3, -0.2, 0.9))
    assert part.patch_area == pytest.approx(2 * math.pi, rel=5e-3)


@pytest.mark.parametrize("theta", [math.radians(10), 0.4, 1.2, 2.5])
def test_cap_area(theta):
    part = build_sky_partition(4000, theta, (1.0, 1.0, 0.0))
    assert abs(part.patch_area - cap_area(theta)) <= part.cell_area / 2 + 1e-12
    if theta == math.radians(10):
        assert part.patch_area == pytest.approx(0.0954, rel=0.02)


def test_patch_is_a_cap():
    axis = np.array([0.0, 0.6, 0.8])
    part = build_sky_partition(1000, 0.5, axis)
    cosines = part.directions @ axis
    assert cosines[part.in_patch].min() > cosines[~part.in_patch].max()


def test_empty_patch_rejected():
    with pytest.raises(InputError):
        build_sky_partition(100, math.radians(1))


def test_blackbody_quadrature():
    spec = blackbody_spectrum(2.0, 32)
    assert spec.weights.sum() == pytest.approx(1.0)
    assert np.all(spec.weights >= 0)
    num = si.quad(lambda p: p**3 / math.expm1(p / 2.0), 0, 400)[0]
    den = si.quad(lambda p: p**2 / math.expm1(p / 2.0), 0, 400)[0]
    assert spec.weights @ spec.nodes == pytest.approx(num / den, rel=1e-8)
    assert num / den == pytest.approx(2.701 * 2.0, rel=1e-3)


def test_small_angle_kernel_matches_expm(sky):
    k = sky.kernel
    n = sky.partition.directions
    g = np.exp(-(1 - np.clip(n @ n.T, -1, 1)) / k.width**2)
    g /= np.max(np.abs(np.linalg.eigvalsh(g)))
    j = 3
    p = sky.spectrum.nodes[j] / sky.spectrum.temperature
    for pos in range(2):
        d = np.diag(np.exp(1j * p * (n @ k.x[pos])))
        oracle = d.conj() @ sla.expm(-1j * k.coupling * p * g) @ d
        assert np.allclose(k.unitary(pos, j), oracle, atol=1e-10)


def test_relative_rows_match_dense(sky):
    b = sky.partition.patch_cells
    for j in (0, 5):
        full = sky.kernel.unitary(0, j).conj().T @ sky.kernel.unitary(1, j)
        assert np.allclose(sky.relative_patch_rows(j), full[b], atol=1e-12)


def test_projector_identity_kernel():
    part = build_sky_partition(60, 1.0)
    model = SkyModel(part, blackbody_spectrum(1.0, 4), MatrixKernel.identity(part.n_cells, 4))
    q = np.diag(part.in_patch.astype(float))
    assert np.allclose(photon_conditional_projector(model, 0, 2), q)
    assert photon_chernoff_overlap(model) == pytest.approx(1.0)
    assert decoherence_increment(model) == 0.0
    assert math.isinf(decoherence_time(model, 1.0))
    with pytest.raises(InputError, match="undefined"):
        receptivity(model)


def test_projector_properties(sky):
    n_b = len(sky.partition.patch_cells)
    for pos in range(2):
        q = photon_conditional_projector(sky, pos, 4)
        assert np.trace(q).real == pytest.approx(n_b)
        assert np.allclose(q @ q, q, atol=1e-9)


def test_same_position_is_trivial():
    model = build_sky_model(100, 0.6, n_nodes=4, coupling=0.3, x2=(0.0, 0.0, 0.0))
    assert photon_chernoff_overlap(model) == pytest.approx(1.0)
    assert decoherence_increment(model) == pytest.approx(0.0, abs=1e-12)
    assert math.isinf(decoherence_time(model, 5.0))


@pytest.mark.parametrize("c", [0.25, 0.5, 0.75])
def test_overlap_independent_of_c(sky, c):
    assert photon_state_overlap(sky, c) == pytest.approx(photon_chernoff_overlap(sky), abs=1e-9)


def test_overlap_against_direct_chernoff(sky):
    n_b = len(sky.partition.patch_cells)
    total = 0.0
    for j, w in enumerate(sky.spectrum.weights):
        q1 = photon_conditional_projector(sky, 0, j) / n_b
        q2 = photon_conditional_projector(sky, 1, j) / n_b
        total += w * np.trace(sla.sqrtm(q1) @ sla.sqrtm(q2)).real
    assert photon_chernoff_overlap(sky) == pytest.approx(total, abs=1e-7)


def test_kappa_dense_oracle(sky):
    b = sky.partition.patch_cells
    acc = 0.0
    for j, w in enumerate(sky.spectrum.weights):
        s1, s2 = sky.kernel.unitary(0, j), sky.kernel.unitary(1, j)
        acc += w * sum((s1[:, n].conj() @ s2[:, n]).real for n in b)
    assert decoherence_increment(sky) == pytest.approx(1 - acc / len(b), abs=1e-12)
    assert decoherence_time(sky, 3.0) == pytest.approx(1 / (6 * decoherence_increment(sky)))


def test_receptivity_full_sphere_is_zero():
    model = build_sky_model(150, None, n_nodes=4, coupling=0.3)
    assert receptivity(model) == 0.0


def test_receptivity_point_source_limit():
    alphas = [receptivity(build_sky_model(800, math.radians(a), n_nodes=8)) for a in (20, 10, 5)]
    assert alphas[0] < alphas[1] < alphas[2]
    assert alphas[2] > 0.99


def test_redundancy_rate_examples():
    assert photon_redundancy_rate(0.0, 1.0, 0.1) == 0.0
    assert photon_redundancy_rate(0.5, 2.0, 0.1) == pytest.approx(0.10857, abs=1e-5)
    assert photon_redundancy_rate(0.5, math.inf, 0.1) == 0.0
    with pytest.raises(InputError):
        photon_redundancy_rate(0.5, 1.0, 0.0)


def test_rate_consistent_with_estimate():
    from qdarwin.chernoff import redundancy_estimate

    model = build_sky_model(400, 0.3, n_nodes=8)
    kappa = decoherence_increment(model)
    assert kappa < 1e-3
    rate, t, delta = 50.0, 40.0, 0.1
    tau = decoherence_time(model, rate)
    xi = -math.log(photon_chernoff_overlap(model))
    expected = redundancy_estimate(rate * t, xi, delta)
    assert photon_redundancy_rate(receptivity(model), tau, delta) * t == pytest.approx(expected, rel=0.05)


def test_log_overlap_expansion():
    model = build_sky_model(300, 0.4, n_nodes=8, coupling=0.1)
    o = photon_chernoff_overlap(model)
    assert abs(math.log(o) - (o - 1)) <= (o - 1) ** 2


def test_kernel_file_roundtrip(tmp_path, rng):
    mats = np.array([[random_unitary(5, rng) for _ in range(2)] for _ in range(3)])
    path = tmp_path / "kernel.txt"
    write_kernel_file(path, mats)
    kern = load_kernel_file(path)
    assert np.array_equal(kern.matrices, mats)


def test_kernel_file_errors(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 1\n1 0 0 0\n")
    with pytest.raises(InputError):
        load_kernel_file(path)
    with pytest.raises(InputError):
        MatrixKernel(np.ones((1, 2, 2, 2)))


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_receptivity_identities(seed):
    rng = np.random.default_rng(seed)
    model = random_matrix_model(rng)
    num, den = receptivity_parts(model)
    alpha = num / den
    assert -1e-12 <= alpha <= 1 + 1e-12
    # the patch-to-patch part closes the sum over the whole sphere
    b = model.partition.patch_cells
    inside = 0.0
    for j, w in enumerate(model.spectrum.weights):
        u = model.kernel.unitary(0, j).conj().T @ model.kernel.unitary(1, j)
        m = u[np.ix_(b, b)] - np.eye(len(b))
        inside += w * np.sum(np.abs(m) ** 2)
    assert num + inside == pytest.approx(den, abs=1e-9)
    overlap = photon_chernoff_overlap(model)
    assert overlap == pytest.approx(1 - 2 * alpha * decoherence_increment(model), abs=1e-9)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_receptivity_basis_invariance(seed):
    rng = np.random.default_rng(seed)
    model = random_matrix_model(rng, n=30)
    b = model.partition.in_patch
    v = np.zeros((30, 30), dtype=complex)
    v[np.ix_(b, b)] = random_unitary(int(b.sum()), rng)
    v[np.ix_(~b, ~b)] = random_unitary(int((~b).sum()), rng)
    mats = model.kernel.matrices
    rotated = SkyModel(model.partition, model.spectrum, MatrixKernel(v @ mats @ v.conj().T))
    assert receptivity(rotated) == pytest.approx(receptivity(model), abs=1e-10)

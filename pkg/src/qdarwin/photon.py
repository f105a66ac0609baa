"""Blackbody photons scattering off an object in a superposition of two positions.

Photon directions are discretised into equal-solid-angle cells.  A photon
from a sky patch B starts maximally mixed over the cells of B, with a
Planck distribution of momentum magnitudes.  Scattering is elastic and
recoilless, so for each momentum node it acts as a unitary on the
direction cells alone, conditioned on the object position.

Angles are in radians, solid angles in steradians, momenta in units of
the temperature (k_B = c = hbar = 1).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .chernoff import chernoff_overlap
from .errors import InputError

UNDEFINED_TOL = 1e-20


# -- sphere partition ------------------------------------------------------------

@dataclass(frozen=True)
class SkyPartition:
    directions: np.ndarray  # (n, 3) cell-centre unit vectors
    cell_area: float
    in_patch: np.ndarray  # (n,) bool

    @property
    def n_cells(self) -> int:
        return len(self.directions)

    @property
    def patch_cells(self) -> np.ndarray:
        return np.flatnonzero(self.in_patch)

    @property
    def patch_area(self) -> float:
        return self.cell_area * int(self.in_patch.sum())

    @property
    def total_area(self) -> float:
        return self.cell_area * self.n_cells


def _zone_counts(n_zone: int, theta_a: float, theta_b: float, area: float, north_pole: bool, south_pole: bool) -> list[int]:
    """Cells per ring for the band of colatitudes ``[theta_a, theta_b]`` holding ``n_zone`` cells.

    A band touching a pole starts (or ends) with a single polar cell.  The
    remaining collars get roughly square cells; ideal counts are rounded
    with carry so they add up to ``n_zone``.
    """
    head = [1] if north_pole else []
    tail = [1] if south_pole and n_zone - len(head) >= 1 else []
    rest = n_zone - len(head) - len(tail)
    if rest <= 0:
        return head + tail if n_zone > 0 else []
    z_a = math.cos(theta_a) - (area / (2.0 * math.pi) if head else 0.0)
    z_b = math.cos(theta_b) + (area / (2.0 * math.pi) if tail else 0.0)
    a, b = math.acos(min(max(z_a, -1.0), 1.0)), math.acos(min(max(z_b, -1.0), 1.0))
    n_collars = max(1, min(rest, round((b - a) / math.sqrt(area))))
    step = (b - a) / n_collars
    counts, carry = [], 0.0
    for i in range(n_collars):
        lo, hi = a + i * step, a + (i + 1) * step
        ideal = 2.0 * math.pi * (math.cos(lo) - math.cos(hi)) / area
        n_i = max(1, int(round(ideal + carry)))
        carry += ideal - n_i
        counts.append(n_i)
    counts[-1] += rest - sum(counts)
    while counts[-1] < 1:
        counts[-2] -= 1 - counts[-1]
        counts[-1] = 1
    return head + counts + tail


def _rotation_to(axis: np.ndarray) -> np.ndarray:
    """Rotation matrix taking the z axis onto the unit vector ``axis``."""
    z = np.array([0.0, 0.0, 1.0])
    v = np.cross(z, axis)
    c = float(z @ axis)
    if np.linalg.norm(v) < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def build_sky_partition(resolution: int, cap_half_angle: float | None = None, cap_axis=(0.0, 0.0, 1.0)) -> SkyPartition:
    """Equal-area partition of the sphere into ``resolution`` cells (rounded up to even).

    Cells sit on iso-latitude rings about ``cap_axis``, with polar cells at
    both poles.  Ring boundaries fall on the equator and on the edge of the
    patch, which is the polar cap of ``round(A_cap / dA)`` cells closest to
    the cap area ``2 pi (1 - cos cap_half_angle)`` (``None`` means the whole
    sphere).
    """
    if resolution < 12:
        raise InputError("resolution must give at least 12 cells")
    n_cells = 2 * ((int(resolution) + 1) // 2)
    area = 4.0 * math.pi / n_cells
    if cap_half_angle is None:
        n_patch = n_cells
    else:
        cap_area = 2.0 * math.pi * (1.0 - math.cos(cap_half_angle))
        n_patch = min(int(round(cap_area / area)), n_cells)
    if n_patch < 1:
        raise InputError("the sky patch contains no cells; increase the resolution or the cap size")
    splits = sorted({0, n_patch, n_cells // 2, n_cells})
    counts = []
    for lo, hi in zip(splits, splits[1:]):
        theta = [math.acos(1.0 - 2.0 * c / n_cells) for c in (lo, hi)]
        counts += _zone_counts(hi - lo, theta[0], theta[1], area, lo == 0, hi == n_cells)
    cum = np.concatenate([[0], np.cumsum(counts)])
    bounds = 1.0 - 2.0 * cum / n_cells
    dirs = []
    for i, n_i in enumerate(counts):
        if n_i == 1 and i in (0, len(counts) - 1):
            dirs.append((0.0, 0.0, 1.0 if i == 0 else -1.0))
            continue
        z = 0.5 * (bounds[i] + bounds[i + 1])
        r = math.sqrt(max(1.0 - z * z, 0.0))
        phi = (np.arange(n_i) + 0.5) * 2.0 * math.pi / n_i
        dirs.extend(zip(r * np.cos(phi), r * np.sin(phi), np.full(n_i, z)))
    axis = np.asarray(cap_axis, dtype=float)
    directions = np.array(dirs) @ _rotation_to(axis / np.linalg.norm(axis)).T
    in_patch = np.arange(n_cells) < n_patch
    directions.setflags(write=False)
    in_patch.setflags(write=False)
    return SkyPartition(directions, area, in_patch)


# -- momentum spectrum ---------------------------------------------------------

@dataclass(frozen=True)
class BlackbodySpectrum:
    temperature: float
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)


def planck_density(p, temperature: float):
    """Unnormalised ``p**2 / (exp(p/T) - 1)``."""
    p = np.asarray(p, dtype=float)
    with np.errstate(over="ignore"):
        return p**2 / np.expm1(p / temperature)


def blackbody_spectrum(temperature: float = 1.0, n_nodes: int = 32) -> BlackbodySpectrum:
    """Gauss-Legendre nodes for the Planck distribution on ``[0, inf)``.

    Uses ``u = p / (p + 2T)`` to map onto ``[0, 1)``; weights sum to one.
    """
    if temperature <= 0:
        raise InputError("temperature must be positive")
    x, g = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * (x + 1.0)
    p = 2.0 * temperature * u / (1.0 - u)
    jac = 2.0 * temperature / (1.0 - u) ** 2
    w = 0.5 * g * planck_density(p, temperature) * jac
    w = w / w.sum()
    return BlackbodySpectrum(float(temperature), p, w)


# -- scattering kernels -------------------------------------------------------

class ScatteringKernel:
    """Per-node unitaries ``S_x^p`` on direction cells for the two positions."""

    dim: int
    n_nodes: int

    def unitary(self, position: int, node: int) -> np.ndarray:
        raise NotImplementedError

    def relative_rows(self, node: int, rows) -> np.ndarray:
        """Rows ``rows`` of ``S_1^dagger S_2`` for momentum node ``node``."""
        s1 = self.unitary(0, node)
        s2 = self.unitary(1, node)
        return s1[:, rows].conj().T @ s2


class SmallAngleKernel(ScatteringKernel):
    """Built-in forward-peaked kernel ``S_x^p = exp(-i eps(p) K_x)``.

    ``K_x = D_x^dagger G D_x``: ``G[n, m] = exp(-(1 - n.m) / width**2)``
    couples nearby directions (scaled to unit spectral norm) and
    ``D_x = diag(exp(i (p/T) n.x))`` carries the position-dependent phase.
    ``eps(p) = coupling * p / T``.
    """

    def __init__(self, partition: SkyPartition, spectrum: BlackbodySpectrum, coupling=0.05, width=0.7, x1=(0.0, 0.0, 0.0), x2=(1.0, 0.0, 0.0)):
        if width <= 0:
            raise InputError("kernel width must be positive")
        self.partition = partition
        self.spectrum = spectrum
        self.coupling = float(coupling)
        self.width = float(width)
        self.x = np.array([x1, x2], dtype=float)
        n = partition.directions
        g = np.exp(-(1.0 - np.clip(n @ n.T, -1.0, 1.0)) / self.width**2)
        lam, vec = np.linalg.eigh(g)
        lam = lam / np.max(np.abs(lam))
        self._lam = lam
        self._vec = vec
        self.dim = partition.n_cells
        self.n_nodes = spectrum.n_nodes

    def _parts(self, node: int):
        p = self.spectrum.nodes[node] / self.spectrum.temperature
        e = np.exp(-1j * self.coupling * p * self._lam)
        ph = np.exp(1j * p * (self.partition.directions @ self.x.T))  # (n, 2)
        return e, ph[:, 0], ph[:, 1]

    def unitary(self, position: int, node: int) -> np.ndarray:
        e, d1, d2 = self._parts(node)
        d = (d1, d2)[position]
        v = self._vec
        mat = (v * e) @ v.T
        return d.conj()[:, None] * mat * d[None, :]

    def relative_rows(self, node: int, rows) -> np.ndarray:
        rows = np.asarray(rows)
        e, d1, d2 = self._parts(node)
        v = self._vec
        a = (v[rows, :] * e.conj()) @ v.T  # rows of E^dagger
        a = a * (d1 * d2.conj())[None, :]
        b = ((a @ v) * e) @ v.T
        return d1[rows].conj()[:, None] * b * d2[None, :]


class MatrixKernel(ScatteringKernel):
    """Kernel given as explicit matrices, shape ``(n_nodes, 2, dim, dim)``."""

    def __init__(self, matrices, tol: float = 1e-10):
        mats = np.asarray(matrices, dtype=complex)
        if mats.ndim != 4 or mats.shape[1] != 2 or mats.shape[2] != mats.shape[3]:
            raise InputError(f"kernel matrices need shape (nodes, 2, d, d), got {mats.shape}")
        eye = np.eye(mats.shape[2])
        for j in range(mats.shape[0]):
            for i in range(2):
                u = mats[j, i]
                if np.max(np.abs(u.conj().T @ u - eye)) > tol:
                    raise InputError(f"kernel matrix for node {j}, position {i + 1} is not unitary")
        mats.setflags(write=False)
        self.matrices = mats
        self.n_nodes = mats.shape[0]
        self.dim = mats.shape[2]

    def unitary(self, position: int, node: int) -> np.ndarray:
        return self.matrices[node, position]

    @classmethod
    def identity(cls, dim: int, n_nodes: int) -> "MatrixKernel":
        return cls(np.broadcast_to(np.eye(dim, dtype=complex), (n_nodes, 2, dim, dim)))


def write_kernel_file(path, matrices) -> None:
    """Write kernel matrices in the plain-text format read by :func:`load_kernel_file`.

    Layout: a header line ``dim node_count``; then for each node the matrix
    for position 1 followed by position 2, one matrix row per line as
    ``re im re im ...`` pairs.  Lines starting with ``#`` are comments.
    """
    mats = np.asarray(matrices, dtype=complex)
    n_nodes, _, d, _ = mats.shape
    lines = ["# scattering kernel: dim node_count, then per node S_x1 and S_x2, rows as re/im pairs", f"{d} {n_nodes}"]
    for j in range(n_nodes):
        for i in range(2):
            for row in mats[j, i]:
                pairs = np.column_stack([row.real, row.imag]).ravel()
                lines.append(" ".join(format(v, ".17g") for v in pairs))
    Path(path).write_text("\n".join(lines) + "\n")


def load_kernel_file(path) -> MatrixKernel:
    text = Path(path).read_text()
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if len(tokens) < 2:
        raise InputError(f"{path}: missing header 'dim node_count'")
    d, n_nodes = int(tokens[0]), int(tokens[1])
    values = np.array(tokens[2:], dtype=float)
    expected = n_nodes * 2 * d * d * 2
    if values.size != expected:
        raise InputError(f"{path}: expected {expected} numbers for dim={d}, nodes={n_nodes}, found {values.size}")
    pairs = values.reshape(n_nodes, 2, d, d, 2)
    return MatrixKernel(pairs[..., 0] + 1j * pairs[..., 1])


# -- the model ----------------------------------------------------------------

@dataclass
class SkyModel:
    partition: SkyPartition
    spectrum: BlackbodySpectrum
    kernel: ScatteringKernel

    def __post_init__(self):
        if self.kernel.dim != self.partition.n_cells:
            raise InputError(f"kernel dimension {self.kernel.dim} != number of sky cells {self.partition.n_cells}")
        if self.kernel.n_nodes != self.spectrum.n_nodes:
            raise InputError(f"kernel has {self.kernel.n_nodes} nodes, spectrum has {self.spectrum.n_nodes}")

    def relative_patch_rows(self, node: int) -> np.ndarray:
        return self.kernel.relative_rows(node, self.partition.patch_cells)


def build_sky_model(
    resolution: int = 400,
    cap_half_angle: float | None = None,
    cap_axis=(0.0, 0.0, 1.0),
    temperature: float = 1.0,
    n_nodes: int = 32,
    coupling: float = 0.05,
    width: float = 0.7,
    x1=(0.0, 0.0, 0.0),
    x2=(1.0, 0.0, 0.0),
) -> SkyModel:
    """Sky model with the built-in small-angle kernel."""
    part = build_sky_partition(resolution, cap_half_angle, cap_axis)
    spec = blackbody_spectrum(temperature, n_nodes)
    return SkyModel(part, spec, SmallAngleKernel(part, spec, coupling, width, x1, x2))


def photon_conditional_projector(model: SkyModel, position: int, node: int) -> np.ndarray:
    """``S Q S^dagger`` with ``Q`` the projector onto the patch cells."""
    s = model.kernel.unitary(position, node)
    sb = s[:, model.partition.patch_cells]
    return sb @ sb.conj().T


def photon_chernoff_overlap(model: SkyModel) -> float:
    """Per-photon Chernoff overlap ``sum_j w_j tr[Q_1 Q_2] / tr Q`` (independent of c)."""
    b = model.partition.patch_cells
    total = 0.0
    for j, w in enumerate(model.spectrum.weights):
        u = model.relative_patch_rows(j)[:, b]
        total += w * float(np.sum(np.abs(u) ** 2))
    return total / len(b)


def photon_state_overlap(model: SkyModel, c: float) -> float:
    """``tr[rho_1**c rho_2**(1-c)]`` for the normalised photon states, block by block."""
    n_b = len(model.partition.patch_cells)
    total = 0.0
    for j, w in enumerate(model.spectrum.weights):
        q1 = photon_conditional_projector(model, 0, j) / n_b
        q2 = photon_conditional_projector(model, 1, j) / n_b
        total += w * chernoff_overlap(q1, q2, c)
    return total


def decoherence_increment(model: SkyModel) -> float:
    """Per-photon ``1 - (dA/A_B) Re sum_j w_j sum_{n in B} <n|S_1^dagger S_2|n>``."""
    b = model.partition.patch_cells
    acc = 0.0
    for j, w in enumerate(model.spectrum.weights):
        u = model.relative_patch_rows(j)
        acc += w * float(np.trace(u[:, b]).real)
    kappa = 1.0 - acc / len(b)
    if kappa < -1e-10:
        raise InputError(f"decoherence increment {kappa:.3g} is negative; kernel is not unitary")
    return max(kappa, 0.0)


def decoherence_time(model: SkyModel, photon_rate: float, eps: float = 1e-15) -> float:
    """``tau_D = 1 / (2 kappa rate)``; ``inf`` when there is no decoherence."""
    if photon_rate <= 0:
        raise InputError("photon_rate must be positive")
    kappa = decoherence_increment(model)
    if kappa <= eps:
        return math.inf
    return 1.0 / (2.0 * kappa * photon_rate)


def receptivity_parts(model: SkyModel) -> tuple[float, float]:
    """Numerator (patch to outside) and denominator (patch to everywhere) of the receptivity."""
    b = model.partition.patch_cells
    outside = ~model.partition.in_patch
    num = den = 0.0
    for j, w in enumerate(model.spectrum.weights):
        m = model.relative_patch_rows(j).copy()
        m[np.arange(len(b)), b] -= 1.0
        sq = np.abs(m) ** 2
        num += w * float(sq[:, outside].sum())
        den += w * float(sq.sum())
    return num, den


def receptivity(model: SkyModel) -> float:
    """Fraction of the scattering disturbance that carries photons out of the patch."""
    num, den = receptivity_parts(model)
    if den <= UNDEFINED_TOL:
        raise InputError("receptivity is undefined: the two scattering kernels coincide")
    return num / den


def photon_redundancy_rate(alpha: float, tau_d: float, delta: float) -> float:
    """Copies generated per unit time, ``alpha / (tau_D ln(1/delta))``."""
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta={delta} outside (0, 1)")
    if tau_d <= 0:
        raise InputError("tau_D must be positive")
    if math.isinf(tau_d):
        return 0.0
    return alpha / (tau_d * math.log(1.0 / delta))

"""Random states, operators and models for tests, demos and the self-test."""
from __future__ import annotations

import numpy as np

from .model import DecoherenceModel, PointerSpec, SubsystemSpec


def random_hermitian(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (a + a.conj().T) / 2


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_pure_state(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return np.outer(v, v.conj())


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble density matrix of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_psd(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Unnormalised PSD matrix with trace drawn from [0.5, 2]."""
    return random_density_matrix(d, rng, rank) * rng.uniform(0.5, 2.0)


def random_model(
    n_env: int,
    rng: np.random.Generator,
    d: int = 2,
    pure: bool | None = None,
    priors=None,
) -> DecoherenceModel:
    """Random pure-decoherence model with a qubit system.

    ``pure=None`` mixes pure and mixed initial subsystem states at random.
    """
    if priors is None:
        p1 = rng.uniform(0.2, 0.8)
        priors = (p1, 1.0 - p1)
    subsystems = []
    for _ in range(n_env):
        is_pure = rng.random() < 0.5 if pure is None else pure
        rho = random_pure_state(d, rng) if is_pure else random_density_matrix(d, rng)
        subsystems.append(SubsystemSpec(rho, random_hermitian(d, rng), random_hermitian(d, rng, 0.5)))
    pointer = PointerSpec.superposition([0.5, -0.5], priors, phases=rng.normal(size=2))
    return DecoherenceModel(pointer, subsystems)

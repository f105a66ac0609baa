"""Pure-decoherence models and their branch (conditional) environment states.

A model couples a system with pointer observable ``sum_s pi_s |s><s|`` to
independent environment subsystems through

    H = H_S + Pi_S (x) sum_k Y_k + sum_k W_k,      [Pi_S, H_S] = 0,

starting from a product state ``rho_S (x) rho_1 (x) ... (x) rho_N``.  When
the system is in pointer state ``s`` subsystem ``k`` evolves under the
branch generator ``pi_s Y_k + W_k``, so every quantity of interest reduces
to per-subsystem conditional states and their pairwise overlaps.

Subsystem indices are zero-based throughout.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import linalg
from .errors import InputError, ResourceError
from .linalg import DEFAULT_TOL, DENSE_CAP, Tolerances

WORKERS_ENV = "QDARWIN_WORKERS"


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count: explicit value, then ``QDARWIN_WORKERS``, then CPU count."""
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(workers))


def ordered_map(fn, items, workers: int | None = None) -> list:
    """``[fn(x) for x in items]``, possibly on a thread pool; order is preserved."""
    items = list(items)
    n = worker_count(workers)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _frozen(a, dtype=complex) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class PointerSpec:
    """Pointer eigenvalues, probabilities, branch phases and initial system state."""

    eigenvalues: np.ndarray
    probabilities: np.ndarray
    phases: np.ndarray
    coherences: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _frozen(self.eigenvalues, float))
        object.__setattr__(self, "probabilities", _frozen(self.probabilities, float))
        object.__setattr__(self, "phases", _frozen(self.phases, float))
        object.__setattr__(self, "coherences", _frozen(self.coherences))

    @classmethod
    def superposition(cls, eigenvalues, probabilities, phases=None) -> "PointerSpec":
        """Pure initial state ``sum_s sqrt(p_s) |s>``."""
        p = np.asarray(probabilities, dtype=float)
        amp = np.sqrt(np.clip(p, 0.0, None))
        if phases is None:
            phases = np.zeros(len(p))
        return cls(eigenvalues, p, phases, np.outer(amp, amp))

    @property
    def dim(self) -> int:
        return len(self.probabilities)

    @property
    def entropy(self) -> float:
        """Entropy (bits) of the pointer observable."""
        p = self.probabilities[self.probabilities > 0]
        return float(-np.sum(p * np.log2(p)))


@dataclass(frozen=True)
class SubsystemSpec:
    """Initial state, interaction operator and self-Hamiltonian of one subsystem."""

    initial_state: np.ndarray
    interaction: np.ndarray
    self_hamiltonian: np.ndarray | None = None

    def __post_init__(self):
        rho = _frozen(self.initial_state)
        object.__setattr__(self, "initial_state", rho)
        object.__setattr__(self, "interaction", _frozen(self.interaction))
        omega = self.self_hamiltonian
        if omega is None:
            omega = np.zeros_like(rho)
        object.__setattr__(self, "self_hamiltonian", _frozen(omega))
        d = rho.shape[0]
        for name in ("interaction", "self_hamiltonian"):
            if getattr(self, name).shape != (d, d):
                raise InputError(f"{name} shape {getattr(self, name).shape} does not match state dimension {d}")

    @property
    def dim(self) -> int:
        return self.initial_state.shape[0]

    def same_as(self, other: "SubsystemSpec") -> bool:
        return (
            np.array_equal(self.initial_state, other.initial_state)
            and np.array_equal(self.interaction, other.interaction)
            and np.array_equal(self.self_hamiltonian, other.self_hamiltonian)
        )


class DecoherenceModel:
    """A pointer spec plus an explicit list of subsystems or an i.i.d. template.

    Build an i.i.d. model with :meth:`iid`.  An explicit list whose entries
    are all identical is detected and treated exactly like the template form.
    """

    def __init__(self, pointer: PointerSpec, subsystems: Sequence[SubsystemSpec], tol: Tolerances = DEFAULT_TOL):
        subsystems = list(subsystems)
        if not subsystems:
            raise InputError("the environment needs at least one subsystem")
        self.pointer = pointer
        self.tol = tol
        self._subsystems = tuple(subsystems)
        first = subsystems[0]
        self.is_iid = all(s is first or s.same_as(first) for s in subsystems[1:])
        self.purity_flag = all(linalg.purity_test(s.initial_state, tol) for s in self._unique())
        self._generators: dict = {}

    @classmethod
    def iid(cls, pointer: PointerSpec, template: SubsystemSpec, n_env: int, tol: Tolerances = DEFAULT_TOL):
        if n_env < 1:
            raise InputError("n_env must be at least 1")
        return cls(pointer, [template] * int(n_env), tol)

    def _unique(self) -> list[SubsystemSpec]:
        if getattr(self, "is_iid", False):
            return [self._subsystems[0]]
        seen, out = set(), []
        for s in self._subsystems:
            if id(s) not in seen:
                seen.add(id(s))
                out.append(s)
        return out

    @property
    def n_env(self) -> int:
        return len(self._subsystems)

    @property
    def system_dim(self) -> int:
        return self.pointer.dim

    @property
    def subsystems(self) -> tuple[SubsystemSpec, ...]:
        return self._subsystems

    def subsystem(self, k: int) -> SubsystemSpec:
        return self._subsystems[k]

    def _generator_spectrum(self, k: int, s: int):
        spec = self._subsystems[0] if self.is_iid else self._subsystems[k]
        key = (id(spec), s)
        out = self._generators.get(key)
        if out is None:
            gen = self.pointer.eigenvalues[s] * spec.interaction + spec.self_hamiltonian
            gen = 0.5 * (gen + gen.conj().T)
            out = np.linalg.eigh(gen)
            self._generators[key] = out
        return out

    def __repr__(self):
        kind = "iid" if self.is_iid else "list"
        return f"DecoherenceModel(D_S={self.system_dim}, n_env={self.n_env}, {kind}, pure={self.purity_flag})"


@dataclass(frozen=True)
class Fragment:
    """A sorted set of (zero-based) environment subsystem indices."""

    indices: tuple[int, ...] = ()

    def __post_init__(self):
        idx = tuple(sorted(int(i) for i in self.indices))
        if len(set(idx)) != len(idx):
            raise InputError(f"fragment indices repeat: {idx}")
        if idx and idx[0] < 0:
            raise InputError(f"negative fragment index in {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def first(cls, m: int) -> "Fragment":
        return cls(tuple(range(m)))

    @property
    def size(self) -> int:
        return len(self.indices)

    def check(self, n_env: int) -> "Fragment":
        if self.indices and self.indices[-1] >= n_env:
            raise InputError(f"fragment index {self.indices[-1]} out of range for n_env={n_env}")
        return self

    def complement(self, n_env: int) -> "Fragment":
        inside = set(self.indices)
        return Fragment(tuple(k for k in range(n_env) if k not in inside))

    def __len__(self):
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def as_dict(self) -> dict:
        return {"errors": list(self.errors), "warnings": list(self.warnings)}


def _degenerate(values, tol=1e-9) -> bool:
    v = np.sort(np.asarray(values, dtype=float))
    return bool(np.any(np.diff(v) <= tol))


def validate_model(model: DecoherenceModel) -> ValidationReport:
    """Structural checks on ``model``.

    Degenerate pointer eigenvalues or interaction spectra only produce
    warnings: decoherence is then incomplete, not invalid.
    """
    tol = model.tol
    report = ValidationReport()
    ptr = model.pointer
    d_s = ptr.dim
    if d_s < 2:
        report.errors.append(f"system dimension {d_s} < 2")
    for name in ("eigenvalues", "phases"):
        if len(getattr(ptr, name)) != d_s:
            report.errors.append(f"pointer {name} length {len(getattr(ptr, name))} != {d_s}")
    p = ptr.probabilities
    if np.any(p < 0):
        report.errors.append("negative pointer probability")
    if abs(p.sum() - 1.0) > 1e-12:
        report.errors.append(f"pointer probabilities sum to {p.sum():.15g}")
    if ptr.coherences.shape != (d_s, d_s):
        report.errors.append(f"initial system state shape {ptr.coherences.shape} != ({d_s}, {d_s})")
    else:
        for prob in linalg.density_matrix_problems(ptr.coherences, tol):
            report.errors.append(f"initial system state {prob}")
        if np.max(np.abs(np.diag(ptr.coherences).real - p)) > 1e-10:
            report.errors.append("initial system state diagonal differs from pointer probabilities")
    if d_s >= 2 and len(ptr.eigenvalues) == d_s and _degenerate(ptr.eigenvalues):
        report.warnings.append("degenerate pointer eigenvalues")

    specs = [model.subsystem(0)] if model.is_iid else list(model.subsystems)
    for k, spec in enumerate(specs):
        tag = "template" if model.is_iid else f"subsystem {k}"
        for prob in linalg.density_matrix_problems(spec.initial_state, tol):
            report.errors.append(f"{tag}: initial state {prob}")
        if not linalg.is_hermitian(spec.interaction, tol.herm):
            report.errors.append(f"{tag}: interaction not Hermitian")
        elif spec.dim > 1 and _degenerate(np.linalg.eigvalsh(spec.interaction)):
            report.warnings.append(f"{tag}: interaction has degenerate spectrum")
        if not linalg.is_hermitian(spec.self_hamiltonian, tol.herm):
            report.errors.append(f"{tag}: self-Hamiltonian not Hermitian")
    return report


def conditional_propagator(model: DecoherenceModel, k: int, s: int, t: float) -> np.ndarray:
    """``exp(-i t (pi_s Y_k + W_k))`` via the eigendecomposition of the generator."""
    w, v = model._generator_spectrum(k, s)
    return (v * np.exp(-1j * float(t) * w)) @ v.conj().T


@dataclass
class BranchEnsemble:
    """Conditional subsystem states and pairwise branch overlaps at time ``t``.

    ``states[k][s]`` is the state of subsystem ``k`` given pointer state
    ``s``; ``overlaps[k, s, s2] = tr[U_k^s rho_k U_k^{s2 dagger}]``.  For
    i.i.d. models every entry of ``states`` refers to the same array.
    """

    t: float
    priors: np.ndarray
    states: list
    overlaps: np.ndarray
    pure: bool
    iid: bool
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_env(self) -> int:
        return len(self.states)

    @property
    def system_dim(self) -> int:
        return len(self.priors)

    def subsystem_dims(self, fragment: Fragment) -> list[int]:
        return [self.states[k].shape[-1] for k in fragment]

    def branch_states(self, fragment: Fragment, cap: int = DENSE_CAP) -> list[np.ndarray]:
        """Dense ``rho_{F|s}`` for every pointer state ``s``."""
        dim = int(np.prod(self.subsystem_dims(fragment))) if len(fragment) else 1
        if dim > cap:
            raise ResourceError(
                f"fragment dimension {dim} exceeds dense cap {cap}; use the pure-branch closed forms"
            )
        return [linalg.kron_all([self.states[k][s] for k in fragment], cap) for s in range(self.system_dim)]

    def fragment_overlap(self, fragment: Fragment, s: int = 0, s2: int = 1) -> complex:
        """Product of branch overlaps over ``fragment``."""
        return decoherence_factor(self, fragment, s, s2)


def _branch_data(model: DecoherenceModel, k: int, t: float):
    spec = model.subsystem(k)
    rho = spec.initial_state
    d_s = model.system_dim
    us = [conditional_propagator(model, k, s, t) for s in range(d_s)]
    states = np.empty((d_s,) + rho.shape, dtype=complex)
    lam = np.empty((d_s, d_s), dtype=complex)
    for s in range(d_s):
        r = us[s] @ rho @ us[s].conj().T
        states[s] = 0.5 * (r + r.conj().T)
        for s2 in range(d_s):
            lam[s, s2] = 1.0 if s == s2 else np.trace(us[s2].conj().T @ us[s] @ rho)
    states.setflags(write=False)
    return states, lam


def branch_ensemble(model: DecoherenceModel, t: float, workers: int | None = None) -> BranchEnsemble:
    t = float(t)
    if model.is_iid:
        states, lam = _branch_data(model, 0, t)
        all_states = [states] * model.n_env
        overlaps = np.broadcast_to(lam, (model.n_env,) + lam.shape)
    else:
        data = ordered_map(lambda k: _branch_data(model, k, t), range(model.n_env), workers)
        all_states = [d[0] for d in data]
        overlaps = np.stack([d[1] for d in data])
    return BranchEnsemble(
        t=t,
        priors=model.pointer.probabilities,
        states=all_states,
        overlaps=overlaps,
        pure=model.purity_flag,
        iid=model.is_iid,
    )


def decoherence_factor(ensemble: BranchEnsemble, fragment_complement: Fragment, s: int, s2: int) -> complex:
    """Product of ``overlaps[k, s, s2]`` over the given subsystems."""
    if s == s2 or not len(fragment_complement):
        return 1.0 + 0.0j
    idx = np.fromiter(fragment_complement.indices, dtype=int)
    return complex(np.prod(ensemble.overlaps[idx, s, s2]))


def joint_state_dense(
    model: DecoherenceModel,
    fragment: Fragment,
    t: float,
    cap: int = DENSE_CAP,
    ensemble: BranchEnsemble | None = None,
) -> np.ndarray:
    """Joint system-fragment state with the rest of the environment traced out."""
    fragment.check(model.n_env)
    d_s = model.system_dim
    dims = [model.subsystem(k).dim for k in fragment]
    d_f = int(np.prod(dims)) if dims else 1
    if d_s * d_f > cap:
        raise ResourceError(
            f"joint dimension {d_s * d_f} exceeds dense cap {cap}; "
            "pure-branch closed forms avoid building the state"
        )
    if ensemble is None:
        ensemble = branch_ensemble(model, t)
    rest = fragment.complement(model.n_env)
    us = {k: [conditional_propagator(model, k, s, t) for s in range(d_s)] for k in fragment}
    ptr = model.pointer
    out = np.zeros((d_s * d_f, d_s * d_f), dtype=complex)
    for s in range(d_s):
        for s2 in range(d_s):
            coef = ptr.coherences[s, s2]
            if coef == 0:
                continue
            coef = coef * np.exp(-1j * (ptr.phases[s] - ptr.phases[s2]) * t)
            coef = coef * decoherence_factor(ensemble, rest, s, s2)
            blocks = [us[k][s] @ model.subsystem(k).initial_state @ us[k][s2].conj().T for k in fragment]
            out[s * d_f:(s + 1) * d_f, s2 * d_f:(s2 + 1) * d_f] = coef * linalg.kron_all(blocks, cap)
    return 0.5 * (out + out.conj().T)


# -- ready-made models ------------------------------------------------------

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
PLUS = np.full((2, 2), 0.5, dtype=complex)


def iid_qubit_model(
    n_env: int,
    coupling: float = 1.0,
    priors=(0.5, 0.5),
    mixedness: float = 0.0,
) -> DecoherenceModel:
    """Qubit environment, ``Y = coupling * sigma_z``, pointer eigenvalues +-1/2.

    Each subsystem starts in ``(1 - mixedness)|+><+| + mixedness I/2`` so the
    branch overlap is ``cos(coupling * t)``.
    """
    rho = (1.0 - mixedness) * PLUS + mixedness * np.eye(2) / 2
    spec = SubsystemSpec(rho, coupling * SIGMA_Z)
    pointer = PointerSpec.superposition([0.5, -0.5], priors)
    return DecoherenceModel.iid(pointer, spec, n_env)


def time_for_overlap(overlap: float, coupling: float = 1.0) -> float:
    """Time at which :func:`iid_qubit_model` has branch overlap ``overlap``."""
    return float(np.arccos(overlap) / coupling)


def time_for_chernoff(xi: float, coupling: float = 1.0) -> float:
    """Time at which a pure :func:`iid_qubit_model` has typical Chernoff information ``xi`` (nats)."""
    return time_for_overlap(np.exp(-xi / 2.0), coupling)

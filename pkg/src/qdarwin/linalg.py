"""Dense complex-matrix primitives.

Everything here works on plain ``numpy`` arrays.  Density matrices are
square complex arrays that are Hermitian, unit trace and positive
semidefinite up to the tolerances in :class:`Tolerances`.  Composite
spaces use the convention that the left factor of a tensor product is the
slow index, so for a system-environment state the system sits leftmost and
environment subsystems follow in ascending index order.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InputError, ResourceError

DENSE_CAP = 2**13


@dataclass(frozen=True)
class Tolerances:
    herm: float = 1e-9
    trace: float = 1e-9
    psd: float = 1e-9
    clip: float = 1e-12


DEFAULT_TOL = Tolerances()


class Spectrum(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _as_square(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{name} has non-finite entries")
    return a


def is_hermitian(a, tol: float = DEFAULT_TOL.herm) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and bool(
        np.max(np.abs(a - a.conj().T), initial=0.0) <= tol
    )


def density_matrix_problems(rho, tol: Tolerances = DEFAULT_TOL) -> list[str]:
    """Return a list of the ways ``rho`` fails to be a density matrix."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        return [f"not square (shape {rho.shape})"]
    if not np.all(np.isfinite(rho)):
        return ["non-finite entries"]
    problems = []
    if not is_hermitian(rho, tol.herm):
        problems.append("not Hermitian")
        return problems
    tr = np.trace(rho).real
    if abs(tr - 1.0) > tol.trace:
        problems.append(f"trace {tr:.12g} != 1")
    lo = np.linalg.eigvalsh(rho)[0]
    if lo < -tol.psd:
        problems.append(f"negative eigenvalue {lo:.3g}")
    return problems


def check_density_matrix(rho, tol: Tolerances = DEFAULT_TOL, name="state") -> np.ndarray:
    """Validate ``rho`` and return it as a complex array."""
    rho = _as_square(rho, name)
    problems = density_matrix_problems(rho, tol)
    if problems:
        raise InputError(f"{name} is not a density matrix: " + "; ".join(problems))
    return rho


def hermitian_spectrum(a) -> Spectrum:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix."""
    a = _as_square(a)
    w, v = np.linalg.eigh(a)
    return Spectrum(w, v)


def clip_eigenvalues(w: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Zero out eigenvalues in ``[-tol.psd, tol.clip]``; reject anything below."""
    w = np.asarray(w, dtype=float)
    if w.size and w.min() < -tol.psd:
        raise InputError(f"matrix is not positive semidefinite (eigenvalue {w.min():.3g})")
    return np.where(w <= tol.clip, 0.0, w)


def tensor_product(a, b, cap: int = DENSE_CAP) -> np.ndarray:
    a = np.asarray(a)
    b = np.asarray(b)
    rows = a.shape[0] * b.shape[0]
    cols = a.shape[1] * b.shape[1]
    if max(rows, cols) > cap:
        raise ResourceError(f"tensor product dimension {max(rows, cols)} exceeds cap {cap}")
    return np.kron(a, b)


def kron_all(mats: Sequence[np.ndarray], cap: int = DENSE_CAP) -> np.ndarray:
    """Tensor product of a sequence; the empty product is the 1x1 identity."""
    if not mats:
        return np.ones((1, 1), dtype=complex)
    return reduce(lambda x, y: tensor_product(x, y, cap), mats)


def partial_trace(rho, dims: Sequence[int], keep) -> np.ndarray:
    """Reduced state of ``rho`` on the factors listed in ``keep``.

    ``dims`` gives the factor dimensions; kept factors stay in their
    original order.
    """
    rho = np.asarray(rho)
    dims = [int(d) for d in dims]
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise InputError("keep must name at least one factor")
    if keep[0] < 0 or keep[-1] >= n:
        raise InputError(f"keep indices {keep} out of range for {n} factors")
    total = int(np.prod(dims))
    if rho.ndim != 2 or rho.shape != (total, total):
        raise InputError(f"dims {dims} do not match matrix shape {rho.shape}")
    drop = [i for i in range(n) if i not in keep]
    dk = int(np.prod([dims[i] for i in keep]))
    dd = int(np.prod([dims[i] for i in drop])) if drop else 1
    t = rho.reshape(dims + dims)
    perm = keep + drop
    t = t.transpose(perm + [n + i for i in perm]).reshape(dk, dd, dk, dd)
    return np.trace(t, axis1=1, axis2=3)


def binary_entropy(p) -> float:
    """Shannon entropy in bits of a two-outcome distribution (p, 1-p)."""
    p = float(p)
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-(p * np.log2(p) + (1.0 - p) * np.log1p(-p) / np.log(2.0)))


def entropy_from_eigenvalues(w, tol: Tolerances = DEFAULT_TOL) -> float:
    w = clip_eigenvalues(w, tol)
    w = w[w > 0]
    return float(-np.sum(w * np.log2(w)))


def von_neumann_entropy(rho, tol: Tolerances = DEFAULT_TOL, validate: bool = True) -> float:
    """Entropy in bits; eigenvalues at or below ``tol.clip`` count as zero."""
    if validate:
        rho = check_density_matrix(rho, tol)
    return entropy_from_eigenvalues(np.linalg.eigvalsh(rho), tol)


def fractional_power(a, c: float, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``a**c`` for PSD ``a`` and ``0 <= c <= 1``.

    The null space maps to zero for every ``c`` (including ``c = 0``), so
    ``a**0`` is the projector onto the support of ``a``.
    """
    a = _as_square(a)
    if not 0.0 <= c <= 1.0:
        raise InputError(f"exponent c={c} outside [0, 1]")
    if not is_hermitian(a, tol.herm):
        raise InputError("fractional_power needs a Hermitian matrix")
    w, v = np.linalg.eigh(a)
    w = clip_eigenvalues(w, tol)
    wc = np.zeros_like(w)
    pos = w > 0
    wc[pos] = w[pos] ** c
    return (v * wc) @ v.conj().T


def trace_norm(a, tol: Tolerances = DEFAULT_TOL) -> float:
    a = _as_square(a)
    if not is_hermitian(a, tol.herm):
        raise InputError("trace_norm needs a Hermitian matrix")
    return float(np.sum(np.abs(np.linalg.eigvalsh(a))))


def fidelity(rho, sigma, tol: Tolerances = DEFAULT_TOL) -> float:
    """Squared-overlap fidelity ``(tr sqrt(sqrt(rho) sigma sqrt(rho)))**2``."""
    rho = np.asarray(rho, dtype=complex)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape != sigma.shape:
        raise InputError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    # nuclear norm of sqrt(rho) sqrt(sigma); the sqrt(rho) sigma sqrt(rho) form
    # would take square roots of eigenvalue noise on rank-deficient inputs
    prod = fractional_power(rho, 0.5, tol) @ fractional_power(sigma, 0.5, tol)
    f = float(np.sum(np.linalg.svd(prod, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


def purity_test(rho, tol: Tolerances = DEFAULT_TOL) -> bool:
    """True if the largest eigenvalue of ``rho`` is within ``tol.clip`` of one."""
    return bool(np.linalg.eigvalsh(np.asarray(rho))[-1] >= 1.0 - tol.clip)

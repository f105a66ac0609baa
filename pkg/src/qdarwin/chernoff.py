"""Quantum Chernoff overlaps and the typical Chernoff information.

Entropies elsewhere in the package are in bits; everything in this module
that is an exponent (``xi``, slopes of ``-ln P``) is in nats.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import linalg
from .errors import InputError
from .linalg import DEFAULT_TOL, Tolerances

C_MIN = 1e-4
INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def overlap_trace(a, b, c: float, tol: Tolerances = DEFAULT_TOL) -> complex:
    """``tr[a**c b**(1-c)]`` for PSD ``a``, ``b`` (no normalisation, no clamping)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        raise InputError(f"dimension mismatch {a.shape} vs {b.shape}")
    ac = linalg.fractional_power(a, c, tol)
    bc = linalg.fractional_power(b, 1.0 - c, tol)
    # tr[X Y] without forming the product
    return complex(np.sum(ac * bc.T))


def chernoff_overlap(rho1, rho2, c: float, tol: Tolerances = DEFAULT_TOL) -> float:
    """``tr[rho1**c rho2**(1-c)]`` clamped to [0, 1]."""
    if not 0.0 < c < 1.0:
        raise InputError(f"c={c} must lie strictly between 0 and 1")
    val = overlap_trace(rho1, rho2, c, tol)
    if abs(val.imag) > 1e-10:
        raise InputError(f"overlap has imaginary part {val.imag:.3g}; inputs are not Hermitian")
    return min(max(val.real, 0.0), 1.0)


def _overlap_function(rho1, rho2, tol: Tolerances = DEFAULT_TOL) -> Callable[[float], float]:
    """Fast ``c -> tr[rho1**c rho2**(1-c)]`` from one eigendecomposition of each state."""
    w1, v1 = np.linalg.eigh(np.asarray(rho1, dtype=complex))
    w2, v2 = np.linalg.eigh(np.asarray(rho2, dtype=complex))
    w1 = linalg.clip_eigenvalues(w1, tol)
    w2 = linalg.clip_eigenvalues(w2, tol)
    keep1, keep2 = w1 > 0, w2 > 0
    w1, w2 = w1[keep1], w2[keep2]
    weights = np.abs(v1[:, keep1].conj().T @ v2[:, keep2]) ** 2
    lw1, lw2 = np.log(w1), np.log(w2)

    def f(c: float) -> float:
        return float(np.exp(c * lw1) @ weights @ np.exp((1.0 - c) * lw2))

    return f


def golden_section(f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-6, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[lo, hi]``; returns ``(x, f(x))``."""
    a, b = lo, hi
    x1 = b - INV_PHI * (b - a)
    x2 = a + INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + INV_PHI * (b - a)
            f2 = f(x2)
    x = x1 if f1 <= f2 else x2
    fx = min(f1, f2)
    # convex objectives can bottom out at an endpoint
    for end in (lo, hi):
        fe = f(end)
        if fe < fx:
            x, fx = end, fe
    return x, fx


def _minimise_convex(f, c_min: float, tol: float, flat_tol: float = 1e-12):
    probes = [f(c_min), f(0.5), f(1.0 - c_min)]
    if max(probes) - min(probes) <= flat_tol:
        return 0.5, probes[1]
    return golden_section(f, c_min, 1.0 - c_min, tol)


def min_chernoff_overlap(rho1, rho2, c_min: float = C_MIN, tol: float = 1e-6):
    """Minimise ``tr[rho1**c rho2**(1-c)]`` over ``c`` in ``[c_min, 1 - c_min]``.

    The objective is convex in ``c``.  When it is flat (identical states,
    pure states) ``c_star`` is reported as 1/2.
    """
    f = _overlap_function(rho1, rho2)
    c, val = _minimise_convex(f, c_min, tol)
    return float(c), min(max(val, 0.0), 1.0)


def subsystem_overlaps(ensemble, c: float, s: int = 0, s2: int = 1) -> np.ndarray:
    """Per-subsystem ``tr[rho_{k|s}**c rho_{k|s2}**(1-c)]`` for a branch ensemble (cached)."""
    key = ("chernoff", float(c), s, s2)
    cached = ensemble._cache.get(key)
    if cached is not None:
        return cached
    seen: dict[int, float] = {}
    vals = np.empty(ensemble.n_env)
    for k, st in enumerate(ensemble.states):
        v = seen.get(id(st))
        if v is None:
            v = chernoff_overlap(st[s], st[s2], c)
            seen[id(st)] = v
        vals[k] = v
    vals.setflags(write=False)
    ensemble._cache[key] = vals
    return vals


def _ensemble_overlap_function(ensemble, s=0, s2=1):
    fns, seen = [], {}
    for st in ensemble.states:
        if id(st) not in seen:
            seen[id(st)] = len(fns)
            fns.append(_overlap_function(st[s], st[s2]))
    counts = np.bincount([seen[id(st)] for st in ensemble.states], minlength=len(fns))
    n = ensemble.n_env

    def mean_overlap(c: float) -> float:
        return float(sum(cnt * fn(c) for cnt, fn in zip(counts, fns)) / n)

    return mean_overlap


def optimal_common_c(ensemble, c_min: float = C_MIN, tol: float = 1e-6):
    """Single ``c`` minimising the subsystem-averaged overlap; returns ``(c, mean overlap)``."""
    c, val = _minimise_convex(_ensemble_overlap_function(ensemble), c_min, tol)
    return float(c), min(max(val, 0.0), 1.0)


def typical_chernoff_information(ensemble, c: float | str = 0.5) -> float:
    """``-ln`` of the subsystem-averaged Chernoff overlap, in nats.

    The overlaps are averaged over subsystems before taking the logarithm.
    ``c="optimize"`` picks the one ``c`` (shared by all subsystems) that
    maximises the result.  Returns ``inf`` when every subsystem keeps a
    perfect record.
    """
    if ensemble.system_dim != 2:
        raise InputError("typical Chernoff information needs two pointer states")
    if c == "optimize":
        _, mean = optimal_common_c(ensemble)
    else:
        mean = float(np.mean(subsystem_overlaps(ensemble, float(c))))
    if mean <= 0.0:
        return math.inf
    return float(max(-math.log(mean), 0.0))


def redundancy_estimate(n_env: float, xi: float, delta: float) -> float:
    """``n_env * xi / ln(1/delta)``; warns when the estimate exceeds ``n_env``."""
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta={delta} outside (0, 1)")
    if xi < 0:
        raise InputError(f"xi={xi} is negative")
    est = n_env * xi / math.log(1.0 / delta)
    if est > n_env:
        warnings.warn(
            f"redundancy estimate {est:.4g} exceeds the environment size {n_env}; delta is too large for this xi",
            stacklevel=2,
        )
    return est


@dataclass
class ExponentFit:
    slope: float
    intercept: float
    residual: float
    m: list[int]
    values: list[float]
    quantity: str
    notes: list[str] = field(default_factory=list)


def fit_exponent(m_list: Sequence[int], probabilities: Sequence[float], quantity: str = "pe") -> ExponentFit:
    """Least-squares line through ``(m, -ln P_m)``; zero probabilities are dropped."""
    ms, ys, notes = [], [], []
    for m, p in zip(m_list, probabilities):
        if p > 0.0:
            ms.append(int(m))
            ys.append(-math.log(p))
        else:
            notes.append(f"m={m} excluded: probability is zero")
    if len(ms) < 2:
        raise InputError("need at least two nonzero probabilities to fit an exponent")
    x = np.asarray(ms, dtype=float)
    y = np.asarray(ys)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return ExponentFit(float(slope), float(intercept), resid, ms, [float(v) for v in ys], quantity, notes)


def empirical_error_exponent(model, t: float, m_list: Sequence[int], sampler=None, quantity: str = "pe", c: float = 0.5, ensemble=None) -> ExponentFit:
    """Fit the decay rate of the fragment-averaged error probability.

    ``quantity="pe"`` uses the Helstrom error (closed form for pure
    branches, dense otherwise); ``"pe_star"`` uses the product bound at
    fixed ``c``.  The fragment-size-independent prefactor ends up in the
    intercept.
    """
    from .metrics import FragmentSampler, fragment_average
    from .model import branch_ensemble

    m_list = [int(m) for m in m_list]
    if len(m_list) < 3 or any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise InputError("m_list must be strictly ascending with at least three entries")
    sampler = sampler or FragmentSampler()
    if ensemble is None:
        ensemble = branch_ensemble(model, t)
    metric = {"pe": "helstrom", "pe_star": "pe_star"}[quantity]
    means = [fragment_average(model, t, m, metric, sampler, ensemble=ensemble, c=c)[0] for m in m_list]
    if all(p == 0.5 for p in means):
        return ExponentFit(0.0, math.log(2.0), 0.0, m_list, [math.log(2.0)] * len(m_list), quantity)
    return fit_exponent(m_list, means, quantity)


@dataclass
class ChernoffReport:
    """Chernoff summary for one ensemble (all exponents in nats)."""

    t: float
    c: float
    c_optimized: bool
    overlaps: list[float]
    xi: float
    r_low: float
    r_high: float
    n_env: int
    estimates: dict[str, float]
    flags: list[str]
    fit: ExponentFit | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["units"] = {"xi": "nats", "r_low": "nats", "r_high": "nats", "estimates": "copies"}
        return d


def chernoff_report(ensemble, c: float | str = 0.5, deltas: Sequence[float] = (), fit: ExponentFit | None = None) -> ChernoffReport:
    optimized = c == "optimize"
    if optimized:
        c_used, _ = optimal_common_c(ensemble)
    else:
        c_used = float(c)
    overlaps = subsystem_overlaps(ensemble, c_used)
    xi = typical_chernoff_information(ensemble, c_used)
    flags = []
    if math.isinf(xi):
        flags.append("perfect per-subsystem records")
    estimates = {}
    for d in deltas:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            est = redundancy_estimate(ensemble.n_env, xi, d) if not math.isinf(xi) else math.inf
        estimates[repr(float(d))] = est
        if est > ensemble.n_env:
            flags.append(f"delta={d}: estimated redundancy exceeds environment size")
    return ChernoffReport(
        t=ensemble.t,
        c=c_used,
        c_optimized=optimized,
        overlaps=[float(v) for v in overlaps],
        xi=xi,
        r_low=xi,
        r_high=2.0 * xi,
        n_env=ensemble.n_env,
        estimates=estimates,
        flags=flags,
        fit=fit,
    )

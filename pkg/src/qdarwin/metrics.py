"""Holevo information, mutual information, discrimination errors and redundancy.

Entropies and information are in bits.  Error probabilities refer to
discriminating the two branch states of a fragment with the pointer
probabilities as priors.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from itertools import combinations
from typing import Callable, NamedTuple

import numpy as np

from . import linalg
from .chernoff import subsystem_overlaps
from .errors import InputError, ResourceError, UnsupportedPathError
from .linalg import binary_entropy
from .model import (
    BranchEnsemble,
    DecoherenceModel,
    Fragment,
    branch_ensemble,
    decoherence_factor,
    joint_state_dense,
    ordered_map,
)

HOLEVO_CAP = 2**12
EXHAUSTIVE_CAP = 10**6


def _priors(ensemble: BranchEnsemble, priors) -> np.ndarray:
    return ensemble.priors if priors is None else np.asarray(priors, dtype=float)


def _need_qubit_system(ensemble: BranchEnsemble, what: str):
    if ensemble.system_dim != 2:
        raise UnsupportedPathError(f"{what} is only defined for a two-dimensional system")


def _two_branch_entropy(p1: float, p2: float, abs_overlap: float) -> float:
    """Entropy of ``p1|a><a| + p2|b><b|`` with ``|<a|b>| = abs_overlap``."""
    g = min(abs_overlap, 1.0) ** 2
    s = math.sqrt((p1 - p2) ** 2 + 4.0 * p1 * p2 * g)
    mu_minus = 2.0 * p1 * p2 * (1.0 - g) / (1.0 + s)
    return binary_entropy(mu_minus)


def _conditional_entropies(ensemble: BranchEnsemble) -> np.ndarray:
    cached = ensemble._cache.get("cond_entropy")
    if cached is None:
        seen: dict[int, np.ndarray] = {}
        rows = []
        for st in ensemble.states:
            row = seen.get(id(st))
            if row is None:
                row = np.array([linalg.von_neumann_entropy(st[s], validate=False) for s in range(len(st))])
                seen[id(st)] = row
            rows.append(row)
        cached = np.array(rows).reshape(ensemble.n_env, ensemble.system_dim)
        ensemble._cache["cond_entropy"] = cached
    return cached


def holevo_dense(ensemble: BranchEnsemble, fragment: Fragment, priors=None, cap: int = HOLEVO_CAP) -> float:
    """Holevo quantity of the pointer ensemble on ``fragment``, from dense matrices.

    The mixture entropy comes from a dense eigendecomposition; the branch
    states are products, so their entropies add over subsystems.
    """
    p = _priors(ensemble, priors)
    if not len(fragment):
        return 0.0
    branches = ensemble.branch_states(fragment, cap)
    mix = sum(pi * rho for pi, rho in zip(p, branches))
    h_mix = linalg.entropy_from_eigenvalues(np.linalg.eigvalsh(mix))
    idx = list(fragment)
    h_cond = _conditional_entropies(ensemble)[idx].sum(axis=0)
    chi = h_mix - float(np.dot(p, h_cond))
    return max(chi, 0.0)


def holevo_pure_branches(ensemble: BranchEnsemble, fragment: Fragment, priors=None) -> float:
    """Closed-form Holevo quantity for pure branches and a qubit system."""
    if not ensemble.pure:
        raise UnsupportedPathError("initial subsystem states are mixed; use holevo_dense")
    _need_qubit_system(ensemble, "the pure-branch Holevo formula")
    p = _priors(ensemble, priors)
    lam = abs(decoherence_factor(ensemble, fragment, 0, 1))
    return _two_branch_entropy(p[0], p[1], lam)


def holevo(ensemble: BranchEnsemble, fragment: Fragment, priors=None) -> float:
    """Holevo quantity via the closed form when available, dense otherwise."""
    if ensemble.pure and ensemble.system_dim == 2:
        return holevo_pure_branches(ensemble, fragment, priors)
    return holevo_dense(ensemble, fragment, priors)


def mutual_information(model: DecoherenceModel, fragment: Fragment, t: float, ensemble=None, dense: bool = False) -> float:
    """Quantum mutual information I(S:F) in bits.

    If the system and every subsystem start pure (qubit system) the global
    state is pure and I = H_S + H_F - H_(E minus F), each a two-branch
    entropy.  Otherwise the joint state is built densely.
    """
    if ensemble is None:
        ensemble = branch_ensemble(model, t)
    if (
        not dense
        and ensemble.pure
        and model.system_dim == 2
        and linalg.purity_test(model.pointer.coherences)
    ):
        p1, p2 = model.pointer.probabilities
        everything = Fragment(tuple(range(model.n_env)))
        rest = fragment.complement(model.n_env)
        h_s = _two_branch_entropy(p1, p2, abs(decoherence_factor(ensemble, everything, 0, 1)))
        h_f = _two_branch_entropy(p1, p2, abs(decoherence_factor(ensemble, fragment, 0, 1)))
        h_sf = _two_branch_entropy(p1, p2, abs(decoherence_factor(ensemble, rest, 0, 1)))
        return max(h_s + h_f - h_sf, 0.0)
    rho_sf = joint_state_dense(model, fragment, t, ensemble=ensemble)
    d_s = model.system_dim
    d_f = rho_sf.shape[0] // d_s
    rho_s = linalg.partial_trace(rho_sf, [d_s, d_f], [0])
    rho_f = linalg.partial_trace(rho_sf, [d_s, d_f], [1])
    h = lambda r: linalg.entropy_from_eigenvalues(np.linalg.eigvalsh(r))
    return max(h(rho_s) + h(rho_f) - h(rho_sf), 0.0)


def _pure_helstrom(p1: float, p2: float, abs_overlap: float) -> float:
    y = 4.0 * p1 * p2 * min(abs_overlap, 1.0) ** 2
    return y / (2.0 * (1.0 + math.sqrt(max(1.0 - y, 0.0))))


def helstrom_error_dense(ensemble: BranchEnsemble, fragment: Fragment, priors=None, cap: int = HOLEVO_CAP) -> float:
    _need_qubit_system(ensemble, "the Helstrom error")
    p = _priors(ensemble, priors)
    r1, r2 = ensemble.branch_states(fragment, cap)
    pe = 0.5 * (1.0 - linalg.trace_norm(p[0] * r1 - p[1] * r2))
    return min(max(pe, 0.0), 0.5)


def helstrom_error(ensemble: BranchEnsemble, fragment: Fragment, priors=None, cap: int = HOLEVO_CAP) -> float:
    """Optimal error probability for telling the two branch states apart.

    Pure branches use ``(1 - sqrt(1 - 4 p1 p2 |Lambda_F|^2)) / 2``; mixed
    branches go through the trace norm of ``p1 rho_1 - p2 rho_2``.
    """
    _need_qubit_system(ensemble, "the Helstrom error")
    if ensemble.pure:
        p = _priors(ensemble, priors)
        return _pure_helstrom(p[0], p[1], abs(decoherence_factor(ensemble, fragment, 0, 1)))
    return helstrom_error_dense(ensemble, fragment, priors, cap)


def pe_star_bound(ensemble: BranchEnsemble, fragment: Fragment, priors=None, c: float = 0.5) -> float:
    """Chernoff-type upper bound ``p1**c p2**(1-c) prod_k tr[rho_k1**c rho_k2**(1-c)]``."""
    if not 0.0 < c < 1.0:
        raise InputError(f"c={c} must lie strictly between 0 and 1")
    _need_qubit_system(ensemble, "the P_e* bound")
    p = _priors(ensemble, priors)
    ov = subsystem_overlaps(ensemble, c)
    idx = list(fragment)
    return float(p[0] ** c * p[1] ** (1.0 - c) * np.prod(ov[idx]))


def fano_lower_bound(pe: float, h_s: float) -> float:
    """``max(0, H_S - H(P_e))`` for a qubit system."""
    if not -1e-12 <= pe <= 0.5 + 1e-12:
        raise InputError(f"P_e={pe} outside [0, 1/2]")
    return max(0.0, h_s - binary_entropy(min(max(pe, 0.0), 0.5)))


def _subsystem_fidelities(ensemble: BranchEnsemble) -> np.ndarray:
    cached = ensemble._cache.get("fidelity")
    if cached is None:
        seen: dict[int, float] = {}
        vals = []
        for st in ensemble.states:
            v = seen.get(id(st))
            if v is None:
                v = linalg.fidelity(st[0], st[1])
                seen[id(st)] = v
            vals.append(v)
        cached = np.array(vals)
        ensemble._cache["fidelity"] = cached
    return cached


def fidelity_upper_bound(ensemble: BranchEnsemble, fragment: Fragment, priors=None) -> float:
    """``H((1 - sqrt F)/2)`` for equal priors, F the branch-state fidelity on the fragment.

    Fidelity is multiplicative over tensor products, so F is the product of
    per-subsystem fidelities (``|Lambda_F|^2`` for pure branches).
    """
    _need_qubit_system(ensemble, "the fidelity bound")
    p = _priors(ensemble, priors)
    if abs(p[0] - p[1]) > 1e-12:
        raise UnsupportedPathError("the fidelity upper bound is only asserted for equal priors")
    if ensemble.pure:
        f = abs(decoherence_factor(ensemble, fragment, 0, 1)) ** 2
    else:
        f = float(np.prod(_subsystem_fidelities(ensemble)[list(fragment)]))
    return binary_entropy((1.0 - math.sqrt(min(max(f, 0.0), 1.0))) / 2.0)


def third_inequality_gap(pe_star: float) -> float:
    """``P*/ln 2 - P* log2 P* - H(P*)``; nonnegative on (0, 1/2]."""
    return pe_star / math.log(2.0) - pe_star * math.log2(pe_star) - binary_entropy(pe_star)


# -- fragment averaging ------------------------------------------------------

@dataclass(frozen=True)
class FragmentSampler:
    """How fragments of a given size are drawn for averaging.

    ``exhaustive`` enumerates every subset; ``monte-carlo`` draws ``samples``
    uniform subsets from a stream seeded by ``(master_seed, t, m)``.
    """

    mode: str = "exhaustive"
    samples: int = 400
    master_seed: int = 0
    exhaustive_cap: int = EXHAUSTIVE_CAP

    def __post_init__(self):
        if self.mode not in ("exhaustive", "monte-carlo"):
            raise InputError(f"unknown sampler mode {self.mode!r}")
        if self.samples < 1:
            raise InputError("samples must be positive")

    def rng(self, t: float, m: int) -> np.random.Generator:
        t_bits = int(np.float64(t).view(np.uint64))
        seq = np.random.SeedSequence([int(self.master_seed) & (2**64 - 1), t_bits, int(m)])
        return np.random.default_rng(seq)

    def fragments(self, n_env: int, m: int, t: float) -> list[Fragment]:
        if not 0 <= m <= n_env:
            raise InputError(f"fragment size {m} outside [0, {n_env}]")
        if m in (0, n_env):
            return [Fragment.first(m)]
        if self.mode == "exhaustive":
            count = math.comb(n_env, m)
            if count > self.exhaustive_cap:
                raise ResourceError(
                    f"{count} fragments of size {m} exceed the exhaustive cap {self.exhaustive_cap}; "
                    "use mode='monte-carlo'"
                )
            return [Fragment(c) for c in combinations(range(n_env), m)]
        rng = self.rng(t, m)
        return [Fragment(tuple(rng.choice(n_env, size=m, replace=False))) for _ in range(self.samples)]


METRICS = ("chi", "chi_dense", "mutual_information", "helstrom", "helstrom_dense", "pe_star", "fano", "fidelity_bound")


def metric_function(name: str, model: DecoherenceModel, ensemble: BranchEnsemble, c: float = 0.5) -> Callable[[Fragment], float]:
    """Turn a metric name into ``fragment -> value``."""
    h_s = model.pointer.entropy
    t = ensemble.t
    table = {
        "chi": lambda f: holevo(ensemble, f),
        "chi_dense": lambda f: holevo_dense(ensemble, f),
        "mutual_information": lambda f: mutual_information(model, f, t, ensemble=ensemble),
        "helstrom": lambda f: helstrom_error(ensemble, f),
        "helstrom_dense": lambda f: helstrom_error_dense(ensemble, f),
        "pe_star": lambda f: pe_star_bound(ensemble, f, c=c),
        "fano": lambda f: fano_lower_bound(helstrom_error(ensemble, f), h_s),
        "fidelity_bound": lambda f: fidelity_upper_bound(ensemble, f),
    }
    try:
        return table[name]
    except KeyError:
        raise InputError(f"unknown metric {name!r}; choose from {METRICS}") from None


def fragment_average(
    model: DecoherenceModel,
    t: float,
    m: int,
    metric,
    sampler: FragmentSampler | None = None,
    ensemble: BranchEnsemble | None = None,
    c: float = 0.5,
    workers: int | None = None,
):
    """Mean and standard error of a metric over fragments of size ``m``.

    ``metric`` is a name from :data:`METRICS` or a callable taking a
    fragment.  For i.i.d. models every fragment of a given size is
    equivalent, so a single fragment is evaluated.  The reduction always
    runs in sample order.
    """
    sampler = sampler or FragmentSampler()
    if ensemble is None:
        ensemble = branch_ensemble(model, t)
    fn = metric if callable(metric) else metric_function(metric, model, ensemble, c)
    if model.is_iid or m in (0, model.n_env):
        if not 0 <= m <= model.n_env:
            raise InputError(f"fragment size {m} outside [0, {model.n_env}]")
        return float(fn(Fragment.first(m))), 0.0
    frags = sampler.fragments(model.n_env, m, t)
    vals = np.array(ordered_map(fn, frags, workers))
    mean = float(np.sum(vals) / len(vals))
    if sampler.mode == "exhaustive" or len(vals) < 2:
        return mean, 0.0
    return mean, float(np.std(vals, ddof=1) / math.sqrt(len(vals)))


# -- reports -------------------------------------------------------------------

@dataclass
class InformationRow:
    m: int
    chi_mean: float
    chi_stderr: float
    I_mean: float
    Pe_mean: float
    fano_lb: float
    fid_ub: float


CSV_COLUMNS = ("m", "chi_mean_bits", "chi_stderr", "I_mean_bits", "Pe_mean", "fano_lb_bits", "fid_ub_bits")
CSV_UNITS = ("count", "bits", "bits", "bits", "probability", "bits", "bits")


@dataclass
class InformationReport:
    t: float
    H_S: float
    rows: list[InformationRow] = field(default_factory=list)
    delta: float | None = None
    m_delta: int | None = None
    R_delta: float | None = None
    m_interp: float | None = None
    status: str = "ok"
    flags: list[str] = field(default_factory=list)

    def table(self) -> list[tuple]:
        return [
            (r.m, r.chi_mean, r.chi_stderr, r.I_mean, r.Pe_mean, r.fano_lb, r.fid_ub)
            for r in self.rows
        ]

    def as_dict(self) -> dict:
        d = asdict(self)
        d["units"] = dict(zip(CSV_COLUMNS, CSV_UNITS))
        return d


def _safe_average(model, t, m, metric, sampler, ensemble, workers):
    try:
        return fragment_average(model, t, m, metric, sampler, ensemble, workers=workers)[0]
    except (ResourceError, UnsupportedPathError):
        return math.nan


def information_row(model, t, m, sampler=None, ensemble=None, workers=None) -> InformationRow:
    """One report row; columns that cannot be evaluated for this model are NaN."""
    if ensemble is None:
        ensemble = branch_ensemble(model, t)
    chi, err = fragment_average(model, t, m, "chi", sampler, ensemble, workers=workers)
    avg = lambda name: _safe_average(model, t, m, name, sampler, ensemble, workers)
    return InformationRow(m, chi, err, avg("mutual_information"), avg("helstrom"), avg("fano"), avg("fidelity_bound"))


def information_report(model: DecoherenceModel, t: float, sizes=None, sampler=None, workers=None) -> InformationReport:
    """Fragment-averaged information table (the partial information plot data)."""
    ensemble = branch_ensemble(model, t, workers)
    sizes = range(model.n_env + 1) if sizes is None else sizes
    rows = [information_row(model, t, int(m), sampler, ensemble, workers) for m in sizes]
    return InformationReport(t=float(t), H_S=model.pointer.entropy, rows=rows)


class RedundancyResult(NamedTuple):
    m_delta: int | None
    R_delta: float
    report: InformationReport


def redundancy(model: DecoherenceModel, t: float, delta: float, sampler=None, workers=None, rows: bool = True) -> RedundancyResult:
    """Smallest fragment size whose average Holevo quantity reaches (1 - delta) H_S.

    The size is bracketed by doubling, narrowed by bisection, then confirmed
    by a downward linear scan.  ``R_delta = n_env / m_delta``, or 0 if even
    the whole environment falls short.
    """
    if not 0.0 < delta < 1.0:
        raise InputError(f"delta={delta} outside (0, 1)")
    sampler = sampler or FragmentSampler()
    ensemble = branch_ensemble(model, t, workers)
    n = model.n_env
    h_s = model.pointer.entropy
    target = (1.0 - delta) * h_s
    chi_cache: dict[int, float] = {}

    def chi(m: int) -> float:
        if m not in chi_cache:
            chi_cache[m] = fragment_average(model, t, m, "chi", sampler, ensemble, workers=workers)[0]
        return chi_cache[m]

    report = InformationReport(t=float(t), H_S=h_s, delta=float(delta))
    m_delta = None
    if h_s <= 0.0:
        report.status = "zero system entropy"
    elif chi(n) < target:
        report.status = "insufficient information"
    else:
        lo, hi = 0, 1
        while chi(hi) < target:
            lo, hi = hi, min(2 * hi, n)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if chi(mid) >= target:
                hi = mid
            else:
                lo = mid
        while hi > 1 and chi(hi - 1) >= target:
            hi -= 1
        m_delta = hi
        below = chi(m_delta - 1) if m_delta > 1 else 0.0
        above = chi(m_delta)
        frac = (target - below) / (above - below) if above > below else 1.0
        report.m_interp = (m_delta - 1) + frac
    report.m_delta = m_delta
    report.R_delta = n / m_delta if m_delta else 0.0
    if rows:
        report.rows = [information_row(model, t, m, sampler, ensemble, workers) for m in sorted(chi_cache)]
    return RedundancyResult(m_delta, report.R_delta, report)

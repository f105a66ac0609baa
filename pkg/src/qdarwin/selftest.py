"""Fast invariant checks behind ``qdarwin selftest``."""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np

from .chernoff import overlap_trace
from .linalg import trace_norm
from .metrics import (
    fano_lower_bound,
    helstrom_error,
    helstrom_error_dense,
    holevo,
    holevo_dense,
    holevo_pure_branches,
    mutual_information,
    pe_star_bound,
)
from .model import Fragment, branch_ensemble
from .photon import build_sky_model, decoherence_increment, photon_chernoff_overlap, receptivity
from .randomized import random_model, random_psd

TOL = 1e-9


def _bound_chain(rng):
    worst = 0.0
    for _ in range(5):
        model = random_model(5, rng)
        for t in (0.3, 1.5):
            ens = branch_ensemble(model, t, workers=1)
            for m in range(4):
                for idx in combinations(range(5), m):
                    f = Fragment(idx)
                    chi = holevo(ens, f)
                    pe = helstrom_error(ens, f)
                    worst = max(
                        worst,
                        fano_lower_bound(pe, model.pointer.entropy) - chi,
                        chi - mutual_information(model, f, t, ens),
                        max(pe - pe_star_bound(ens, f, c=c) for c in (0.1, 0.5, 0.9)),
                    )
    return worst <= TOL, f"largest violation {worst:.2e}"


def _operator_inequality(rng):
    worst = -math.inf
    for _ in range(40):
        d = int(rng.integers(2, 6))
        a, b = random_psd(d, rng), random_psd(d, rng)
        rhs = (np.trace(a + b).real - trace_norm(a - b)) / 2
        for c in (0.1, 0.5, 0.9):
            worst = max(worst, rhs - overlap_trace(a, b, c).real)
    return worst <= TOL, f"largest violation {worst:.2e}"


def _closed_vs_dense(rng):
    model = random_model(6, rng, pure=True)
    ens = branch_ensemble(model, 0.8, workers=1)
    diff = 0.0
    for m in range(1, 5):
        for idx in combinations(range(6), m):
            f = Fragment(idx)
            diff = max(
                diff,
                abs(holevo_pure_branches(ens, f) - holevo_dense(ens, f)),
                abs(helstrom_error(ens, f) - helstrom_error_dense(ens, f)),
            )
    return diff <= TOL, f"largest difference {diff:.2e}"


def _photon_identity(rng):
    sky = build_sky_model(120, cap_half_angle=0.6, n_nodes=6, coupling=rng.uniform(0.05, 0.3))
    o = photon_chernoff_overlap(sky)
    err = abs(o - (1.0 - 2.0 * receptivity(sky) * decoherence_increment(sky)))
    return err <= TOL, f"|overlap - (1 - 2 alpha kappa)| = {err:.2e}"


CHECKS = {
    "bound chain": _bound_chain,
    "operator inequality": _operator_inequality,
    "closed form equals dense": _closed_vs_dense,
    "photon overlap identity": _photon_identity,
}


def run_selftest(seed: int = 0):
    rng = np.random.default_rng(seed)
    results = []
    for name, check in CHECKS.items():
        ok, detail = check(rng)
        results.append((name, bool(ok), detail))
    return results

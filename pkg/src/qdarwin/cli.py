"""Command-line entry point and experiment orchestration.

Usage::

    qdarwin pip --config exp.yaml [--seed N] [--out DIR] [--format csv|json|both]
    qdarwin run --config exp.yaml          # every analysis listed in the config
    qdarwin selftest

Worker threads come from ``QDARWIN_WORKERS`` (default: CPU count); outputs
do not depend on it.  Exit codes: 0 success, 1 usage or config error,
2 a numerical invariant failed.
"""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import math
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import __version__
from .chernoff import ChernoffReport, chernoff_report, empirical_error_exponent, redundancy_estimate
from .config import ConfigError, build_model, config_digest, load_config, photon_settings
from .errors import QDarwinError
from .metrics import CSV_COLUMNS, CSV_UNITS, FragmentSampler, InformationReport, information_report, redundancy
from .model import branch_ensemble, validate_model

INVARIANT_TOL = 1e-9


class InvariantError(QDarwinError):
    """A computed report violates a guaranteed inequality."""


def _fmt(x) -> str:
    if isinstance(x, bool) or x is None:
        return "" if x is None else str(x)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def write_csv(path: Path, columns, units, rows) -> Path:
    with open(path, "w", newline="") as fh:
        fh.write("# units: " + ", ".join(f"{c}={u}" for c, u in zip(columns, units)) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def write_json(path: Path, obj) -> Path:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


@dataclass
class RedundancySummary:
    t: float
    results: list[InformationReport]
    estimates: list[float] = field(default_factory=list)

    COLUMNS = ("t", "delta", "H_S_bits", "m_delta", "m_interp", "R_delta", "R_estimate", "status")
    UNITS = ("time", "fraction", "bits", "count", "count", "copies", "copies", "text")

    def table(self):
        return [
            (self.t, r.delta, r.H_S, r.m_delta, r.m_interp, r.R_delta, est, r.status)
            for r, est in zip(self.results, self.estimates)
        ]

    def as_dict(self):
        return {"t": self.t, "estimates": self.estimates, "reports": [r.as_dict() for r in self.results]}


def emit_report(report, fmt: str, directory, stem: str) -> list[Path]:
    """Write ``report`` as CSV and/or JSON under ``directory``; returns the paths.

    CSV files start with a ``# units:`` comment line followed by the header;
    floats carry 17 significant digits.
    """
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise QDarwinError(f"cannot create output directory {directory}: {exc}") from None
    fmts = ("csv", "json") if fmt == "both" else (fmt,)
    paths = []
    for f in fmts:
        path = directory / f"{stem}.{f}"
        try:
            if f == "json":
                if hasattr(report, "as_dict"):
                    data = report.as_dict()
                else:
                    data = {k: v for k, v in report.items() if k != "csv"}
                paths.append(write_json(path, data))
            elif isinstance(report, InformationReport):
                paths.append(write_csv(path, CSV_COLUMNS, CSV_UNITS, report.table()))
            elif isinstance(report, RedundancySummary):
                paths.append(write_csv(path, report.COLUMNS, report.UNITS, report.table()))
            elif isinstance(report, ChernoffReport):
                rows = [(k, v) for k, v in enumerate(report.overlaps)]
                paths.append(write_csv(path, ("k", "overlap"), ("index", "dimensionless"), rows))
            elif isinstance(report, dict) and "csv" in report:
                cols, units, rows = report["csv"]
                paths.append(write_csv(path, cols, units, rows))
            else:
                raise QDarwinError(f"no CSV layout for {type(report).__name__}")
        except OSError as exc:
            raise QDarwinError(f"cannot write {path}: {exc}") from None
    return paths


def check_information_report(report: InformationReport, tol: float = INVARIANT_TOL) -> None:
    for r in report.rows:
        slack = tol + 3.0 * r.chi_stderr
        if not math.isnan(r.fano_lb) and r.fano_lb > r.chi_mean + slack:
            raise InvariantError(f"t={report.t} m={r.m}: Fano bound {r.fano_lb} exceeds chi {r.chi_mean}")
        if not math.isnan(r.I_mean) and r.chi_mean > r.I_mean + slack:
            raise InvariantError(f"t={report.t} m={r.m}: chi {r.chi_mean} exceeds I {r.I_mean}")
        if not math.isnan(r.fid_ub) and r.chi_mean > r.fid_ub + slack:
            raise InvariantError(f"t={report.t} m={r.m}: chi {r.chi_mean} exceeds fidelity bound {r.fid_ub}")


# -- analyses -----------------------------------------------------------------

def _sampler(cfg) -> FragmentSampler:
    s = cfg["sampler"]
    return FragmentSampler(s["mode"], s["samples"], s["master_seed"])


def _model(cfg):
    """Build the configured model, refusing it if validation finds errors."""
    model = build_model(cfg)
    report = validate_model(model).as_dict()
    if report["errors"]:
        raise ConfigError("model validation failed: " + json.dumps(report))
    return model


def analysis_validate(cfg, out, fmt, workers):
    if cfg["model"]["kind"] == "photon-sky":
        photon_settings(cfg)
        report = {"errors": [], "warnings": []}
    else:
        report = validate_model(build_model(cfg)).as_dict()
    if report["errors"]:
        raise ConfigError("model validation failed: " + json.dumps(report))
    return emit_report({**report, "csv": (("kind", "message"), ("text", "text"),
                        [("warning", w) for w in report["warnings"]])}, fmt, out, "validation")


def analysis_pip(cfg, out, fmt, workers):
    model = _model(cfg)
    paths = []
    for i, t in enumerate(cfg["times"]):
        report = information_report(model, t, cfg.get("sizes"), _sampler(cfg), workers)
        check_information_report(report)
        paths += emit_report(report, fmt, out, f"pip_t{i}")
    return paths


def analysis_redundancy(cfg, out, fmt, workers):
    model = _model(cfg)
    sampler = _sampler(cfg)
    c = cfg["chernoff"]["c"]
    paths = []
    for i, t in enumerate(cfg["times"]):
        results, estimates = [], []
        xi = chernoff_report(branch_ensemble(model, t, workers), c).xi
        for d in cfg["deltas"]:
            res = redundancy(model, t, d, sampler, workers)
            check_information_report(res.report)
            results.append(res.report)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                estimates.append(redundancy_estimate(model.n_env, xi, d) if math.isfinite(xi) else math.inf)
        paths += emit_report(RedundancySummary(t, results, estimates), fmt, out, f"redundancy_t{i}")
    return paths


def analysis_chernoff(cfg, out, fmt, workers):
    model = _model(cfg)
    ch = cfg["chernoff"]
    paths = []
    for i, t in enumerate(cfg["times"]):
        ens = branch_ensemble(model, t, workers)
        fit = None
        if "fit_sizes" in ch:
            c_fit = 0.5 if ch["c"] == "optimize" else ch["c"]
            fit = empirical_error_exponent(model, t, ch["fit_sizes"], _sampler(cfg), ch["fit_quantity"], c_fit, ens)
        report = chernoff_report(ens, ch["c"], cfg["deltas"], fit)
        paths += emit_report(report, fmt, out, f"chernoff_t{i}")
    return paths


def _sky_model(settings, resolution=None):
    from .photon import SkyModel, blackbody_spectrum, build_sky_model, build_sky_partition, load_kernel_file

    res = settings.resolution if resolution is None else resolution
    if settings.kernel_file:
        part = build_sky_partition(res, settings.cap_half_angle, settings.cap_axis)
        return SkyModel(part, blackbody_spectrum(settings.temperature, settings.nodes), load_kernel_file(settings.kernel_file))
    return build_sky_model(
        res, settings.cap_half_angle, settings.cap_axis, settings.temperature, settings.nodes,
        settings.coupling, settings.width, settings.x1, settings.x2,
    )


def analysis_photon(cfg, out, fmt, workers):
    from .photon import (
        decoherence_increment,
        decoherence_time,
        photon_chernoff_overlap,
        photon_redundancy_rate,
        receptivity,
    )

    st = photon_settings(cfg)
    sky = _sky_model(st)
    overlap = photon_chernoff_overlap(sky)
    xi = -math.log(overlap) if overlap > 0 else math.inf
    kappa = decoherence_increment(sky)
    tau = decoherence_time(sky, st.photon_rate)
    try:
        alpha = receptivity(sky)
    except QDarwinError:
        alpha = math.nan
    alpha_coarse = alpha_err = None
    if not st.kernel_file and st.resolution // 2 >= 12:
        try:
            alpha_coarse = receptivity(_sky_model(st, st.resolution // 2))
            alpha_err = abs(alpha - alpha_coarse)
        except QDarwinError:
            pass
    rows = []
    for t in cfg["times"]:
        n_photons = st.photon_rate * t
        for d in cfg["deltas"]:
            rate = photon_redundancy_rate(alpha, tau, d) if math.isfinite(alpha) else math.nan
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                est = redundancy_estimate(n_photons, xi, d) if math.isfinite(xi) else math.inf
            rows.append((t, d, rate, rate * t, est))
    report = {
        "n_cells": sky.partition.n_cells,
        "patch_cells": int(sky.partition.in_patch.sum()),
        "patch_area_sr": sky.partition.patch_area,
        "overlap_per_photon": overlap,
        "xi_nats": xi,
        "kappa_per_photon": kappa,
        "tau_D": tau,
        "receptivity": alpha,
        "receptivity_half_resolution": alpha_coarse,
        "receptivity_resolution_error": alpha_err,
        "photon_rate": st.photon_rate,
        "rows": [dict(zip(("t", "delta", "rate", "R_from_rate", "R_estimate"), r)) for r in rows],
        "csv": (
            ("t", "delta", "rate_copies_per_time", "R_from_rate_copies", "R_estimate_copies"),
            ("time", "fraction", "copies/time", "copies", "copies"),
            rows,
        ),
    }
    return emit_report(report, fmt, out, "photon")


ANALYSIS_FUNCS = {
    "validate": analysis_validate,
    "pip": analysis_pip,
    "redundancy": analysis_redundancy,
    "chernoff": analysis_chernoff,
    "photon": analysis_photon,
}


@dataclass
class RunManifest:
    config_digest: str
    tool_version: str
    seed: int
    started: str
    finished: str
    outputs: dict[str, list[str]]

    def as_dict(self):
        return asdict(self)


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat()


def run_config(path, seed: int | None = None, out=None, fmt: str | None = None, analyses=None, workers: int | None = None) -> RunManifest:
    """Run the analyses named in the config (or ``analyses``) and write a manifest."""
    cfg = load_config(path)
    if seed is not None:
        cfg["sampler"]["master_seed"] = int(seed)
    out_dir = Path(out if out is not None else cfg["output"]["directory"])
    if fmt is None:
        f = cfg["output"]["formats"]
        fmt = "both" if set(f) == {"csv", "json"} else f[0]
    started = _now()
    outputs = {}
    for name in analyses or cfg["analyses"]:
        paths = ANALYSIS_FUNCS[name](cfg, out_dir, fmt, workers)
        outputs[name] = [p.name for p in paths]
    manifest = RunManifest(config_digest(cfg), __version__, cfg["sampler"]["master_seed"], started, _now(), outputs)
    write_json(out_dir / "manifest.json", manifest.as_dict())
    return manifest


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdarwin", description="Redundancy and Chernoff information for pure-decoherence models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in ("run",) + tuple(ANALYSIS_FUNCS):
        p = sub.add_parser(name, help=f"run the {name} analysis" if name != "run" else "run every analysis in the config")
        p.add_argument("--config", required=True, help="YAML experiment config")
        p.add_argument("--seed", type=int, help="override sampler.master_seed")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--format", choices=("csv", "json", "both"), help="output format")
    st = sub.add_parser("selftest", help="run the built-in invariant checks")
    st.add_argument("--seed", type=int, default=0)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            from .selftest import run_selftest

            results = run_selftest(args.seed)
            for name, ok, detail in results:
                print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
            return 0 if all(ok for _, ok, _ in results) else 2
        analyses = None if args.command == "run" else [args.command]
        manifest = run_config(args.config, args.seed, args.out, args.format, analyses)
        for name, files in manifest.outputs.items():
            print(f"{name}: {', '.join(files)}")
        return 0
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, QDarwinError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

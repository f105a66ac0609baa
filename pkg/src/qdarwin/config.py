"""YAML experiment configs: schema checks and model construction.

A config is a mapping with these top-level keys::

    analyses: [validate, pip, redundancy, chernoff, photon]   # run order
    model:    {kind: iid-qubit | custom-list | photon-sky, ...}
    times:    [0.5, 1.0]
    deltas:   [0.1]
    sizes:    [0, 1, 2]          # optional fragment sizes for pip
    sampler:  {mode: exhaustive | monte-carlo, samples: 400, master_seed: 0}
    chernoff: {c: 0.5 | optimize, fit_sizes: [..], fit_quantity: pe | pe_star}
    output:   {directory: out, formats: [csv, json]}

Matrices are nested lists of reals, or ``{re: [[..]], im: [[..]]}``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import yaml

from .errors import QDarwinError
from .model import DecoherenceModel, PointerSpec, SubsystemSpec, iid_qubit_model

ANALYSES = ("validate", "pip", "redundancy", "chernoff", "photon")

_MATRIX = "matrix"
_SUBSYSTEM = {"state": _MATRIX, "interaction": _MATRIX, "self_hamiltonian": _MATRIX}

MODEL_KEYS = {
    "iid-qubit": {"kind": None, "n_env": None, "coupling": None, "priors": None, "mixedness": None},
    "custom-list": {
        "kind": None,
        "pointer": {"eigenvalues": None, "probabilities": None, "phases": None, "state": _MATRIX},
        "subsystems": [_SUBSYSTEM],
        "template": _SUBSYSTEM,
        "n_env": None,
    },
    "photon-sky": {
        "kind": None,
        "resolution": None,
        "cap_half_angle": None,
        "cap_axis": None,
        "temperature": None,
        "nodes": None,
        "coupling": None,
        "width": None,
        "x1": None,
        "x2": None,
        "kernel_file": None,
        "photon_rate": None,
    },
}

TOP_KEYS = {
    "analyses": None,
    "model": "model",
    "times": None,
    "deltas": None,
    "sizes": None,
    "sampler": {"mode": None, "samples": None, "master_seed": None},
    "chernoff": {"c": None, "fit_sizes": None, "fit_quantity": None},
    "output": {"directory": None, "formats": None},
}


class ConfigError(QDarwinError):
    """Malformed or semantically invalid experiment configuration."""


def _line(node) -> int:
    return node.start_mark.line + 1


def _check_node(node, schema, path: str, source: str):
    if schema is None or schema == _MATRIX:
        return
    if isinstance(schema, list):
        if not isinstance(node, yaml.SequenceNode):
            raise ConfigError(f"{source}:{_line(node)}: '{path}' must be a list")
        for i, item in enumerate(node.value):
            _check_node(item, schema[0], f"{path}[{i}]", source)
        return
    if not isinstance(node, yaml.MappingNode):
        raise ConfigError(f"{source}:{_line(node)}: '{path}' must be a mapping")
    if schema == "model":
        kind = None
        for k, v in node.value:
            if k.value == "kind":
                kind = v.value
        if kind not in MODEL_KEYS:
            raise ConfigError(f"{source}:{_line(node)}: model.kind must be one of {sorted(MODEL_KEYS)}, got {kind!r}")
        schema = MODEL_KEYS[kind]
    for k, v in node.value:
        key = k.value
        if key not in schema:
            where = f"{path}.{key}" if path else key
            raise ConfigError(f"{source}:{_line(k)}: unknown key '{key}' (at {where})")
        _check_node(v, schema[key], f"{path}.{key}" if path else key, source)


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse YAML text and reject unknown keys, naming the key and its line."""
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{source}: {exc}") from None
    if node is None:
        raise ConfigError(f"{source}: empty config")
    _check_node(node, TOP_KEYS, "", source)
    data = yaml.safe_load(text)
    if "model" not in data:
        raise ConfigError(f"{source}: missing required key 'model'")
    return normalise(data, source)


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config_text(text, str(path))


def normalise(data: dict, source: str = "<config>") -> dict:
    """Fill defaults so that two configs meaning the same thing compare equal."""
    cfg = json.loads(json.dumps(data))
    model = cfg["model"]
    kind = model["kind"]
    default = ["photon"] if kind == "photon-sky" else ["pip"]
    cfg["analyses"] = list(cfg.get("analyses", default))
    for a in cfg["analyses"]:
        if a not in ANALYSES:
            raise ConfigError(f"{source}: unknown analysis '{a}'; choose from {ANALYSES}")
        if (a == "photon") != (kind == "photon-sky") and a != "validate":
            raise ConfigError(f"{source}: analysis '{a}' does not apply to model kind '{kind}'")
    cfg["times"] = [float(t) for t in cfg.get("times", [1.0])]
    cfg["deltas"] = [float(d) for d in cfg.get("deltas", [0.1])]
    for d in cfg["deltas"]:
        if not 0.0 < d < 1.0:
            raise ConfigError(f"{source}: delta {d} outside (0, 1)")
    if "sizes" in cfg:
        cfg["sizes"] = [int(m) for m in cfg["sizes"]]
    s = cfg.get("sampler", {})
    cfg["sampler"] = {
        "mode": s.get("mode", "exhaustive"),
        "samples": int(s.get("samples", 400)),
        "master_seed": int(s.get("master_seed", 0)),
    }
    if cfg["sampler"]["mode"] not in ("exhaustive", "monte-carlo"):
        raise ConfigError(f"{source}: sampler.mode must be 'exhaustive' or 'monte-carlo'")
    ch = cfg.get("chernoff", {})
    c = ch.get("c", 0.5)
    if c != "optimize":
        c = float(c)
        if not 0.0 < c < 1.0:
            raise ConfigError(f"{source}: chernoff.c must be in (0, 1) or 'optimize'")
    cfg["chernoff"] = {"c": c, "fit_quantity": ch.get("fit_quantity", "pe")}
    if "fit_sizes" in ch:
        cfg["chernoff"]["fit_sizes"] = [int(m) for m in ch["fit_sizes"]]
    if cfg["chernoff"]["fit_quantity"] not in ("pe", "pe_star"):
        raise ConfigError(f"{source}: chernoff.fit_quantity must be 'pe' or 'pe_star'")
    out = cfg.get("output", {})
    fmts = out.get("formats", ["csv"])
    fmts = [fmts] if isinstance(fmts, str) else list(fmts)
    for f in fmts:
        if f not in ("csv", "json"):
            raise ConfigError(f"{source}: unknown output format '{f}'")
    cfg["output"] = {"directory": out.get("directory", "qdarwin-out"), "formats": fmts}
    return cfg


def config_digest(cfg: dict) -> str:
    """SHA-256 of the canonical JSON form, ignoring the output block."""
    relevant = {k: v for k, v in cfg.items() if k != "output"}
    blob = json.dumps(relevant, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def matrix(value, name: str) -> np.ndarray:
    try:
        if isinstance(value, dict):
            re = np.asarray(value.get("re", 0.0), dtype=float)
            im = np.asarray(value.get("im", np.zeros_like(re)), dtype=float)
            return re + 1j * im
        return np.asarray(value, dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{name}: not a numeric matrix ({exc})") from None


def _subsystem(block: dict, name: str) -> SubsystemSpec:
    for key in ("state", "interaction"):
        if key not in block:
            raise ConfigError(f"{name}: missing '{key}'")
    omega = matrix(block["self_hamiltonian"], name) if "self_hamiltonian" in block else None
    try:
        return SubsystemSpec(matrix(block["state"], name), matrix(block["interaction"], name), omega)
    except QDarwinError as exc:
        raise ConfigError(f"{name}: {exc}") from None


def build_model(cfg: dict) -> DecoherenceModel:
    m = cfg["model"]
    kind = m["kind"]
    if kind == "iid-qubit":
        if "n_env" not in m:
            raise ConfigError("model.n_env is required")
        return iid_qubit_model(
            int(m["n_env"]),
            coupling=float(m.get("coupling", 1.0)),
            priors=tuple(m.get("priors", (0.5, 0.5))),
            mixedness=float(m.get("mixedness", 0.0)),
        )
    if kind == "custom-list":
        ptr = m.get("pointer")
        if ptr is None:
            raise ConfigError("model.pointer is required")
        probs = ptr["probabilities"]
        if "state" in ptr:
            pointer = PointerSpec(ptr["eigenvalues"], probs, ptr.get("phases", [0.0] * len(probs)), matrix(ptr["state"], "pointer.state"))
        else:
            pointer = PointerSpec.superposition(ptr["eigenvalues"], probs, ptr.get("phases"))
        if "subsystems" in m:
            if "template" in m:
                raise ConfigError("give either model.subsystems or model.template, not both")
            subs = [_subsystem(b, f"model.subsystems[{i}]") for i, b in enumerate(m["subsystems"])]
            return DecoherenceModel(pointer, subs)
        if "template" in m:
            if "n_env" not in m:
                raise ConfigError("model.template needs model.n_env")
            return DecoherenceModel.iid(pointer, _subsystem(m["template"], "model.template"), int(m["n_env"]))
        raise ConfigError("custom-list model needs 'subsystems' or 'template'")
    raise ConfigError(f"model kind '{kind}' does not describe a decoherence model")


@dataclass(frozen=True)
class PhotonSettings:
    resolution: int
    cap_half_angle: float | None
    cap_axis: tuple
    temperature: float
    nodes: int
    coupling: float
    width: float
    x1: tuple
    x2: tuple
    kernel_file: str | None
    photon_rate: float


def photon_settings(cfg: dict) -> PhotonSettings:
    m = cfg["model"]
    cap = m.get("cap_half_angle")
    return PhotonSettings(
        resolution=int(m.get("resolution", 400)),
        cap_half_angle=None if cap is None else float(cap),
        cap_axis=tuple(m.get("cap_axis", (0.0, 0.0, 1.0))),
        temperature=float(m.get("temperature", 1.0)),
        nodes=int(m.get("nodes", 32)),
        coupling=float(m.get("coupling", 0.05)),
        width=float(m.get("width", 0.7)),
        x1=tuple(m.get("x1", (0.0, 0.0, 0.0))),
        x2=tuple(m.get("x2", (1.0, 0.0, 0.0))),
        kernel_file=m.get("kernel_file"),
        photon_rate=float(m.get("photon_rate", 1.0)),
    )

import csv
import json
import math
import textwrap

import pytest

from qdarwin.chernoff import chernoff_report
from qdarwin.cli import emit_report, main, run_config
from qdarwin.config import ConfigError, config_digest, parse_config_text
from qdarwin.metrics import CSV_COLUMNS, InformationReport
from qdarwin.model import branch_ensemble, iid_qubit_model

MINIMAL = """\
model:
  kind: iid-qubit
  n_env: 6
times: [0.7]
"""

CUSTOM = """\
analyses: [validate, pip, redundancy, chernoff]
model:
  kind: custom-list
  pointer: {eigenvalues: [0.5, -0.5], probabilities: [0.4, 0.6]}
  subsystems:
    - {state: [[0.5, 0.5], [0.5, 0.5]], interaction: [[1, 0], [0, -1]]}
    - {state: [[0.7, 0.1], [0.1, 0.3]], interaction: [[0.3, 0.2], [0.2, -0.8]]}
    - {state: [[1, 0], [0, 0]], interaction: {re: [[0, 1], [1, 0]], im: [[0, 0], [0, 0]]}, self_hamiltonian: [[0.2, 0], [0, -0.1]]}
    - {state: [[0.5, 0.5], [0.5, 0.5]], interaction: [[0.4, 0], [0, -1.1]]}
times: [0.4, 1.3]
deltas: [0.2]
sampler: {mode: monte-carlo, samples: 25, master_seed: 5}
chernoff: {c: optimize, fit_sizes: [1, 2, 3]}
"""


def write(tmp_path, text, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return path


def test_minimal_config(tmp_path):
    manifest = run_config(write(tmp_path, MINIMAL), out=tmp_path / "out")
    assert manifest.outputs == {"pip": ["pip_t0.csv"]}
    lines = (tmp_path / "out" / "pip_t0.csv").read_text().splitlines()
    assert lines[0].startswith("# units: m=count, chi_mean_bits=bits")
    assert tuple(lines[1].split(",")) == CSV_COLUMNS
    assert len(lines) == 2 + 7
    assert json.loads((tmp_path / "out" / "manifest.json").read_text())["outputs"] == {"pip": ["pip_t0.csv"]}


def test_typo_key_rejected(tmp_path, capsys):
    path = write(tmp_path, "times: [1]\nmodle:\n  kind: iid-qubit\n")
    with pytest.raises(ConfigError, match=r"cfg.yaml:2: unknown key 'modle'"):
        run_config(path)
    assert main(["pip", "--config", str(path)]) == 1
    assert "modle" in capsys.readouterr().err


def test_nested_typo_rejected():
    with pytest.raises(ConfigError, match="n_envv"):
        parse_config_text("model:\n  kind: iid-qubit\n  n_envv: 3\n")


def test_invalid_model_rejected(tmp_path, capsys):
    bad = CUSTOM.replace("[[0.3, 0.2], [0.2, -0.8]]", "[[0.3, 0.2], [0.5, -0.8]]")
    assert main(["pip", "--config", str(write(tmp_path, bad))]) == 1
    assert "interaction not Hermitian" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    path = write(tmp_path, CUSTOM)
    a = run_config(path, out=tmp_path / "a", fmt="both")
    b = run_config(path, out=tmp_path / "b", fmt="both")
    assert a.outputs == b.outputs
    for files in a.outputs.values():
        for f in files:
            assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_override_changes_mc_output(tmp_path):
    path = write(tmp_path, CUSTOM)
    run_config(path, out=tmp_path / "a", analyses=["pip"])
    run_config(path, seed=99, out=tmp_path / "b", analyses=["pip"])
    assert (tmp_path / "a" / "pip_t0.csv").read_text() != (tmp_path / "b" / "pip_t0.csv").read_text()
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["seed"] == 99


def test_full_run_outputs(tmp_path):
    manifest = run_config(write(tmp_path, CUSTOM), out=tmp_path / "o", fmt="both")
    assert list(manifest.outputs) == ["validate", "pip", "redundancy", "chernoff"]
    rows = list(csv.reader((tmp_path / "o" / "redundancy_t1.csv").read_text().splitlines()[1:]))
    assert rows[0][:3] == ["t", "delta", "H_S_bits"]
    data = json.loads((tmp_path / "o" / "chernoff_t1.json").read_text())
    assert data["c_optimized"] is True
    assert data["units"]["xi"] == "nats"
    assert len(data["fit"]["m"]) == 3


def test_chernoff_json_round_trip(tmp_path):
    ens = branch_ensemble(iid_qubit_model(5, mixedness=0.2), 0.9)
    report = chernoff_report(ens, "optimize", [0.1, 0.01])
    (path,) = emit_report(report, "json", tmp_path, "ch")
    back = json.loads(path.read_text())
    assert back["xi"] == report.xi
    assert back["c"] == report.c
    assert back["overlaps"] == report.overlaps
    assert back["estimates"] == report.estimates


def test_csv_floats_round_trip(tmp_path):
    report = InformationReport(t=0.1, H_S=1.0)
    (path,) = emit_report(report, "csv", tmp_path, "empty")
    assert path.read_text().splitlines()[1] == ",".join(CSV_COLUMNS)
    assert len(path.read_text().splitlines()) == 2
    run_config(write(tmp_path, MINIMAL), out=tmp_path / "o", fmt="both")
    rows = list(csv.DictReader((tmp_path / "o" / "pip_t0.csv").read_text().splitlines()[1:]))
    js = json.loads((tmp_path / "o" / "pip_t0.json").read_text())
    for r, j in zip(rows, js["rows"]):
        assert float(r["chi_mean_bits"]) == j["chi_mean"]


def test_digest_ignores_key_order_and_output():
    a = parse_config_text(MINIMAL + "output: {directory: x}\n")
    b = parse_config_text("times: [0.7]\nmodel:\n  n_env: 6\n  kind: iid-qubit\noutput: {directory: y}\n")
    c = parse_config_text(MINIMAL.replace("0.7", "0.8"))
    assert config_digest(a) == config_digest(b)
    assert config_digest(a) != config_digest(c)


def test_photon_config(tmp_path):
    cfg = """\
    model: {kind: photon-sky, resolution: 120, cap_half_angle: 0.5, nodes: 6, coupling: 0.2, photon_rate: 10}
    times: [1.0, 2.0]
    deltas: [0.1]
    output: {formats: [csv, json]}
    """
    run_config(write(tmp_path, cfg), out=tmp_path / "o")
    data = json.loads((tmp_path / "o" / "photon.json").read_text())
    assert 0 <= data["receptivity"] <= 1
    assert "csv" not in data
    r = data["rows"][1]
    assert r["rate"] == pytest.approx(data["receptivity"] / (data["tau_D"] * math.log(10)))
    assert (tmp_path / "o" / "photon.csv").read_text().startswith("# units: t=time")


def test_photon_kernel_file(tmp_path):
    import numpy as np

    from qdarwin.photon import build_sky_partition, write_kernel_file
    from qdarwin.randomized import random_unitary

    rng = np.random.default_rng(3)
    n = build_sky_partition(20).n_cells
    write_kernel_file(tmp_path / "k.txt", np.array([[random_unitary(n, rng) for _ in range(2)] for _ in range(2)]))
    cfg = f"model: {{kind: photon-sky, resolution: 20, cap_half_angle: 1.0, nodes: 2, kernel_file: {tmp_path / 'k.txt'}}}\n"
    assert main(["photon", "--config", str(write(tmp_path, cfg)), "--out", str(tmp_path / "o"), "--format", "json"]) == 0


def test_analysis_kind_mismatch():
    with pytest.raises(ConfigError, match="does not apply"):
        parse_config_text("analyses: [photon]\n" + MINIMAL)


def test_selftest_exit_code(capsys):
    assert main(["selftest"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 4


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["pip"])
    assert exc.value.code == 1

import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

from hwrc import cli
from hwrc.circuit import CZ, Circuit, circuit_to_json, single, two

GOLDEN = Path(__file__).with_name("golden_tables.json")
SRC = str(Path(__file__).resolve().parents[1] / "src")


@pytest.fixture
def circuit_file(tmp_path):
    c = Circuit(2, (single({0: (0.1, 0.2, 0.3)}), two((CZ, 0, 1)), single(), two((CZ, 0, 1)), single()))
    path = tmp_path / "circuit.json"
    path.write_text(json.dumps(circuit_to_json(c)))
    return path


def write_json(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def error_of(err):
    return json.loads(err)["error"]


def test_tables_match_golden(capsys):
    code, out, _ = run(capsys, "tables")
    assert code == 0
    assert json.loads(out) == json.loads(GOLDEN.read_text())


def test_tables_csv(capsys):
    code, out, _ = run(capsys, "tables", "--format", "csv")
    assert code == 0
    assert "# tables_propagation.csv" in out and "kind,in,out,sign" in out


def test_rc_is_repeatable(capsys, circuit_file):
    code, first, _ = run(capsys, "rc", circuit_file, "--n", 5, "--seed", 7)
    assert code == 0
    doc = json.loads(first)
    assert len(doc["randomizations"]) == 5
    _, second, _ = run(capsys, "rc", circuit_file, "--n", 5, "--seed", 7)
    assert first == second
    _, other, _ = run(capsys, "rc", circuit_file, "--n", 5, "--seed", 8)
    assert other != first


@pytest.mark.parametrize(
    "doc, field",
    [
        ({"width": 2}, "cycles"),
        ({"width": 2, "cycles": [{"type": "single"}, {"type": "two", "gates": [{"kind": "swap", "qubits": [0, 1]}]}, {"type": "single"}]}, "cycles[1].gates[0].kind"),
        ({"width": "two", "cycles": []}, "width"),
    ],
)
def test_malformed_circuit_names_field(capsys, tmp_path, doc, field):
    code, _, err = run(capsys, "rc", write_json(tmp_path, "bad.json", doc))
    assert code == cli.EXIT_CONFIG
    assert field in error_of(err)["message"]


def test_invalid_json_text(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{not json")
    code, _, err = run(capsys, "rc", path)
    assert code == cli.EXIT_CONFIG


def test_alternation_violation(capsys, tmp_path):
    doc = {"width": 2, "cycles": [{"type": "two", "gates": [{"kind": "cz", "qubits": [0, 1]}]}, {"type": "single"}]}
    code, _, err = run(capsys, "rc", write_json(tmp_path, "c.json", doc))
    assert code == cli.EXIT_CONFIG
    assert "cycles[0]" in error_of(err)["message"]


def test_missing_file(capsys, tmp_path):
    code, _, _ = run(capsys, "rc", tmp_path / "nope.json")
    assert code == cli.EXIT_IO


def test_capacity_error(capsys, tmp_path):
    cfg = write_json(tmp_path, "cb.json", {"pair": [0, 6], "depths": [2, 4], "shots": 2, "paulis": ["ZZ"]})
    code, _, err = run(capsys, "cb", "--config", cfg)
    assert code == cli.EXIT_CAPACITY


def test_schema_violation_in_config(capsys, tmp_path):
    cfg = write_json(tmp_path, "cb.json", {"depths": [2], "shots": -1})
    code, _, err = run(capsys, "cb", "--config", cfg)
    assert code == cli.EXIT_CONFIG
    assert "shots" in error_of(err)["message"]


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as info:
        cli.main(["frobnicate"])
    assert info.value.code == cli.EXIT_USAGE


def test_help_documents_schemas(capsys):
    with pytest.raises(SystemExit):
        cli.main(["cb", "--help"])
    out = capsys.readouterr().out
    assert "depths" in out and "exit codes" in out


def test_emulate_outputs(capsys, circuit_file):
    code, out, _ = run(capsys, "emulate", circuit_file, "--shots", 3, "--seed", 2, "--gate-ns", 5, "--resolved")
    assert code == 0
    doc = json.loads(out)
    assert len(doc["shots"]) == 3
    code, out, _ = run(capsys, "emulate", circuit_file, "--format", "csv", "--gate-ns", 5)
    assert "added_latency_ns" in out and "8.0" in out


def test_ptm_outputs(capsys, tmp_path):
    cfg = write_json(tmp_path, "noise.json", {"cz": {"coherent": {"pauli": "ZZ", "theta": 0.1}}})
    code, out, _ = run(capsys, "ptm", "--config", cfg)
    assert code == 0
    doc = json.loads(out)["gates"]["cz"]
    assert doc["twirled_off_diagonal_max"] < 1e-10
    assert doc["error_off_diagonal_max"] > 1e-3


def test_manifest_and_outputs(capsys, tmp_path, circuit_file):
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "rc", circuit_file, "--n", 3, "--seed", 1, "--out", out_dir)
    assert code == 0
    manifest = json.loads((out_dir / "rc.manifest.json").read_text())
    assert json.loads(out) == manifest
    assert manifest["subcommand"] == "rc" and manifest["seed"] == 1
    names = sorted(o["path"] for o in manifest["outputs"])
    assert names == ["rc.json", "rc_twirls.csv"]
    assert json.loads((out_dir / "rc.json").read_text())["manifest"] == "rc.manifest.json"
    assert not [p for p in out_dir.iterdir() if p.name.startswith(".")]


def test_outputs_are_byte_identical_across_runs(capsys, tmp_path):
    cfg = write_json(tmp_path, "v.json", {"n_circuits": 2, "depth": 2, "shots": 50, "subsample_shots": 10, "subsample_repeats": 5})
    digests = []
    for name in ("a", "b"):
        code, out, _ = run(capsys, "variance", "--config", cfg, "--seed", 3, "--out", tmp_path / name)
        assert code == 0
        digests.append({o["path"]: o["sha256"] for o in json.loads(out)["outputs"]})
    assert digests[0] == digests[1]
    for path in digests[0]:
        assert (tmp_path / "a" / path).read_bytes() == (tmp_path / "b" / path).read_bytes()


def test_config_digest_ignores_key_order():
    a = {"shots": 10, "depths": [2, 4], "noise": {"cz": {"damping": 0.1, "stochastic": {"XX": 0.01}}}}
    b = {"noise": {"cz": {"stochastic": {"XX": 0.01}, "damping": 0.1}}, "depths": [2, 4], "shots": 10}
    assert cli.config_digest(a) == cli.config_digest(b)
    assert cli.config_digest(a) != cli.config_digest(dict(a, shots=11))


def test_atomic_write_leaves_nothing_on_failure(tmp_path, monkeypatch):
    target = tmp_path / "result.json"
    target.write_text("old")

    def boom(*args):
        raise OSError("disk full")

    monkeypatch.setattr(os, "replace", boom)
    with pytest.raises(OSError):
        cli.atomic_write(target, "new")
    assert target.read_text() == "old"
    assert list(tmp_path.iterdir()) == [target]


def test_cb_small_run(capsys, tmp_path):
    cfg = write_json(tmp_path, "cb.json", {"paulis": ["ZZ"], "depths": [2, 4], "shots": 20, "noise": {"cz": {"depolarizing": 0.95}}})
    code, out, _ = run(capsys, "cb", "--config", cfg, "--seed", 1)
    assert code == 0
    doc = json.loads(out)
    assert doc["n_compiled_circuits"] == 2
    assert doc["config"]["seed"] == 1


def test_profile_small_run(capsys, tmp_path):
    cfg = write_json(tmp_path, "p.json", {"widths": [2], "depths": [2], "n_rand": 3, "repeats": 1})
    code, out, _ = run(capsys, "profile", "--config", cfg, "--format", "csv")
    assert code == 0
    assert "compile_and_assemble" in out


def test_console_entry_point(circuit_file):
    env = dict(os.environ, PYTHONPATH=SRC)
    proc = subprocess.run(
        [sys.executable, "-m", "hwrc.cli", "rc", str(circuit_file), "--n", "2"], capture_output=True, text=True, env=env
    )
    assert proc.returncode == 0
    assert len(json.loads(proc.stdout)["randomizations"]) == 2
    proc = subprocess.run([sys.executable, "-m", "hwrc.cli", "bogus"], capture_output=True, text=True, env=env)
    assert proc.returncode == 2

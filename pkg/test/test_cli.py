import json

import numpy as np
import pytest

from circuit import Circuit, GateInstance, GateKind, Hamiltonian
from cli import main
from constants import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE
from train import Dataset


@pytest.fixture
def workspace(tmp_path):
    assert main(["--quiet", "build-hea", "--qubits", "3", "--layers", "2", "--seed", "1", "--out", str(tmp_path / "c.json")]) == EXIT_OK
    assert main(["--quiet", "gen-tfim", "--qubits", "3", "--out", str(tmp_path / "h.txt")]) == EXIT_OK
    return tmp_path


def test_build_hea(workspace):
    circuit = Circuit.load(workspace / "c.json")
    assert circuit.num_qubits == 3
    assert circuit.parameter_count() == 18


def test_gen_tfim(workspace):
    H = Hamiltonian.load(workspace / "h.txt")
    assert len(H.terms) == 5


def test_gen_bas(tmp_path):
    out = tmp_path / "bas.csv"
    assert main(["--quiet", "gen-bas", "--out", str(out)]) == EXIT_OK
    data = Dataset.from_csv(out)
    assert data.features.shape == (28, 16)


def test_prune(workspace, capsys):
    argv = [
        "--quiet",
        "prune",
        "--circuit", str(workspace / "c.json"),
        "--hamiltonian", str(workspace / "h.txt"),
        "--epsilon", "3.2",
        "--batch-size", "4",
        "--out", str(workspace / "pruned.json"),
        "--report", str(workspace / "report.json"),
        "--emit-distances", str(workspace / "pairs.csv"),
    ]
    assert main(argv) == EXIT_OK
    assert "18 -> 6 parameters" in capsys.readouterr().out
    assert Circuit.load(workspace / "pruned.json").parameter_count() == 6
    report = json.loads((workspace / "report.json").read_text())
    assert report["compression"] == pytest.approx(3.0)
    assert (workspace / "pairs.csv").read_text().startswith("subgroup,i,j")


def test_features_to_stdout(workspace, capsys):
    argv = ["--quiet", "features", "--circuit", str(workspace / "c.json"), "--hamiltonian", str(workspace / "h.txt"), "--batch-size", "2"]
    assert main(argv) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 19


def test_vqe(workspace, capsys):
    argv = [
        "--quiet",
        "vqe",
        "--hamiltonian", str(workspace / "h.txt"),
        "--layers", "1",
        "--steps", "5",
        "--out", str(workspace / "trained.json"),
        "--trace", str(workspace / "trace.csv"),
    ]
    assert main(argv) == EXIT_OK
    assert "exact ground energy" in capsys.readouterr().out
    assert len((workspace / "trace.csv").read_text().splitlines()) == 7


def test_train_on_csv(tmp_path):
    data = tmp_path / "toy.csv"
    Dataset(np.eye(4), [0, 0, 1, 1]).to_csv(data)
    argv = ["--quiet", "train", "--data", str(data), "--qubits", "2", "--layers", "1", "--steps", "3", "--out", str(tmp_path / "t.json")]
    assert main(argv) == EXIT_OK
    assert Circuit.load(tmp_path / "t.json").parameter_count() == 6


def test_branch_cut_exit_code(tmp_path):
    gates = (GateInstance(0, GateKind.RY, (0,), 2 * np.pi), GateInstance(1, GateKind.RY, (0,), 0.1))
    Circuit(1, gates).save(tmp_path / "bad.json")
    (tmp_path / "z.txt").write_text("1.0 Z\n")
    argv = [
        "--quiet",
        "prune",
        "--circuit", str(tmp_path / "bad.json"),
        "--hamiltonian", str(tmp_path / "z.txt"),
        "--policy", "global",
        "--out", str(tmp_path / "out.json"),
    ]
    assert main(argv) == EXIT_NUMERICAL


def test_missing_file_is_usage_error(tmp_path):
    argv = ["--quiet", "prune", "--circuit", str(tmp_path / "nope.json"), "--hamiltonian", "h.txt", "--out", "o.json"]
    assert main(argv) == EXIT_USAGE


def test_unknown_check():
    assert main(["--quiet", "verify", "--only", "no-such-check"]) == EXIT_USAGE


def test_verify_quick(capsys):
    assert main(["--quiet", "verify", "--only", "exp-log", "--quick"]) == EXIT_OK
    assert "exp-log" in capsys.readouterr().out


def test_bad_arguments():
    with pytest.raises(SystemExit) as info:
        main(["build-hea", "--qubits", "3"])
    assert info.value.code == EXIT_USAGE

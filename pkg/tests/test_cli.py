from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest

from schmidt_approx.circuits import parse_circuit
from schmidt_approx.cli import run
from schmidt_approx.generators import TfimSpec, qft_matrix, tfim_hamiltonian
from schmidt_approx.io import read_array, read_terms, write_matrix, write_vector


def test_module_entry_point_help():
    out = subprocess.run([sys.executable, "-m", "schmidt_approx", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "decompose" in out.stdout


def test_usage_errors(tmp_path, capsys):
    assert run([]) == 1
    assert run(["decompose"]) == 1
    assert run(["gen", "qft", "-o", str(tmp_path / "q.txt"), "--qubits", "0"]) == 1
    args = ["decompose", "x.txt", "--cutoff-prob", "0.1", "--cutoff-coeff", "0.1"]
    assert run(args) == 1
    assert run(["decompose", "x.txt", "--cutoff-prob", "1.5"]) == 1


def test_input_errors(tmp_path):
    assert run(["decompose", str(tmp_path / "missing.txt")]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("CMAT 1 2\n1 x\n")
    assert run(["decompose", str(bad), "--out-dir", str(tmp_path / "o")]) == 2


def test_size_guard(tmp_path):
    assert run(["gen", "qft", "--qubits", "13", "-o", str(tmp_path / "q.txt")]) == 3
    assert run(["gen", "tfim", "--n", "11", "-o", str(tmp_path / "t.txt")]) == 3


def test_gen_qft_then_decompose(tmp_path, capsys):
    q = tmp_path / "qft3.txt"
    assert run(["gen", "qft", "--qubits", "3", "-o", str(q)]) == 0
    np.testing.assert_array_equal(read_array(q), qft_matrix(3))
    out = tmp_path / "d"
    assert run(["decompose", str(q), "--cutoff-prob", "0", "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["kept_mass"] - 1) <= 1e-10
    assert report["n_terms_kept"] == 8
    lines = (out / "histogram.csv").read_text().splitlines()
    assert lines[0] == "bin_low,bin_high,count"
    assert sum(int(r.split(",")[2]) for r in lines[1:]) == 8
    meta = json.loads((out / "report.meta.json").read_text())
    assert "wall_time_ms" in meta and "wall_time_ms" not in report


def test_decompose_gap_cutoff_and_reconstruct(tmp_path):
    h = tmp_path / "h.txt"
    write_matrix(tfim_hamiltonian(TfimSpec(3, 0.1, 0.5)), h)
    out = tmp_path / "d"
    assert run(["decompose", str(h), "--gap-cutoff", "--out-dir", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert report["cutoff"] is not None
    rec = tmp_path / "rec.txt"
    assert run(["reconstruct", str(out / "terms.txt"), "--rows", "8", "-o", str(rec)]) == 0
    assert read_array(rec).shape == (8, 8)


def test_term_consumers(tmp_path, capsys):
    rng = np.random.default_rng(0)
    a = rng.normal(size=(4, 4))
    m = tmp_path / "a.txt"
    write_matrix(a, m)
    out = tmp_path / "d"
    # operator mode keeps every 2x2 factor invertible for the --leading check
    assert run(["decompose", str(m), "--mode", "operator", "--out-dir", str(out)]) == 0
    terms = out / "terms.txt"
    psi = rng.normal(size=4)
    s = tmp_path / "psi.txt"
    write_vector(psi, s)
    y = tmp_path / "y.txt"
    assert run(["apply", str(terms), str(s), "-o", str(y)]) == 0
    np.testing.assert_allclose(read_array(y), a @ psi, atol=1e-10)
    capsys.readouterr()
    assert run(["entry", str(terms), str(s), "--index", "2"]) == 0
    captured = capsys.readouterr()
    value = complex(captured.out.split()[0].replace("i", "j"))
    assert value == pytest.approx((a @ psi)[2], abs=1e-10)
    assert "scalar ops" in captured.err
    assert run(["invert", str(terms), "-o", str(tmp_path / "inv.txt")]) == 1
    assert run(["invert", str(terms), "--leading", "-o", str(tmp_path / "inv.txt")]) == 0
    c = tmp_path / "c.txt"
    assert run(["synth", str(terms), "-o", str(c)]) == 0
    assert parse_circuit(c).n_qubits >= 2


def test_invert_single_term(tmp_path):
    f = tmp_path / "a.txt"
    a = np.kron([[2.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 3.0]])
    write_matrix(a, f)
    out = tmp_path / "d"
    assert run(["decompose", str(f), "--mode", "operator", "--out-dir", str(out)]) == 0
    assert len(read_terms(out / "terms.txt").terms) == 1
    inv = tmp_path / "inv.txt"
    assert run(["invert", str(out / "terms.txt"), "-o", str(inv)]) == 0
    np.testing.assert_allclose(read_array(inv) @ a, np.eye(4), atol=1e-10)


def test_spectrum_command(tmp_path):
    h = tmp_path / "h.txt"
    write_matrix(tfim_hamiltonian(TfimSpec(4, 0.1, 0.5, 2)), h)
    out = tmp_path / "d"
    assert run(["decompose", str(h), "--cutoff-prob", "0.04", "--out-dir", str(out)]) == 0
    csv = tmp_path / "s.csv"
    assert run(["spectrum", str(out / "terms.txt"), "--original", str(h), "-o", str(csv)]) == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "index,lambda_true,lambda_approx" and len(lines) == 17
    op = tmp_path / "op"
    assert run(["decompose", str(h), "--mode", "operator", "--out-dir", str(op)]) == 0
    assert run(["spectrum", str(op / "terms.txt"), "--original", str(h), "-o", str(csv)]) == 0
    rows = [r.split(",") for r in csv.read_text().splitlines()[1:]]
    assert max(abs(float(a) - float(b)) for _, a, b in rows) <= 1e-10


def test_gen_vqc_with_circuit(tmp_path):
    u = tmp_path / "u.bin"
    c = tmp_path / "c.txt"
    assert run(["gen", "vqc", "--qubits", "2", "--depth", "4", "--circuit", str(c), "-o", str(u), "--binary"]) == 0
    assert read_array(u).shape == (4, 4)
    assert parse_circuit(c).n_qubits == 2


def test_gen_gram_from_csv(tmp_path):
    f = tmp_path / "x.csv"
    f.write_text("a,b\n1,2\n3,4\n")
    g = tmp_path / "g.txt"
    assert run(["gen", "gram", "--csv", str(f), "--header", "-o", str(g)]) == 0
    np.testing.assert_array_equal(read_array(g).real, [[5, 11], [11, 25]])


def test_report_unknown_recipe():
    assert run(["report", "nope"]) == 1


def test_report_iris(tmp_path, capsys):
    assert run(["report", "iris", "--out-dir", str(tmp_path)]) == 0
    assert "[RECORD] iris" in capsys.readouterr().out
    assert (tmp_path / "iris" / "iris_report.json").exists()

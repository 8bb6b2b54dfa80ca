"""Acceptance criteria, one test each, run at their stated tolerances.

Every test records a single ``PASS``/``FAIL`` line (see ``conftest.py``);
the lines are repeated in the terminal summary. Recipe outputs are shared
through a module fixture, which is also the first of the two determinism
runs.
"""

from __future__ import annotations

import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from schmidt_approx import analysis
from schmidt_approx.circuits import export_circuit, lcu_postselect, lcu_synthesize
from schmidt_approx.cli import run as cli_run
from schmidt_approx.generators import Distribution, Rng, TfimSpec, random_matrix, tfim_hamiltonian
from schmidt_approx.io import write_vector
from schmidt_approx.linalg import vec
from schmidt_approx.recipes import RECIPES, run_recipe
from schmidt_approx.terms import (
    OpCounter,
    TensorTermOperator,
    TensorTermVector,
    apply,
    decomposition_to_operator_terms,
    entry,
    expand_to_unitary_terms,
    invert_single_term,
    operator_term_to_dense,
    sum_apply,
    term_sum_to_dense,
    vector_term_to_dense,
)
from schmidt_approx.tree import Mode, Threshold, approx_error, decompose, filter_terms, reconstruct

pytestmark = pytest.mark.slow

ZERO = Threshold.probability(0.0)
TFIM = dict(n=10, h=0.1, J=0.5)
TFIM_TARGETS = {10: 0.589, 4: 0.252}
TFIM_TOL = 0.06


def _unit(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _unitary(rng):
    q, r = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _extra_artifacts(out: Path, workers: int) -> None:
    """Artifacts of the library-level criteria: a decomposition through the
    CLI and an exported LCU circuit."""
    out.mkdir(parents=True, exist_ok=True)
    v = random_matrix(1, 2**12, Distribution.NORMAL, Rng(11)).reshape(-1)
    write_vector(v, out / "input.txt")
    # relative paths: the report records the input path, so flags must match across runs
    cwd = os.getcwd()
    os.chdir(out)
    try:
        code = cli_run(["decompose", "input.txt", "--cutoff-prob", "1e-5", "--workers", str(workers), "--out-dir", "dec"])
    finally:
        os.chdir(cwd)
    assert code == 0
    rng = np.random.default_rng(5)
    terms = [TensorTermOperator(complex(*rng.normal(size=2)), (_unitary(rng), _unitary(rng))) for _ in range(3)]
    export_circuit(lcu_synthesize(terms).circuit, out / "lcu.txt")


def _run_all(root: Path, workers: int) -> dict:
    results = {}
    for name in RECIPES:
        start = time.perf_counter()
        res = run_recipe(name, root / name, workers=workers)
        results[name] = (res, time.perf_counter() - start)
    _extra_artifacts(root / "library", workers)
    return results


def _artifacts(root: Path) -> dict[str, bytes]:
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(root.rglob("*"))
        if p.is_file() and not p.name.endswith(".meta.json")
    }


@pytest.fixture(scope="module")
def recipe_run(tmp_path_factory):
    root = tmp_path_factory.mktemp("run1")
    return root, _run_all(root, workers=1)


def test_criterion_01_parseval_round_trip(verdict):
    decompose(np.ones(4))  # JIT warm-up outside the timed region
    worst_mass = worst_rec = 0.0
    count = 0
    start = time.perf_counter()
    for kind in Distribution:
        for seed in range(20):
            x = random_matrix(1, 2**10, kind, Rng(seed)).reshape(-1)
            x = x / np.linalg.norm(x)
            d = decompose(x, Mode.VECTOR, ZERO)
            worst_mass = max(worst_mass, abs(d.kept_mass - 1))
            worst_rec = max(worst_rec, float(np.linalg.norm(reconstruct(d) - x)))
            count += 1
    elapsed = time.perf_counter() - start
    ok = worst_mass <= 1e-10 and worst_rec <= 1e-10 and elapsed <= 5.0
    verdict(1, ok, f"{count} vectors, max |sum c^2 - 1| {worst_mass:.2e}, max rec err {worst_rec:.2e}, {elapsed:.2f}s")


def test_criterion_02_error_identity(verdict):
    rng = np.random.default_rng(2)
    worst = worst_dense = 0.0
    for trial in range(3):
        v = _unit(rng, 2**12)
        for cut in (1e-1, 1e-2, 1e-3):
            for kind in ("probability", "coefficient"):
                d = decompose(v, Mode.VECTOR, Threshold(cut, kind))
                l2, _ = approx_error(d, v)
                identity = math.sqrt(max(0.0, 1.0 - d.kept_mass))
                dense = float(np.linalg.norm(v - reconstruct(d, normalized=True)))
                worst = max(worst, abs(l2 - identity))
                worst_dense = max(worst_dense, abs(dense - identity))
    ok = worst <= 1e-9 and worst_dense <= 1e-9
    verdict(2, ok, f"max |l2 - sqrt(1-kept)| {worst:.2e}, dense subtraction {worst_dense:.2e}")


def test_criterion_03_pruning_exactness(verdict):
    rng = np.random.default_rng(3)
    mismatches = 0
    thresholds = (Threshold.probability(1e-4), Threshold.coefficient(1e-2))
    for _ in range(10):
        v = _unit(rng, 2**10)
        full = decompose(v, Mode.VECTOR, ZERO)
        for th in thresholds:
            pruned = decompose(v, Mode.VECTOR, th)
            post = filter_terms(full, th)
            same = [t.path_id for t in pruned.terms] == [t.path_id for t in post.terms] and np.array_equal(
                pruned.coefficients, post.coefficients
            )
            mismatches += not same
    verdict(3, mismatches == 0, f"10 instances x {len(thresholds)} thresholds, {mismatches} mismatches")


def test_criterion_04_term_algebra(verdict):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(30):
        n = int(rng.integers(1, 9))
        r = int(rng.integers(1, 9))
        ops = [
            TensorTermOperator(
                complex(*rng.normal(size=2)),
                tuple(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(n)),
            )
            for _ in range(r)
        ]
        psi = TensorTermVector(complex(*rng.normal(size=2)), tuple(_unit(rng, 2) for _ in range(n)))
        dense_psi = vector_term_to_dense(psi)
        dense_a = term_sum_to_dense(ops)
        want = dense_a @ dense_psi
        scale = max(1.0, float(np.abs(want).max()))
        errs = [
            np.abs(sum_apply(ops, dense_psi) - want).max() / scale,
            np.abs(vector_term_to_dense(apply(ops[0], psi)) - operator_term_to_dense(ops[0]) @ dense_psi).max() / scale,
        ]
        for idx in rng.integers(0, 2**n, size=4):
            errs.append(abs(entry(ops, psi, int(idx)) - want[idx]) / scale)
        inv = operator_term_to_dense(invert_single_term(ops[0]))
        errs.append(np.abs(inv @ operator_term_to_dense(ops[0]) - np.eye(2**n)).max())
        side = 2 ** int(rng.integers(1, 5))
        a = rng.normal(size=(side, side)) + 1j * rng.normal(size=(side, side))
        for mode in (Mode.VECTOR, Mode.OPERATOR):
            rebuilt = term_sum_to_dense(decomposition_to_operator_terms(decompose(vec(a), mode, ZERO)))
            errs.append(np.abs(rebuilt - a).max() / max(1.0, np.abs(a).max()))
        worst = max(worst, float(max(errs)))
    # operation count of one entry at fixed r grows linearly in n
    r = 4
    counts = []
    for n in range(1, 13):
        ops = [TensorTermOperator(1.0, tuple(_unitary(rng) for _ in range(n))) for _ in range(r)]
        psi = TensorTermVector(1.0, tuple(_unit(rng, 2) for _ in range(n)))
        c = OpCounter()
        entry(ops, psi, 0, c)
        counts.append(c.count)
    steps = np.diff(counts)
    linear = bool(np.all(steps == steps[0]) and steps[0] > 0)
    ok = worst <= 1e-10 and linear
    verdict(4, ok, f"max oracle error {worst:.2e}; entry op counts n=1..12 at r={r}: {counts[0]}..{counts[-1]}, step {steps[0]}")


def test_criterion_05_qft_growth(recipe_run, verdict):
    _, results = recipe_run
    res, elapsed = results["qft-growth"]
    counts = res.values["counts"]
    ratio_ok = all(c.passed for c in res.checks if c.name.startswith("count ratio"))
    rec_ok = all(c.passed for c in res.checks if c.name.endswith("reconstruction"))
    ok = ratio_ok and rec_ok and elapsed <= 60.0
    verdict(5, ok, f"kept counts {counts}, ratios ok={ratio_ok}, reconstruction ok={rec_ok}, {elapsed:.1f}s")


def test_criterion_06_tfim(verdict):
    start = time.perf_counter()
    details = []
    passed = []
    for c, target in TFIM_TARGETS.items():
        ham = tfim_hamiltonian(TfimSpec(TFIM["n"], TFIM["h"], TFIM["J"], c))
        v = vec(ham)
        l2 = {}
        for th in (Threshold.probability(0.04), Threshold.coefficient(0.04)):
            l2[th.kind.value] = approx_error(decompose(v, Mode.VECTOR, th), v)[0]
        # probability semantics first, coefficient semantics as the retry
        hit = [k for k in ("probability", "coefficient") if abs(l2[k] - target) <= TFIM_TOL]
        passed.append(bool(hit))
        details.append(
            f"c={c}: probability {l2['probability']:.4f}, coefficient {l2['coefficient']:.4f} vs {target}+-{TFIM_TOL}"
        )
    elapsed = time.perf_counter() - start
    ok = all(passed) and elapsed <= 120.0
    verdict(6, ok, "; ".join(details) + f"; {elapsed:.1f}s")


def test_criterion_07_tfim_spectrum(verdict):
    ham = tfim_hamiltonian(TfimSpec(TFIM["n"], TFIM["h"], TFIM["J"], 4))
    v = vec(ham)
    kept = decompose(v, Mode.VECTOR, Threshold.probability(0.04))
    if abs(approx_error(kept, v)[0] - TFIM_TARGETS[4]) > TFIM_TOL:
        kept = decompose(v, Mode.VECTOR, Threshold.coefficient(0.04))
    start = time.perf_counter()
    spec = analysis.compare_spectrum(ham, kept)
    elapsed = time.perf_counter() - start
    top = spec.top_by_magnitude(5)
    top_ok = all(abs(spec.true[i] - spec.approx[i]) <= spec.bound for i in top)
    ok = spec.max_deviation <= spec.bound and top_ok and elapsed <= 600.0
    verdict(
        7,
        ok,
        f"max |dl| {spec.max_deviation:.4f} <= bound {spec.bound:.4f}, top-5 within bound={top_ok}, "
        f"two 1024x1024 diagonalizations {elapsed:.0f}s",
    )


def test_criterion_08_distribution_contrast(recipe_run, verdict):
    _, results = recipe_run
    res, _ = results["gram-distributions"]
    wins = {k: res.values[f"wins_vs_normal_{k}"] for k in ("uniform", "exponential", "poisson")}
    verdict(8, all(w >= 16 for w in wins.values()), f"wins vs normal over 20 seeds {wins} (need 16)")


def test_criterion_09_vqc_depth(recipe_run, verdict):
    _, results = recipe_run
    res, _ = results["vqc-depth"]
    means = res.values["mean_l2_midpoint"]
    ok = all(b > a for a, b in zip(means, means[1:]))
    text = " -> ".join(f"{m:.4f}" for m in means)
    verdict(9, ok, f"mean midpoint-cutoff l2 by depth 4/8/12/16: {text}")


def test_criterion_10_rings(recipe_run, verdict):
    _, results = recipe_run
    res, _ = results["rings"]
    wins = res.values["wins"]
    verdict(10, wins >= 8, f"rings gap below uniform-Gram gap in {wins}/10 seeds (need 8)")


def test_criterion_11_lcu(verdict):
    rng = np.random.default_rng(11)
    worst = 0.0
    cases = 0
    for r in range(1, 5):
        for n in range(1, 4):
            for _ in range(3):
                terms = [
                    TensorTermOperator(complex(*rng.normal(size=2)), tuple(_unitary(rng) for _ in range(n)))
                    for _ in range(r)
                ]
                psi = _unit(rng, 2**n)
                got = lcu_postselect(lcu_synthesize(terms), psi)
                worst = max(worst, float(np.abs(got - sum_apply(terms, psi)).max()))
                cases += 1
    # one factor is not unitary and is split before synthesis
    q = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    term = TensorTermOperator(0.7 - 0.2j, (q, _unitary(rng)))
    pieces = expand_to_unitary_terms(term)
    psi = _unit(rng, 4)
    split_err = float(np.abs(lcu_postselect(lcu_synthesize(pieces), psi) - operator_term_to_dense(term) @ psi).max())
    ok = worst <= 1e-8 and split_err <= 1e-8 and len(pieces) == 2
    verdict(11, ok, f"{cases} unitary cases max err {worst:.2e}; pre-split case ({len(pieces)} terms) err {split_err:.2e}")


def test_criterion_12_iris(recipe_run, verdict):
    root, results = recipe_run
    res, _ = results["iris"]
    l2 = res.values["l2_error"]
    files = ["iris_report.json", "iris_histogram.csv", "report.json"]
    ok = all((root / "iris" / f).exists() for f in files) and math.isfinite(l2)
    verdict(
        12,
        ok,
        f"gap-cutoff l2 {l2:.4f} with {res.values['terms_kept']} terms (vec dim {res.values['vector_dim']}); "
        f"reference 0.161 recorded only",
    )


def test_criterion_13_determinism(recipe_run, tmp_path, verdict):
    first_root, _ = recipe_run
    first = _artifacts(first_root)
    second_root = tmp_path / "run2"
    _run_all(second_root, workers=1)
    second = _artifacts(second_root)
    threaded_root = tmp_path / "run8"
    _run_all(threaded_root, workers=8)
    threaded = _artifacts(threaded_root)

    def diff(a, b):
        return sorted(k for k in set(a) | set(b) if a.get(k) != b.get(k))

    rerun, threads = diff(first, second), diff(first, threaded)
    ok = not rerun and not threads and len(first) > 0
    verdict(
        13,
        ok,
        f"{len(first)} artifact files; differing across reruns: {rerun or 'none'}; across 1 vs 8 workers: {threads or 'none'}",
    )

"""Named experiment recipes behind ``schmidt-approx report <name>``.

Each recipe builds its inputs from fixed seeds, runs the decompositions,
writes deterministic artifacts (CSV and JSON) into an output directory and
returns a :class:`RecipeResult` listing the checks it evaluated. Timings go
to ``report.meta.json`` only.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import analysis
from .circuits import circuit_unitary
from .generators import (
    Distribution,
    Rng,
    TfimSpec,
    VqcSpec,
    gram,
    iris_path,
    load_csv_matrix,
    qft_matrix,
    random_matrix,
    rings_image,
    tfim_hamiltonian,
    vqc_build,
)
from .io import write_csv
from .linalg import vec
from .tree import Mode, Threshold, approx_error, coefficient_histogram, decompose, truncate

__all__ = ["RecipeResult", "RECIPES", "run_recipe"]


@dataclass
class Check:
    name: str
    passed: bool | None  # None means recorded, not asserted
    detail: str


@dataclass
class RecipeResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    values: dict = field(default_factory=dict)

    def add(self, name: str, passed: bool | None, detail: str) -> None:
        self.checks.append(Check(name, passed, detail))

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def lines(self) -> list[str]:
        tags = {True: "PASS", False: "FAIL", None: "RECORD"}
        return [f"[{tags[c.passed]}] {self.name}: {c.name}: {c.detail}" for c in self.checks]


def _full(v, workers: int, mode: Mode = Mode.VECTOR):
    return decompose(v, mode, Threshold.probability(0.0), workers=workers)


def _dump(result: RecipeResult, out: Path) -> None:
    analysis.write_json(
        out / "report.json",
        {
            "recipe": result.name,
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
            "values": result.values,
        },
    )


def gram_distributions(out: Path, workers: int = 1, seeds: int = 20, size: int = 16, bins: int = 40) -> RecipeResult:
    """One-term error of vec(X^T X) for each data distribution."""
    res = RecipeResult("gram-distributions")
    kinds = list(Distribution)
    errors = {k: [] for k in kinds}
    for seed in range(seeds):
        for k in kinds:
            g = gram(random_matrix(size, size, k, Rng(seed)))
            d = _full(vec(g), workers)
            one = truncate(d, 1)
            errors[k].append(approx_error(one, vec(g))[0])
            if seed == 0:
                h = coefficient_histogram(d, bins)
                analysis.write_histogram_csv(h, out / f"histogram_{k.value}.csv", out / f"coefficients_{k.value}.csv")
    write_csv(
        out / "one_term_errors.csv",
        ["seed"] + [k.value for k in kinds],
        [[s] + [float(errors[k][s]) for k in kinds] for s in range(seeds)],
    )
    normal = np.array(errors[Distribution.NORMAL])
    need = int(np.ceil(0.8 * seeds))
    for k in kinds:
        mean = float(np.mean(errors[k]))
        res.values[f"mean_one_term_l2_{k.value}"] = mean
        if k is Distribution.NORMAL:
            res.add(f"{k.value} one-term l2", None, f"mean {mean:.4f}")
            continue
        wins = int(np.sum(np.array(errors[k]) < normal))
        res.values[f"wins_vs_normal_{k.value}"] = wins
        res.add(
            f"{k.value} beats normal",
            wins >= need,
            f"{wins}/{seeds} seeds (need {need}); mean l2 {mean:.4f} vs normal {float(np.mean(normal)):.4f}",
        )
    return res


def qft_growth(
    out: Path, workers: int = 1, qubits=(3, 4, 5, 6), histogram_qubits: int | None = 8, bins: int = 40
) -> RecipeResult:
    """Kept-term count of vec(QFT) at the gap cutoff versus dimension."""
    res = RecipeResult("qft-growth")
    rows = []
    counts = {}
    for n in qubits:
        q = qft_matrix(n)
        d = _full(vec(q), workers)
        kept, cut = analysis.cutoff_filter(d, "gap")
        l2, _ = approx_error(kept, vec(q))
        counts[n] = len(kept.terms)
        bound = float(np.sqrt(kept.pruned_mass)) + 1e-9
        rows.append([n, 2**n, len(d.terms), len(kept.terms), "" if cut is None else float(cut), float(l2), float(kept.pruned_mass)])
        res.add(f"n={n} reconstruction", bool(l2 <= bound), f"kept {len(kept.terms)}/{len(d.terms)} terms, l2 {l2:.3e} <= {bound:.3e}")
    write_csv(out / "qft_growth.csv", ["qubits", "N", "terms_total", "terms_kept", "cutoff", "l2_error", "pruned_mass"], rows)
    for a, b in zip(qubits, qubits[1:]):
        if b != a + 1:
            continue
        ratio = counts[b] / counts[a]
        res.values[f"ratio_{a}_{b}"] = ratio
        res.add(f"count ratio n={a}->{b}", bool(1.6 <= ratio <= 2.4), f"{counts[b]}/{counts[a]} = {ratio:.3f} in [1.6, 2.4]")
    if histogram_qubits is not None:
        d = _full(vec(qft_matrix(histogram_qubits)), workers)
        h = coefficient_histogram(d, bins)
        analysis.write_histogram_csv(h, out / f"qft{histogram_qubits}_histogram.csv", out / f"qft{histogram_qubits}_coefficients.csv")
        occupied = sum(1 for r in h.rows if r[2])
        res.values[f"qft{histogram_qubits}_terms"] = len(d.terms)
        res.add(
            f"n={histogram_qubits} histogram",
            None,
            f"{len(d.terms)} terms in {occupied} occupied bin(s); largest log10 gap {analysis.largest_log_gap(d.coefficients):.3g}",
        )
    res.values["counts"] = {str(k): v for k, v in counts.items()}
    return res


def vqc_depth(out: Path, workers: int = 1, n: int = 4, depths=(4, 8, 12, 16), seeds: int = 10) -> RecipeResult:
    """Midpoint-cutoff error of vec(U_VQC) as the circuit deepens."""
    res = RecipeResult("vqc-depth")
    policies = ("midpoint", "linear-midpoint")
    errs = {p: {dep: [] for dep in depths} for p in policies}
    rows = []
    for dep in depths:
        for seed in range(seeds):
            u = circuit_unitary(vqc_build(VqcSpec(n, dep, seed)))
            d = _full(vec(u), workers)
            row = [dep, seed, len(d.terms)]
            for p in policies:
                kept, cut = analysis.cutoff_filter(d, p)
                l2 = approx_error(kept, vec(u))[0]
                errs[p][dep].append(l2)
                row += [len(kept.terms), "" if cut is None else float(cut), float(l2)]
            rows.append(row)
    header = ["depth", "seed", "terms_total"]
    for p in policies:
        header += [f"{p}_kept", f"{p}_cutoff", f"{p}_l2"]
    write_csv(out / "vqc_depth.csv", header, rows)
    for p in policies:
        means = [float(np.mean(errs[p][dep])) for dep in depths]
        res.values[f"mean_l2_{p}"] = means
        increasing = all(b > a for a, b in zip(means, means[1:]))
        text = " -> ".join(f"{m:.4f}" for m in means)
        res.add(f"{p} mean l2 strictly increasing", increasing if p == "midpoint" else None, text)
    return res


TFIM_TARGETS = {10: 0.589, 4: 0.252}
TFIM_TOL = 0.06


def tfim(out: Path, workers: int = 1, n: int = 10, h: float = 0.1, J: float = 0.5, cutoff: float = 0.04) -> RecipeResult:
    """TFIM errors at a 0.04 cutoff for all-coupled and 4-coupled systems,
    plus the spectrum of the 4-coupled reconstruction."""
    res = RecipeResult("tfim")
    rows = []
    accepted = {}
    for topology in ("chain", "ring"):
        for c, target in TFIM_TARGETS.items():
            ham = tfim_hamiltonian(TfimSpec(n, h, J, c, topology=topology))
            v = vec(ham)
            fro = float(np.linalg.norm(ham))
            identity = 2**n * (h * h * n + J * J * (c - 1 if topology == "chain" else c))
            res.values[f"frobenius_sq_{topology}_c{c}"] = [fro * fro, identity]
            runs = {}
            for th in (Threshold.probability(cutoff), Threshold.coefficient(cutoff)):
                d = decompose(v, Mode.VECTOR, th, workers=workers)
                l2 = approx_error(d, v)[0]
                runs[th.kind.value] = (d, l2)
                rows.append([topology, c, th.kind.value, cutoff, len(d.terms), float(d.kept_mass), float(l2), target])
            # protocol: probability semantics first, coefficient semantics as the retry
            prob_l2 = runs["probability"][1]
            ok_prob = abs(prob_l2 - target) <= TFIM_TOL
            chosen = "probability" if ok_prob else "coefficient"
            l2 = runs[chosen][1]
            ok = abs(l2 - target) <= TFIM_TOL
            detail = (
                f"probability l2 {prob_l2:.4f}, coefficient l2 {runs['coefficient'][1]:.4f}; "
                f"target {target} +- {TFIM_TOL}; used {chosen}"
            )
            res.values[f"l2_{topology}_c{c}"] = {k: float(r[1]) for k, r in runs.items()}
            if topology == "chain":
                res.add(f"c={c} chain", bool(ok), detail)
                accepted[c] = (ham, runs[chosen][0])
            else:
                res.add(f"c={c} ring (alternative topology)", None, detail)
    write_csv(out / "tfim_errors.csv", ["topology", "c", "semantics", "cutoff", "terms", "kept_mass", "l2_error", "target_l2"], rows)
    ham, kept = accepted[4]
    spec = analysis.compare_spectrum(ham, kept)
    write_csv(out / "spectrum.csv", ["index", "lambda_true", "lambda_approx"], spec.rows())
    top = spec.top_by_magnitude(5)
    top_ok = all(abs(spec.true[i] - spec.approx[i]) <= spec.bound * (1 + 1e-9) for i in top)
    res.values["spectrum_bound"] = spec.bound
    res.values["spectrum_max_deviation"] = spec.max_deviation
    res.add("c=4 Weyl bound, all eigenvalues", spec.within_bound(), f"max |dl| {spec.max_deviation:.4f} <= {spec.bound:.4f}")
    res.add(
        "c=4 five largest |lambda|",
        bool(top_ok),
        ", ".join(f"{spec.true[i]:.4f}/{spec.approx[i]:.4f}" for i in top),
    )
    return res


def rings(out: Path, workers: int = 1, seeds: int = 10, side: int = 128, bins: int = 40) -> RecipeResult:
    """Largest log10 gap of the rings image against a uniform Gram matrix."""
    res = RecipeResult("rings")
    rows = []
    wins = 0
    for seed in range(seeds):
        img = rings_image(side, rng=Rng(seed))
        d_img = _full(vec(img), workers)
        g = gram(random_matrix(side, side, Distribution.UNIFORM, Rng(seed)))
        d_g = _full(vec(g), workers)
        gi = analysis.largest_log_gap(d_img.coefficients)
        gg = analysis.largest_log_gap(d_g.coefficients)
        wins += gi < gg
        rows.append([seed, len(d_img.terms), gi, len(d_g.terms), gg])
        if seed == 0:
            analysis.write_histogram_csv(coefficient_histogram(d_img, bins), out / "rings_histogram.csv", out / "rings_coefficients.csv")
            analysis.write_histogram_csv(coefficient_histogram(d_g, bins), out / "gram_histogram.csv", out / "gram_coefficients.csv")
    write_csv(out / "log_gaps.csv", ["seed", "rings_terms", "rings_gap", "gram_terms", "gram_gap"], rows)
    need = int(np.ceil(0.8 * seeds))
    res.values["wins"] = wins
    res.add("rings gap below uniform-Gram gap", wins >= need, f"{wins}/{seeds} seeds (need {need})")
    return res


IRIS_REFERENCE_L2 = 0.161


def iris(out: Path, workers: int = 1, samples: int = 128, bins: int = 40) -> RecipeResult:
    """Sample Gram matrix of the first iris rows at the gap cutoff."""
    res = RecipeResult("iris")
    x = load_csv_matrix(iris_path(), has_header=True, take_rows=samples)
    g = gram(x.T)  # samples as columns
    d = _full(vec(g), workers)
    kept, cut = analysis.cutoff_filter(d, "gap")
    report = analysis.build_report(kept, vec(g), f"iris first {samples} samples, gram {g.shape[0]}x{g.shape[1]}", bins, d, cut)
    analysis.write_report(report, out, prefix="iris_")
    res.values["l2_error"] = report.l2_error
    res.values["terms_kept"] = report.n_terms_kept
    res.values["vector_dim"] = int(g.size)
    res.add(
        "gap-cutoff error",
        None,
        f"l2 {report.l2_error:.4f} with {report.n_terms_kept}/{report.n_terms_total} terms "
        f"(vec dim {g.size}); reference value {IRIS_REFERENCE_L2}",
    )
    return res


RECIPES: dict[str, Callable[..., RecipeResult]] = {
    "gram-distributions": gram_distributions,
    "qft-growth": qft_growth,
    "vqc-depth": vqc_depth,
    "tfim": tfim,
    "rings": rings,
    "iris": iris,
}


def run_recipe(name: str, out_dir, workers: int = 1, **kwargs) -> RecipeResult:
    if name not in RECIPES:
        raise KeyError(f"unknown recipe {name!r}; choose from {', '.join(RECIPES)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    result = RECIPES[name](out, workers=workers, **kwargs)
    elapsed = (time.perf_counter() - start) * 1000.0
    _dump(result, out)
    analysis.write_meta(out / "report.meta.json", recipe=name, workers=workers, wall_time_ms=elapsed)
    return result

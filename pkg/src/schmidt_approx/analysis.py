"""Reports, cutoff selection and spectrum comparison on top of the tree.

Artifacts written here are deterministic: values are serialized with
shortest round-trip floats, JSON keys are sorted, and wall-clock time goes
only into a separate ``*.meta.json`` file.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .io import write_csv
from .linalg import eig_hermitian, fro_norm, unvec
from .tree import (
    Decomposition,
    Histogram,
    Threshold,
    approx_error,
    coefficient_histogram,
    filter_terms,
    reconstruct,
    suggest_cutoff,
)

__all__ = [
    "DecompositionReport",
    "build_report",
    "write_report",
    "write_histogram_csv",
    "write_meta",
    "write_json",
    "cutoff_filter",
    "largest_log_gap",
    "SpectrumComparison",
    "compare_spectrum",
]


@dataclass
class DecompositionReport:
    input: str
    mode: str
    threshold: str
    n_terms_total: int
    n_terms_kept: int
    kept_mass: float
    pruned_mass: float
    l2_error: float
    mse: float
    histogram: Histogram = field(repr=False)
    histogram_squared: Histogram = field(repr=False)
    cutoff: float | None = None
    wall_time_ms: float | None = None

    def summary(self) -> dict:
        out = asdict(self)
        for key in ("histogram", "histogram_squared", "wall_time_ms"):
            out.pop(key)
        out["histogram_bins"] = [[lo, hi, n] for lo, hi, n in self.histogram.rows]
        out["zero_coefficients"] = self.histogram.zero_count
        return out


def _threshold_text(t: Threshold) -> str:
    return f"{t.kind.value}:{float(t.value)!r}"


def build_report(
    kept: Decomposition,
    original,
    descriptor: str,
    bins: int = 40,
    full: Decomposition | None = None,
    cutoff: float | None = None,
) -> DecompositionReport:
    """Summarize ``kept`` against ``original``.

    The histograms cover ``full`` (all enumerated terms) when given, else
    the kept terms.
    """
    source = full if full is not None else kept
    l2, mse = approx_error(kept, original)
    return DecompositionReport(
        input=descriptor,
        mode=kept.mode.value,
        threshold=_threshold_text(kept.threshold),
        n_terms_total=len(source.terms),
        n_terms_kept=len(kept.terms),
        kept_mass=kept.kept_mass,
        pruned_mass=kept.pruned_mass,
        l2_error=l2,
        mse=mse,
        histogram=coefficient_histogram(source, bins),
        histogram_squared=coefficient_histogram(source, bins, squared=True),
        cutoff=cutoff,
    )


def write_json(path, data) -> None:
    text = json.dumps(data, indent=2, sort_keys=True, allow_nan=False)
    with open(path, "w", newline="\n") as fh:
        fh.write(text + "\n")


def write_meta(path, **values) -> None:
    """Non-deterministic run metadata (timings); kept apart from artifacts."""
    write_json(path, {"nondeterministic": True, **values})


def write_histogram_csv(h: Histogram, path, coefficients_path=None) -> None:
    """``bin_low,bin_high,count`` rows plus an optional sidecar with every
    value in descending order."""
    write_csv(path, ["bin_low", "bin_high", "count"], h.rows)
    if coefficients_path is not None:
        write_csv(coefficients_path, ["rank", "value"], [(i, float(v)) for i, v in enumerate(h.values)])


def write_report(report: DecompositionReport, out_dir, prefix: str = "") -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / f"{prefix}report.json", report.summary())
    write_histogram_csv(report.histogram, out / f"{prefix}histogram.csv", out / f"{prefix}coefficients.csv")
    write_histogram_csv(report.histogram_squared, out / f"{prefix}histogram_squared.csv")
    if report.wall_time_ms is not None:
        write_meta(out / f"{prefix}report.meta.json", wall_time_ms=report.wall_time_ms)


def cutoff_filter(full: Decomposition, policy: str = "gap") -> tuple[Decomposition, float | None]:
    """Prune a threshold-0 decomposition at an automatically chosen
    coefficient cutoff.

    If all coefficients coincide there is no gap to cut at; every term is
    kept and the cutoff is reported as None.
    """
    try:
        cut = suggest_cutoff(full.coefficients, policy)
    except ValueError:
        return full, None
    return filter_terms(full, Threshold.coefficient(cut)), cut


def largest_log_gap(coefficients) -> float:
    """Widest adjacent gap between sorted nonzero coefficients, in log10."""
    c = np.sort(np.asarray(coefficients, dtype=np.float64))[::-1]
    c = c[c > 0.0]
    if c.size < 2:
        return 0.0
    logs = np.log10(c)
    return float(np.max(logs[:-1] - logs[1:]))


@dataclass
class SpectrumComparison:
    true: np.ndarray
    approx: np.ndarray
    bound: float
    """Weyl bound ``||H - H~||_F`` (absolute units)."""

    @property
    def max_deviation(self) -> float:
        return float(np.max(np.abs(self.true - self.approx)))

    def within_bound(self) -> bool:
        return self.max_deviation <= self.bound * (1.0 + 1e-9) + 1e-12

    def top_by_magnitude(self, k: int = 5) -> list[int]:
        order = sorted(range(self.true.size), key=lambda i: (-abs(self.true[i]), i))
        return order[:k]

    def rows(self) -> list[tuple[int, float, float]]:
        return [(i, float(a), float(b)) for i, (a, b) in enumerate(zip(self.true, self.approx))]


def compare_spectrum(h, kept: Decomposition) -> SpectrumComparison:
    """Eigenvalues of ``h`` and of the Hermitian part of its reconstruction.

    Both sorted descending. Weyl's inequality gives
    ``|lambda_i - lambda~_i| <= ||H - H~_s||_2 <= ||H - H~||_F``.
    """
    h = np.asarray(h)
    dim = h.shape[0]
    approx = unvec(reconstruct(kept), dim, dim)
    herm = 0.5 * (approx + approx.conj().T)
    lam_true, _ = eig_hermitian(h)
    lam_approx, _ = eig_hermitian(herm)
    bound = fro_norm(h - approx)
    return SpectrumComparison(lam_true, lam_approx, bound)


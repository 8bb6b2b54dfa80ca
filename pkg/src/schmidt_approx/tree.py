"""Successive Schmidt decompositions as a pruned recursion tree.

A unit vector of dimension ``2**n`` is reshaped to ``2 x 2**(n-1)`` and split
by :func:`~schmidt_approx.linalg.small_row_svd`; each right singular vector
is split again until only a dimension-2 vector is left. Every root-to-leaf
path is one product term whose coefficient is the product of the singular
values met along the way. Coefficients never grow with depth (every split
is of a unit vector), so a subtree whose coefficient already fails the
threshold can be dropped without losing any path that would have passed.

In OPERATOR mode the input is the row-major vectorization of a
``2**n x 2**n`` matrix. Its index bits are first reordered from
``r1..rn c1..cn`` to ``r1 c1 r2 c2 .. rn cn`` and the tree splits four ways,
so every leaf factor unvecs to a (generally full-rank) 2 x 2 matrix.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from itertools import groupby

import numpy as np

from .errors import DimensionError
from .linalg import as_vector, fro_norm, norm2_diff, small_row_svd

__all__ = [
    "Mode",
    "ThresholdKind",
    "Threshold",
    "PathTerm",
    "Decomposition",
    "Histogram",
    "decompose",
    "reconstruct",
    "approx_error",
    "filter_terms",
    "truncate",
    "coefficient_histogram",
    "suggest_cutoff",
    "interleave_operator_bits",
    "deinterleave_operator_bits",
]


class Mode(str, enum.Enum):
    VECTOR = "vector"
    OPERATOR = "operator"

    @property
    def radix(self) -> int:
        return 2 if self is Mode.VECTOR else 4


class ThresholdKind(str, enum.Enum):
    COEFFICIENT = "coefficient"
    PROBABILITY = "probability"


@dataclass(frozen=True)
class Threshold:
    """Pruning rule: a path survives when its coefficient (COEFFICIENT) or
    squared coefficient (PROBABILITY) is at least ``value``."""

    value: float = 0.0
    kind: ThresholdKind = ThresholdKind.PROBABILITY

    def __post_init__(self):
        if not (0.0 <= self.value <= 1.0) or math.isnan(self.value):
            raise ValueError(f"threshold value must lie in [0, 1], got {self.value}")
        object.__setattr__(self, "kind", ThresholdKind(self.kind))

    @classmethod
    def probability(cls, value: float) -> Threshold:
        return cls(value, ThresholdKind.PROBABILITY)

    @classmethod
    def coefficient(cls, value: float) -> Threshold:
        return cls(value, ThresholdKind.COEFFICIENT)

    def keeps(self, coefficient: float) -> bool:
        if self.kind is ThresholdKind.PROBABILITY:
            return coefficient * coefficient >= self.value
        return coefficient >= self.value


@dataclass(frozen=True, eq=False)
class PathTerm:
    """One root-to-leaf path: ``coefficient * factors[0] (x) ... (x) factors[-1]``.

    ``path_id`` holds the child index taken at every split (one digit per
    level). It is ``None`` for terms read back from a file.
    """

    coefficient: float
    factors: tuple[np.ndarray, ...]
    path_id: str | None = None

    def full_vector(self) -> np.ndarray:
        return self.coefficient * reduce(np.kron, self.factors)


@dataclass(frozen=True, eq=False)
class Decomposition:
    mode: Mode
    input_dim: int
    input_norm: float
    terms: tuple[PathTerm, ...]
    threshold: Threshold = field(default_factory=Threshold)
    kept_mass: float = field(init=False)
    pruned_mass: float = field(init=False)

    def __post_init__(self):
        kept = math.fsum(t.coefficient * t.coefficient for t in self.terms)
        object.__setattr__(self, "kept_mass", kept)
        object.__setattr__(self, "pruned_mass", max(0.0, 1.0 - kept))

    @property
    def n_factors(self) -> int:
        return _num_levels(self.input_dim, self.mode.radix)

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([t.coefficient for t in self.terms], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Histogram:
    """Histogram of log10 coefficients; ``rows`` are ``(bin_low, bin_high, count)``."""

    rows: list[tuple[float, float, int]]
    zero_count: int
    values: np.ndarray  # descending, zeros included


def _num_levels(dim: int, radix: int) -> int:
    n = 0
    d = dim
    while d > 1 and d % radix == 0:
        d //= radix
        n += 1
    if d != 1 or n < 1:
        raise DimensionError(f"dimension {dim} is not a positive power of {radix}")
    return n


def interleave_operator_bits(v: np.ndarray, n: int) -> np.ndarray:
    """Reorder a vectorized ``2**n x 2**n`` matrix from ``r1..rn c1..cn`` to ``r1 c1 .. rn cn``."""
    axes = [a for k in range(n) for a in (k, n + k)]
    return np.ascontiguousarray(np.asarray(v).reshape((2,) * (2 * n)).transpose(axes)).reshape(-1)


def deinterleave_operator_bits(v: np.ndarray, n: int) -> np.ndarray:
    axes = [a for k in range(n) for a in (k, n + k)]
    inverse = np.argsort(axes)
    return np.ascontiguousarray(np.asarray(v).reshape((2,) * (2 * n)).transpose(inverse)).reshape(-1)


@dataclass
class _Node:
    vector: np.ndarray
    coefficient: float
    factors: tuple[np.ndarray, ...]
    path: str


def _children(node: _Node, radix: int, threshold: Threshold) -> list[_Node]:
    svd = small_row_svd(node.vector.reshape(radix, -1))
    out = []
    for i, sigma in enumerate(svd.sigmas):
        right = svd.right[i]
        if right is None:
            # exact zero: dropped silently, never counted against the threshold
            continue
        coef = node.coefficient * float(sigma)
        if not threshold.keeps(coef):
            continue
        out.append(_Node(right, coef, node.factors + (svd.left[i],), node.path + str(i)))
    return out


def _is_leaf(node: _Node, radix: int) -> bool:
    return node.vector.size == radix


def _leaf_term(node: _Node) -> PathTerm:
    return PathTerm(node.coefficient, node.factors + (node.vector,), node.path)


def _expand(node: _Node, radix: int, threshold: Threshold) -> list[PathTerm]:
    terms: list[PathTerm] = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if _is_leaf(cur, radix):
            terms.append(_leaf_term(cur))
            continue
        # reversed so the largest-sigma child is visited first
        stack.extend(reversed(_children(cur, radix, threshold)))
    return terms


def _canonical(terms: list[PathTerm]) -> tuple[PathTerm, ...]:
    return tuple(sorted(terms, key=lambda t: (-t.coefficient, t.path_id or "")))


def decompose(
    v,
    mode: Mode | str = Mode.VECTOR,
    threshold: Threshold | None = None,
    workers: int = 1,
) -> Decomposition:
    """Successive Schmidt decomposition of ``v`` with branch pruning.

    The input is normalized first; ``input_norm`` keeps the original norm.
    Sibling subtrees may be processed by ``workers`` threads; the final
    term list is sorted canonically (descending coefficient, then path id),
    so the result does not depend on the worker count.

    Raises:
        ValueError: ``v`` is the zero vector.
        DimensionError: ``len(v)`` is not a power of 2 (VECTOR) or 4 (OPERATOR).
    """
    mode = Mode(mode)
    threshold = threshold if threshold is not None else Threshold()
    x = np.asarray(as_vector(v), dtype=np.complex128)
    radix = mode.radix
    n = _num_levels(x.size, radix)
    norm = fro_norm(x)
    if norm == 0.0:
        raise ValueError("cannot decompose the zero vector")
    unit = x / norm
    if mode is Mode.OPERATOR:
        unit = interleave_operator_bits(unit, n)
    root = _Node(unit, 1.0, (), "")

    if workers <= 1:
        terms = _expand(root, radix, threshold)
    else:
        terms = []
        frontier = [root]
        # breadth-first until there is enough independent work to share out
        while frontier and len(frontier) < 4 * workers:
            nxt = []
            for node in frontier:
                if _is_leaf(node, radix):
                    terms.append(_leaf_term(node))
                else:
                    nxt.extend(_children(node, radix, threshold))
            if not nxt:
                frontier = []
                break
            frontier = nxt
            if all(_is_leaf(nd, radix) for nd in frontier):
                break
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(lambda nd: _expand(nd, radix, threshold), frontier):
                terms.extend(part)

    return Decomposition(mode, x.size, norm, _canonical(terms), threshold)


def _assemble(terms: list[PathTerm], depth: int, n: int) -> np.ndarray:
    # terms share path_id[:depth] and hence factors[:depth]
    if depth == n - 1:
        total = terms[0].coefficient * terms[0].factors[-1]
        for t in terms[1:]:
            total = total + t.coefficient * t.factors[-1]
        return total
    total = None
    for _, grp in groupby(terms, key=lambda t: t.path_id[depth]):
        grp = list(grp)
        part = np.kron(grp[0].factors[depth], _assemble(grp, depth + 1, n))
        total = part if total is None else total + part
    return total


def reconstruct(d: Decomposition, normalized: bool = False) -> np.ndarray:
    """Sum of all kept terms, in the original index order.

    By default the result is scaled back by ``input_norm``; with
    ``normalized=True`` it approximates the unit input instead.
    """
    n = d.n_factors
    if not d.terms:
        out = np.zeros(d.input_dim, dtype=np.complex128)
    elif all(t.path_id is not None for t in d.terms):
        out = _assemble(sorted(d.terms, key=lambda t: t.path_id), 0, n)
    else:
        out = d.terms[0].full_vector().astype(np.complex128)
        for t in d.terms[1:]:
            out = out + t.full_vector()
    if d.mode is Mode.OPERATOR:
        out = deinterleave_operator_bits(out, n)
    return out if normalized else out * d.input_norm


def approx_error(d: Decomposition, original) -> tuple[float, float]:
    """``(l2, mse)`` between the normalized original and the kept-term sum.

    The reconstruction is not renormalized, so ``l2 ** 2 == 1 - kept_mass``
    up to rounding. ``mse = l2 ** 2 / dim``.
    """
    x = as_vector(original)
    if x.size != d.input_dim:
        raise DimensionError(f"original has dim {x.size}, decomposition has {d.input_dim}")
    norm = fro_norm(x)
    if norm == 0.0:
        raise ValueError("original is the zero vector")
    l2 = norm2_diff(x / norm, reconstruct(d, normalized=True))
    return l2, l2 * l2 / x.size


def filter_terms(d: Decomposition, threshold: Threshold) -> Decomposition:
    """Post-hoc pruning of an existing decomposition."""
    kept = tuple(t for t in d.terms if threshold.keeps(t.coefficient))
    return Decomposition(d.mode, d.input_dim, d.input_norm, kept, threshold)


def truncate(d: Decomposition, k: int) -> Decomposition:
    """Keep only the ``k`` largest terms."""
    if k < 0:
        raise ValueError("k must be non-negative")
    return Decomposition(d.mode, d.input_dim, d.input_norm, d.terms[:k], d.threshold)


def coefficient_histogram(d: Decomposition, bins: int = 40, squared: bool = False) -> Histogram:
    """Histogram of ``log10`` of the term coefficients (or their squares).

    Zero values cannot be placed on a log axis and are only counted.
    """
    if bins < 1:
        raise ValueError("bins must be a positive integer")
    if not d.terms:
        raise ValueError("decomposition has no terms")
    values = d.coefficients
    if squared:
        values = values * values
    values = np.sort(values)[::-1]
    nonzero = values[values > 0.0]
    zero_count = int(values.size - nonzero.size)
    if nonzero.size == 0:
        return Histogram([], zero_count, values)
    logs = np.log10(nonzero)
    lo, hi = float(logs.min()), float(logs.max())
    if hi - lo <= _LOG_TIE:
        # one value up to rounding: centre a unit-wide range on it
        mid = 0.5 * (lo + hi)
        lo, hi = mid - 0.5, mid + 0.5
    counts, edges = np.histogram(logs, bins=bins, range=(lo, hi))
    rows = [(float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(bins)]
    return Histogram(rows, zero_count, values)


_LOG_TIE = 1e-9  # log10 distance below which coefficients count as equal


def _distinct_logs(coefficients) -> np.ndarray:
    c = np.asarray(coefficients, dtype=np.float64)
    c = np.sort(c[c > 0.0])[::-1]
    if c.size == 0:
        return c
    logs = np.log10(c)
    keep = [logs[0]]
    for x in logs[1:]:
        if keep[-1] - x > _LOG_TIE:
            keep.append(x)
    return np.array(keep)


def suggest_cutoff(coefficients, policy: str = "gap") -> float:
    """Pick a coefficient cutoff from a list of coefficients.

    Policies:
        ``gap``: geometric midpoint of the widest adjacent gap in log10 space.
        ``midpoint``: geometric mean of the largest and smallest nonzero value.
        ``linear-midpoint``: arithmetic mean of the same two values.

    Values closer than 1e-9 in log10 are treated as equal; at least two
    distinct nonzero values are required.
    """
    logs = _distinct_logs(coefficients)
    if logs.size < 2:
        raise ValueError("need at least two distinct nonzero coefficients")
    if policy == "gap":
        gaps = logs[:-1] - logs[1:]
        k = int(np.argmax(gaps))
        return float(10.0 ** (0.5 * (logs[k] + logs[k + 1])))
    if policy == "midpoint":
        return float(10.0 ** (0.5 * (logs[0] + logs[-1])))
    if policy == "linear-midpoint":
        return float(0.5 * (10.0 ** logs[0] + 10.0 ** logs[-1]))
    raise ValueError(f"unknown cutoff policy {policy!r}")

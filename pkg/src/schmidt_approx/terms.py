"""Arithmetic directly on tensor-product terms.

A matrix approximated as ``sum_i alpha_i Q_1 (x) ... (x) Q_n`` with 2 x 2
factors can be applied to a product vector ``beta p_1 (x) ... (x) p_n``
factor by factor, single output entries cost O(r n), and a one-term
approximation inverts factor-wise. Non-unitary factors can be written as the
average of two unitaries for circuit synthesis.

Vectorization is row-major throughout, so ``vec(u v^T) == kron(u, v)`` with
no complex conjugation; a VECTOR-mode path over a vectorized matrix
therefore turns into ``Q_i = outer(f_i, f_{n+i})`` (plain transpose).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import DimensionError, SingularFactorError, SizeGuardError
from .linalg import as_vector
from .tree import Decomposition, Mode, PathTerm

__all__ = [
    "TensorTermVector",
    "TensorTermOperator",
    "OpCounter",
    "vec_term_to_operator",
    "operator_mode_term_to_operator",
    "decomposition_to_operator_terms",
    "decomposition_to_vector_terms",
    "operator_term_to_dense",
    "term_sum_to_dense",
    "vector_term_to_dense",
    "apply",
    "entry",
    "sum_apply",
    "invert_single_term",
    "is_unitary",
    "split_into_unitaries",
    "expand_to_unitary_terms",
]

MAX_DENSE_FACTORS = 13
_E0 = np.array([1.0, 0.0], dtype=np.complex128)


@dataclass(frozen=True, eq=False)
class TensorTermVector:
    beta: complex
    factors: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.factors)


@dataclass(frozen=True, eq=False)
class TensorTermOperator:
    alpha: complex
    factors: tuple[np.ndarray, ...]

    @property
    def n(self) -> int:
        return len(self.factors)


class OpCounter:
    """Counts scalar complex multiplications and additions."""

    def __init__(self):
        self.count = 0

    def add(self, k: int) -> None:
        self.count += k


def vec_term_to_operator(t: PathTerm) -> TensorTermOperator:
    """Turn a VECTOR-mode path over ``vec(A)`` into ``alpha Q_1 (x) .. (x) Q_n``.

    The first half of the factors come from row bits, the second half from
    column bits, so ``Q_i = f_i f_{n+i}^T``.
    """
    m = len(t.factors)
    if m % 2:
        raise DimensionError(f"need an even number of factors, got {m}")
    n = m // 2
    qs = tuple(np.outer(t.factors[i], t.factors[n + i]) for i in range(n))
    return TensorTermOperator(complex(t.coefficient), qs)


def operator_mode_term_to_operator(t: PathTerm) -> TensorTermOperator:
    """OPERATOR-mode leaves are 4-vectors ``(q00, q01, q10, q11)``."""
    qs = []
    for f in t.factors:
        if f.size != 4:
            raise DimensionError("OPERATOR-mode factors must have dimension 4")
        qs.append(np.asarray(f, dtype=np.complex128).reshape(2, 2))
    return TensorTermOperator(complex(t.coefficient), tuple(qs))


def decomposition_to_operator_terms(d: Decomposition) -> list[TensorTermOperator]:
    """Operator terms of a decomposed matrix, scaled back by the input norm."""
    convert = operator_mode_term_to_operator if d.mode is Mode.OPERATOR else vec_term_to_operator
    out = []
    for t in d.terms:
        op = convert(t)
        out.append(TensorTermOperator(op.alpha * d.input_norm, op.factors))
    return out


def decomposition_to_vector_terms(d: Decomposition) -> list[TensorTermVector]:
    if d.mode is not Mode.VECTOR:
        raise ValueError("vector terms need a VECTOR-mode decomposition")
    return [TensorTermVector(complex(t.coefficient * d.input_norm), t.factors) for t in d.terms]


def operator_term_to_dense(t: TensorTermOperator) -> np.ndarray:
    if t.n > MAX_DENSE_FACTORS:
        raise SizeGuardError(f"{t.n} factors exceed the dense guard of {MAX_DENSE_FACTORS}")
    return t.alpha * reduce(np.kron, t.factors)


def term_sum_to_dense(terms: list[TensorTermOperator]) -> np.ndarray:
    out = operator_term_to_dense(terms[0]).astype(np.complex128)
    for t in terms[1:]:
        out = out + operator_term_to_dense(t)
    return out


def vector_term_to_dense(psi: TensorTermVector) -> np.ndarray:
    if psi.n > 2 * MAX_DENSE_FACTORS:
        raise SizeGuardError(f"{psi.n} factors exceed the dense guard")
    return psi.beta * reduce(np.kron, psi.factors)


def apply(a: TensorTermOperator, psi: TensorTermVector) -> TensorTermVector:
    """``alpha beta Q_1 p_1 (x) ... (x) Q_n p_n`` with re-normalized factors.

    The norms of the ``Q_k p_k`` are folded into ``beta``. If any of them is
    zero the result is the zero term (``beta == 0``, factors ``e0``).
    """
    if a.n != psi.n:
        raise DimensionError(f"factor count mismatch: {a.n} vs {psi.n}")
    beta = complex(a.alpha) * complex(psi.beta)
    factors = []
    for q, p in zip(a.factors, psi.factors):
        y = q @ p
        nrm = math.hypot(abs(y[0]), abs(y[1]))
        if nrm == 0.0:
            return TensorTermVector(0j, tuple(_E0.copy() for _ in range(a.n)))
        beta *= nrm
        factors.append(y / nrm)
    return TensorTermVector(beta, tuple(factors))


def entry(a: list[TensorTermOperator], psi: TensorTermVector, index: int, counter: OpCounter | None = None) -> complex:
    """Entry ``index`` of ``(sum_i A_i) psi`` without forming any vector.

    Bit k of ``index`` (most significant first) selects the row of ``Q_k``;
    each term costs one 2-element dot product per factor.
    """
    n = psi.n
    if not 0 <= index < 2**n:
        raise IndexError(f"index {index} out of range for dimension 2**{n}")
    bits = [(index >> (n - 1 - k)) & 1 for k in range(n)]
    total = 0j
    ops = 0
    for term in a:
        if term.n != n:
            raise DimensionError(f"factor count mismatch: {term.n} vs {n}")
        prod = complex(term.alpha) * complex(psi.beta)
        ops += 1
        for q, p, b in zip(term.factors, psi.factors, bits):
            prod *= q[b, 0] * p[0] + q[b, 1] * p[1]
            ops += 4  # two products, one sum, one accumulate
        total += prod
        ops += 1
    if counter is not None:
        counter.add(ops)
    return complex(total)


def _apply_factors(factors: tuple[np.ndarray, ...], x: np.ndarray) -> np.ndarray:
    y = x
    for k, q in enumerate(factors):
        y = y.reshape(2**k, 2, -1)
        y0 = y[:, 0, :]
        y1 = y[:, 1, :]
        y = np.stack((q[0, 0] * y0 + q[0, 1] * y1, q[1, 0] * y0 + q[1, 1] * y1), axis=1)
    return y.reshape(-1)


def sum_apply(a: list[TensorTermOperator], psi) -> np.ndarray:
    """Dense ``(sum_i A_i) psi`` by successive 2 x 2 contractions, O(r n 2**n)."""
    x = np.asarray(as_vector(psi), dtype=np.complex128)
    if not a:
        raise ValueError("empty term sum")
    n = a[0].n
    if x.size != 2**n:
        raise DimensionError(f"vector dim {x.size} does not match 2**{n}")
    out = np.zeros_like(x)
    for term in a:
        if term.n != n:
            raise DimensionError("inhomogeneous factor counts in term sum")
        out = out + term.alpha * _apply_factors(term.factors, x)
    return out


def invert_single_term(a: TensorTermOperator) -> TensorTermOperator:
    """``alpha^-1 Q_1^-1 (x) ... (x) Q_n^-1`` through 2 x 2 adjugates.

    Raises:
        SingularFactorError: ``|alpha|`` or some ``|det Q_k|`` is at most 1e-12;
            ``factor_index`` names the offending factor (None for alpha).
    """
    if abs(a.alpha) <= 1e-12:
        raise SingularFactorError("coefficient is zero", None)
    inv = []
    for k, q in enumerate(a.factors):
        det = q[0, 0] * q[1, 1] - q[0, 1] * q[1, 0]
        if abs(det) <= 1e-12:
            raise SingularFactorError(f"factor {k} is singular (|det| = {abs(det):.3e})", k)
        inv.append(np.array([[q[1, 1], -q[0, 1]], [-q[1, 0], q[0, 0]]], dtype=np.complex128) / det)
    return TensorTermOperator(1.0 / complex(a.alpha), tuple(inv))


def is_unitary(q, tol: float = 1e-10) -> bool:
    q = np.asarray(q)
    return bool(np.linalg.norm(q.conj().T @ q - np.eye(q.shape[0])) <= tol)


def split_into_unitaries(q) -> tuple[np.ndarray, np.ndarray, float]:
    """Write ``q = scale * (U1 + U2) / 2`` with unitary ``U1``, ``U2``.

    With ``q = V diag(s) W^dagger`` and ``s' = s / s_max``,
    ``U1,2 = V diag(s' +- i sqrt(1 - s'^2)) W^dagger``.
    """
    q = np.asarray(q, dtype=np.complex128)
    if q.shape != (2, 2):
        raise DimensionError("split_into_unitaries expects a 2x2 matrix")
    v, s, wh = np.linalg.svd(q)
    scale = float(s[0])
    if scale == 0.0:
        raise ValueError("cannot split the zero matrix")
    sp = np.clip(s / scale, 0.0, 1.0)
    im = np.sqrt(1.0 - sp * sp)
    u1 = (v * (sp + 1j * im)) @ wh
    u2 = (v * (sp - 1j * im)) @ wh
    return u1, u2, scale


def expand_to_unitary_terms(t: TensorTermOperator, tol: float = 1e-10) -> list[TensorTermOperator]:
    """Rewrite one term as a sum of terms whose factors are all unitary.

    A factor proportional to a unitary only moves its scale into alpha; any
    other factor is split in two, doubling the term count.
    """
    out = [t]
    for k in range(t.n):
        nxt = []
        for term in out:
            q = term.factors[k]
            if is_unitary(q, tol):
                nxt.append(term)
                continue
            u1, u2, scale = split_into_unitaries(q)
            if np.linalg.norm(u1 - u2) <= tol:
                nxt.append(TensorTermOperator(term.alpha * scale, _replace(term.factors, k, u1)))
                continue
            half = term.alpha * scale / 2.0
            nxt.append(TensorTermOperator(half, _replace(term.factors, k, u1)))
            nxt.append(TensorTermOperator(half, _replace(term.factors, k, u2)))
        out = nxt
    return out


def _replace(factors: tuple[np.ndarray, ...], k: int, q: np.ndarray) -> tuple[np.ndarray, ...]:
    return factors[:k] + (q,) + factors[k + 1 :]

"""Dense complex linear algebra used by the Schmidt recursion.

Matrices and vectors are plain numpy arrays (``complex128`` unless a real
array is passed in and the operation keeps it real). Everything here is a
pure function; no state is kept between calls.

The only SVDs ever needed are of 2 x M and 4 x M reshapes, so there is no
general SVD: two-row matrices use the closed-form eigen-decomposition of the
2 x 2 Gram matrix, four-row matrices diagonalise the 4 x 4 Gram matrix with
the same Jacobi solver that serves spectrum studies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .errors import DimensionError, NotHermitianError, SchmidtError

__all__ = [
    "ZERO_TOL",
    "DEGENERACY_TOL",
    "PHASE_TOL",
    "SmallSvd",
    "as_matrix",
    "as_vector",
    "vec",
    "unvec",
    "fro_norm",
    "small_row_svd",
    "eig_hermitian",
    "norm2_diff",
    "mse_diff",
]

# Relative to the Frobenius norm of the matrix being split (1.0 inside the tree).
ZERO_TOL = 1e-13
DEGENERACY_TOL = 1e-12
PHASE_TOL = 1e-12

_E0 = np.array([1.0, 0.0], dtype=np.complex128)
_E1 = np.array([0.0, 1.0], dtype=np.complex128)


def _check_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains NaN or Inf")


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D numpy array (real arrays stay real)."""
    arr = np.asarray(m)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {arr.shape}")
    if not (np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.complexfloating)):
        arr = arr.astype(np.float64)
    _check_finite(arr, "matrix")
    return arr


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionError(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    if not (np.issubdtype(arr.dtype, np.floating) or np.issubdtype(arr.dtype, np.complexfloating)):
        arr = arr.astype(np.float64)
    _check_finite(arr, "vector")
    return arr


def vec(matrix) -> np.ndarray:
    """Row-major vectorization: ``out[r * cols + c] == matrix[r, c]``."""
    return as_matrix(matrix).reshape(-1).copy()


def unvec(v, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    arr = as_vector(v)
    if rows < 1 or cols < 1 or arr.size != rows * cols:
        raise DimensionError(f"cannot reshape vector of dim {arr.size} into {rows}x{cols}")
    return arr.reshape(rows, cols).copy()


def _sqnorm(x: np.ndarray) -> float:
    # pairwise numpy summation, never BLAS: bitwise reproducible
    if np.iscomplexobj(x):
        return float(np.sum(x.real * x.real + x.imag * x.imag))
    return float(np.sum(x * x))


def fro_norm(x) -> float:
    return math.sqrt(_sqnorm(np.asarray(x).reshape(-1)))


@dataclass(frozen=True, eq=False)
class SmallSvd:
    """Result of :func:`small_row_svd`.

    ``left[i]`` and ``right[i]`` pair with ``sigmas[i]`` so that
    ``m == sum(sigmas[i] * outer(left[i], right[i]))``. ``right[i]`` is
    ``None`` when ``sigmas[i]`` is below the zero tolerance.
    """

    sigmas: np.ndarray
    left: tuple[np.ndarray, ...]
    right: tuple[np.ndarray | None, ...]


def _fix_phase(u: np.ndarray) -> np.ndarray:
    """Make the first component with magnitude > PHASE_TOL real and non-negative."""
    for x in u:
        mag = abs(x)
        if mag > PHASE_TOL:
            return u * (x.conjugate() / mag) + 0.0
    return u


def _project_rows(u: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``u^dagger m`` as an explicit row combination (deterministic summation order)."""
    out = u[0].conjugate() * m[0]
    for k in range(1, m.shape[0]):
        out = out + u[k].conjugate() * m[k]
    return out


def _finish(lefts: list[np.ndarray], m: np.ndarray, zero: float, keep_order: bool) -> SmallSvd:
    projected = [_project_rows(u, m) for u in lefts]
    sigmas = [math.sqrt(_sqnorm(w)) for w in projected]
    order = list(range(len(lefts)))
    if not keep_order:
        order.sort(key=lambda i: -sigmas[i])  # stable: Gram order on ties
    rights = []
    for i in order:
        rights.append(projected[i] / sigmas[i] if sigmas[i] > zero else None)
    return SmallSvd(
        sigmas=np.array([sigmas[i] for i in order]),
        left=tuple(lefts[i] for i in order),
        right=tuple(rights),
    )


def _svd_two_rows(m: np.ndarray) -> SmallSvd:
    r0, r1 = m[0], m[1]
    a = _sqnorm(r0)
    d = _sqnorm(r1)
    b = complex(np.sum(r0 * r1.conjugate()))
    t = a + d
    if t == 0.0:
        return SmallSvd(np.zeros(2), (_E0.copy(), _E1.copy()), (None, None))
    scale = math.sqrt(t)
    # t^2 - 4 det == (a - d)^2 + 4|b|^2; the right-hand form has no cancellation
    disc = math.hypot(a - d, 2.0 * abs(b))
    lam_hi = 0.5 * (t + disc)
    lam_lo = max(0.5 * (t - disc), 0.0)
    degenerate = math.sqrt(lam_hi) - math.sqrt(lam_lo) <= DEGENERACY_TOL * scale
    if degenerate:
        # Gram is a multiple of the identity: any basis diagonalises it, take the canonical one
        u_hi = _E0.copy()
    else:
        if a >= d:
            u_hi = np.array([0.5 * (a - d) + 0.5 * disc, b.conjugate()], dtype=np.complex128)
        else:
            u_hi = np.array([b, 0.5 * (d - a) + 0.5 * disc], dtype=np.complex128)
        u_hi /= math.sqrt(_sqnorm(u_hi))
        u_hi = _fix_phase(u_hi)
    u_lo = np.array([-u_hi[1].conjugate(), u_hi[0].conjugate()], dtype=np.complex128) + 0.0  # no -0.0
    u_lo = _fix_phase(u_lo)
    return _finish([u_hi, u_lo], m, ZERO_TOL * scale, keep_order=degenerate)


def _svd_four_rows(m: np.ndarray) -> SmallSvd:
    rows = m.shape[0]
    gram = np.empty((rows, rows), dtype=np.complex128)
    for i in range(rows):
        gram[i, i] = _sqnorm(m[i])
        for j in range(i + 1, rows):
            g = complex(np.sum(m[i] * m[j].conjugate()))
            gram[i, j] = g
            gram[j, i] = g.conjugate()
    t = float(np.trace(gram).real)
    if t == 0.0:
        basis = tuple(np.eye(rows, dtype=np.complex128))
        return SmallSvd(np.zeros(rows), basis, (None,) * rows)
    _, vecs = eig_hermitian(gram)
    lefts = [_fix_phase(np.ascontiguousarray(vecs[:, i], dtype=np.complex128)) for i in range(rows)]
    return _finish(lefts, m, ZERO_TOL * math.sqrt(t), keep_order=False)


def small_row_svd(m) -> SmallSvd:
    """SVD of a matrix with 2 or 4 rows.

    Singular values are the square roots of the Gram eigenvalues; they are
    evaluated as ``||left_i^dagger m||`` which is algebraically identical and
    keeps tiny singular values accurate in absolute terms. When the two
    singular values of a 2-row matrix agree within ``DEGENERACY_TOL`` the
    canonical basis is used for the left vectors.
    """
    arr = np.asarray(as_matrix(m), dtype=np.complex128)
    if arr.shape[0] == 2:
        return _svd_two_rows(arr)
    if arr.shape[0] == 4:
        return _svd_four_rows(arr)
    raise DimensionError(f"small_row_svd supports 2 or 4 rows, got {arr.shape[0]}")


@numba.njit(cache=True)
def _off_norm(a):
    n = a.shape[0]
    s = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                s += abs(a[i, j]) ** 2
    return np.sqrt(s)


@numba.njit(cache=True)
def _jacobi_kernel(a, vt, target, max_sweeps):
    """Cyclic Jacobi with round-robin ordering, in place.

    Each round rotates n/2 disjoint index pairs, so row and column updates
    both stream along rows. ``vt`` accumulates the transposed eigenvectors.
    Returns the number of sweeps used, or -1 if not converged.
    """
    n = a.shape[0]
    m = n + (n % 2)
    half = m // 2
    players = np.arange(m)
    pp = np.empty(half, np.int64)
    qq = np.empty(half, np.int64)
    cs = np.empty(half)
    sn = np.empty(half)
    ph = np.empty(half, a.dtype)
    for sweep in range(max_sweeps):
        if _off_norm(a) <= target:
            return sweep
        for _ in range(m - 1):
            active = 0
            for j in range(half):
                x = players[j]
                y = players[m - 1 - j]
                if x > y:
                    x, y = y, x
                pp[j] = x
                qq[j] = y
                cs[j] = 1.0
                sn[j] = 0.0
                ph[j] = 1.0
                if y >= n:
                    continue
                apq = a[x, y]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                tau = (a[y, y].real - a[x, x].real) / (2.0 * mag)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                cs[j] = c
                sn[j] = t * c
                ph[j] = apq / mag
                active += 1
            if active > 0:
                for j in range(half):
                    s = sn[j]
                    if s == 0.0:
                        continue
                    p = pp[j]
                    q = qq[j]
                    c = cs[j]
                    e = ph[j]
                    for k in range(n):
                        apk = a[p, k]
                        aqk = a[q, k]
                        a[p, k] = c * apk - s * e * aqk
                        a[q, k] = s * apk + c * e * aqk
                for k in range(n):
                    for j in range(half):
                        s = sn[j]
                        if s == 0.0:
                            continue
                        p = pp[j]
                        q = qq[j]
                        c = cs[j]
                        e = np.conj(ph[j])
                        akp = a[k, p]
                        akq = a[k, q]
                        a[k, p] = c * akp - s * e * akq
                        a[k, q] = s * akp + c * e * akq
                for j in range(half):
                    s = sn[j]
                    if s == 0.0:
                        continue
                    p = pp[j]
                    q = qq[j]
                    c = cs[j]
                    e = np.conj(ph[j])
                    for k in range(n):
                        vp = vt[p, k]
                        vq = vt[q, k]
                        vt[p, k] = c * vp - s * e * vq
                        vt[q, k] = s * vp + c * e * vq
            last = players[m - 1]
            for i in range(m - 1, 1, -1):
                players[i] = players[i - 1]
            players[1] = last
    if _off_norm(a) <= target:
        return max_sweeps
    return -1


def eig_hermitian(m, tol: float = 1e-12, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``tol * ||m||_F``. Eigenvalues are returned in descending order with the
    eigenvectors as the matching columns. Real symmetric input is handled in
    real arithmetic and yields real eigenvectors.

    Raises:
        DimensionError: ``m`` is not square.
        NotHermitianError: ``||m - m^dagger||_F > 1e-10 ||m||_F``.
    """
    arr = as_matrix(m)
    n = arr.shape[0]
    if arr.shape[1] != n:
        raise DimensionError(f"eig_hermitian needs a square matrix, got {arr.shape}")
    scale = fro_norm(arr)
    if fro_norm(arr - arr.conj().T) > 1e-10 * scale:
        raise NotHermitianError("matrix is not Hermitian within 1e-10 relative Frobenius norm")
    if np.iscomplexobj(arr) and np.any(arr.imag != 0.0):
        work = np.ascontiguousarray(0.5 * (arr + arr.conj().T), dtype=np.complex128)
    else:
        work = np.ascontiguousarray(0.5 * (arr.real + arr.real.T), dtype=np.float64)
    vt = np.eye(n, dtype=work.dtype)
    if n > 1 and scale > 0.0:
        sweeps = _jacobi_kernel(work, vt, tol * scale, max_sweeps)
        if sweeps < 0:
            raise SchmidtError(f"Jacobi did not converge in {max_sweeps} sweeps")
    values = np.diag(work).real.copy()
    order = np.argsort(-values, kind="stable")
    return values[order], np.ascontiguousarray(vt[order].T)


def norm2_diff(a, b) -> float:
    """``||a - b||_2``."""
    x = as_vector(a)
    y = as_vector(b)
    if x.shape != y.shape:
        raise DimensionError(f"dimension mismatch: {x.size} vs {y.size}")
    return math.sqrt(_sqnorm(x - y))


def mse_diff(a, b) -> float:
    """Mean squared error ``||a - b||^2 / dim``."""
    x = as_vector(a)
    return norm2_diff(x, b) ** 2 / x.size

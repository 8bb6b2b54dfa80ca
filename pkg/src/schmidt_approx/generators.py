"""Seeded construction of every input studied: random data and its Gram
matrices, QFT matrices, ring images, transverse-field Ising Hamiltonians,
variational circuits, and CSV datasets.

Randomness comes from :class:`Rng`, a thin wrapper around numpy's PCG64 bit
generator. Only the raw 64-bit stream is taken from numpy (that stream is
stable across numpy versions and platforms); the conversion to doubles and
the four distributions are defined here, so samples do not depend on
numpy's ``Generator`` method implementations.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .circuits import Circuit, Gate, GateKind
from .errors import DimensionError, FormatError, SizeGuardError

__all__ = [
    "Rng",
    "Distribution",
    "TfimSpec",
    "VqcSpec",
    "random_matrix",
    "gram",
    "symmetrize",
    "qft_matrix",
    "rings_image",
    "tfim_hamiltonian",
    "tfim_bonds",
    "vqc_build",
    "load_csv_matrix",
    "iris_path",
]

MAX_QFT_QUBITS = 12
MAX_TFIM_QUBITS = 10


class Rng:
    """Seeded PRNG: PCG64 raw 64-bit output mapped to doubles as ``(x >> 11) * 2**-53``.

    Normal variates use Box-Muller on consecutive uniform pairs, exponential
    ones use the inverse CDF, Poisson ones use Knuth's multiplication method.
    """

    def __init__(self, seed: int):
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uint64(self, size: int) -> np.ndarray:
        return np.asarray(self._bits.random_raw(size), dtype=np.uint64)

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1)."""
        return (self.uint64(size) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, size: int) -> np.ndarray:
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.stack((radius * np.cos(angle), radius * np.sin(angle)), axis=1).reshape(-1)
        return z[:size]

    def exponential(self, size: int) -> np.ndarray:
        return -np.log1p(-self.uniform(size))

    def poisson(self, size: int, lam: float = 1.0) -> np.ndarray:
        limit = math.exp(-lam)
        out = np.empty(size, dtype=np.float64)
        for i in range(size):
            k = 0
            p = 1.0
            while True:
                p *= float(self.uniform(1)[0])
                if p <= limit:
                    break
                k += 1
            out[i] = k
        return out


class Distribution(str, enum.Enum):
    UNIFORM = "uniform"
    NORMAL = "normal"
    EXPONENTIAL = "exponential"
    POISSON = "poisson"


def random_matrix(rows: int, cols: int, kind: Distribution | str, rng: Rng) -> np.ndarray:
    """Real ``rows x cols`` matrix with i.i.d. entries, drawn row-major."""
    if rows < 1 or cols < 1:
        raise DimensionError("rows and cols must be positive")
    kind = Distribution(kind)
    size = rows * cols
    draw = {
        Distribution.UNIFORM: rng.uniform,
        Distribution.NORMAL: rng.normal,
        Distribution.EXPONENTIAL: rng.exponential,
        Distribution.POISSON: rng.poisson,
    }[kind]
    return draw(size).reshape(rows, cols)


def gram(x) -> np.ndarray:
    """``G = X^dagger X``; the columns of ``X`` are the data vectors."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise DimensionError("gram expects a matrix")
    return x.conj().T @ x


def symmetrize(x) -> np.ndarray:
    """``X + X^T`` (plain transpose)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise DimensionError(f"symmetrize expects a square matrix, got {x.shape}")
    return x + x.T


def qft_matrix(n_qubits: int) -> np.ndarray:
    """``QFT[j, k] = omega**(j k) / sqrt(N)`` with ``omega = exp(2 pi i / N)``."""
    if not 1 <= n_qubits <= MAX_QFT_QUBITS:
        raise SizeGuardError(f"qft_matrix supports 1..{MAX_QFT_QUBITS} qubits, got {n_qubits}")
    dim = 2**n_qubits
    j = np.arange(dim, dtype=np.int64)
    exponent = np.outer(j, j) % dim  # reduce before scaling to keep the angle exact
    out = np.exp(2j * np.pi * exponent / dim) / math.sqrt(dim)
    # exact values where the phase is a multiple of pi/2
    quarter = exponent * 4 % dim == 0
    k4 = (exponent * 4 // dim) % 4
    exact = np.array([1, 1j, -1, -1j])[k4] / math.sqrt(dim)
    return np.where(quarter, exact, out)


DEFAULT_RING_RADII = ((0.35, 0.45), (0.75, 0.85))


def rings_image(
    side: int = 128,
    ring_radii=DEFAULT_RING_RADII,
    noise_std: float = 0.05,
    rng: Rng | None = None,
) -> np.ndarray:
    """Concentric rings on a ``side x side`` grid.

    Pixels whose center lies in an annulus (radii in units of ``side / 2``)
    get ``1 + noise``; everything else is 0. Noise is drawn for every pixel
    in row-major order so the stream does not depend on the radii.
    """
    if side < 8 or side & (side - 1):
        raise DimensionError("side must be a power of two >= 8")
    radii = list(ring_radii)
    if not radii:
        raise ValueError("at least one ring is required")
    coords = (np.arange(side) + 0.5 - side / 2) / (side / 2)
    dist = np.hypot(coords[:, None], coords[None, :])
    inside = np.zeros((side, side), dtype=bool)
    for r_in, r_out in radii:
        inside |= (dist >= r_in) & (dist <= r_out)
    if noise_std > 0.0:
        if rng is None:
            raise ValueError("noise requires an rng")
        noise = noise_std * rng.normal(side * side).reshape(side, side)
    else:
        noise = np.zeros((side, side))
    return np.where(inside, 1.0 + noise, 0.0)


@dataclass(frozen=True)
class TfimSpec:
    """``H = sum_i h_i X_i + sum_bonds J_b Z_i Z_j`` on ``n`` qubits.

    The field acts on every site; couplings act between neighbours among the
    first ``c`` sites. ``topology="chain"`` gives the ``c - 1`` open bonds,
    ``"ring"`` adds the bond between sites ``c-1`` and ``0`` (only when
    ``c >= 3``). With
    ``random_fields`` the per-site fields and per-bond couplings are
    ``h * z`` and ``J * z`` for standard normal ``z`` drawn from ``seed``.
    """

    n: int
    h: float = 1.0
    J: float = 1.0
    c: int | None = None
    topology: str = "chain"
    random_fields: bool = False
    seed: int = 0

    def __post_init__(self):
        c = self.n if self.c is None else self.c
        if self.n < 1:
            raise ValueError("n must be positive")
        if not 1 <= c <= self.n:
            raise ValueError(f"need 1 <= c <= n, got c={c}, n={self.n}")
        if self.topology not in ("ring", "chain"):
            raise ValueError(f"unknown topology {self.topology!r}")
        object.__setattr__(self, "c", c)


def tfim_bonds(spec: TfimSpec) -> list[tuple[int, int]]:
    c = spec.c
    bonds = [(i, i + 1) for i in range(c - 1)]
    if spec.topology == "ring" and c >= 3:
        bonds.append((c - 1, 0))
    return bonds


_SX = np.array([[0.0, 1.0], [1.0, 0.0]])
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def _pauli_string(n: int, ops: dict[int, np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1))
    for site in range(n):
        out = np.kron(out, ops.get(site, np.eye(2)))
    return out


def tfim_hamiltonian(spec: TfimSpec) -> np.ndarray:
    """Dense real symmetric TFIM Hamiltonian (site 0 is the most significant bit)."""
    n = spec.n
    if n > MAX_TFIM_QUBITS:
        raise SizeGuardError(f"dense TFIM limited to {MAX_TFIM_QUBITS} qubits, got {n}")
    bonds = tfim_bonds(spec)
    if spec.random_fields:
        rng = Rng(spec.seed)
        fields = spec.h * rng.normal(n)
        couplings = spec.J * rng.normal(len(bonds)) if bonds else np.zeros(0)
    else:
        fields = np.full(n, spec.h)
        couplings = np.full(len(bonds), spec.J)
    dim = 2**n
    h = np.zeros((dim, dim))
    for site in range(n):
        if fields[site] != 0.0:
            h += fields[site] * _pauli_string(n, {site: _SX})
    for (i, j), coupling in zip(bonds, couplings):
        if coupling != 0.0:
            h += coupling * _pauli_string(n, {i: _SZ, j: _SZ})
    return h


@dataclass(frozen=True)
class VqcSpec:
    n: int = 4
    depth: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.n % 2:
            raise ValueError("VQC needs an even number of qubits >= 2")
        if self.depth < 4 or self.depth % 4:
            raise ValueError("VQC depth must be a positive multiple of 4")


def vqc_build(spec: VqcSpec) -> Circuit:
    """Layered Ry / controlled-Ry circuit with normal random angles.

    Each depth-4 block is: Ry on every qubit, CRy on pairs (2k, 2k+1),
    Ry on every qubit, CRy on pairs (2k+1, 2k+2). Angles are drawn in gate
    order.
    """
    rng = Rng(spec.seed)
    n = spec.n
    per_block = 2 * n + n // 2 + (n // 2 - 1)
    thetas = iter(rng.normal(per_block * (spec.depth // 4)).tolist())
    gates: list[Gate] = []
    for _ in range(spec.depth // 4):
        gates += [Gate(GateKind.RY, q, theta=next(thetas)) for q in range(n)]
        gates += [Gate(GateKind.CRY, k + 1, ((k, 1),), theta=next(thetas)) for k in range(0, n - 1, 2)]
        gates += [Gate(GateKind.RY, q, theta=next(thetas)) for q in range(n)]
        gates += [Gate(GateKind.CRY, k + 1, ((k, 1),), theta=next(thetas)) for k in range(1, n - 1, 2)]
    return Circuit(n, tuple(gates))


def iris_path() -> Path:
    """Bundled iris measurements (150 x 4, header row; sepal length, sepal
    width, petal length, petal width in cm)."""
    return Path(str(resources.files("schmidt_approx") / "data" / "iris.csv"))


def load_csv_matrix(
    path,
    has_header: bool = False,
    take_rows: int | None = None,
    normalize: bool = False,
) -> np.ndarray:
    """Read a CSV of reals into a ``samples x features`` matrix.

    ``normalize`` scales the result to unit Frobenius norm.

    Raises:
        FormatError: unreadable cell, ragged row, empty file, or
            ``take_rows`` larger than the number of rows.
    """
    path = str(path)
    rows: list[list[float]] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            if lineno == 1 and has_header:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            try:
                values = [float(cell) for cell in record]
            except ValueError as exc:
                raise FormatError(f"not a number: {exc}", lineno, path) from None
            if not all(math.isfinite(x) for x in values):
                raise FormatError("non-finite value", lineno, path)
            if rows and len(values) != len(rows[0]):
                raise FormatError(f"expected {len(rows[0])} columns, got {len(values)}", lineno, path)
            rows.append(values)
    if not rows:
        raise FormatError("no data rows", None, path)
    if take_rows is not None:
        if take_rows < 1 or take_rows > len(rows):
            raise FormatError(f"take_rows={take_rows} but file has {len(rows)} rows", None, path)
        rows = rows[:take_rows]
    out = np.array(rows, dtype=np.float64)
    if normalize:
        nrm = math.sqrt(float(np.sum(out * out)))
        if nrm > 0.0:
            out = out / nrm
    return out


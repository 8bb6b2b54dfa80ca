"""Gate lists, a small state-vector simulator, and LCU synthesis.

Qubit 0 is the most significant bit of a basis index, consistent with the
order in which the Schmidt tree peels qubits. The rotation convention is

    Ry(theta) = [[cos(theta/2),  sin(theta/2)],
                 [-sin(theta/2), cos(theta/2)]]

An LCU circuit realizes ``sum_i alpha_i U_i`` for unitary tensor terms: the
ancilla register is prepared with amplitudes ``sqrt(|alpha_i| / sum |alpha|)``,
each term is applied under the ancilla pattern ``i``, the preparation is
undone, and the all-zero ancilla outcome is kept.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, SizeGuardError
from .terms import TensorTermOperator, is_unitary

__all__ = [
    "GateKind",
    "Gate",
    "Circuit",
    "LcuCircuit",
    "ry_matrix",
    "simulate",
    "circuit_unitary",
    "lcu_synthesize",
    "lcu_postselect",
    "export_circuit",
    "format_circuit",
    "parse_circuit",
    "parse_circuit_text",
]

MAX_SIM_QUBITS = 14
MAX_UNITARY_QUBITS = 10


class GateKind(str, enum.Enum):
    RY = "RY"
    CRY = "CRY"
    G1 = "G1"
    CG1 = "CG1"


def ry_matrix(theta: float) -> np.ndarray:
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array([[c, s], [-s, c]], dtype=np.complex128)


@dataclass(frozen=True)
class Gate:
    """One gate. ``controls`` holds ``(qubit, polarity)`` pairs; ``matrix``
    holds the four row-major entries of a G1/CG1 gate."""

    kind: GateKind
    target: int
    controls: tuple[tuple[int, int], ...] = ()
    theta: float | None = None
    matrix: tuple[complex, complex, complex, complex] | None = None

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "controls", tuple((int(q), int(p)) for q, p in self.controls))
        qubits = [q for q, _ in self.controls]
        if self.target in qubits:
            raise ValueError("target qubit cannot also be a control")
        if len(set(qubits)) != len(qubits):
            raise ValueError("duplicate control qubit")
        if any(p not in (0, 1) for _, p in self.controls):
            raise ValueError("control polarity must be 0 or 1")
        if kind in (GateKind.RY, GateKind.CRY):
            if self.theta is None:
                raise ValueError(f"{kind.value} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        else:
            if self.matrix is None:
                raise ValueError(f"{kind.value} needs a 2x2 matrix")
            entries = tuple(complex(x) for x in np.asarray(self.matrix).reshape(-1))
            if len(entries) != 4:
                raise ValueError("gate matrix must have four entries")
            object.__setattr__(self, "matrix", entries)
        if kind is GateKind.RY and self.controls:
            raise ValueError("RY takes no controls")
        if kind is GateKind.CRY and (len(self.controls) != 1 or self.controls[0][1] != 1):
            raise ValueError("CRY takes exactly one control of polarity 1")
        if kind is GateKind.G1 and self.controls:
            raise ValueError("G1 takes no controls; use CG1")
        if kind is GateKind.CG1 and not self.controls:
            raise ValueError("CG1 needs at least one control")

    def unitary(self) -> np.ndarray:
        if self.kind in (GateKind.RY, GateKind.CRY):
            return ry_matrix(self.theta)
        return np.array(self.matrix, dtype=np.complex128).reshape(2, 2)

    def qubits(self) -> list[int]:
        return [self.target] + [q for q, _ in self.controls]


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            bad = [q for q in g.qubits() if not 0 <= q < self.n_qubits]
            if bad:
                raise ValueError(f"qubit index {bad[0]} out of range for {self.n_qubits} qubits")


def _apply_gate(state: np.ndarray, gate: Gate, n: int) -> None:
    """Apply in place; ``state`` has shape ``(2,)*n + (batch,)``."""
    m = gate.unitary()
    idx: list = [slice(None)] * n + [slice(None)]
    for q, p in gate.controls:
        idx[q] = p
    idx = tuple(idx)
    sub = state[idx]
    axis = gate.target - sum(1 for q, _ in gate.controls if q < gate.target)
    s0 = np.take(sub, 0, axis=axis)
    s1 = np.take(sub, 1, axis=axis)
    out = np.stack((m[0, 0] * s0 + m[0, 1] * s1, m[1, 0] * s0 + m[1, 1] * s1), axis=axis)
    state[idx] = out


def _run(c: Circuit, states: np.ndarray, allow_nonunitary: bool) -> np.ndarray:
    n = c.n_qubits
    if not allow_nonunitary:
        for k, g in enumerate(c.gates):
            if g.kind in (GateKind.G1, GateKind.CG1) and not is_unitary(g.unitary()):
                raise ValueError(f"gate {k} is not unitary")
    batch = states.shape[1]
    work = np.array(states, dtype=np.complex128).reshape((2,) * n + (batch,))
    for g in c.gates:
        _apply_gate(work, g, n)
    return work.reshape(2**n, batch)


def simulate(c: Circuit, initial, allow_nonunitary: bool = False) -> np.ndarray:
    """State after applying the gates of ``c`` in order to ``initial``.

    Args:
        allow_nonunitary: accept non-unitary G1/CG1 matrices (analysis only).
    """
    if c.n_qubits > MAX_SIM_QUBITS:
        raise SizeGuardError(f"simulator limited to {MAX_SIM_QUBITS} qubits")
    psi = np.asarray(initial, dtype=np.complex128).reshape(-1)
    if psi.size != 2**c.n_qubits:
        raise DimensionError(f"initial state has dim {psi.size}, circuit needs {2**c.n_qubits}")
    return _run(c, psi[:, None], allow_nonunitary)[:, 0]


def circuit_unitary(c: Circuit, allow_nonunitary: bool = False) -> np.ndarray:
    """Dense matrix whose columns are the simulated basis states."""
    if c.n_qubits > MAX_UNITARY_QUBITS:
        raise SizeGuardError(f"circuit_unitary limited to {MAX_UNITARY_QUBITS} qubits")
    dim = 2**c.n_qubits
    return _run(c, np.eye(dim, dtype=np.complex128), allow_nonunitary)


@dataclass(frozen=True)
class LcuCircuit:
    circuit: Circuit
    n_ancilla: int
    n_system: int
    prepare_amplitudes: np.ndarray = field(compare=False)
    scale: float = 1.0
    """``sum |alpha_i|``; the kept branch equals ``(sum alpha_i U_i) psi / scale``."""

    postselect: int = 0


def _rotation(c: float, s: float) -> tuple[complex, ...]:
    # [[c, -s], [s, c]] sends |0> to c|0> + s|1>
    return (complex(c), complex(-s), complex(s), complex(c))


def _prepare_gates(amplitudes: np.ndarray, m: int) -> list[Gate]:
    """Uniformly controlled rotation cascade producing non-negative ``amplitudes``."""
    gates = []
    mass = np.asarray(amplitudes, dtype=np.float64) ** 2
    for level in range(m):
        block = 2 ** (m - level)
        for prefix in range(2**level):
            chunk = mass[prefix * block : (prefix + 1) * block]
            lo = float(np.sum(chunk[: block // 2]))
            hi = float(np.sum(chunk[block // 2 :]))
            tot = lo + hi
            if tot > 0.0:
                c, s = math.sqrt(lo / tot), math.sqrt(hi / tot)
            else:
                c, s = 1.0, 0.0
            controls = tuple((q, (prefix >> (level - 1 - q)) & 1) for q in range(level))
            kind = GateKind.CG1 if controls else GateKind.G1
            gates.append(Gate(kind, level, controls, matrix=_rotation(c, s)))
    return gates


def _dagger(g: Gate) -> Gate:
    m = g.unitary().conj().T
    return Gate(g.kind, g.target, g.controls, matrix=tuple(m.reshape(-1)))


def lcu_synthesize(terms: list[TensorTermOperator], tol: float = 1e-10) -> LcuCircuit:
    """LCU circuit for ``sum_i alpha_i Q_1^i (x) ... (x) Q_n^i`` with unitary factors.

    Ancillas are qubits ``0..m-1`` with ``m = ceil(log2 r)``; system qubit
    ``k`` is circuit qubit ``m + k``. The phase of ``alpha_i`` is folded into
    the first factor of term ``i``.

    Raises:
        ValueError: empty term list, zero coefficients, or a non-unitary factor
            (split it first with ``split_into_unitaries``).
    """
    if not terms:
        raise ValueError("cannot synthesize an empty term sum")
    n = terms[0].n
    for i, t in enumerate(terms):
        if t.n != n:
            raise DimensionError("inhomogeneous factor counts in term sum")
        for k, q in enumerate(t.factors):
            if not is_unitary(q, tol):
                raise ValueError(f"term {i} factor {k} is not unitary")
    r = len(terms)
    m = (r - 1).bit_length()
    weights = np.array([abs(complex(t.alpha)) for t in terms])
    total = math.fsum(weights)
    if total == 0.0:
        raise ValueError("all coefficients are zero")
    amps = np.zeros(2**m)
    amps[:r] = np.sqrt(weights / total)
    prepare = _prepare_gates(amps, m)
    select: list[Gate] = []
    for i, t in enumerate(terms):
        a = complex(t.alpha)
        phase = a / abs(a) if a != 0 else 1.0
        pattern = tuple((q, (i >> (m - 1 - q)) & 1) for q in range(m))
        for k, q in enumerate(t.factors):
            mat = np.asarray(q, dtype=np.complex128) * (phase if k == 0 else 1.0)
            kind = GateKind.CG1 if pattern else GateKind.G1
            select.append(Gate(kind, m + k, pattern, matrix=tuple(mat.reshape(-1))))
    unprepare = [_dagger(g) for g in reversed(prepare)]
    circuit = Circuit(m + n, tuple(prepare + select + unprepare))
    return LcuCircuit(circuit, m, n, amps, total)


def lcu_postselect(lcu: LcuCircuit, psi) -> np.ndarray:
    """System amplitudes on the all-zero ancilla outcome, rescaled by
    ``sum |alpha|`` so the result is ``(sum alpha_i U_i) psi`` itself."""
    psi = np.asarray(psi, dtype=np.complex128).reshape(-1)
    dim = 2**lcu.n_system
    if psi.size != dim:
        raise DimensionError(f"state has dim {psi.size}, expected {dim}")
    full = np.zeros(2**lcu.circuit.n_qubits, dtype=np.complex128)
    full[:dim] = psi
    out = simulate(lcu.circuit, full)
    return out[:dim] * lcu.scale


def _fmt(x: float) -> str:
    return repr(float(x))


def format_circuit(c: Circuit) -> str:
    lines = [f"CIRCUIT n={c.n_qubits}"]
    for g in c.gates:
        if g.kind is GateKind.RY:
            lines.append(f"RY {g.target} {_fmt(g.theta)}")
        elif g.kind is GateKind.CRY:
            lines.append(f"CRY {g.controls[0][0]} {g.target} {_fmt(g.theta)}")
        else:
            nums = " ".join(f"{_fmt(z.real)} {_fmt(z.imag)}" for z in g.matrix)
            ctrl = "".join(f" {q}:{p}" for q, p in g.controls)
            lines.append(f"{g.kind.value} {g.target}{ctrl} {nums}")
    return "\n".join(lines) + "\n"


def export_circuit(c: Circuit, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_circuit(c))


def _parse_float(tok: str, lineno: int, path) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise FormatError(f"bad number {tok!r}", lineno, path) from None
    if not math.isfinite(x):
        raise FormatError(f"non-finite number {tok!r}", lineno, path)
    return x


def _parse_int(tok: str, lineno: int, path) -> int:
    try:
        return int(tok)
    except ValueError:
        raise FormatError(f"bad integer {tok!r}", lineno, path) from None


def parse_circuit_text(text: str, path: str | None = None) -> Circuit:
    n = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if n is None:
            if toks[0] != "CIRCUIT" or len(toks) != 2 or not toks[1].startswith("n="):
                raise FormatError("expected header 'CIRCUIT n=<qubits>'", lineno, path)
            n = _parse_int(toks[1][2:], lineno, path)
            if n < 1:
                raise FormatError("qubit count must be positive", lineno, path)
            continue
        op = toks[0]
        try:
            if op == "RY":
                if len(toks) != 3:
                    raise FormatError("RY needs <target> <theta>", lineno, path)
                gate = Gate(GateKind.RY, _parse_int(toks[1], lineno, path), theta=_parse_float(toks[2], lineno, path))
            elif op == "CRY":
                if len(toks) != 4:
                    raise FormatError("CRY needs <ctrl> <target> <theta>", lineno, path)
                ctrl = _parse_int(toks[1], lineno, path)
                gate = Gate(
                    GateKind.CRY,
                    _parse_int(toks[2], lineno, path),
                    ((ctrl, 1),),
                    theta=_parse_float(toks[3], lineno, path),
                )
            elif op in ("G1", "CG1"):
                if len(toks) < 2:
                    raise FormatError(f"{op} needs a target", lineno, path)
                target = _parse_int(toks[1], lineno, path)
                rest = toks[2:]
                controls = []
                while rest and ":" in rest[0]:
                    q, _, p = rest.pop(0).partition(":")
                    controls.append((_parse_int(q, lineno, path), _parse_int(p, lineno, path)))
                if len(rest) != 8:
                    raise FormatError(f"{op} needs 8 numbers, got {len(rest)}", lineno, path)
                vals = [_parse_float(t, lineno, path) for t in rest]
                mat = tuple(complex(vals[2 * i], vals[2 * i + 1]) for i in range(4))
                gate = Gate(GateKind(op), target, tuple(controls), matrix=mat)
            else:
                raise FormatError(f"unknown gate {op!r}", lineno, path)
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(str(exc), lineno, path) from None
        bad = [q for q in gate.qubits() if not 0 <= q < n]
        if bad:
            raise FormatError(f"qubit index {bad[0]} out of range for n={n}", lineno, path)
        gates.append(gate)
    if n is None:
        raise FormatError("missing CIRCUIT header", None, path)
    return Circuit(n, tuple(gates))


def parse_circuit(path) -> Circuit:
    path = Path(path)
    return parse_circuit_text(path.read_text(), str(path))

"""Text and binary file formats.

Matrices and vectors::

    CMAT <rows> <cols>
    <rows*cols complex tokens, row-major, whitespace separated>

    CVEC <dim>
    <dim complex tokens>

A complex token is ``a``, ``a+bi`` or ``a-bi`` with ``a`` and ``b`` written
as shortest round-trip decimals (at most 17 significant digits), so text
files reproduce the doubles exactly.

``CMATB`` is the binary variant: the 8-byte magic ``b"CMATB\\0\\0\\0"``,
little-endian u64 rows and cols, then interleaved little-endian f64
``re, im`` pairs in row-major order.

Decompositions are stored as TERMS files::

    SCHMIDT-TERMS mode=<vector|operator> factors=<n> terms=<r> norm=<f> [threshold=<kind>:<value>]
    <coefficient> <factor entries ...> [@<path id>]

one line per term, factors flattened in order (2 or 4 complex tokens each).
"""

from __future__ import annotations

import math
import re
import struct
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .tree import Decomposition, Mode, PathTerm, Threshold, ThresholdKind

__all__ = [
    "format_complex",
    "parse_complex",
    "write_matrix",
    "write_vector",
    "write_matrix_binary",
    "read_array",
    "write_terms",
    "read_terms",
    "write_csv",
]

CMATB_MAGIC = b"CMATB\x00\x00\x00"

_NUM = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^([+-]?{_NUM})(?:([+-])({_NUM})i)?$")


def format_complex(z: complex) -> str:
    z = complex(z)
    re_, im = z.real, z.imag
    if not (math.isfinite(re_) and math.isfinite(im)):
        raise ValueError("non-finite value cannot be written")
    if im == 0.0:
        return repr(re_)
    sign = "-" if math.copysign(1.0, im) < 0 else "+"
    return f"{re_!r}{sign}{abs(im)!r}i"


def parse_complex(tok: str) -> complex:
    m = _COMPLEX_RE.match(tok)
    if m is None:
        raise ValueError(f"bad complex token {tok!r}")
    re_ = float(m.group(1))
    if m.group(2) is None:
        return complex(re_, 0.0)
    im = float(m.group(3))
    return complex(re_, -im if m.group(2) == "-" else im)


def _write_text(path, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _body(values: np.ndarray, per_line: int) -> str:
    flat = [format_complex(z) for z in values.reshape(-1)]
    lines = [" ".join(flat[i : i + per_line]) for i in range(0, len(flat), per_line)]
    return "\n".join(lines) + ("\n" if lines else "")


def write_matrix(m, path) -> None:
    m = np.asarray(m)
    if m.ndim != 2:
        raise DimensionError("write_matrix expects a 2-D array")
    _write_text(path, f"CMAT {m.shape[0]} {m.shape[1]}\n" + _body(m, m.shape[1]))


def write_vector(v, path) -> None:
    v = np.asarray(v).reshape(-1)
    _write_text(path, f"CVEC {v.size}\n" + _body(v, 8))


def write_matrix_binary(m, path) -> None:
    m = np.asarray(m, dtype=np.complex128)
    if m.ndim == 1:
        m = m.reshape(-1, 1)
    data = np.empty(m.size * 2, dtype="<f8")
    data[0::2] = m.real.reshape(-1)
    data[1::2] = m.imag.reshape(-1)
    with open(path, "wb") as fh:
        fh.write(CMATB_MAGIC + struct.pack("<QQ", m.shape[0], m.shape[1]))
        fh.write(data.tobytes())


def _read_binary(raw: bytes, path: str) -> np.ndarray:
    if len(raw) < 24:
        raise FormatError("truncated CMATB header", None, path)
    rows, cols = struct.unpack("<QQ", raw[8:24])
    expected = 24 + 16 * rows * cols
    if len(raw) != expected:
        raise FormatError(f"CMATB payload has {len(raw)} bytes, expected {expected}", None, path)
    data = np.frombuffer(raw[24:], dtype="<f8")
    out = (data[0::2] + 1j * data[1::2]).reshape(rows, cols)
    if not np.all(np.isfinite(out)):
        raise FormatError("non-finite value in CMATB payload", None, path)
    return out


def _tokens(lines, start: int, path: str):
    for lineno, line in enumerate(lines[start:], start=start + 1):
        for tok in line.split():
            try:
                yield parse_complex(tok)
            except ValueError as exc:
                raise FormatError(str(exc), lineno, path) from None


def read_array(path) -> np.ndarray:
    """Read a CMAT, CVEC or CMATB file; vectors come back 1-D."""
    path = str(path)
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FormatError(f"cannot read file: {exc.strerror}", None, path) from None
    if raw.startswith(CMATB_MAGIC):
        return _read_binary(raw, path)
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError:
        raise FormatError("not a text matrix file", None, path) from None
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty file", None, path)
    head = lines[0].split()
    try:
        if head and head[0] == "CMAT" and len(head) == 3:
            shape = (int(head[1]), int(head[2]))
        elif head and head[0] == "CVEC" and len(head) == 2:
            shape = (int(head[1]),)
        else:
            raise ValueError
    except ValueError:
        raise FormatError("expected header 'CMAT <rows> <cols>' or 'CVEC <dim>'", 1, path) from None
    if any(s < 1 for s in shape):
        raise FormatError("dimensions must be positive", 1, path)
    values = list(_tokens(lines, 1, path))
    need = math.prod(shape)
    if len(values) != need:
        raise FormatError(f"expected {need} entries, found {len(values)}", None, path)
    return np.array(values, dtype=np.complex128).reshape(shape)


def write_terms(d: Decomposition, path) -> None:
    head = (
        f"SCHMIDT-TERMS mode={d.mode.value} factors={d.n_factors} terms={len(d.terms)} "
        f"norm={float(d.input_norm)!r} threshold={d.threshold.kind.value}:{float(d.threshold.value)!r}"
    )
    lines = [head]
    for t in d.terms:
        parts = [format_complex(t.coefficient)]
        parts += [format_complex(z) for f in t.factors for z in f]
        if t.path_id is not None:
            parts.append("@" + t.path_id)
        lines.append(" ".join(parts))
    _write_text(path, "\n".join(lines) + "\n")


def read_terms(path) -> Decomposition:
    path = str(path)
    try:
        lines = Path(path).read_text().splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise FormatError(f"cannot read file: {exc}", None, path) from None
    if not lines or not lines[0].startswith("SCHMIDT-TERMS"):
        raise FormatError("expected 'SCHMIDT-TERMS' header", 1, path)
    fields = {}
    for tok in lines[0].split()[1:]:
        key, sep, val = tok.partition("=")
        if not sep:
            raise FormatError(f"bad header field {tok!r}", 1, path)
        fields[key] = val
    try:
        mode = Mode(fields["mode"])
        n = int(fields["factors"])
        r = int(fields["terms"])
        norm = float(fields["norm"])
        threshold = Threshold()
        if "threshold" in fields:
            kind, _, value = fields["threshold"].partition(":")
            threshold = Threshold(float(value), ThresholdKind(kind))
    except (KeyError, ValueError) as exc:
        raise FormatError(f"bad header: {exc}", 1, path) from None
    width = mode.radix
    body = [(i, ln) for i, ln in enumerate(lines[1:], start=2) if ln.strip()]
    if len(body) != r:
        raise FormatError(f"header announces {r} terms, found {len(body)}", None, path)
    terms = []
    for lineno, line in body:
        toks = line.split()
        path_id = None
        if toks and toks[-1].startswith("@"):
            path_id = toks.pop()[1:]
        if len(toks) != 1 + n * width:
            raise FormatError(f"expected {1 + n * width} values, got {len(toks)}", lineno, path)
        try:
            vals = [parse_complex(t) for t in toks]
        except ValueError as exc:
            raise FormatError(str(exc), lineno, path) from None
        if vals[0].imag != 0.0 or vals[0].real < 0.0:
            raise FormatError("coefficient must be a non-negative real", lineno, path)
        factors = tuple(np.array(vals[1 + k * width : 1 + (k + 1) * width], dtype=np.complex128) for k in range(n))
        terms.append(PathTerm(vals[0].real, factors, path_id))
    return Decomposition(mode, width**n, norm, tuple(terms), threshold)


def write_csv(path, header: list[str], rows) -> None:
    """Plain CSV with LF endings and shortest round-trip floats."""

    def cell(x):
        if isinstance(x, (float, np.floating)):
            return repr(float(x))
        return str(x)

    lines = [",".join(header)] + [",".join(cell(x) for x in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")

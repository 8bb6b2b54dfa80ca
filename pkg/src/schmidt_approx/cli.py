"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 input or parse error, 3 size guard.
"""

from __future__ import annotations

import argparse
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import analysis
from .circuits import export_circuit, lcu_synthesize
from .errors import SchmidtError, SizeGuardError
from .generators import (
    Distribution,
    Rng,
    TfimSpec,
    VqcSpec,
    gram,
    load_csv_matrix,
    qft_matrix,
    random_matrix,
    rings_image,
    tfim_hamiltonian,
    vqc_build,
)
from .circuits import circuit_unitary
from .io import read_array, read_terms, write_csv, write_matrix, write_matrix_binary, write_terms, write_vector
from .linalg import unvec, vec
from .recipes import RECIPES, run_recipe
from .terms import (
    OpCounter,
    TensorTermVector,
    decomposition_to_operator_terms,
    entry,
    expand_to_unitary_terms,
    invert_single_term,
    operator_term_to_dense,
    sum_apply,
)
from .tree import Mode, Threshold, decompose, reconstruct

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_GUARD = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _unit_interval(text: str) -> float:
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 <= x <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {text}")
    return x


def _positive(text: str) -> int:
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return x


def _write_array(arr: np.ndarray, path: str, binary: bool) -> None:
    if binary:
        write_matrix_binary(arr, path)
    elif arr.ndim == 1:
        write_vector(arr, path)
    else:
        write_matrix(arr, path)


# gen


def _cmd_gen(args) -> int:
    kind = args.kind
    rng = Rng(args.seed)
    if kind == "qft":
        out = qft_matrix(args.qubits)
    elif kind == "tfim":
        out = tfim_hamiltonian(
            TfimSpec(args.n, args.h, args.J, args.c, args.topology, args.random_fields, args.seed)
        )
    elif kind == "vqc":
        circuit = vqc_build(VqcSpec(args.qubits, args.depth, args.seed))
        if args.circuit:
            export_circuit(circuit, args.circuit)
        out = circuit_unitary(circuit)
    elif kind == "gram":
        if args.csv:
            x = load_csv_matrix(args.csv, has_header=args.header, take_rows=args.take_rows)
            out = gram(x.T)  # rows of the file are samples; samples become columns
        else:
            out = gram(random_matrix(args.rows, args.cols, args.dist, rng))
    elif kind == "rings":
        out = rings_image(args.side, noise_std=args.noise, rng=rng)
    elif kind == "random":
        out = random_matrix(args.rows, args.cols, args.dist, rng)
    else:  # pragma: no cover - argparse restricts choices
        raise UsageError(f"unknown generator {kind}")
    _write_array(np.asarray(out), args.output, args.binary)
    print(f"wrote {kind} {out.shape[0]}x{out.shape[1]} to {args.output}")
    return EXIT_OK


# decompose


def _threshold_from(args) -> Threshold:
    if args.cutoff_coeff is not None:
        return Threshold.coefficient(args.cutoff_coeff)
    if args.cutoff_prob is not None:
        return Threshold.probability(args.cutoff_prob)
    return Threshold.probability(0.0)


def _cmd_decompose(args) -> int:
    arr = read_array(args.input)
    mode = Mode(args.mode)
    if mode is Mode.OPERATOR and (arr.ndim != 2 or arr.shape[0] != arr.shape[1]):
        raise UsageError("--mode operator needs a square matrix input")
    v = vec(arr) if arr.ndim == 2 else arr
    start = time.perf_counter()
    policy = "gap" if args.gap_cutoff else "midpoint" if args.midpoint_cutoff else None
    if policy is None:
        kept = decompose(v, mode, _threshold_from(args), workers=args.workers)
        full, cut = None, None
    else:
        full = decompose(v, mode, Threshold.probability(0.0), workers=args.workers)
        kept, cut = analysis.cutoff_filter(full, policy)
    report = analysis.build_report(kept, v, str(args.input), args.bins, full, cut)
    report.wall_time_ms = (time.perf_counter() - start) * 1000.0
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_terms(kept, out / "terms.txt")
    analysis.write_report(report, out)
    print(
        f"terms kept {report.n_terms_kept}/{report.n_terms_total}  kept_mass {report.kept_mass:.12g}  "
        f"l2_error {report.l2_error:.6g}  mse {report.mse:.6g}"
        + (f"  cutoff {cut:.6g}" if cut is not None else "")
    )
    return EXIT_OK


# term-file consumers


def _operator_terms(path):
    d = read_terms(path)
    n = d.n_factors
    if d.mode is Mode.VECTOR and n % 2:
        raise UsageError(f"{path}: a VECTOR decomposition of a square matrix needs an even factor count, got {n}")
    return d, decomposition_to_operator_terms(d)


def _cmd_reconstruct(args) -> int:
    d = read_terms(args.terms)
    v = reconstruct(d)
    if d.mode is Mode.OPERATOR:
        side = int(round(math.sqrt(v.size)))
        out = unvec(v, side, side)
    elif args.rows is not None:
        if v.size % args.rows:
            raise UsageError(f"--rows {args.rows} does not divide dimension {v.size}")
        out = unvec(v, args.rows, v.size // args.rows)
    else:
        out = v
    _write_array(out, args.output, args.binary)
    print(f"wrote reconstruction of {len(d.terms)} terms to {args.output}")
    return EXIT_OK


def _cmd_apply(args) -> int:
    _, ops = _operator_terms(args.terms)
    psi = read_array(args.state).reshape(-1)
    out = sum_apply(ops, psi)
    _write_array(out, args.output, args.binary)
    print(f"applied {len(ops)} terms to a dim-{psi.size} state; wrote {args.output}")
    return EXIT_OK


def _cmd_entry(args) -> int:
    _, ops = _operator_terms(args.terms)
    psi = read_array(args.state).reshape(-1)
    # the state enters as a sum of product terms
    ds = decompose(psi, Mode.VECTOR, Threshold.probability(0.0))
    counter = OpCounter()
    total = 0j
    for t in ds.terms:
        term = TensorTermVector(complex(t.coefficient * ds.input_norm), t.factors)
        total += entry(ops, term, args.index, counter)
    re_, im = total.real, total.imag
    print(f"{re_!r}{'+' if im >= 0 else '-'}{abs(im)!r}i")
    print(f"# {len(ops)} operator terms x {len(ds.terms)} state terms, {counter.count} scalar ops", file=sys.stderr)
    return EXIT_OK


def _cmd_invert(args) -> int:
    d, ops = _operator_terms(args.terms)
    if len(ops) != 1 and not args.leading:
        raise UsageError(f"invert needs a single-term decomposition, {args.terms} has {len(ops)} (see --leading)")
    inv = invert_single_term(ops[0])
    _write_array(operator_term_to_dense(inv), args.output, args.binary)
    print(f"wrote inverse of the leading term to {args.output}")
    return EXIT_OK


def _cmd_synth(args) -> int:
    _, ops = _operator_terms(args.terms)
    unitary_terms = [u for t in ops for u in expand_to_unitary_terms(t)]
    lcu = lcu_synthesize(unitary_terms)
    export_circuit(lcu.circuit, args.output)
    print(
        f"{len(ops)} terms -> {len(unitary_terms)} unitary terms, {lcu.n_ancilla} ancilla, "
        f"{len(lcu.circuit.gates)} gates; postselect ancillas on 0, rescale by {lcu.scale!r}"
    )
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    d, _ = _operator_terms(args.terms)
    h = read_array(args.original)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.size != d.input_dim:
        raise UsageError(f"{args.original} must be the square matrix that {args.terms} decomposes")
    spec = analysis.compare_spectrum(h, d)
    write_csv(args.output, ["index", "lambda_true", "lambda_approx"], spec.rows())
    status = "holds" if spec.within_bound() else "VIOLATED"
    print(f"max |lambda - lambda~| {spec.max_deviation:.6g}, Weyl bound {spec.bound:.6g} ({status})")
    return EXIT_OK


def _cmd_report(args) -> int:
    out = Path(args.out_dir) / args.name
    result = run_recipe(args.name, out, workers=args.workers)
    for line in result.lines():
        print(line)
    print(f"artifacts in {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schmidt-approx", description="Tensor-product approximation by recursive Schmidt splits.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def out_opts(sp, required=True):
        sp.add_argument("-o", "--output", required=required, help="output file")
        sp.add_argument("--binary", action="store_true", help="write the CMATB binary format")

    g = sub.add_parser("gen", help="generate an input matrix")
    g.add_argument("kind", choices=["qft", "tfim", "vqc", "gram", "rings", "random"])
    g.add_argument("--qubits", type=_positive, default=4)
    g.add_argument("--n", type=_positive, default=10, help="TFIM sites")
    g.add_argument("--h", type=float, default=0.1)
    g.add_argument("--J", type=float, default=0.5)
    g.add_argument("--c", type=_positive, default=None, help="number of coupled TFIM sites (default: all)")
    g.add_argument("--topology", choices=["chain", "ring"], default="chain")
    g.add_argument("--random-fields", action="store_true")
    g.add_argument("--depth", type=_positive, default=4)
    g.add_argument("--circuit", help="also export the VQC gate list to this file")
    g.add_argument("--rows", type=_positive, default=16)
    g.add_argument("--cols", type=_positive, default=16)
    g.add_argument("--dist", choices=[d.value for d in Distribution], default="uniform")
    g.add_argument("--csv", help="build the Gram matrix from a CSV of samples")
    g.add_argument("--header", action="store_true", help="CSV has a header row")
    g.add_argument("--take-rows", type=_positive, default=None)
    g.add_argument("--side", type=_positive, default=128)
    g.add_argument("--noise", type=float, default=0.05)
    g.add_argument("--seed", type=int, default=0)
    out_opts(g)
    g.set_defaults(func=_cmd_gen)

    d = sub.add_parser("decompose", help="decompose a matrix or vector file")
    d.add_argument("input")
    d.add_argument("--mode", choices=["vector", "operator"], default="vector")
    cut = d.add_mutually_exclusive_group()
    cut.add_argument("--cutoff-prob", type=_unit_interval, help="keep paths with coefficient^2 >= X")
    cut.add_argument("--cutoff-coeff", type=_unit_interval, help="keep paths with coefficient >= X")
    cut.add_argument("--gap-cutoff", action="store_true", help="cut at the widest log gap")
    cut.add_argument("--midpoint-cutoff", action="store_true", help="cut at the geometric mid-range")
    d.add_argument("--bins", type=_positive, default=40)
    d.add_argument("--workers", type=_positive, default=1)
    d.add_argument("--out-dir", default="decomposition")
    d.set_defaults(func=_cmd_decompose)

    r = sub.add_parser("reconstruct", help="sum the terms of a TERMS file")
    r.add_argument("terms")
    r.add_argument("--rows", type=_positive, default=None, help="reshape a VECTOR result into rows")
    out_opts(r)
    r.set_defaults(func=_cmd_reconstruct)

    a = sub.add_parser("apply", help="apply an operator term sum to a state")
    a.add_argument("terms")
    a.add_argument("state")
    out_opts(a)
    a.set_defaults(func=_cmd_apply)

    e = sub.add_parser("entry", help="one entry of (sum of terms) * state")
    e.add_argument("terms")
    e.add_argument("state")
    e.add_argument("--index", type=int, required=True)
    e.set_defaults(func=_cmd_entry)

    i = sub.add_parser("invert", help="invert a single operator term")
    i.add_argument("terms")
    i.add_argument("--leading", action="store_true", help="invert the largest term of a multi-term file")
    out_opts(i)
    i.set_defaults(func=_cmd_invert)

    s = sub.add_parser("synth", help="export an LCU circuit for a term sum")
    s.add_argument("terms")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=_cmd_synth)

    sp = sub.add_parser("spectrum", help="compare eigenvalues of a matrix and its reconstruction")
    sp.add_argument("terms")
    sp.add_argument("--original", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=_cmd_spectrum)

    rp = sub.add_parser("report", help="run a named experiment recipe")
    rp.add_argument("name", choices=list(RECIPES))
    rp.add_argument("--out-dir", default="reports")
    rp.add_argument("--workers", type=_positive, default=1)
    rp.set_defaults(func=_cmd_report)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeGuardError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (SchmidtError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run())

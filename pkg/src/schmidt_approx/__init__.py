"""Tensor-product approximation of vectors and matrices by recursive Schmidt
splits, with arithmetic, reporting and circuit synthesis on the pruned terms."""

from __future__ import annotations

from .errors import (
    DimensionError,
    FormatError,
    NotHermitianError,
    SchmidtError,
    SingularFactorError,
    SizeGuardError,
)
from .linalg import eig_hermitian, norm2_diff, small_row_svd, unvec, vec
from .tree import (
    Decomposition,
    Mode,
    PathTerm,
    Threshold,
    ThresholdKind,
    approx_error,
    coefficient_histogram,
    decompose,
    reconstruct,
    suggest_cutoff,
)
from .terms import (
    TensorTermOperator,
    TensorTermVector,
    apply,
    entry,
    invert_single_term,
    split_into_unitaries,
    sum_apply,
)

__version__ = "0.1.0"

"""Certified zeros of square polynomial and rational systems.

krawcert certifies that a numerically computed candidate approximates an
isolated true zero: it wraps the candidate in a complex interval box and
proves, with outward-rounded interval arithmetic and a contraction test on
the Krawczyk operator, that the box contains exactly one zero. Certified
boxes can additionally be proven real, positive, and pairwise distinct.

The heavy float64 interval kernel exists twice: a compiled extension and a
pure-Python reference with bit-for-bit identical results; the import picks
the extension when available (set KRAWCERT_PURE=1 to force the fallback).
Higher precisions use a directed-rounding backend on arbitrary-precision
floats.
"""

from ._kernel import IMPL as kernel_impl
from .certify import (
    Candidate,
    CertificateResult,
    NewtonResult,
    approximate_inverse,
    certify_candidate,
    check_reality,
    inflate,
    krawczyk_operator,
    newton_refine,
    refine_in_box,
)
from .cli import (
    CertificationSummary,
    RunOptions,
    load_solutions,
    run,
    write_report,
)
from .distinct import DistinctnessReport, group_overlaps, squared_distance
from .errors import (
    EvaluationError,
    IntervalDivisionError,
    IntervalError,
    KrawcertError,
    ParseError,
    PrecisionMismatchError,
    SingularMatrixError,
    SolutionsFormatError,
)
from .expr import (
    CompiledSystem,
    ExpressionSystem,
    SlpProgram,
    certify_positive_evaluation,
    compile,
    eval_interval,
    eval_point,
    load_system,
    parse_system,
)
from .interval import (
    LADDER_BITS,
    ComplexInterval,
    IntervalBox,
    IntervalMatrix,
    PrecisionLevel,
    RealInterval,
    complex_op,
    ladder,
    mag,
    mat_vec,
    op_norm_inf,
    overlaps,
    real_op,
    subset_interior,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_impl",
    # interval arithmetic
    "RealInterval",
    "ComplexInterval",
    "IntervalBox",
    "IntervalMatrix",
    "PrecisionLevel",
    "LADDER_BITS",
    "ladder",
    "real_op",
    "complex_op",
    "mag",
    "op_norm_inf",
    "mat_vec",
    "subset_interior",
    "overlaps",
    # expressions and tapes
    "ExpressionSystem",
    "SlpProgram",
    "CompiledSystem",
    "parse_system",
    "load_system",
    "compile",
    "eval_point",
    "eval_interval",
    "certify_positive_evaluation",
    # certification
    "Candidate",
    "NewtonResult",
    "CertificateResult",
    "approximate_inverse",
    "newton_refine",
    "inflate",
    "krawczyk_operator",
    "certify_candidate",
    "check_reality",
    "refine_in_box",
    # distinctness
    "DistinctnessReport",
    "squared_distance",
    "group_overlaps",
    # front end
    "RunOptions",
    "CertificationSummary",
    "load_solutions",
    "run",
    "write_report",
    # errors
    "KrawcertError",
    "IntervalError",
    "IntervalDivisionError",
    "PrecisionMismatchError",
    "ParseError",
    "EvaluationError",
    "SingularMatrixError",
    "SolutionsFormatError",
]

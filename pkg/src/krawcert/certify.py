"""Krawczyk certification of isolated nonsingular zeros.

Given a compiled system and an approximate zero, the engine refines the
candidate with Newton's method, builds a conditioner Y from the inverse
Jacobian at the refined point, inflates the point to a box I, and applies
the contraction test: the candidate is certified when the Krawczyk image

    K(I) = x - Y*boxF(x) + (1 - Y*boxJF(I))*(I - x)

lies strictly inside I and sqrt(2)*||1 - Y*boxJF(I)||_inf < 1, where both
the image and the norm are certified upper bounds from interval arithmetic.
A certified box contains exactly one zero of F. When the test fails at 53
bits the same steps are repeated on an escalation ladder of higher working
precisions, carrying the refined point forward exactly.

Soundness never depends on the quality of Newton's iterates or of Y; those
only decide whether the interval test can succeed.
"""

import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from . import mparith
from ._kernel import kernel
from .errors import (
    EvaluationError,
    IntervalError,
    SingularMatrixError,
)
from .expr import _eval_box_raw, _eval_point_raw
from .interval import IntervalBox
from .precision import PrecisionLevel, ladder

__all__ = [
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
]

_F64 = 53
_SQRT2_UP = kernel.sqrt_up(2.0)

REASON_SINGULAR = "singular Jacobian"
REASON_CONTRACTION = "contraction test failed"
REASON_ENCLOSURE = "enclosure failure"


@dataclass(frozen=True)
class Candidate:
    """An approximate zero to be certified, tagged with its input index."""

    x: tuple
    index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "x", tuple(complex(z) for z in self.x))


@dataclass(frozen=True)
class NewtonResult:
    """Outcome of Newton refinement; point is the last accepted iterate."""

    point: tuple
    iterations: int
    converged: bool
    singular: bool


@dataclass(frozen=True)
class CertificateResult:
    status: str
    precision_used: PrecisionLevel
    box: IntervalBox = None
    refined_point: tuple = None
    conditioner: tuple = None
    contraction_norm: float = None
    krawczyk_image: IntervalBox = None
    reality: str = "unknown"
    positive: str = "not_applicable"
    reason: str = None
    index: int = None
    native: tuple = field(default=None, repr=False, compare=False)

    @property
    def certified(self):
        return self.status == "certified"


# ---------------------------------------------------------------------------
# level-native point plumbing
#
# At 53 bits a point is an (n, 2) float64 array and matrices are complex128;
# above 53 bits a point is a list of (re, im) raw mpf pairs and matrices are
# nested lists of pairs. Escalation converts floats to mpf values exactly,
# so the refined point carries across levels without loss.


def _pack_f64(x):
    out = np.empty((len(x), 2), dtype=np.float64)
    for i, z in enumerate(x):
        z = complex(z)
        out[i, 0], out[i, 1] = z.real, z.imag
    return out


def _f64_to_mp(xarr):
    return [
        (mparith.from_float_exact(float(re)), mparith.from_float_exact(float(im)))
        for re, im in xarr
    ]


def _thin_box_f64(xarr):
    n = len(xarr)
    out = np.empty((n, 4), dtype=np.float64)
    out[:, 0] = out[:, 1] = xarr[:, 0]
    out[:, 2] = out[:, 3] = xarr[:, 1]
    return out


def _thin_box_mp(pairs):
    return [(re, re, im, im) for re, im in pairs]


def _thin_matrix_f64(y):
    n = y.shape[0]
    out = np.empty((n, n, 4), dtype=np.float64)
    out[:, :, 0] = out[:, :, 1] = y.real
    out[:, :, 2] = out[:, :, 3] = y.imag
    return out


def _thin_matrix_mp(rows):
    return [[(re, re, im, im) for re, im in row] for row in rows]


def _point_view(x_native, bits):
    """Float-complex view of a level-native point (display only)."""
    if bits == _F64:
        return tuple(complex(re, im) for re, im in x_native)
    return tuple(
        complex(mparith._to_float_near(re), mparith._to_float_near(im))
        for re, im in x_native
    )


def _matrix_view(y_native, bits):
    if bits == _F64:
        return tuple(tuple(complex(v) for v in row) for row in y_native)
    return tuple(
        tuple(
            complex(mparith._to_float_near(re), mparith._to_float_near(im))
            for re, im in row
        )
        for row in y_native
    )


# ---------------------------------------------------------------------------
# conditioner


def approximate_inverse(m):
    """Approximate inverse of a complex point matrix at 53 bits.

    The result needs no correctness guarantee: certification soundness
    comes from the interval test, a bad inverse only makes it fail.
    """
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise IntervalError("matrix is not square")
    try:
        y = np.linalg.inv(a)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(
            "matrix is singular at working precision"
        ) from None
    if not np.all(np.isfinite(y.view(np.float64))):
        raise SingularMatrixError("matrix is singular at working precision")
    return y


def _inverse_native(jmat, bits):
    if bits == _F64:
        return approximate_inverse(jmat)
    return mparith.lu_inverse(jmat, bits)


# ---------------------------------------------------------------------------
# Newton refinement


def _eval_fj_point(compiled, x_native, bits):
    """(F(x), JF(x)) as level-native point structures, or None on failure."""
    n = compiled.n
    slots, status, _ = _eval_point_raw(compiled.f_slp, x_native, bits)
    if status != kernel.OK:
        return None
    if bits == _F64:
        f = np.array(
            [complex(slots[s, 0], slots[s, 1]) for s in compiled.f_slp.outputs]
        )
    else:
        f = [slots[s] for s in compiled.f_slp.outputs]
    slots, status, _ = _eval_point_raw(compiled.jac_slp, x_native, bits)
    if status != kernel.OK:
        return None
    if bits == _F64:
        jflat = [complex(slots[s, 0], slots[s, 1]) for s in compiled.jac_slp.outputs]
        j = np.array(jflat).reshape(n, n)
    else:
        out = compiled.jac_slp.outputs
        j = [[slots[out[i * n + k]] for k in range(n)] for i in range(n)]
    return f, j


def _newton_native(compiled, x_native, max_iter, bits):
    """Newton iteration at one precision level.

    Applies steps while their infinity norm strictly decreases; a worsening
    step is discarded. Stops early once the step is below 4u*(1+|x|_inf),
    i.e. refinement has hit the level's noise floor.
    """
    x = x_native
    prev_norm = None
    iterations = 0
    converged = False
    singular = False
    for _ in range(max_iter):
        fj = _eval_fj_point(compiled, x, bits)
        if fj is None:
            singular = True
            break
        f, j = fj
        if bits == _F64:
            try:
                step = np.linalg.solve(j, f)
            except np.linalg.LinAlgError:
                singular = True
                break
            if not np.all(np.isfinite(step.view(np.float64))):
                singular = True
                break
            step_norm = float(np.max(np.abs(step))) if len(step) else 0.0
            if prev_norm is not None and step_norm >= prev_norm:
                break
            x = x - np.column_stack((step.real, step.imag))
            iterations += 1
            xnorm = float(np.max(np.hypot(x[:, 0], x[:, 1]))) if len(x) else 0.0
            if step_norm <= 4.0 * (2.0 ** -bits) * (1.0 + xnorm):
                converged = True
                break
            prev_norm = step_norm
        else:
            try:
                rows = mparith.lu_solve(j, [[fi] for fi in f], bits)
            except SingularMatrixError:
                singular = True
                break
            step = [row[0] for row in rows]
            step_norm = mparith.fzero
            for s in step:
                m = mparith.cp_mag(s, bits)
                if mparith.mpf_gt(m, step_norm):
                    step_norm = m
            if prev_norm is not None and not mparith.mpf_lt(step_norm, prev_norm):
                break
            x = [mparith.cp_sub(xi, si, bits) for xi, si in zip(x, step)]
            iterations += 1
            xnorm = mparith.fzero
            for xi in x:
                m = mparith.cp_mag(xi, bits)
                if mparith.mpf_gt(m, xnorm):
                    xnorm = m
            floor = mparith.from_fraction(Fraction(1, 2 ** (bits - 2)), bits, "c")
            thr = mparith.mpf_mul(
                floor,
                mparith.mpf_add(mparith.fone, xnorm, bits, "c"),
                bits,
                "c",
            )
            if not mparith.mpf_gt(step_norm, thr):
                converged = True
                break
            prev_norm = step_norm
    return x, iterations, converged, singular


def newton_refine(compiled, x, max_iter=8):
    """Refine an approximate zero by Newton's method at 53 bits."""
    if len(x) != compiled.n:
        raise IntervalError(
            f"expected {compiled.n} coordinates, got {len(x)}"
        )
    xn, iterations, converged, singular = _newton_native(
        compiled, _pack_f64(x), max_iter, _F64
    )
    return NewtonResult(
        point=tuple(complex(re, im) for re, im in xn),
        iterations=iterations,
        converged=converged,
        singular=singular,
    )


# ---------------------------------------------------------------------------
# inflation


def _inflate_native(x_native, residual_bounds, level):
    """Box with radius max(residual*u^(-1/4), 4u*(1+|x_j|)) per coordinate.

    The u^(-1/4) factor compensates the interval overestimation of the
    residual; the floor keeps the box nonempty when the residual is exactly
    zero. The radius itself needs no directed rounding for soundness (any
    box is a legal test box); bounds use outward rounding so x stays inside.
    """
    bits = level.significand_bits
    if bits == _F64:
        factor = level.inflation_factor()
        floor4u = level.zero_residual_floor()
        raw = np.empty((len(x_native), 4), dtype=np.float64)
        for j, (re, im) in enumerate(x_native):
            mag = kernel.cmag_up(re, re, im, im)
            r1 = kernel.mul_up(float(residual_bounds[j]), factor)
            r2 = kernel.mul_up(floor4u, kernel.add_up(1.0, mag))
            r = r1 if r1 > r2 else r2
            raw[j, 0] = kernel.sub_down(re, r)
            raw[j, 1] = kernel.add_up(re, r)
            raw[j, 2] = kernel.sub_down(im, r)
            raw[j, 3] = kernel.add_up(im, r)
        rects = [tuple(row.tolist()) for row in raw]
        return IntervalBox._from_raw(rects, bits)
    factor = mparith.from_fraction(Fraction(2 ** (bits // 4)), bits, "c")
    floor4u = mparith.from_fraction(Fraction(1, 2 ** (bits - 2)), bits, "c")
    rects = []
    for j, (re, im) in enumerate(x_native):
        mag = mparith.cp_mag((re, im), bits)
        r1 = mparith.mpf_mul(residual_bounds[j], factor, bits, "c")
        r2 = mparith.mpf_mul(
            floor4u, mparith.mpf_add(mparith.fone, mag, bits, "c"), bits, "c"
        )
        r = r1 if mparith.mpf_gt(r1, r2) else r2
        rects.append(
            (
                mparith.mpf_sub(re, r, bits, "f"),
                mparith.mpf_add(re, r, bits, "c"),
                mparith.mpf_sub(im, r, bits, "f"),
                mparith.mpf_add(im, r, bits, "c"),
            )
        )
    return IntervalBox._from_raw(rects, bits)


def inflate(x, residual_bounds, level):
    """Public inflation entry point at the given PrecisionLevel."""
    if not isinstance(level, PrecisionLevel):
        level = PrecisionLevel(level)
    bits = level.significand_bits
    if bits == _F64:
        native = [(complex(z).real, complex(z).imag) for z in x]
        bounds = [float(b) for b in residual_bounds]
    else:
        native = []
        for z in x:
            if isinstance(z, tuple):
                native.append(z)
            else:
                z = complex(z)
                native.append(
                    (
                        mparith.from_float_exact(z.real),
                        mparith.from_float_exact(z.imag),
                    )
                )
        bounds = [
            b if isinstance(b, tuple) else mparith.from_float_exact(float(b))
            for b in residual_bounds
        ]
    return _inflate_native(native, bounds, level)


# ---------------------------------------------------------------------------
# the Krawczyk operator


class _EnclosureFailure(Exception):
    pass


def _check(status):
    if status != kernel.OK:
        raise _EnclosureFailure


def _residual_mags(compiled, x_native, y_native, bits):
    """Upper bounds on |(Y*boxF(x))_j|, the conditioned residual."""
    if bits == _F64:
        slots, status, _ = _eval_box_raw(
            compiled.f_slp, _thin_box_f64(np.asarray(x_native)), bits
        )
        _check(status)
        fbox = np.array([slots[s] for s in compiled.f_slp.outputs])
        t, status, _ = kernel.box_matvec(_thin_matrix_f64(y_native), fbox)
        _check(status)
        return [kernel.cmag_up(*row) for row in t.tolist()], t
    slots, status, _ = _eval_box_raw(
        compiled.f_slp, _thin_box_mp(x_native), bits
    )
    _check(status)
    fbox = [slots[s] for s in compiled.f_slp.outputs]
    t = mparith.box_matvec(_thin_matrix_mp(y_native), fbox, bits)
    return [mparith.cmag_up(row, bits) for row in t], t


def _krawczyk_native(compiled, box_raw, x_native, y_native, bits):
    """(K raw rectangles, contraction norm upper bound) at one level."""
    n = compiled.n
    if bits == _F64:
        xarr = np.asarray(x_native)
        ymat = _thin_matrix_f64(y_native)
        slots, status, _ = _eval_box_raw(compiled.f_slp, _thin_box_f64(xarr), bits)
        _check(status)
        fbox = np.array([slots[s] for s in compiled.f_slp.outputs])
        t1, status, _ = kernel.box_matvec(ymat, fbox)
        _check(status)
        slots, status, _ = _eval_box_raw(compiled.jac_slp, box_raw, bits)
        _check(status)
        out = compiled.jac_slp.outputs
        jbox = np.array([slots[s] for s in out]).reshape(n, n, 4)
        prod, status, _ = kernel.box_matmul(ymat, jbox)
        _check(status)
        e = kernel.box_eye_sub(prod)
        norm = kernel.norm_rowsum_up(e)
        if not np.isfinite(norm):
            raise _EnclosureFailure
        imx = np.empty((n, 4), dtype=np.float64)
        for j in range(n):
            imx[j] = kernel.csub(
                box_raw[j, 0], box_raw[j, 1], box_raw[j, 2], box_raw[j, 3],
                xarr[j, 0], xarr[j, 0], xarr[j, 1], xarr[j, 1],
            )
        t3, status, _ = kernel.box_matvec(e, imx)
        _check(status)
        rects = []
        for j in range(n):
            xr, xi = float(xarr[j, 0]), float(xarr[j, 1])
            head = kernel.csub(xr, xr, xi, xi, *t1[j].tolist())
            rect = kernel.cadd(*head, *t3[j].tolist())
            if not all(np.isfinite(v) for v in rect):
                raise _EnclosureFailure
            rects.append(tuple(float(v) for v in rect))
        return rects, float(norm)
    ymat = _thin_matrix_mp(y_native)
    slots, status, _ = _eval_box_raw(compiled.f_slp, _thin_box_mp(x_native), bits)
    _check(status)
    fbox = [slots[s] for s in compiled.f_slp.outputs]
    t1 = mparith.box_matvec(ymat, fbox, bits)
    slots, status, _ = _eval_box_raw(compiled.jac_slp, box_raw, bits)
    _check(status)
    out = compiled.jac_slp.outputs
    jbox = [[slots[out[i * n + k]] for k in range(n)] for i in range(n)]
    prod = mparith.box_matmul(ymat, jbox, bits)
    e = mparith.box_eye_sub(prod, bits)
    norm = mparith.norm_rowsum_up(e, bits)
    imx = [
        mparith.csub(box_raw[j], (x[0], x[0], x[1], x[1]), bits)
        for j, x in enumerate(x_native)
    ]
    t3 = mparith.box_matvec(e, imx, bits)
    rects = []
    for j, x in enumerate(x_native):
        head = mparith.csub((x[0], x[0], x[1], x[1]), t1[j], bits)
        rects.append(mparith.cadd(head, t3[j], bits))
    return rects, norm


def _contraction_holds(norm, bits):
    """Strict test sqrt(2)*norm < 1 using upper bounds throughout."""
    if bits == _F64:
        return kernel.mul_up(_SQRT2_UP, norm) < 1.0
    two = mparith.from_float_exact(2.0)
    sqrt2 = mparith.mpf_sqrt(two, bits, "c")
    return mparith.mpf_lt(mparith.mpf_mul(sqrt2, norm, bits, "c"), mparith.fone)


def krawczyk_operator(compiled, box, x, y):
    """Krawczyk image K(I) = x - Y*boxF(x) + (1 - Y*boxJF(I))*(I - x)."""
    bits = box.bits
    if bits == _F64:
        x_native = _pack_f64(x)
        y_native = np.asarray(y, dtype=np.complex128)
    else:
        x_native = [
            z
            if isinstance(z, tuple)
            else (
                mparith.from_float_exact(complex(z).real),
                mparith.from_float_exact(complex(z).imag),
            )
            for z in x
        ]
        y_native = [
            [
                v
                if isinstance(v, tuple)
                else (
                    mparith.from_float_exact(complex(v).real),
                    mparith.from_float_exact(complex(v).imag),
                )
                for v in row
            ]
            for row in y
        ]
    try:
        rects, _ = _krawczyk_native(compiled, box._raw(), x_native, y_native, bits)
    except _EnclosureFailure:
        raise EvaluationError(
            "enclosure failure while evaluating the Krawczyk operator"
        ) from None
    return IntervalBox._from_raw([tuple(r) for r in rects], bits)


# ---------------------------------------------------------------------------
# the certification loop


def _norm_view(norm, bits):
    if bits == _F64:
        return float(norm)
    return mparith.to_float_up(norm)


def _certify_at_level(compiled, x_native, level):
    """One ladder rung: refine, condition, inflate, test.

    Returns (result_or_None, reason, refined_native); a None result means
    this level failed and the caller may escalate with the refined point.
    """
    bits = level.significand_bits
    x_ref, _, _, _ = _newton_native(compiled, x_native, 8, bits)
    fj = _eval_fj_point(compiled, x_ref, bits)
    if fj is None:
        return None, REASON_ENCLOSURE, x_ref
    _, jmat = fj
    try:
        y = _inverse_native(jmat, bits)
    except SingularMatrixError:
        return None, REASON_SINGULAR, x_ref
    try:
        mags, _ = _residual_mags(compiled, x_ref, y, bits)
        box = _inflate_native(x_ref, mags, level)
        rects, norm = _krawczyk_native(compiled, box._raw(), x_ref, y, bits)
    except _EnclosureFailure:
        return None, REASON_ENCLOSURE, x_ref
    kimage = IntervalBox._from_raw([tuple(r) for r in rects], bits)
    if kimage.subset_interior(box) and _contraction_holds(norm, bits):
        if bits == _F64:
            x_nat = tuple(tuple(row) for row in x_ref.tolist())
            y_nat = tuple(tuple(row) for row in y.tolist())
        else:
            x_nat = tuple(x_ref)
            y_nat = tuple(tuple(row) for row in y)
        result = CertificateResult(
            status="certified",
            precision_used=level,
            box=box,
            refined_point=_point_view(x_ref, bits),
            conditioner=_matrix_view(y, bits),
            contraction_norm=_norm_view(norm, bits),
            krawczyk_image=kimage,
            native=(x_nat, y_nat),
        )
        return result, None, x_ref
    return None, REASON_CONTRACTION, x_ref


def certify_candidate(compiled, cand, ladder_levels=None):
    """Run the escalation ladder for one candidate.

    Returns the first level's certificate on success; after exhausting the
    ladder, a not_certified result carrying the last failure reason.
    """
    if ladder_levels is None:
        ladder_levels = ladder()
    if isinstance(cand, Candidate):
        x0 = cand.x
        index = cand.index
    else:
        x0 = tuple(complex(z) for z in cand)
        index = None
    if len(x0) != compiled.n:
        raise IntervalError(
            f"candidate has {len(x0)} coordinates, system has {compiled.n}"
        )
    x_native = _pack_f64(x0)
    reason = REASON_CONTRACTION
    last_level = ladder_levels[0] if ladder_levels else PrecisionLevel(_F64)
    for level in ladder_levels:
        bits = level.significand_bits
        if bits != _F64 and isinstance(x_native, np.ndarray):
            x_native = _f64_to_mp(x_native)
        last_level = level
        result, fail_reason, x_refined = _certify_at_level(
            compiled, x_native, level
        )
        if result is not None:
            result = replace(result, index=index)
            return check_reality(compiled, result)
        reason = fail_reason
        x_native = x_refined
    return CertificateResult(
        status="not_certified",
        precision_used=last_level,
        reason=reason,
        index=index,
    )


def check_reality(compiled, result):
    """Classify a certified box as real / not_real / unknown, and positive.

    Real: for real-coefficient systems, if the conjugated Krawczyk image
    lies in I (not necessarily strictly), the unique zero equals its own
    conjugate. Not real: some coordinate's imaginary interval omits 0.
    Both tests are one-sided; everything else stays unknown.
    """
    if result.status != "certified":
        return result
    if compiled.coefficient_kind != "real":
        return replace(result, reality="unknown", positive="not_applicable")
    box = result.box
    if result.krawczyk_image.conjugate().subset(box):
        positive = "yes"
        for entry in box:
            if not entry.re.lo_fraction() > 0:
                positive = "no"
                break
        return replace(result, reality="real", positive=positive)
    for entry in box:
        if not entry.im.contains(0):
            return replace(result, reality="not_real", positive="no")
    return replace(result, reality="unknown", positive="no")


def refine_in_box(compiled, result, x0, k):
    """Iterate x <- x - Y*F(x) from x0, keeping every iterate inside the
    certified box; converges to the associated zero at rate contraction_norm.
    """
    if result.status != "certified":
        raise IntervalError("refine_in_box requires a certified result")
    box = result.box
    bits = box.bits
    if not box.contains_point(x0):
        raise IntervalError("starting point is not inside the certified box")
    _, y_native = result.native
    if bits == _F64:
        x = [complex(z) for z in x0]
        n = len(x)
        for _ in range(k):
            pairs = _pack_f64(x)
            slots, status, _ = _eval_point_raw(compiled.f_slp, pairs, bits)
            if status != kernel.OK:
                warnings.warn("iterate left the certified box; stopping early")
                break
            f = [
                complex(slots[s, 0], slots[s, 1]) for s in compiled.f_slp.outputs
            ]
            xn = [
                x[i] - sum(y_native[i][j] * f[j] for j in range(n))
                for i in range(n)
            ]
            if not box.contains_point(xn):
                warnings.warn("iterate left the certified box; stopping early")
                break
            x = xn
        return tuple(x)
    x = []
    for z in x0:
        if isinstance(z, tuple) and len(z) == 2 and isinstance(z[0], tuple):
            x.append(z)
        elif isinstance(z, tuple):
            x.append(
                (
                    mparith.from_fraction(Fraction(z[0]), bits, "n"),
                    mparith.from_fraction(Fraction(z[1]), bits, "n"),
                )
            )
        else:
            z = complex(z)
            x.append(
                (
                    mparith.from_float_exact(z.real),
                    mparith.from_float_exact(z.imag),
                )
            )
    n = len(x)
    for _ in range(k):
        slots, status, _ = _eval_point_raw(compiled.f_slp, x, bits)
        if status != kernel.OK:
            warnings.warn("iterate left the certified box; stopping early")
            break
        f = [slots[s] for s in compiled.f_slp.outputs]
        xn = []
        for i in range(n):
            acc = (mparith.fzero, mparith.fzero)
            for j in range(n):
                acc = mparith.cp_add(
                    acc, mparith.cp_mul(y_native[i][j], f[j], bits), bits
                )
            xn.append(mparith.cp_sub(x[i], acc, bits))
        contained = all(
            box.entries[i].contains(
                (
                    mparith.fraction_from_mpf(xn[i][0]),
                    mparith.fraction_from_mpf(xn[i][1]),
                )
            )
            for i in range(n)
        )
        if not contained:
            warnings.warn("iterate left the certified box; stopping early")
            break
        x = xn
    return tuple(x)

"""Arbitrary-precision backend on mpmath's raw mpf tuples.

This is the escalation counterpart of the float64 kernel: the same interval
semantics at 128/256/512 significand bits. Values are raw libmp tuples
(sign, mantissa, exponent, bitcount); no mpmath context or other global state
is touched, every operation takes its precision explicitly, so everything
here is thread-safe and deterministic.

Directed rounding comes straight from libmp ('f' floor for lower bounds,
'c' ceiling for upper bounds, correctly rounded), so unlike the float64
kernel no error-recovery tricks are needed. Products and short sums are
formed exactly (prec 0) and rounded once, which keeps point-input cases
exact whenever the result is representable.

Complex rectangles are 4-tuples (re_lo, re_hi, im_lo, im_hi) of mpf values;
complex points are (re, im) pairs. Interval containment soundness mirrors
the kernel; statuses reuse the kernel's codes (mpf arithmetic cannot
overflow, so only ZERO_DIVISION occurs here).
"""

import math
from fractions import Fraction

from mpmath.libmp import (
    finf,
    fnan,
    fninf,
    fone,
    from_float,
    from_rational,
    fzero,
    mpf_abs,
    mpf_add,
    mpf_cmp,
    mpf_div,
    mpf_gt,
    mpf_lt,
    mpf_mul,
    mpf_neg,
    mpf_pos,
    mpf_sqrt,
    mpf_sub,
    round_ceiling,
    round_floor,
    round_nearest,
    to_float,
)

from ._kernel._pykernel import OK, OP_ADD, OP_DIV, OP_MUL, OP_SQR, OP_SUB, ZERO_DIVISION
from .errors import SingularMatrixError

_MAXF = 1.7976931348623157e308

CP_ZERO = (fzero, fzero)
CP_ONE = (fone, fzero)
ZERO4 = (fzero, fzero, fzero, fzero)


# ---------------------------------------------------------------------------
# conversions


def from_float_exact(f):
    """Exact mpf from a finite float64."""
    return from_float(f)


def from_fraction(fr, prec, rnd):
    return from_rational(fr.numerator, fr.denominator, prec, rnd)


def fraction_from_mpf(x):
    """Exact Fraction from a finite mpf."""
    sign, man, exp, bc = x
    if man == 0:
        if x == fzero:
            return Fraction(0)
        raise ValueError("mpf value is not finite")
    man = int(man)
    fr = Fraction(man, 1) if exp >= 0 else Fraction(man, 2 ** -exp)
    if exp > 0:
        fr *= 2 ** exp
    return -fr if sign else fr


def to_float_down(x):
    """Largest float64 <= x (or -inf below the float range)."""
    if x == finf:
        return math.inf
    if x == fninf:
        return -math.inf
    if x == fnan:
        return math.nan
    f = _to_float_near(mpf_pos(x, 53, round_floor))
    if math.isinf(f):
        f = _MAXF if f > 0.0 else -math.inf
    while not math.isinf(f) and mpf_gt(from_float(f), x):
        f = math.nextafter(f, -math.inf)
    return f + 0.0


def to_float_up(x):
    """Smallest float64 >= x (or +inf above the float range)."""
    if x == finf:
        return math.inf
    if x == fninf:
        return -math.inf
    if x == fnan:
        return math.nan
    f = _to_float_near(mpf_pos(x, 53, round_ceiling))
    if math.isinf(f):
        f = -_MAXF if f < 0.0 else math.inf
    while not math.isinf(f) and mpf_lt(from_float(f), x):
        f = math.nextafter(f, math.inf)
    return f + 0.0


def _to_float_near(x):
    # libmp's to_float may double-round in the subnormal range and overflow
    # silently; callers repair the direction with exact comparisons.
    return to_float(x, strict=False)


def float_down(fr):
    """Largest float64 <= the Fraction fr (or -inf below the float range)."""
    try:
        f = float(fr)
    except OverflowError:
        f = math.inf if fr > 0 else -math.inf
    if math.isinf(f):
        if f > 0.0:
            f = _MAXF
        else:
            return -math.inf
    while Fraction(f) > fr:
        f = math.nextafter(f, -math.inf)
    return f + 0.0


def float_up(fr):
    """Smallest float64 >= the Fraction fr (or +inf above the float range)."""
    try:
        f = float(fr)
    except OverflowError:
        f = math.inf if fr > 0 else -math.inf
    if math.isinf(f):
        if f < 0.0:
            f = -_MAXF
        else:
            return math.inf
    while Fraction(f) < fr:
        f = math.nextafter(f, math.inf)
    return f + 0.0


# ---------------------------------------------------------------------------
# directed decimal printing (report bounds)


def _ilog10(a):
    # exact floor(log10(a)) for a Fraction a > 0
    e = len(str(a.numerator)) - len(str(a.denominator))
    while Fraction(10) ** e > a:
        e -= 1
    while Fraction(10) ** (e + 1) <= a:
        e += 1
    return e


def _decimal_directed(fr, digits, roundup):
    if fr == 0:
        return "0"
    neg = fr < 0
    a = -fr if neg else fr
    e10 = _ilog10(a)
    scale = e10 - digits + 1
    num = a.numerator
    den = a.denominator
    if scale < 0:
        num *= 10 ** -scale
    else:
        den *= 10 ** scale
    m, rem = divmod(num, den)
    if (roundup != neg) and rem:
        m += 1
        if m == 10 ** digits:
            m //= 10
            e10 += 1
    s = str(m)
    rest = s[1:].rstrip("0")
    mantissa = s[0] + "." + (rest or "0")
    return f"{'-' if neg else ''}{mantissa}e{e10:+d}"


def decimal_down(fr, digits):
    """Decimal string d with value <= fr, `digits` significant digits."""
    return _decimal_directed(fr, digits, roundup=False)


def decimal_up(fr, digits):
    """Decimal string d with value >= fr, `digits` significant digits."""
    return _decimal_directed(fr, digits, roundup=True)


# ---------------------------------------------------------------------------
# real interval ops on (lo, hi)


def iadd(a, b, prec):
    return (
        mpf_add(a[0], b[0], prec, round_floor),
        mpf_add(a[1], b[1], prec, round_ceiling),
    )


def isub(a, b, prec):
    return (
        mpf_sub(a[0], b[1], prec, round_floor),
        mpf_sub(a[1], b[0], prec, round_ceiling),
    )


def imul(a, b, prec):
    # corner products are exact (prec 0); one directed rounding at the end
    p1 = mpf_mul(a[0], b[0])
    p2 = mpf_mul(a[0], b[1])
    p3 = mpf_mul(a[1], b[0])
    p4 = mpf_mul(a[1], b[1])
    lo = hi = p1
    for p in (p2, p3, p4):
        if mpf_lt(p, lo):
            lo = p
        elif mpf_gt(p, hi):
            hi = p
    return mpf_pos(lo, prec, round_floor), mpf_pos(hi, prec, round_ceiling)


def idiv(a, b, prec):
    # callers guarantee 0 is outside b
    q1 = mpf_div(a[0], b[0], prec, round_floor)
    q2 = mpf_div(a[0], b[1], prec, round_floor)
    q3 = mpf_div(a[1], b[0], prec, round_floor)
    q4 = mpf_div(a[1], b[1], prec, round_floor)
    lo = q1
    for q in (q2, q3, q4):
        if mpf_lt(q, lo):
            lo = q
    q1 = mpf_div(a[0], b[0], prec, round_ceiling)
    q2 = mpf_div(a[0], b[1], prec, round_ceiling)
    q3 = mpf_div(a[1], b[0], prec, round_ceiling)
    q4 = mpf_div(a[1], b[1], prec, round_ceiling)
    hi = q1
    for q in (q2, q3, q4):
        if mpf_gt(q, hi):
            hi = q
    return lo, hi


def isqr(a, prec):
    al, ah = a
    if mpf_gt(al, fzero):
        return mpf_mul(al, al, prec, round_floor), mpf_mul(ah, ah, prec, round_ceiling)
    if mpf_lt(ah, fzero):
        return mpf_mul(ah, ah, prec, round_floor), mpf_mul(al, al, prec, round_ceiling)
    u1 = mpf_mul(al, al)
    u2 = mpf_mul(ah, ah)
    hi = u1 if mpf_gt(u1, u2) else u2
    return fzero, mpf_pos(hi, prec, round_ceiling)


# ---------------------------------------------------------------------------
# complex rectangle ops on (re_lo, re_hi, im_lo, im_hi)


def cadd(a, b, prec):
    rl, rh = iadd((a[0], a[1]), (b[0], b[1]), prec)
    il, ih = iadd((a[2], a[3]), (b[2], b[3]), prec)
    return rl, rh, il, ih


def csub(a, b, prec):
    rl, rh = isub((a[0], a[1]), (b[0], b[1]), prec)
    il, ih = isub((a[2], a[3]), (b[2], b[3]), prec)
    return rl, rh, il, ih


def cneg(a):
    return mpf_neg(a[1]), mpf_neg(a[0]), mpf_neg(a[3]), mpf_neg(a[2])


def cmul(a, b, prec):
    x = (a[0], a[1])
    y = (a[2], a[3])
    w = (b[0], b[1])
    z = (b[2], b[3])
    rl, rh = isub(imul(x, w, prec), imul(y, z, prec), prec)
    il, ih = iadd(imul(x, z, prec), imul(y, w, prec), prec)
    return rl, rh, il, ih


def csqr(a, prec):
    x = (a[0], a[1])
    y = (a[2], a[3])
    rl, rh = isub(isqr(x, prec), isqr(y, prec), prec)
    t = imul(x, y, prec)
    il, ih = iadd(t, t, prec)
    return rl, rh, il, ih


def cdiv(a, b, prec):
    """Rectangle division; None when the denominator rectangle contains 0."""
    w = (b[0], b[1])
    z = (b[2], b[3])
    den = iadd(isqr(w, prec), isqr(z, prec), prec)
    if mpf_cmp(den[0], fzero) <= 0:
        return None
    x = (a[0], a[1])
    y = (a[2], a[3])
    rn = iadd(imul(x, w, prec), imul(y, z, prec), prec)
    im = isub(imul(y, w, prec), imul(x, z, prec), prec)
    rl, rh = idiv(rn, den, prec)
    il, ih = idiv(im, den, prec)
    return rl, rh, il, ih


def cmag_up(a, prec):
    """Upper bound of |z| over the rectangle, as an mpf."""
    mr = mpf_abs(a[0])
    t = mpf_abs(a[1])
    if mpf_gt(t, mr):
        mr = t
    mi = mpf_abs(a[2])
    t = mpf_abs(a[3])
    if mpf_gt(t, mi):
        mi = t
    s = mpf_add(mpf_mul(mr, mr), mpf_mul(mi, mi))
    return mpf_sqrt(s, prec, round_ceiling)


# ---------------------------------------------------------------------------
# complex point ops on (re, im), round-to-nearest


def cp_add(a, b, prec):
    return (
        mpf_add(a[0], b[0], prec, round_nearest),
        mpf_add(a[1], b[1], prec, round_nearest),
    )


def cp_sub(a, b, prec):
    return (
        mpf_sub(a[0], b[0], prec, round_nearest),
        mpf_sub(a[1], b[1], prec, round_nearest),
    )


def cp_neg(a):
    return mpf_neg(a[0]), mpf_neg(a[1])


def cp_mul(a, b, prec):
    rr = mpf_sub(mpf_mul(a[0], b[0]), mpf_mul(a[1], b[1]), prec, round_nearest)
    ri = mpf_add(mpf_mul(a[0], b[1]), mpf_mul(a[1], b[0]), prec, round_nearest)
    return rr, ri


def cp_sqr(a, prec):
    rr = mpf_sub(mpf_mul(a[0], a[0]), mpf_mul(a[1], a[1]), prec, round_nearest)
    t = mpf_mul(a[0], a[1])
    ri = mpf_add(t, t, prec, round_nearest)
    return rr, ri


def cp_div(a, b, prec):
    """Point division; None when b is exactly zero."""
    den = mpf_add(mpf_mul(b[0], b[0]), mpf_mul(b[1], b[1]))
    if den == fzero:
        return None
    nr = mpf_add(mpf_mul(a[0], b[0]), mpf_mul(a[1], b[1]))
    ni = mpf_sub(mpf_mul(a[1], b[0]), mpf_mul(a[0], b[1]))
    return (
        mpf_div(nr, den, prec, round_nearest),
        mpf_div(ni, den, prec, round_nearest),
    )


def cp_mag(a, prec):
    s = mpf_add(mpf_mul(a[0], a[0]), mpf_mul(a[1], a[1]))
    return mpf_sqrt(s, prec, round_nearest)


# ---------------------------------------------------------------------------
# tape evaluation


def eval_tape_box(code, consts, box, n_slots, prec):
    """Mp counterpart of the kernel's eval_tape_box.

    consts and box are sequences of 4-tuples of mpf. Returns
    (slots, status, bad_instruction).
    """
    slots = [ZERO4] * n_slots
    i = 0
    for rect in box:
        slots[i] = rect
        i += 1
    for rect in consts:
        slots[i] = rect
        i += 1
    for t, (op, dst, a, b) in enumerate(code.tolist()):
        va = slots[a]
        if op == OP_ADD:
            res = cadd(va, slots[b], prec)
        elif op == OP_SUB:
            res = csub(va, slots[b], prec)
        elif op == OP_MUL:
            res = cmul(va, slots[b], prec)
        elif op == OP_DIV:
            res = cdiv(va, slots[b], prec)
            if res is None:
                return slots, ZERO_DIVISION, t
        elif op == OP_SQR:
            res = csqr(va, prec)
        else:
            res = cneg(va)
        slots[dst] = res
    return slots, OK, -1


def eval_tape_point(code, consts, x, n_slots, prec):
    """Mp counterpart of the kernel's eval_tape_point ((re, im) pairs)."""
    slots = [CP_ZERO] * n_slots
    i = 0
    for p in x:
        slots[i] = p
        i += 1
    for p in consts:
        slots[i] = p
        i += 1
    for t, (op, dst, a, b) in enumerate(code.tolist()):
        va = slots[a]
        if op == OP_ADD:
            res = cp_add(va, slots[b], prec)
        elif op == OP_SUB:
            res = cp_sub(va, slots[b], prec)
        elif op == OP_MUL:
            res = cp_mul(va, slots[b], prec)
        elif op == OP_DIV:
            res = cp_div(va, slots[b], prec)
            if res is None:
                return slots, ZERO_DIVISION, t
        elif op == OP_SQR:
            res = cp_sqr(va, prec)
        else:
            res = cp_neg(va)
        slots[dst] = res
    return slots, OK, -1


# ---------------------------------------------------------------------------
# box linear algebra (lists of 4-tuples)


def box_matvec(a, v, prec):
    """Column-formula product; the vector entry is the left factor."""
    n = len(v)
    out = []
    for i in range(n):
        row = a[i]
        acc = cmul(v[0], row[0], prec)
        for j in range(1, n):
            acc = cadd(acc, cmul(v[j], row[j], prec), prec)
        out.append(acc)
    return out


def box_matmul(a, b, prec):
    n = len(a)
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for i in range(n):
            row = a[i]
            acc = cmul(b[0][j], row[0], prec)
            for k in range(1, n):
                acc = cadd(acc, cmul(b[k][j], row[k], prec), prec)
            out[i][j] = acc
    return out


def box_eye_sub(m, prec):
    n = len(m)
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            rl, rh, il, ih = m[i][j]
            if i == j:
                out[i][j] = (
                    mpf_sub(fone, rh, prec, round_floor),
                    mpf_sub(fone, rl, prec, round_ceiling),
                    mpf_neg(ih),
                    mpf_neg(il),
                )
            else:
                out[i][j] = (mpf_neg(rh), mpf_neg(rl), mpf_neg(ih), mpf_neg(il))
    return out


def norm_rowsum_up(m, prec):
    """Upper bound (mpf) for the row-sum operator norm."""
    best = fzero
    for row in m:
        s = fzero
        for rect in row:
            s = mpf_add(s, cmag_up(rect, prec), prec, round_ceiling)
        if mpf_gt(s, best):
            best = s
    return best


# ---------------------------------------------------------------------------
# dense complex solve (round-to-nearest; used for Y and Newton steps)


def _pivot_mag(p):
    return mpf_add(mpf_abs(p[0]), mpf_abs(p[1]))


def lu_solve(a, b, prec):
    """Solve A X = B by LU with partial pivoting; entries are (re, im) pairs.

    a: n lists of n pairs; b: n lists of m pairs. No accuracy guarantee is
    needed by callers (soundness comes from the interval test downstream),
    but an exactly zero pivot raises SingularMatrixError.
    """
    n = len(a)
    a = [row[:] for row in a]
    x = [row[:] for row in b]
    m = len(x[0])
    for k in range(n):
        best = k
        bestmag = _pivot_mag(a[k][k])
        for r in range(k + 1, n):
            mg = _pivot_mag(a[r][k])
            if mpf_gt(mg, bestmag):
                best = r
                bestmag = mg
        if bestmag == fzero:
            raise SingularMatrixError("matrix is singular at working precision")
        if best != k:
            a[k], a[best] = a[best], a[k]
            x[k], x[best] = x[best], x[k]
        piv = a[k][k]
        for r in range(k + 1, n):
            if a[r][k] == CP_ZERO:
                continue
            f = cp_div(a[r][k], piv, prec)
            a[r][k] = CP_ZERO
            for c in range(k + 1, n):
                a[r][c] = cp_sub(a[r][c], cp_mul(f, a[k][c], prec), prec)
            for c in range(m):
                x[r][c] = cp_sub(x[r][c], cp_mul(f, x[k][c], prec), prec)
    for k in reversed(range(n)):
        piv = a[k][k]
        for c in range(m):
            s = x[k][c]
            for j in range(k + 1, n):
                s = cp_sub(s, cp_mul(a[k][j], x[j][c], prec), prec)
            x[k][c] = cp_div(s, piv, prec)
    return x


def lu_inverse(a, prec):
    n = len(a)
    eye = [[CP_ONE if i == j else CP_ZERO for j in range(n)] for i in range(n)]
    return lu_solve(a, eye, prec)

"""Pure-Python float64 kernel: directed rounding, tape evaluation, box algebra.

This module is the reference implementation of the 53-bit backend. The
compiled kernel (_cykernel.pyx) mirrors it line for line; the two must produce
bit-identical results, so every branch, evaluation order, and min/max
tie-break here is deliberate. Keep them in sync.

Directed rounding is emulated on top of round-to-nearest arithmetic:

- add/sub: the exact rounding error of fl(a+b) is recovered with a branchless
  TwoSum; the bound moves one ulp outward only when the error has the unsound
  sign, so exact sums stay exact.
- mul: the exact error of fl(a*b) is recovered with Dekker's two-product.
  If an operand is too large for the splitter (|x| > 2^996) or the product is
  near the subnormal range (|p| < 2^-1020, where the error term itself may not
  be representable), the bound is widened unconditionally instead.
- div: exact cases (zero numerator, a == +-b, power-of-two denominator with a
  normal quotient) pass through; everything else widens one ulp.
- sqrt: fl(sqrt(a)) is exact iff its square reproduces a exactly; otherwise
  the upper bound widens one ulp.

Every produced bound is normalized with `+ 0.0` so -0.0 never escapes (the
two kernels would otherwise disagree bitwise on signed-zero ties, and report
printing would leak "-0.0").

Non-finite values are never raised here; evaluators return a status code and
the index of the offending instruction so callers can attach context.
"""

from math import frexp, inf, isfinite, nextafter, sqrt

import numpy as np

# instruction opcodes, shared with the tape builder and the compiled kernel
OP_ADD = 0
OP_SUB = 1
OP_MUL = 2
OP_DIV = 3
OP_SQR = 4
OP_NEG = 5

# evaluator status codes
OK = 0
NONFINITE = 1
ZERO_DIVISION = 2

IMPL = "python"

_SPLITTER = 134217729.0  # 2^27 + 1
_SPLIT_MAX = 2.0 ** 996  # beyond this the Dekker split overflows
_TINY = 2.0 ** -1020  # below this a product's error term may be subnormal
_DBL_MIN = 2.0 ** -1022  # smallest normal double


# ---------------------------------------------------------------------------
# scalar directed primitives


def add_down(a, b):
    s = a + b
    if not isfinite(s):
        return s
    ap = s - b
    bp = s - ap
    e = (a - ap) + (b - bp)
    if e < 0.0:
        s = nextafter(s, -inf)
    return s + 0.0


def add_up(a, b):
    s = a + b
    if not isfinite(s):
        return s
    ap = s - b
    bp = s - ap
    e = (a - ap) + (b - bp)
    if e > 0.0:
        s = nextafter(s, inf)
    return s + 0.0


def sub_down(a, b):
    return add_down(a, -b)


def sub_up(a, b):
    return add_up(a, -b)


def _prod_err(a, b, p):
    # exact a*b - p; valid only under the magnitude guards of the callers
    ca = _SPLITTER * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLITTER * b
    bhi = cb - (cb - b)
    blo = b - bhi
    return ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def mul_down(a, b):
    p = a * b
    if not isfinite(p):
        return p
    if a == 0.0 or b == 0.0:
        return p + 0.0
    if abs(a) > _SPLIT_MAX or abs(b) > _SPLIT_MAX or abs(p) < _TINY:
        return nextafter(p, -inf) + 0.0
    if _prod_err(a, b, p) < 0.0:
        p = nextafter(p, -inf)
    return p + 0.0


def mul_up(a, b):
    p = a * b
    if not isfinite(p):
        return p
    if a == 0.0 or b == 0.0:
        return p + 0.0
    if abs(a) > _SPLIT_MAX or abs(b) > _SPLIT_MAX or abs(p) < _TINY:
        return nextafter(p, inf) + 0.0
    if _prod_err(a, b, p) > 0.0:
        p = nextafter(p, inf)
    return p + 0.0


def div_down(a, b):
    q = a / b
    if not isfinite(q):
        return q
    if a == 0.0:
        return q + 0.0
    if a == b:
        return 1.0
    if a == -b:
        return -1.0
    if abs(frexp(b)[0]) == 0.5 and abs(q) >= _DBL_MIN:
        return q + 0.0
    return nextafter(q, -inf) + 0.0


def div_up(a, b):
    q = a / b
    if not isfinite(q):
        return q
    if a == 0.0:
        return q + 0.0
    if a == b:
        return 1.0
    if a == -b:
        return -1.0
    if abs(frexp(b)[0]) == 0.5 and abs(q) >= _DBL_MIN:
        return q + 0.0
    return nextafter(q, inf) + 0.0


def sqrt_up(a):
    if a == 0.0:
        return 0.0
    s = sqrt(a)
    if a >= _TINY:
        p = s * s
        if p == a and _prod_err(s, s, p) == 0.0:
            return s
    return nextafter(s, inf)


# ---------------------------------------------------------------------------
# real interval ops on (lo, hi)


def iadd(al, ah, bl, bh):
    return add_down(al, bl), add_up(ah, bh)


def isub(al, ah, bl, bh):
    return add_down(al, -bh), add_up(ah, -bl)


def imul(al, ah, bl, bh):
    lo = mul_down(al, bl)
    d = mul_down(al, bh)
    if d < lo:
        lo = d
    d = mul_down(ah, bl)
    if d < lo:
        lo = d
    d = mul_down(ah, bh)
    if d < lo:
        lo = d
    hi = mul_up(al, bl)
    u = mul_up(al, bh)
    if u > hi:
        hi = u
    u = mul_up(ah, bl)
    if u > hi:
        hi = u
    u = mul_up(ah, bh)
    if u > hi:
        hi = u
    return lo, hi


def idiv(al, ah, bl, bh):
    # callers guarantee 0 is outside [bl, bh]
    lo = div_down(al, bl)
    d = div_down(al, bh)
    if d < lo:
        lo = d
    d = div_down(ah, bl)
    if d < lo:
        lo = d
    d = div_down(ah, bh)
    if d < lo:
        lo = d
    hi = div_up(al, bl)
    u = div_up(al, bh)
    if u > hi:
        hi = u
    u = div_up(ah, bl)
    if u > hi:
        hi = u
    u = div_up(ah, bh)
    if u > hi:
        hi = u
    return lo, hi


def isqr(al, ah):
    if al > 0.0:
        return mul_down(al, al), mul_up(ah, ah)
    if ah < 0.0:
        return mul_down(ah, ah), mul_up(al, al)
    u1 = mul_up(al, al)
    u2 = mul_up(ah, ah)
    return 0.0, (u1 if u1 > u2 else u2)


# ---------------------------------------------------------------------------
# complex rectangle ops on (re_lo, re_hi, im_lo, im_hi)


def cadd(arl, arh, ail, aih, brl, brh, bil, bih):
    return (
        add_down(arl, brl),
        add_up(arh, brh),
        add_down(ail, bil),
        add_up(aih, bih),
    )


def csub(arl, arh, ail, aih, brl, brh, bil, bih):
    return (
        add_down(arl, -brh),
        add_up(arh, -brl),
        add_down(ail, -bih),
        add_up(aih, -bil),
    )


def cneg(rl, rh, il, ih):
    return (-rh + 0.0, -rl + 0.0, -ih + 0.0, -il + 0.0)


def cmul(arl, arh, ail, aih, brl, brh, bil, bih):
    xwl, xwh = imul(arl, arh, brl, brh)
    yzl, yzh = imul(ail, aih, bil, bih)
    xzl, xzh = imul(arl, arh, bil, bih)
    ywl, ywh = imul(ail, aih, brl, brh)
    rl, rh = isub(xwl, xwh, yzl, yzh)
    il, ih = iadd(xzl, xzh, ywl, ywh)
    return rl, rh, il, ih


def csqr(rl, rh, il, ih):
    x2l, x2h = isqr(rl, rh)
    y2l, y2h = isqr(il, ih)
    orl, orh = isub(x2l, x2h, y2l, y2h)
    tl, th = imul(rl, rh, il, ih)
    oil, oih = iadd(tl, th, tl, th)
    return orl, orh, oil, oih


def cdiv(arl, arh, ail, aih, brl, brh, bil, bih):
    """Rectangle division; None when the denominator rectangle contains 0."""
    w2l, w2h = isqr(brl, brh)
    z2l, z2h = isqr(bil, bih)
    dl, dh = iadd(w2l, w2h, z2l, z2h)
    if dl <= 0.0:
        return None
    xwl, xwh = imul(arl, arh, brl, brh)
    yzl, yzh = imul(ail, aih, bil, bih)
    rnl, rnh = iadd(xwl, xwh, yzl, yzh)
    ywl, ywh = imul(ail, aih, brl, brh)
    xzl, xzh = imul(arl, arh, bil, bih)
    inl, inh = isub(ywl, ywh, xzl, xzh)
    rl, rh = idiv(rnl, rnh, dl, dh)
    il, ih = idiv(inl, inh, dl, dh)
    return rl, rh, il, ih


def cmag_up(rl, rh, il, ih):
    mr = abs(rl)
    t = abs(rh)
    if t > mr:
        mr = t
    mi = abs(il)
    t = abs(ih)
    if t > mi:
        mi = t
    return sqrt_up(add_up(mul_up(mr, mr), mul_up(mi, mi)))


def _finite4(rl, rh, il, ih):
    return isfinite(rl) and isfinite(rh) and isfinite(il) and isfinite(ih)


# ---------------------------------------------------------------------------
# tape evaluation


def eval_tape_box(code, consts, box, n_slots):
    """Run an instruction tape over a box.

    code: (m, 4) int32 rows [op, dst, a, b]; consts: (k, 4) float64 thin
    intervals; box: (n, 4) float64. Returns (slots, status, bad_instruction).
    Slot layout: inputs, then constants, then temporaries.
    """
    n = box.shape[0]
    slots = [[0.0, 0.0, 0.0, 0.0] for _ in range(n_slots)]
    i = 0
    for row in box.tolist():
        slots[i] = row
        i += 1
    for row in consts.tolist():
        slots[i] = row
        i += 1
    for t, (op, dst, a, b) in enumerate(code.tolist()):
        arl, arh, ail, aih = slots[a]
        if op == OP_ADD:
            brl, brh, bil, bih = slots[b]
            res = cadd(arl, arh, ail, aih, brl, brh, bil, bih)
        elif op == OP_SUB:
            brl, brh, bil, bih = slots[b]
            res = csub(arl, arh, ail, aih, brl, brh, bil, bih)
        elif op == OP_MUL:
            brl, brh, bil, bih = slots[b]
            res = cmul(arl, arh, ail, aih, brl, brh, bil, bih)
        elif op == OP_DIV:
            brl, brh, bil, bih = slots[b]
            res = cdiv(arl, arh, ail, aih, brl, brh, bil, bih)
            if res is None:
                return np.array(slots), ZERO_DIVISION, t
        elif op == OP_SQR:
            res = csqr(arl, arh, ail, aih)
        else:
            res = cneg(arl, arh, ail, aih)
        if not _finite4(res[0], res[1], res[2], res[3]):
            return np.array(slots), NONFINITE, t
        slots[dst] = list(res)
    return np.array(slots), OK, -1


def eval_tape_point(code, consts, x, n_slots):
    """Run an instruction tape at a complex point (no containment guarantee).

    consts: (k, 2) float64; x: (n, 2) float64. Returns (slots, status, bad).
    """
    n = x.shape[0]
    slots = [[0.0, 0.0] for _ in range(n_slots)]
    i = 0
    for row in x.tolist():
        slots[i] = row
        i += 1
    for row in consts.tolist():
        slots[i] = row
        i += 1
    for t, (op, dst, a, b) in enumerate(code.tolist()):
        ar, ai = slots[a]
        if op == OP_ADD:
            br, bi = slots[b]
            rr = ar + br
            ri = ai + bi
        elif op == OP_SUB:
            br, bi = slots[b]
            rr = ar - br
            ri = ai - bi
        elif op == OP_MUL:
            br, bi = slots[b]
            rr = ar * br - ai * bi
            ri = ar * bi + ai * br
        elif op == OP_DIV:
            br, bi = slots[b]
            den = br * br + bi * bi
            if den == 0.0 or not isfinite(den):
                return np.array(slots), ZERO_DIVISION, t
            rr = (ar * br + ai * bi) / den
            ri = (ai * br - ar * bi) / den
        elif op == OP_SQR:
            rr = ar * ar - ai * ai
            tt = ar * ai
            ri = tt + tt
        else:
            rr = -ar
            ri = -ai
        if not (isfinite(rr) and isfinite(ri)):
            return np.array(slots), NONFINITE, t
        slots[dst] = [rr, ri]
    return np.array(slots), OK, -1


# ---------------------------------------------------------------------------
# box linear algebra


def box_matvec(a, v):
    """Interval matrix (n,n,4) times box (n,4), by the column-sum formula.

    The vector entry is the left factor of each product. Returns
    (out, status, bad_row); bad_row is the output row where a bound escaped
    the finite range.
    """
    n = v.shape[0]
    am = a.tolist()
    vm = v.tolist()
    # zero-filled so aborted calls return a deterministic buffer
    out = np.zeros((n, 4), dtype=np.float64)
    for i in range(n):
        ai = am[i]
        vj = vm[0]
        acc = cmul(vj[0], vj[1], vj[2], vj[3], ai[0][0], ai[0][1], ai[0][2], ai[0][3])
        if not _finite4(acc[0], acc[1], acc[2], acc[3]):
            return out, NONFINITE, i
        for j in range(1, n):
            vj = vm[j]
            pj = ai[j]
            term = cmul(vj[0], vj[1], vj[2], vj[3], pj[0], pj[1], pj[2], pj[3])
            acc = cadd(
                acc[0], acc[1], acc[2], acc[3], term[0], term[1], term[2], term[3]
            )
            if not _finite4(acc[0], acc[1], acc[2], acc[3]):
                return out, NONFINITE, i
        out[i, 0] = acc[0]
        out[i, 1] = acc[1]
        out[i, 2] = acc[2]
        out[i, 3] = acc[3]
    return out, OK, -1


def box_matmul(a, b):
    """Interval matrix product (n,n,4) x (n,n,4), column by column.

    Each column of the result is the matrix-vector product of `a` with the
    corresponding column of `b`, accumulated in ascending index order so
    results are reproducible bit for bit.
    """
    n = a.shape[0]
    am = a.tolist()
    bm = b.tolist()
    out = np.zeros((n, n, 4), dtype=np.float64)
    for j in range(n):
        for i in range(n):
            ai = am[i]
            bk = bm[0][j]
            acc = cmul(bk[0], bk[1], bk[2], bk[3], ai[0][0], ai[0][1], ai[0][2], ai[0][3])
            if not _finite4(acc[0], acc[1], acc[2], acc[3]):
                return out, NONFINITE, i * n + j
            for k in range(1, n):
                bk = bm[k][j]
                pk = ai[k]
                term = cmul(bk[0], bk[1], bk[2], bk[3], pk[0], pk[1], pk[2], pk[3])
                acc = cadd(
                    acc[0], acc[1], acc[2], acc[3], term[0], term[1], term[2], term[3]
                )
                if not _finite4(acc[0], acc[1], acc[2], acc[3]):
                    return out, NONFINITE, i * n + j
            out[i, j, 0] = acc[0]
            out[i, j, 1] = acc[1]
            out[i, j, 2] = acc[2]
            out[i, j, 3] = acc[3]
    return out, OK, -1


def box_eye_sub(m):
    """Identity matrix minus an interval matrix, entrywise directed."""
    n = m.shape[0]
    mm = m.tolist()
    out = np.empty((n, n, 4), dtype=np.float64)
    for i in range(n):
        for j in range(n):
            rl, rh, il, ih = mm[i][j]
            if i == j:
                out[i, j, 0] = add_down(1.0, -rh)
                out[i, j, 1] = add_up(1.0, -rl)
                out[i, j, 2] = -ih + 0.0
                out[i, j, 3] = -il + 0.0
            else:
                out[i, j, 0] = -rh + 0.0
                out[i, j, 1] = -rl + 0.0
                out[i, j, 2] = -ih + 0.0
                out[i, j, 3] = -il + 0.0
    return out


def norm_rowsum_up(m):
    """Upper bound for the row-sum operator norm of an interval matrix."""
    n = m.shape[0]
    mm = m.tolist()
    best = 0.0
    for i in range(n):
        s = 0.0
        row = mm[i]
        for j in range(n):
            rl, rh, il, ih = row[j]
            s = add_up(s, cmag_up(rl, rh, il, ih))
        if s > best:
            best = s
    return best


def dist_sq_boxes(boxes, q):
    """Squared distance intervals from boxes (m,n,4) to the point q (n,2).

    Per coordinate: square of the real offset plus square of the imaginary
    offset; coordinates accumulate in ascending order. Returns (m, 2).
    """
    m = boxes.shape[0]
    n = boxes.shape[1]
    bm = boxes.tolist()
    qm = q.tolist()
    out = np.empty((m, 2), dtype=np.float64)
    for r in range(m):
        row = bm[r]
        accl = 0.0
        acch = 0.0
        for j in range(n):
            rl, rh, il, ih = row[j]
            qr, qi = qm[j]
            sl, sh = isqr(add_down(rl, -qr), add_up(rh, -qr))
            tl, th = isqr(add_down(il, -qi), add_up(ih, -qi))
            sl, sh = iadd(sl, sh, tl, th)
            accl, acch = iadd(accl, acch, sl, sh)
        out[r, 0] = accl
        out[r, 1] = acch
    return out

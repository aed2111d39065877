# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled float64 kernel.

Line-for-line mirror of _pykernel.py; see that module for the algorithm notes.
The two kernels must produce bit-identical results: every branch, evaluation
order, and min/max tie-break matches the pure version, and the build disables
floating-point contraction so Dekker/TwoSum error terms round exactly as in
pure Python. Keep both files in sync.
"""

from libc.math cimport fabs, frexp, isfinite, nextafter, sqrt, INFINITY

import numpy as np

OP_ADD = 0
OP_SUB = 1
OP_MUL = 2
OP_DIV = 3
OP_SQR = 4
OP_NEG = 5

OK = 0
NONFINITE = 1
ZERO_DIVISION = 2

IMPL = "cython"

cdef double _SPLITTER = 134217729.0
cdef double _SPLIT_MAX = 2.0 ** 996
cdef double _TINY = 2.0 ** -1020
cdef double _DBL_MIN = 2.0 ** -1022


# ---------------------------------------------------------------------------
# scalar directed primitives


cdef inline double c_add_down(double a, double b):
    cdef double s = a + b
    cdef double ap, bp, e
    if not isfinite(s):
        return s
    ap = s - b
    bp = s - ap
    e = (a - ap) + (b - bp)
    if e < 0.0:
        s = nextafter(s, -INFINITY)
    return s + 0.0


cdef inline double c_add_up(double a, double b):
    cdef double s = a + b
    cdef double ap, bp, e
    if not isfinite(s):
        return s
    ap = s - b
    bp = s - ap
    e = (a - ap) + (b - bp)
    if e > 0.0:
        s = nextafter(s, INFINITY)
    return s + 0.0


cdef inline double c_prod_err(double a, double b, double p):
    cdef double ca = _SPLITTER * a
    cdef double ahi = ca - (ca - a)
    cdef double alo = a - ahi
    cdef double cb = _SPLITTER * b
    cdef double bhi = cb - (cb - b)
    cdef double blo = b - bhi
    return ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


cdef inline double c_mul_down(double a, double b):
    cdef double p = a * b
    if not isfinite(p):
        return p
    if a == 0.0 or b == 0.0:
        return p + 0.0
    if fabs(a) > _SPLIT_MAX or fabs(b) > _SPLIT_MAX or fabs(p) < _TINY:
        return nextafter(p, -INFINITY) + 0.0
    if c_prod_err(a, b, p) < 0.0:
        p = nextafter(p, -INFINITY)
    return p + 0.0


cdef inline double c_mul_up(double a, double b):
    cdef double p = a * b
    if not isfinite(p):
        return p
    if a == 0.0 or b == 0.0:
        return p + 0.0
    if fabs(a) > _SPLIT_MAX or fabs(b) > _SPLIT_MAX or fabs(p) < _TINY:
        return nextafter(p, INFINITY) + 0.0
    if c_prod_err(a, b, p) > 0.0:
        p = nextafter(p, INFINITY)
    return p + 0.0


cdef inline double c_div_down(double a, double b):
    cdef double q = a / b
    cdef double fm
    cdef int ex
    if not isfinite(q):
        return q
    if a == 0.0:
        return q + 0.0
    if a == b:
        return 1.0
    if a == -b:
        return -1.0
    fm = frexp(b, &ex)
    if fabs(fm) == 0.5 and fabs(q) >= _DBL_MIN:
        return q + 0.0
    return nextafter(q, -INFINITY) + 0.0


cdef inline double c_div_up(double a, double b):
    cdef double q = a / b
    cdef double fm
    cdef int ex
    if not isfinite(q):
        return q
    if a == 0.0:
        return q + 0.0
    if a == b:
        return 1.0
    if a == -b:
        return -1.0
    fm = frexp(b, &ex)
    if fabs(fm) == 0.5 and fabs(q) >= _DBL_MIN:
        return q + 0.0
    return nextafter(q, INFINITY) + 0.0


cdef inline double c_sqrt_up(double a):
    cdef double s, p
    if a == 0.0:
        return 0.0
    s = sqrt(a)
    if a >= _TINY:
        p = s * s
        if p == a and c_prod_err(s, s, p) == 0.0:
            return s
    return nextafter(s, INFINITY)


# ---------------------------------------------------------------------------
# real interval ops


cdef inline void c_iadd(double al, double ah, double bl, double bh,
                        double* lo, double* hi):
    lo[0] = c_add_down(al, bl)
    hi[0] = c_add_up(ah, bh)


cdef inline void c_isub(double al, double ah, double bl, double bh,
                        double* lo, double* hi):
    lo[0] = c_add_down(al, -bh)
    hi[0] = c_add_up(ah, -bl)


cdef inline void c_imul(double al, double ah, double bl, double bh,
                        double* lo, double* hi):
    cdef double m = c_mul_down(al, bl)
    cdef double d = c_mul_down(al, bh)
    if d < m:
        m = d
    d = c_mul_down(ah, bl)
    if d < m:
        m = d
    d = c_mul_down(ah, bh)
    if d < m:
        m = d
    lo[0] = m
    m = c_mul_up(al, bl)
    d = c_mul_up(al, bh)
    if d > m:
        m = d
    d = c_mul_up(ah, bl)
    if d > m:
        m = d
    d = c_mul_up(ah, bh)
    if d > m:
        m = d
    hi[0] = m


cdef inline void c_idiv(double al, double ah, double bl, double bh,
                        double* lo, double* hi):
    cdef double m = c_div_down(al, bl)
    cdef double d = c_div_down(al, bh)
    if d < m:
        m = d
    d = c_div_down(ah, bl)
    if d < m:
        m = d
    d = c_div_down(ah, bh)
    if d < m:
        m = d
    lo[0] = m
    m = c_div_up(al, bl)
    d = c_div_up(al, bh)
    if d > m:
        m = d
    d = c_div_up(ah, bl)
    if d > m:
        m = d
    d = c_div_up(ah, bh)
    if d > m:
        m = d
    hi[0] = m


cdef inline void c_isqr(double al, double ah, double* lo, double* hi):
    cdef double u1, u2
    if al > 0.0:
        lo[0] = c_mul_down(al, al)
        hi[0] = c_mul_up(ah, ah)
        return
    if ah < 0.0:
        lo[0] = c_mul_down(ah, ah)
        hi[0] = c_mul_up(al, al)
        return
    u1 = c_mul_up(al, al)
    u2 = c_mul_up(ah, ah)
    lo[0] = 0.0
    hi[0] = u1 if u1 > u2 else u2


# ---------------------------------------------------------------------------
# complex rectangle ops on double[4] = (re_lo, re_hi, im_lo, im_hi)


cdef inline void c_cadd(const double* a, const double* b, double* o):
    o[0] = c_add_down(a[0], b[0])
    o[1] = c_add_up(a[1], b[1])
    o[2] = c_add_down(a[2], b[2])
    o[3] = c_add_up(a[3], b[3])


cdef inline void c_csub(const double* a, const double* b, double* o):
    o[0] = c_add_down(a[0], -b[1])
    o[1] = c_add_up(a[1], -b[0])
    o[2] = c_add_down(a[2], -b[3])
    o[3] = c_add_up(a[3], -b[2])


cdef inline void c_cneg(const double* a, double* o):
    o[0] = -a[1] + 0.0
    o[1] = -a[0] + 0.0
    o[2] = -a[3] + 0.0
    o[3] = -a[2] + 0.0


cdef inline void c_cmul(const double* a, const double* b, double* o):
    cdef double xwl, xwh, yzl, yzh, xzl, xzh, ywl, ywh
    c_imul(a[0], a[1], b[0], b[1], &xwl, &xwh)
    c_imul(a[2], a[3], b[2], b[3], &yzl, &yzh)
    c_imul(a[0], a[1], b[2], b[3], &xzl, &xzh)
    c_imul(a[2], a[3], b[0], b[1], &ywl, &ywh)
    c_isub(xwl, xwh, yzl, yzh, &o[0], &o[1])
    c_iadd(xzl, xzh, ywl, ywh, &o[2], &o[3])


cdef inline void c_csqr(const double* a, double* o):
    cdef double x2l, x2h, y2l, y2h, tl, th
    c_isqr(a[0], a[1], &x2l, &x2h)
    c_isqr(a[2], a[3], &y2l, &y2h)
    c_isub(x2l, x2h, y2l, y2h, &o[0], &o[1])
    c_imul(a[0], a[1], a[2], a[3], &tl, &th)
    c_iadd(tl, th, tl, th, &o[2], &o[3])


cdef inline int c_cdiv(const double* a, const double* b, double* o):
    cdef double w2l, w2h, z2l, z2h, dl, dh
    cdef double xwl, xwh, yzl, yzh, rnl, rnh, ywl, ywh, xzl, xzh, inl, inh
    c_isqr(b[0], b[1], &w2l, &w2h)
    c_isqr(b[2], b[3], &z2l, &z2h)
    c_iadd(w2l, w2h, z2l, z2h, &dl, &dh)
    if dl <= 0.0:
        return ZERO_DIVISION
    c_imul(a[0], a[1], b[0], b[1], &xwl, &xwh)
    c_imul(a[2], a[3], b[2], b[3], &yzl, &yzh)
    c_iadd(xwl, xwh, yzl, yzh, &rnl, &rnh)
    c_imul(a[2], a[3], b[0], b[1], &ywl, &ywh)
    c_imul(a[0], a[1], b[2], b[3], &xzl, &xzh)
    c_isub(ywl, ywh, xzl, xzh, &inl, &inh)
    c_idiv(rnl, rnh, dl, dh, &o[0], &o[1])
    c_idiv(inl, inh, dl, dh, &o[2], &o[3])
    return 0


cdef inline double c_cmag_up(const double* a):
    cdef double mr = fabs(a[0])
    cdef double t = fabs(a[1])
    cdef double mi
    if t > mr:
        mr = t
    mi = fabs(a[2])
    t = fabs(a[3])
    if t > mi:
        mi = t
    return c_sqrt_up(c_add_up(c_mul_up(mr, mr), c_mul_up(mi, mi)))


cdef inline int c_finite4(const double* o):
    return isfinite(o[0]) and isfinite(o[1]) and isfinite(o[2]) and isfinite(o[3])


# ---------------------------------------------------------------------------
# python-visible scalar wrappers (same surface as the pure kernel)


def add_down(double a, double b):
    return c_add_down(a, b)


def add_up(double a, double b):
    return c_add_up(a, b)


def sub_down(double a, double b):
    return c_add_down(a, -b)


def sub_up(double a, double b):
    return c_add_up(a, -b)


def mul_down(double a, double b):
    return c_mul_down(a, b)


def mul_up(double a, double b):
    return c_mul_up(a, b)


def div_down(double a, double b):
    return c_div_down(a, b)


def div_up(double a, double b):
    return c_div_up(a, b)


def sqrt_up(double a):
    return c_sqrt_up(a)


def iadd(double al, double ah, double bl, double bh):
    cdef double lo, hi
    c_iadd(al, ah, bl, bh, &lo, &hi)
    return lo, hi


def isub(double al, double ah, double bl, double bh):
    cdef double lo, hi
    c_isub(al, ah, bl, bh, &lo, &hi)
    return lo, hi


def imul(double al, double ah, double bl, double bh):
    cdef double lo, hi
    c_imul(al, ah, bl, bh, &lo, &hi)
    return lo, hi


def idiv(double al, double ah, double bl, double bh):
    cdef double lo, hi
    c_idiv(al, ah, bl, bh, &lo, &hi)
    return lo, hi


def isqr(double al, double ah):
    cdef double lo, hi
    c_isqr(al, ah, &lo, &hi)
    return lo, hi


def cadd(double arl, double arh, double ail, double aih,
         double brl, double brh, double bil, double bih):
    cdef double a[4]
    cdef double b[4]
    cdef double o[4]
    a[0] = arl; a[1] = arh; a[2] = ail; a[3] = aih
    b[0] = brl; b[1] = brh; b[2] = bil; b[3] = bih
    c_cadd(a, b, o)
    return o[0], o[1], o[2], o[3]


def csub(double arl, double arh, double ail, double aih,
         double brl, double brh, double bil, double bih):
    cdef double a[4]
    cdef double b[4]
    cdef double o[4]
    a[0] = arl; a[1] = arh; a[2] = ail; a[3] = aih
    b[0] = brl; b[1] = brh; b[2] = bil; b[3] = bih
    c_csub(a, b, o)
    return o[0], o[1], o[2], o[3]


def cneg(double rl, double rh, double il, double ih):
    cdef double a[4]
    cdef double o[4]
    a[0] = rl; a[1] = rh; a[2] = il; a[3] = ih
    c_cneg(a, o)
    return o[0], o[1], o[2], o[3]


def cmul(double arl, double arh, double ail, double aih,
         double brl, double brh, double bil, double bih):
    cdef double a[4]
    cdef double b[4]
    cdef double o[4]
    a[0] = arl; a[1] = arh; a[2] = ail; a[3] = aih
    b[0] = brl; b[1] = brh; b[2] = bil; b[3] = bih
    c_cmul(a, b, o)
    return o[0], o[1], o[2], o[3]


def csqr(double rl, double rh, double il, double ih):
    cdef double a[4]
    cdef double o[4]
    a[0] = rl; a[1] = rh; a[2] = il; a[3] = ih
    c_csqr(a, o)
    return o[0], o[1], o[2], o[3]


def cdiv(double arl, double arh, double ail, double aih,
         double brl, double brh, double bil, double bih):
    cdef double a[4]
    cdef double b[4]
    cdef double o[4]
    a[0] = arl; a[1] = arh; a[2] = ail; a[3] = aih
    b[0] = brl; b[1] = brh; b[2] = bil; b[3] = bih
    if c_cdiv(a, b, o):
        return None
    return o[0], o[1], o[2], o[3]


def cmag_up(double rl, double rh, double il, double ih):
    cdef double a[4]
    a[0] = rl; a[1] = rh; a[2] = il; a[3] = ih
    return c_cmag_up(a)


# ---------------------------------------------------------------------------
# tape evaluation


def eval_tape_box(code, consts, box, int n_slots):
    """See _pykernel.eval_tape_box."""
    cdef const int[:, ::1] cd = np.ascontiguousarray(code, dtype=np.intc)
    cdef const double[:, ::1] cs = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const double[:, ::1] bx = np.ascontiguousarray(box, dtype=np.float64)
    cdef int n = bx.shape[0]
    cdef int k = cs.shape[0]
    cdef int m = cd.shape[0]
    slots_arr = np.zeros((n_slots, 4), dtype=np.float64)
    cdef double[:, ::1] s = slots_arr
    cdef double o[4]
    cdef int i, t, op, dst, a, b
    for i in range(n):
        s[i, 0] = bx[i, 0]; s[i, 1] = bx[i, 1]; s[i, 2] = bx[i, 2]; s[i, 3] = bx[i, 3]
    for i in range(k):
        s[n + i, 0] = cs[i, 0]; s[n + i, 1] = cs[i, 1]
        s[n + i, 2] = cs[i, 2]; s[n + i, 3] = cs[i, 3]
    for t in range(m):
        op = cd[t, 0]; dst = cd[t, 1]; a = cd[t, 2]; b = cd[t, 3]
        if op == 0:
            c_cadd(&s[a, 0], &s[b, 0], o)
        elif op == 1:
            c_csub(&s[a, 0], &s[b, 0], o)
        elif op == 2:
            c_cmul(&s[a, 0], &s[b, 0], o)
        elif op == 3:
            if c_cdiv(&s[a, 0], &s[b, 0], o):
                return slots_arr, ZERO_DIVISION, t
        elif op == 4:
            c_csqr(&s[a, 0], o)
        else:
            c_cneg(&s[a, 0], o)
        if not c_finite4(o):
            return slots_arr, NONFINITE, t
        s[dst, 0] = o[0]; s[dst, 1] = o[1]; s[dst, 2] = o[2]; s[dst, 3] = o[3]
    return slots_arr, OK, -1


def eval_tape_point(code, consts, x, int n_slots):
    """See _pykernel.eval_tape_point."""
    cdef const int[:, ::1] cd = np.ascontiguousarray(code, dtype=np.intc)
    cdef const double[:, ::1] cs = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const double[:, ::1] xp = np.ascontiguousarray(x, dtype=np.float64)
    cdef int n = xp.shape[0]
    cdef int k = cs.shape[0]
    cdef int m = cd.shape[0]
    slots_arr = np.zeros((n_slots, 2), dtype=np.float64)
    cdef double[:, ::1] s = slots_arr
    cdef int i, t, op, dst, a, b
    cdef double ar, ai, br, bi, rr, ri, den, tt
    for i in range(n):
        s[i, 0] = xp[i, 0]; s[i, 1] = xp[i, 1]
    for i in range(k):
        s[n + i, 0] = cs[i, 0]; s[n + i, 1] = cs[i, 1]
    for t in range(m):
        op = cd[t, 0]; dst = cd[t, 1]; a = cd[t, 2]; b = cd[t, 3]
        ar = s[a, 0]; ai = s[a, 1]
        if op == 0:
            br = s[b, 0]; bi = s[b, 1]
            rr = ar + br
            ri = ai + bi
        elif op == 1:
            br = s[b, 0]; bi = s[b, 1]
            rr = ar - br
            ri = ai - bi
        elif op == 2:
            br = s[b, 0]; bi = s[b, 1]
            rr = ar * br - ai * bi
            ri = ar * bi + ai * br
        elif op == 3:
            br = s[b, 0]; bi = s[b, 1]
            den = br * br + bi * bi
            if den == 0.0 or not isfinite(den):
                return slots_arr, ZERO_DIVISION, t
            rr = (ar * br + ai * bi) / den
            ri = (ai * br - ar * bi) / den
        elif op == 4:
            rr = ar * ar - ai * ai
            tt = ar * ai
            ri = tt + tt
        else:
            rr = -ar
            ri = -ai
        if not (isfinite(rr) and isfinite(ri)):
            return slots_arr, NONFINITE, t
        s[dst, 0] = rr
        s[dst, 1] = ri
    return slots_arr, OK, -1


# ---------------------------------------------------------------------------
# box linear algebra


def box_matvec(a, v):
    """See _pykernel.box_matvec."""
    cdef const double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, ::1] vm = np.ascontiguousarray(v, dtype=np.float64)
    cdef int n = vm.shape[0]
    # zero-filled so aborted calls return a deterministic buffer
    out_arr = np.zeros((n, 4), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double acc[4]
    cdef double term[4]
    cdef int i, j
    for i in range(n):
        c_cmul(&vm[0, 0], &am[i, 0, 0], acc)
        if not c_finite4(acc):
            return out_arr, NONFINITE, i
        for j in range(1, n):
            c_cmul(&vm[j, 0], &am[i, j, 0], term)
            c_cadd(acc, term, acc)
            if not c_finite4(acc):
                return out_arr, NONFINITE, i
        out[i, 0] = acc[0]; out[i, 1] = acc[1]; out[i, 2] = acc[2]; out[i, 3] = acc[3]
    return out_arr, OK, -1


def box_matmul(a, b):
    """See _pykernel.box_matmul."""
    cdef const double[:, :, ::1] am = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[:, :, ::1] bm = np.ascontiguousarray(b, dtype=np.float64)
    cdef int n = am.shape[0]
    out_arr = np.zeros((n, n, 4), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef double acc[4]
    cdef double term[4]
    cdef int i, j, k
    for j in range(n):
        for i in range(n):
            c_cmul(&bm[0, j, 0], &am[i, 0, 0], acc)
            if not c_finite4(acc):
                return out_arr, NONFINITE, i * n + j
            for k in range(1, n):
                c_cmul(&bm[k, j, 0], &am[i, k, 0], term)
                c_cadd(acc, term, acc)
                if not c_finite4(acc):
                    return out_arr, NONFINITE, i * n + j
            out[i, j, 0] = acc[0]; out[i, j, 1] = acc[1]
            out[i, j, 2] = acc[2]; out[i, j, 3] = acc[3]
    return out_arr, OK, -1


def box_eye_sub(m):
    """See _pykernel.box_eye_sub."""
    cdef const double[:, :, ::1] mm = np.ascontiguousarray(m, dtype=np.float64)
    cdef int n = mm.shape[0]
    out_arr = np.empty((n, n, 4), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    cdef int i, j
    for i in range(n):
        for j in range(n):
            if i == j:
                out[i, j, 0] = c_add_down(1.0, -mm[i, j, 1])
                out[i, j, 1] = c_add_up(1.0, -mm[i, j, 0])
            else:
                out[i, j, 0] = -mm[i, j, 1] + 0.0
                out[i, j, 1] = -mm[i, j, 0] + 0.0
            out[i, j, 2] = -mm[i, j, 3] + 0.0
            out[i, j, 3] = -mm[i, j, 2] + 0.0
    return out_arr


def norm_rowsum_up(m):
    """See _pykernel.norm_rowsum_up."""
    cdef const double[:, :, ::1] mm = np.ascontiguousarray(m, dtype=np.float64)
    cdef int n = mm.shape[0]
    cdef double best = 0.0
    cdef double s
    cdef int i, j
    for i in range(n):
        s = 0.0
        for j in range(n):
            s = c_add_up(s, c_cmag_up(&mm[i, j, 0]))
        if s > best:
            best = s
    return best


def dist_sq_boxes(boxes, q):
    """See _pykernel.dist_sq_boxes."""
    cdef const double[:, :, ::1] bm = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef const double[:, ::1] qm = np.ascontiguousarray(q, dtype=np.float64)
    cdef int m = bm.shape[0]
    cdef int n = bm.shape[1]
    out_arr = np.empty((m, 2), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double accl, acch, sl, sh, tl, th, qr, qi
    cdef int r, j
    for r in range(m):
        accl = 0.0
        acch = 0.0
        for j in range(n):
            qr = qm[j, 0]
            qi = qm[j, 1]
            c_isqr(c_add_down(bm[r, j, 0], -qr), c_add_up(bm[r, j, 1], -qr), &sl, &sh)
            c_isqr(c_add_down(bm[r, j, 2], -qi), c_add_up(bm[r, j, 3], -qi), &tl, &th)
            c_iadd(sl, sh, tl, th, &sl, &sh)
            c_iadd(accl, acch, sl, sh, &accl, &acch)
        out[r, 0] = accl
        out[r, 1] = acch
    return out_arr

"""Bit-for-bit parity between the pure-Python kernel and the compiled
extension, including non-finite abort paths and status reporting.

The pure kernel defines the semantics; the extension must reproduce
every output byte exactly. Skipped when the extension was not built.
"""

import random
import struct

import numpy as np
import pytest

from krawcert._kernel import pykernel

cykernel = pytest.importorskip(
    "krawcert._kernel._cykernel", reason="compiled kernel not built"
)


SCALAR_PAIRS = [
    ("add_down", "add_down"), ("add_up", "add_up"),
    ("sub_down", "sub_down"), ("sub_up", "sub_up"),
    ("mul_down", "mul_down"), ("mul_up", "mul_up"),
    ("div_down", "div_down"), ("div_up", "div_up"),
]


def _rand_float(rng):
    roll = rng.random()
    if roll < 0.05:
        return 0.0
    if roll < 0.12:
        return rng.choice([1.0, -1.0, 2.0, 0.5, -0.5, 1.5])
    if roll < 0.25:
        return rng.uniform(-1, 1) * 10.0 ** rng.randint(-300, 300)
    return rng.uniform(-1e6, 1e6)


def _rand_rinterval(rng):
    a, b = _rand_float(rng), _rand_float(rng)
    return (min(a, b), max(a, b))


def _bits(x):
    return struct.pack("<d", x)


def test_scalar_primitives_bit_identical():
    rng = random.Random(1001)
    for _ in range(20000):
        a, b = _rand_float(rng), _rand_float(rng)
        for pname, cname in SCALAR_PAIRS:
            if b == 0.0 and pname.startswith("div"):
                continue  # zero divisors are excluded by the callers
            p = getattr(pykernel, pname)(a, b)
            c = getattr(cykernel, cname)(a, b)
            assert _bits(p) == _bits(c), (pname, a, b)
    for _ in range(5000):
        a = abs(_rand_float(rng))
        assert _bits(pykernel.sqrt_up(a)) == _bits(cykernel.sqrt_up(a))


def test_interval_ops_bit_identical():
    rng = random.Random(2002)
    for _ in range(8000):
        al, ah = _rand_rinterval(rng)
        bl, bh = _rand_rinterval(rng)
        for name in ("iadd", "isub", "imul"):
            p = getattr(pykernel, name)(al, ah, bl, bh)
            c = getattr(cykernel, name)(al, ah, bl, bh)
            assert all(_bits(x) == _bits(y) for x, y in zip(p, c)), name
        p = pykernel.isqr(al, ah)
        c = cykernel.isqr(al, ah)
        assert all(_bits(x) == _bits(y) for x, y in zip(p, c))
        if not (bl <= 0.0 <= bh):
            p = pykernel.idiv(al, ah, bl, bh)
            c = cykernel.idiv(al, ah, bl, bh)
            assert all(_bits(x) == _bits(y) for x, y in zip(p, c))


def test_complex_ops_bit_identical():
    rng = random.Random(3003)
    for _ in range(6000):
        a = _rand_rinterval(rng) + _rand_rinterval(rng)
        b = _rand_rinterval(rng) + _rand_rinterval(rng)
        for name in ("cadd", "csub", "cmul"):
            p = getattr(pykernel, name)(*a, *b)
            c = getattr(cykernel, name)(*a, *b)
            assert all(_bits(x) == _bits(y) for x, y in zip(p, c)), name
        p = pykernel.csqr(*a)
        c = cykernel.csqr(*a)
        assert all(_bits(x) == _bits(y) for x, y in zip(p, c))
        pm = pykernel.cmag_up(*a)
        cm = cykernel.cmag_up(*a)
        assert _bits(pm) == _bits(cm)
        pd = pykernel.cdiv(*a, *b)
        cd = cykernel.cdiv(*a, *b)
        if pd is None:
            assert cd is None
        else:
            assert all(_bits(x) == _bits(y) for x, y in zip(pd, cd))


def _rand_matrix(rng, n):
    a = np.empty((n, n, 4))
    for i in range(n):
        for j in range(n):
            a[i, j] = _rand_rinterval(rng) + _rand_rinterval(rng)
    return a


def _rand_box(rng, n):
    v = np.empty((n, 4))
    for i in range(n):
        v[i] = _rand_rinterval(rng) + _rand_rinterval(rng)
    return v


def test_matrix_ops_bit_identical_including_aborts():
    rng = random.Random(4004)
    aborts = 0
    for trial in range(400):
        n = rng.randint(1, 6)
        a = _rand_matrix(rng, n)
        b = _rand_matrix(rng, n)
        v = _rand_box(rng, n)
        pm, ps, pb = pykernel.box_matvec(a, v)
        cm, cs, cb = cykernel.box_matvec(a, v)
        assert ps == cs and pb == cb and pm.tobytes() == cm.tobytes(), trial
        if ps != pykernel.OK:
            aborts += 1
        pm, ps, pb = pykernel.box_matmul(a, b)
        cm, cs, cb = cykernel.box_matmul(a, b)
        assert ps == cs and pb == cb and pm.tobytes() == cm.tobytes(), trial
        pe = pykernel.box_eye_sub(a)
        ce = cykernel.box_eye_sub(a)
        assert pe.tobytes() == ce.tobytes(), trial
        assert _bits(pykernel.norm_rowsum_up(a)) == _bits(cykernel.norm_rowsum_up(a))
    assert aborts > 10  # the mix of huge magnitudes must exercise overflow


def test_distance_kernel_bit_identical():
    rng = random.Random(5005)
    for trial in range(300):
        n = rng.randint(1, 5)
        m = rng.randint(1, 12)
        boxes = np.stack([_rand_box(rng, n) for _ in range(m)])
        q = np.array([[_rand_float(rng), _rand_float(rng)] for _ in range(n)])
        pd = pykernel.dist_sq_boxes(boxes, q)
        cd = cykernel.dist_sq_boxes(boxes, q)
        assert pd.tobytes() == cd.tobytes(), trial


def test_tape_evaluation_bit_identical_including_aborts():
    from krawcert import compile, parse_system

    src = "variables: x, y\n(x^2 - y) / (x*y - 1) + 1/2\ny / x - x / y\n"
    c = compile(parse_system(src))
    rng = random.Random(6006)
    for prog in (c.f_slp, c.jac_slp):
        consts_box = prog.consts_box(53)
        consts_pt = prog.consts_point(53)
        aborts = 0
        for trial in range(800):
            box = np.empty((2, 4))
            for i in range(2):
                mid_r, mid_i = rng.uniform(-2, 2), rng.uniform(-2, 2)
                rad = rng.uniform(0, 1.5)
                box[i] = (mid_r - rad, mid_r + rad, mid_i - rad, mid_i + rad)
            p = pykernel.eval_tape_box(prog.code, consts_box, box, prog.n_slots)
            q = cykernel.eval_tape_box(prog.code, consts_box, box, prog.n_slots)
            assert p[1] == q[1] and p[2] == q[2], trial
            assert np.asarray(p[0]).tobytes() == np.asarray(q[0]).tobytes(), trial
            if p[1] != pykernel.OK:
                aborts += 1
            x = np.array([[_rand_float(rng), _rand_float(rng)] for _ in range(2)])
            pp = pykernel.eval_tape_point(prog.code, consts_pt, x, prog.n_slots)
            qq = cykernel.eval_tape_point(prog.code, consts_pt, x, prog.n_slots)
            assert pp[1] == qq[1] and pp[2] == qq[2], trial
            assert np.asarray(pp[0]).tobytes() == np.asarray(qq[0]).tobytes(), trial
        assert aborts > 50  # zero-straddling boxes must hit division aborts


def test_selected_kernel_matches_environment():
    import krawcert

    assert krawcert.kernel_impl in ("cython", "python")

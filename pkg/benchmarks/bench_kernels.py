"""Benchmark the compiled float64 kernel against the pure-Python reference.

Both implementations are imported side by side and driven with identical
inputs; every workload first checks that the outputs agree byte for byte,
then reports best-of-N wall times and the speedup.

Usage:
    python3 benchmarks/bench_kernels.py [--repeat N] [--quick]
"""

import argparse
import random
import struct
import sys
import time

import numpy as np

from krawcert import compile as compile_system
from krawcert import parse_system
from krawcert._kernel import cykernel, pykernel

_F64 = 53


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _random_interval(rng, scale):
    lo = rng.uniform(-scale, scale)
    return lo, lo + rng.uniform(0, scale / 8)


def _random_box_array(rng, shape, scale):
    flat = np.empty(shape + (4,), dtype=np.float64)
    it = np.nditer(flat[..., 0], flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        rl, rh = _random_interval(rng, scale)
        il, ih = _random_interval(rng, scale)
        flat[idx + (0,)] = rl
        flat[idx + (1,)] = rh
        flat[idx + (2,)] = il
        flat[idx + (3,)] = ih
    return flat


def _polynomial_source(n_vars, n_terms, seed):
    rng = random.Random(seed)
    names = [f"x{i}" for i in range(n_vars)]
    lines = [f"variables: {', '.join(names)}"]
    for i in range(n_vars):
        terms = []
        for _ in range(n_terms):
            c = rng.randint(-9, 9) or 1
            factors = [str(c)]
            for v in rng.sample(names, rng.randint(1, min(3, n_vars))):
                e = rng.randint(1, 3)
                factors.append(v if e == 1 else f"{v}^{e}")
            terms.append("*".join(factors))
        lines.append(" + ".join(terms) + f" - {i + 1}")
    return "\n".join(lines) + "\n"


def bench_scalar(rng, repeat, quick):
    n = 20000 if quick else 100000
    pairs = [(rng.uniform(-1e3, 1e3), rng.uniform(0.25, 1e3)) for _ in range(n)]

    def work(k):
        out = []
        for a, b in pairs:
            out.append(k.mul_down(a, b))
            out.append(k.div_up(a, b))
            out.append(k.sqrt_up(b))
        return out

    assert struct.pack(f"<{3 * n}d", *work(pykernel)) == struct.pack(
        f"<{3 * n}d", *work(cykernel)
    )
    return (
        f"scalar directed ops ({3 * n} calls)",
        _best_of(lambda: work(pykernel), repeat),
        _best_of(lambda: work(cykernel), repeat),
    )


def bench_complex_mul(rng, repeat, quick):
    n = 10000 if quick else 50000
    ops = []
    for _ in range(n):
        a = _random_interval(rng, 4.0) + _random_interval(rng, 4.0)
        b = _random_interval(rng, 4.0) + _random_interval(rng, 4.0)
        ops.append(a + b)

    def work(k):
        out = []
        for o in ops:
            out.extend(k.cmul(*o))
        return out

    assert struct.pack(f"<{4 * n}d", *work(pykernel)) == struct.pack(
        f"<{4 * n}d", *work(cykernel)
    )
    return (
        f"complex interval product ({n} calls)",
        _best_of(lambda: work(pykernel), repeat),
        _best_of(lambda: work(cykernel), repeat),
    )


def _tape_workloads(rng, repeat, quick):
    comp = compile_system(parse_system(_polynomial_source(6, 10, seed=7)))
    reps = 50 if quick else 200
    center = [rng.uniform(-0.9, 0.9) for _ in range(12)]
    box = np.empty((6, 4), dtype=np.float64)
    for i in range(6):
        box[i, 0] = center[2 * i] - 1e-3
        box[i, 1] = center[2 * i] + 1e-3
        box[i, 2] = center[2 * i + 1] - 1e-3
        box[i, 3] = center[2 * i + 1] + 1e-3
    point = np.array(
        [[center[2 * i], center[2 * i + 1]] for i in range(6)], dtype=np.float64
    )
    rows = []
    for label, prog, args in (
        ("interval f tape", comp.f_slp, (comp.f_slp.consts_box(_F64), box)),
        ("interval J tape", comp.jac_slp, (comp.jac_slp.consts_box(_F64), box)),
    ):
        def work(k, prog=prog, args=args):
            for _ in range(reps):
                slots, status, bad = k.eval_tape_box(prog.code, args[0], args[1], prog.n_slots)
            return slots, status, bad

        sp, stp, bp = work(pykernel)
        sc, stc, bc = work(cykernel)
        assert (stp, bp) == (stc, bc) and sp.tobytes() == sc.tobytes()
        rows.append((
            f"{label} ({prog.n_instructions} instructions, {reps}x)",
            _best_of(lambda w=work: w(pykernel), repeat),
            _best_of(lambda w=work: w(cykernel), repeat),
        ))

    consts_pt = comp.f_slp.consts_point(_F64)

    def work_pt(k):
        for _ in range(reps * 4):
            slots, status, bad = k.eval_tape_point(
                comp.f_slp.code, consts_pt, point, comp.f_slp.n_slots
            )
        return slots, status, bad

    sp, stp, bp = work_pt(pykernel)
    sc, stc, bc = work_pt(cykernel)
    assert (stp, bp) == (stc, bc) and sp.tobytes() == sc.tobytes()
    rows.append((
        f"point f tape ({comp.f_slp.n_instructions} instructions, {reps * 4}x)",
        _best_of(lambda: work_pt(pykernel), repeat),
        _best_of(lambda: work_pt(cykernel), repeat),
    ))
    return rows


def bench_matmul(rng, repeat, quick):
    n = 12 if quick else 24
    reps = 5 if quick else 10
    a = _random_box_array(rng, (n, n), 2.0)
    b = _random_box_array(rng, (n, n), 2.0)

    def work(k):
        for _ in range(reps):
            out, status, bad = k.box_matmul(a, b)
        return out, status, bad

    op, stp, bp = work(pykernel)
    oc, stc, bc = work(cykernel)
    assert (stp, bp) == (stc, bc) and op.tobytes() == oc.tobytes()
    return (
        f"interval matmul n={n} ({reps}x)",
        _best_of(lambda: work(pykernel), repeat),
        _best_of(lambda: work(cykernel), repeat),
    )


def bench_matvec(rng, repeat, quick):
    n = 20 if quick else 40
    reps = 50 if quick else 200
    a = _random_box_array(rng, (n, n), 2.0)
    v = _random_box_array(rng, (n,), 2.0)

    def work(k):
        for _ in range(reps):
            out, status, bad = k.box_matvec(a, v)
        return out, status, bad

    op, stp, bp = work(pykernel)
    oc, stc, bc = work(cykernel)
    assert (stp, bp) == (stc, bc) and op.tobytes() == oc.tobytes()
    return (
        f"interval matvec n={n} ({reps}x)",
        _best_of(lambda: work(pykernel), repeat),
        _best_of(lambda: work(cykernel), repeat),
    )


def bench_distance(rng, repeat, quick):
    m = 1000 if quick else 5000
    n = 5
    boxes = _random_box_array(rng, (m, n), 50.0)
    q = np.array(
        [[rng.uniform(-50, 50), rng.uniform(-50, 50)] for _ in range(n)],
        dtype=np.float64,
    )

    def work(k):
        return k.dist_sq_boxes(boxes, q)

    assert work(pykernel).tobytes() == work(cykernel).tobytes()
    return (
        f"distance sweep {m} boxes, {n} coords",
        _best_of(lambda: work(pykernel), repeat),
        _best_of(lambda: work(cykernel), repeat),
    )


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions per workload, best time wins")
    parser.add_argument("--quick", action="store_true",
                        help="smaller workloads for a fast sanity run")
    args = parser.parse_args(argv)

    if cykernel is None:
        print("compiled kernel is not built; nothing to compare", file=sys.stderr)
        return 1

    rng = random.Random(20240214)
    rows = [
        bench_scalar(rng, args.repeat, args.quick),
        bench_complex_mul(rng, args.repeat, args.quick),
    ]
    rows.extend(_tape_workloads(rng, args.repeat, args.quick))
    rows.append(bench_matmul(rng, args.repeat, args.quick))
    rows.append(bench_matvec(rng, args.repeat, args.quick))
    rows.append(bench_distance(rng, args.repeat, args.quick))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  {'python':>10}  {'cython':>10}  {'speedup':>8}")
    for label, tp, tc in rows:
        print(f"{label:<{width}}  {tp * 1e3:>8.2f}ms  {tc * 1e3:>8.2f}ms  {tp / tc:>7.1f}x")
    print("\nall workloads produced byte-identical outputs on both kernels")
    return 0


if __name__ == "__main__":
    sys.exit(main())

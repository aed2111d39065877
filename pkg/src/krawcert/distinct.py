"""Distinctness filtering of certified boxes.

Two certified boxes that do not intersect contain distinct zeros. Checking
all pairs exactly is quadratic, so a prefilter maps every box to its
squared-distance interval d_k from one random anchor point q: if d_k and
d_l are disjoint, the boxes are provably disjoint and the pair is skipped.
Only pairs whose distance intervals overlap reach the exact (rational
arithmetic) box-overlap predicate. A plane-sweep over the sorted distance
intervals enumerates exactly those pairs, and union-find turns pairwise
overlap into groups. The anchor only affects how many exact comparisons
run, never the resulting partition.
"""

import heapq
import random
from dataclasses import dataclass
from math import isfinite

import numpy as np

from ._kernel import kernel
from .errors import IntervalError
from .interval import IntervalBox, RealInterval

__all__ = ["DistinctnessReport", "squared_distance", "group_overlaps"]

_F64 = 53


@dataclass(frozen=True)
class DistinctnessReport:
    """Partition of box indices into overlap groups.

    groups are sorted index tuples (by smallest member); representatives
    holds each group's smallest index; distances[k] is the certified
    squared distance of box k to the anchor; comparisons counts how many
    pairs reached the exact overlap predicate.
    """

    groups: tuple
    representatives: tuple
    distinct_count: int
    anchor: tuple
    distances: tuple
    comparisons: int


def squared_distance(box, q):
    """Interval enclosure of the squared Euclidean distance from box to q.

    Sum over coordinates of (Re I_j - Re q_j)^2 + (Im I_j - Im q_j)^2 using
    the dedicated square primitive, so a coordinate whose offset interval
    straddles zero contributes [0, max^2] rather than a sign-crossing
    product.
    """
    if not isinstance(box, IntervalBox):
        box = IntervalBox(list(box))
    if len(box) != len(q):
        raise IntervalError(
            f"box has {len(box)} coordinates, anchor has {len(q)}"
        )
    acc = None
    for entry, qz in zip(box.entries, q):
        qz = complex(qz)
        term = (entry.re - qz.real).square() + (entry.im - qz.imag).square()
        acc = term if acc is None else acc + term
    return acc


def _hull_distances(boxes, q):
    """(lo, hi) float64 arrays of anchor distances, plus report intervals.

    53-bit boxes go through the kernel in one batch; higher-precision boxes
    take the generic interval path and contribute their directed float64
    hull to the sweep arrays.
    """
    m = len(boxes)
    lo = np.empty(m, dtype=np.float64)
    hi = np.empty(m, dtype=np.float64)
    intervals = [None] * m
    f64_idx = [k for k, b in enumerate(boxes) if b.bits == _F64]
    if f64_idx:
        stack = np.stack([boxes[k]._raw() for k in f64_idx])
        qarr = np.array([(z.real, z.imag) for z in q], dtype=np.float64)
        d = kernel.dist_sq_boxes(stack, qarr)
        if not np.all(np.isfinite(d)):
            raise IntervalError(
                "squared distance overflows float64; box coordinates are "
                "too large for the prefilter"
            )
        for pos, k in enumerate(f64_idx):
            lo[k] = d[pos, 0]
            hi[k] = d[pos, 1]
            intervals[k] = RealInterval._wrap(
                float(d[pos, 0]), float(d[pos, 1]), _F64
            )
    for k, b in enumerate(boxes):
        if b.bits == _F64:
            continue
        dk = squared_distance(b, q)
        intervals[k] = dk
        lo[k] = dk.lo_float()
        hi[k] = dk.hi_float()
        if not (isfinite(lo[k]) and isfinite(hi[k])):
            raise IntervalError(
                "squared distance overflows float64; box coordinates are "
                "too large for the prefilter"
            )
    return lo, hi, intervals


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, a):
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def group_overlaps(boxes, seed=0):
    """Group boxes by transitive overlap; disjoint groups hold distinct zeros.

    Draws the anchor q from a seeded generator (each coordinate uniform in
    [-1,1] for both parts), prefilters pairs by disjoint distance intervals,
    and verifies the surviving pairs with the exact rational overlap
    predicate, so the grouping is independent of the anchor and the seed
    only influences the comparison count.
    """
    boxes = [
        b if isinstance(b, IntervalBox) else IntervalBox(list(b)) for b in boxes
    ]
    if boxes:
        dim = len(boxes[0])
        for b in boxes:
            if len(b) != dim:
                raise IntervalError("boxes have mismatched dimensions")
    else:
        dim = 0
    rng = random.Random(seed)
    q = tuple(
        complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))
        for _ in range(dim)
    )
    m = len(boxes)
    if m == 0:
        return DistinctnessReport(
            groups=(),
            representatives=(),
            distinct_count=0,
            anchor=q,
            distances=(),
            comparisons=0,
        )
    lo, hi, intervals = _hull_distances(boxes, q)
    order = sorted(range(m), key=lambda k: (lo[k], k))
    uf = _UnionFind(m)
    open_heap = []  # (hi, index) of distance intervals not yet passed
    comparisons = 0
    for k in order:
        lk = lo[k]
        while open_heap and open_heap[0][0] < lk:
            heapq.heappop(open_heap)
        for _, j in open_heap:
            # d_j and d_k overlap; the boxes might, so check exactly
            comparisons += 1
            if boxes[j].overlaps(boxes[k]):
                uf.union(j, k)
        heapq.heappush(open_heap, (hi[k], k))
    members = {}
    for k in range(m):
        members.setdefault(uf.find(k), []).append(k)
    groups = sorted(tuple(sorted(v)) for v in members.values())
    return DistinctnessReport(
        groups=tuple(groups),
        representatives=tuple(g[0] for g in groups),
        distinct_count=len(groups),
        anchor=q,
        distances=tuple(intervals),
        comparisons=comparisons,
    )

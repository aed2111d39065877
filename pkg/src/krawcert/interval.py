"""Real and rectangular complex intervals with outward rounding.

Values are immutable. Every interval carries the significand width of its
backend: 53-bit intervals store float64 bounds and delegate to the float64
kernel; wider intervals store raw mpf bounds and delegate to the
arbitrary-precision backend. Arithmetic requires matching widths (certified
boxes never mix precisions mid-computation).

Containment predicates (subset_interior, overlaps, contains) are evaluated
in exact rational arithmetic, so they are correct even across intervals of
different precisions.

Complex arithmetic follows the rectangular formulas: with I = X + iY and
J = W + iZ,

    I * J = (X*W - Y*Z) + i(X*Z + Y*W)
    I / J = (X*W + Y*Z)/(W*W + Z*Z) + i(Y*W - X*Z)/(W*W + Z*Z)

where the denominator squares use the dedicated square primitive (so the
precondition is exactly 0 not in J, rather than the looser literal reading
of W*W + Z*Z).
"""

from fractions import Fraction
from math import isfinite

import numpy as np

from . import mparith
from ._kernel import kernel
from .errors import IntervalDivisionError, IntervalError, PrecisionMismatchError
from .precision import LADDER_BITS, PrecisionLevel, ladder

__all__ = [
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
]

_F64 = 53


def _as_fraction(v):
    if isinstance(v, Fraction):
        return v
    if isinstance(v, bool):
        raise IntervalError(f"not a valid interval bound: {v!r}")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        if not isfinite(v):
            raise IntervalError(f"interval bound must be finite, got {v!r}")
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, tuple) and len(v) == 4:
        return mparith.fraction_from_mpf(v)
    raise IntervalError(f"not a valid interval bound: {v!r}")


def _bound_down(v, bits):
    """Largest representable bound <= v at the level."""
    if bits == _F64:
        if isinstance(v, float):
            if not isfinite(v):
                raise IntervalError(f"interval bound must be finite, got {v!r}")
            return v + 0.0
        if isinstance(v, int):
            v = Fraction(v)
        f = mparith.float_down(_as_fraction(v))
        if not isfinite(f):
            raise IntervalError("bound is outside the float64 range")
        return f
    if isinstance(v, tuple) and len(v) == 4:
        return v
    if isinstance(v, float):
        if not isfinite(v):
            raise IntervalError(f"interval bound must be finite, got {v!r}")
        return mparith.from_float_exact(v)
    return mparith.from_fraction(_as_fraction(v), bits, "f")


def _bound_up(v, bits):
    """Smallest representable bound >= v at the level."""
    if bits == _F64:
        if isinstance(v, float):
            if not isfinite(v):
                raise IntervalError(f"interval bound must be finite, got {v!r}")
            return v + 0.0
        if isinstance(v, int):
            v = Fraction(v)
        f = mparith.float_up(_as_fraction(v))
        if not isfinite(f):
            raise IntervalError("bound is outside the float64 range")
        return f
    if isinstance(v, tuple) and len(v) == 4:
        return v
    if isinstance(v, float):
        if not isfinite(v):
            raise IntervalError(f"interval bound must be finite, got {v!r}")
        return mparith.from_float_exact(v)
    return mparith.from_fraction(_as_fraction(v), bits, "c")


def _check_bits(a, b):
    if a.bits != b.bits:
        raise PrecisionMismatchError(
            f"mixed precisions: {a.bits} and {b.bits} significand bits"
        )


class RealInterval:
    """Closed interval [lo, hi] with finite bounds."""

    __slots__ = ("lo", "hi", "bits")

    def __init__(self, lo, hi=None, bits=_F64):
        if hi is None:
            hi = lo
        object.__setattr__(self, "bits", bits)
        object.__setattr__(self, "lo", _bound_down(lo, bits))
        object.__setattr__(self, "hi", _bound_up(hi, bits))
        if bits == _F64:
            ordered = self.lo <= self.hi
        else:
            if self.lo[1] == 0 and self.lo != mparith.fzero:
                raise IntervalError("interval bound must be finite")
            if self.hi[1] == 0 and self.hi != mparith.fzero:
                raise IntervalError("interval bound must be finite")
            ordered = mparith.mpf_cmp(self.lo, self.hi) <= 0
        if not ordered:
            raise IntervalError(
                f"lower bound exceeds upper bound: {self.lo_float()} > {self.hi_float()}"
            )

    def __setattr__(self, name, value):
        raise AttributeError("RealInterval is immutable")

    @classmethod
    def _wrap(cls, lo, hi, bits):
        obj = object.__new__(cls)
        object.__setattr__(obj, "lo", lo)
        object.__setattr__(obj, "hi", hi)
        object.__setattr__(obj, "bits", bits)
        return obj

    # -- views

    def lo_fraction(self):
        return _as_fraction(self.lo) if self.bits != _F64 else Fraction(self.lo)

    def hi_fraction(self):
        return _as_fraction(self.hi) if self.bits != _F64 else Fraction(self.hi)

    def lo_float(self):
        """Directed float64 hull bound (rounded down)."""
        return self.lo if self.bits == _F64 else mparith.to_float_down(self.lo)

    def hi_float(self):
        """Directed float64 hull bound (rounded up)."""
        return self.hi if self.bits == _F64 else mparith.to_float_up(self.hi)

    def is_thin(self):
        return self.lo == self.hi

    def midpoint_fraction(self):
        return (self.lo_fraction() + self.hi_fraction()) / 2

    def contains(self, v):
        if isinstance(v, float):
            if not isfinite(v):
                return False
            v = Fraction(v)
        else:
            v = _as_fraction(v)
        return self.lo_fraction() <= v <= self.hi_fraction()

    def contains_zero(self):
        return self.contains(0)

    # -- arithmetic

    def _coerce(self, other):
        if isinstance(other, RealInterval):
            _check_bits(self, other)
            return other
        if isinstance(other, (int, float, Fraction)):
            return RealInterval(other, other, bits=self.bits)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.bits == _F64:
            lo, hi = kernel.iadd(self.lo, self.hi, o.lo, o.hi)
        else:
            lo, hi = mparith.iadd((self.lo, self.hi), (o.lo, o.hi), self.bits)
        return RealInterval._wrap(lo, hi, self.bits)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.bits == _F64:
            lo, hi = kernel.isub(self.lo, self.hi, o.lo, o.hi)
        else:
            lo, hi = mparith.isub((self.lo, self.hi), (o.lo, o.hi), self.bits)
        return RealInterval._wrap(lo, hi, self.bits)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        if self.bits == _F64:
            return RealInterval._wrap(-self.hi + 0.0, -self.lo + 0.0, self.bits)
        return RealInterval._wrap(
            mparith.mpf_neg(self.hi), mparith.mpf_neg(self.lo), self.bits
        )

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.bits == _F64:
            lo, hi = kernel.imul(self.lo, self.hi, o.lo, o.hi)
        else:
            lo, hi = mparith.imul((self.lo, self.hi), (o.lo, o.hi), self.bits)
        return RealInterval._wrap(lo, hi, self.bits)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if o.contains(0):
            raise IntervalDivisionError(
                "division by an interval containing 0: "
                f"[{o.lo_float()}, {o.hi_float()}]"
            )
        if self.bits == _F64:
            lo, hi = kernel.idiv(self.lo, self.hi, o.lo, o.hi)
        else:
            lo, hi = mparith.idiv((self.lo, self.hi), (o.lo, o.hi), self.bits)
        return RealInterval._wrap(lo, hi, self.bits)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def square(self):
        """[min x^2, max x^2]; tighter than self * self when 0 is inside."""
        if self.bits == _F64:
            lo, hi = kernel.isqr(self.lo, self.hi)
        else:
            lo, hi = mparith.isqr((self.lo, self.hi), self.bits)
        return RealInterval._wrap(lo, hi, self.bits)

    # -- set predicates (exact)

    def subset(self, other):
        return (
            other.lo_fraction() <= self.lo_fraction()
            and self.hi_fraction() <= other.hi_fraction()
        )

    def subset_interior(self, other):
        return (
            other.lo_fraction() < self.lo_fraction()
            and self.hi_fraction() < other.hi_fraction()
        )

    def overlaps(self, other):
        return (
            self.lo_fraction() <= other.hi_fraction()
            and other.lo_fraction() <= self.hi_fraction()
        )

    def __eq__(self, other):
        if not isinstance(other, RealInterval):
            return NotImplemented
        return (
            self.bits == other.bits and self.lo == other.lo and self.hi == other.hi
        )

    def __hash__(self):
        return hash((self.bits, self.lo, self.hi))

    def __repr__(self):
        if self.bits == _F64:
            return f"RealInterval({self.lo!r}, {self.hi!r})"
        return (
            f"RealInterval({self.lo_float()!r}, {self.hi_float()!r}, "
            f"bits={self.bits})"
        )


class ComplexInterval:
    """Rectangle {x + iy | x in re, y in im}."""

    __slots__ = ("re", "im")

    def __init__(self, re, im=None):
        if not isinstance(re, RealInterval):
            re = RealInterval(re)
        if im is None:
            im = RealInterval(0.0, 0.0, bits=re.bits)
        elif not isinstance(im, RealInterval):
            im = RealInterval(im, bits=re.bits)
        _check_bits(re, im)
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexInterval is immutable")

    @classmethod
    def from_bounds(cls, re_lo, re_hi, im_lo, im_hi, bits=_F64):
        return cls(
            RealInterval(re_lo, re_hi, bits=bits), RealInterval(im_lo, im_hi, bits=bits)
        )

    @classmethod
    def point(cls, z, bits=_F64):
        """Degenerate rectangle at a complex (or real) point."""
        if isinstance(z, complex):
            re, im = z.real, z.imag
        elif isinstance(z, (tuple, list)) and len(z) == 2:
            re, im = z
        else:
            re, im = z, 0
        return cls(RealInterval(re, re, bits=bits), RealInterval(im, im, bits=bits))

    @classmethod
    def _from_raw(cls, raw, bits):
        rl, rh, il, ih = raw
        return cls(
            RealInterval._wrap(rl, rh, bits), RealInterval._wrap(il, ih, bits)
        )

    @property
    def bits(self):
        return self.re.bits

    def _raw(self):
        return (self.re.lo, self.re.hi, self.im.lo, self.im.hi)

    def is_thin(self):
        return self.re.is_thin() and self.im.is_thin()

    def contains(self, z):
        if isinstance(z, complex):
            re, im = z.real, z.imag
        elif isinstance(z, (tuple, list)) and len(z) == 2:
            re, im = z
        else:
            re, im = z, 0
        return self.re.contains(re) and self.im.contains(im)

    def midpoint_fraction(self):
        return (self.re.midpoint_fraction(), self.im.midpoint_fraction())

    def conjugate(self):
        return ComplexInterval(self.re, -self.im)

    # -- arithmetic

    def _coerce(self, other):
        if isinstance(other, ComplexInterval):
            _check_bits(self.re, other.re)
            return other
        if isinstance(other, RealInterval):
            _check_bits(self.re, other)
            return ComplexInterval(other)
        if isinstance(other, (int, float, Fraction, complex)):
            return ComplexInterval.point(other, bits=self.bits)
        return None

    def _binary(self, other, f64_fn, mp_fn):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.bits == _F64:
            raw = f64_fn(*self._raw(), *o._raw())
        else:
            raw = mp_fn(self._raw(), o._raw(), self.bits)
        return ComplexInterval._from_raw(raw, self.bits)

    def __add__(self, other):
        return self._binary(other, kernel.cadd, mparith.cadd)

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, kernel.csub, mparith.csub)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        if self.bits == _F64:
            raw = kernel.cneg(*self._raw())
        else:
            raw = mparith.cneg(self._raw())
        return ComplexInterval._from_raw(raw, self.bits)

    def __mul__(self, other):
        return self._binary(other, kernel.cmul, mparith.cmul)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.bits == _F64:
            raw = kernel.cdiv(*self._raw(), *o._raw())
        else:
            raw = mparith.cdiv(self._raw(), o._raw(), self.bits)
        if raw is None:
            raise IntervalDivisionError(
                "division by a complex interval containing 0"
            )
        return ComplexInterval._from_raw(raw, self.bits)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def square(self):
        """(X^2 - Y^2) + i(2XY) with the dedicated square primitive."""
        if self.bits == _F64:
            raw = kernel.csqr(*self._raw())
        else:
            raw = mparith.csqr(self._raw(), self.bits)
        return ComplexInterval._from_raw(raw, self.bits)

    def mag(self):
        """Upper bound for max{|z| : z in the rectangle}, as a float."""
        if self.bits == _F64:
            return kernel.cmag_up(*self._raw())
        return mparith.to_float_up(mparith.cmag_up(self._raw(), self.bits))

    # -- set predicates (exact)

    def subset(self, other):
        return self.re.subset(other.re) and self.im.subset(other.im)

    def subset_interior(self, other):
        return self.re.subset_interior(other.re) and self.im.subset_interior(other.im)

    def overlaps(self, other):
        return self.re.overlaps(other.re) and self.im.overlaps(other.im)

    def __eq__(self, other):
        if not isinstance(other, ComplexInterval):
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"ComplexInterval({self.re!r}, {self.im!r})"


class IntervalBox:
    """Ordered sequence of complex intervals (a box in C^n)."""

    __slots__ = ("entries",)

    def __init__(self, entries):
        entries = tuple(entries)
        if not entries:
            raise IntervalError("a box needs at least one coordinate")
        for e in entries:
            if not isinstance(e, ComplexInterval):
                raise IntervalError(f"box entries must be ComplexInterval, got {e!r}")
            _check_bits(entries[0].re, e.re)
        object.__setattr__(self, "entries", entries)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalBox is immutable")

    @classmethod
    def from_point(cls, x, bits=_F64):
        return cls([ComplexInterval.point(z, bits=bits) for z in x])

    @classmethod
    def _from_raw(cls, raw, bits):
        return cls([ComplexInterval._from_raw(r, bits) for r in raw])

    def _raw(self):
        if self.bits == _F64:
            return np.array([e._raw() for e in self.entries], dtype=np.float64)
        return [e._raw() for e in self.entries]

    @property
    def bits(self):
        return self.entries[0].bits

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, i):
        return self.entries[i]

    def contains_point(self, x):
        if len(x) != len(self):
            return False
        return all(e.contains(z) for e, z in zip(self.entries, x))

    def conjugate(self):
        return IntervalBox([e.conjugate() for e in self.entries])

    def midpoint_fraction(self):
        return [e.midpoint_fraction() for e in self.entries]

    def subset(self, other):
        self._check_len(other)
        return all(a.subset(b) for a, b in zip(self.entries, other.entries))

    def subset_interior(self, other):
        self._check_len(other)
        return all(a.subset_interior(b) for a, b in zip(self.entries, other.entries))

    def overlaps(self, other):
        self._check_len(other)
        return all(a.overlaps(b) for a, b in zip(self.entries, other.entries))

    def _check_len(self, other):
        if len(self) != len(other):
            raise IntervalError(
                f"box lengths differ: {len(self)} vs {len(other)}"
            )

    def __eq__(self, other):
        if not isinstance(other, IntervalBox):
            return NotImplemented
        return self.entries == other.entries

    def __hash__(self):
        return hash(self.entries)

    def __repr__(self):
        return f"IntervalBox({list(self.entries)!r})"


class IntervalMatrix:
    """Square grid of complex intervals."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        rows = tuple(tuple(r) for r in rows)
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise IntervalError("matrix must be square and nonempty")
        first = rows[0][0]
        for r in rows:
            for e in r:
                if not isinstance(e, ComplexInterval):
                    raise IntervalError("matrix entries must be ComplexInterval")
                _check_bits(first.re, e.re)
        object.__setattr__(self, "rows", rows)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalMatrix is immutable")

    @classmethod
    def from_point_matrix(cls, m, bits=_F64):
        return cls(
            [[ComplexInterval.point(z, bits=bits) for z in row] for row in m]
        )

    @classmethod
    def identity(cls, n, bits=_F64):
        return cls.from_point_matrix(
            [[1 if i == j else 0 for j in range(n)] for i in range(n)], bits=bits
        )

    @property
    def n(self):
        return len(self.rows)

    @property
    def bits(self):
        return self.rows[0][0].bits

    def _raw(self):
        if self.bits == _F64:
            return np.array(
                [[e._raw() for e in row] for row in self.rows], dtype=np.float64
            )
        return [[e._raw() for e in row] for row in self.rows]

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def op_norm_inf(self):
        """Upper bound for max_{B in A} ||B||_inf (row sums of mags)."""
        if self.bits == _F64:
            return kernel.norm_rowsum_up(self._raw())
        return mparith.to_float_up(mparith.norm_rowsum_up(self._raw(), self.bits))

    def mat_vec(self, box):
        """Column formula I_1*col_1 + ... + I_n*col_n."""
        if not isinstance(box, IntervalBox):
            box = IntervalBox(box)
        if len(box) != self.n:
            raise IntervalError(
                f"dimension mismatch: matrix is {self.n}x{self.n}, box has {len(box)}"
            )
        _check_bits(self.rows[0][0].re, box.entries[0].re)
        if self.bits == _F64:
            out, status, bad = kernel.box_matvec(self._raw(), box._raw())
            if status != kernel.OK:
                raise IntervalError(
                    f"matrix-vector product overflowed at row {bad}"
                )
            return IntervalBox._from_raw(out.tolist(), _F64)
        out = mparith.box_matvec(self._raw(), box._raw(), self.bits)
        return IntervalBox._from_raw(out, self.bits)

    def __eq__(self, other):
        if not isinstance(other, IntervalMatrix):
            return NotImplemented
        return self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"IntervalMatrix({[list(r) for r in self.rows]!r})"


# ---------------------------------------------------------------------------
# operation-style entry points


_REAL_OPS = {
    "+": RealInterval.__add__,
    "-": RealInterval.__sub__,
    "−": RealInterval.__sub__,
    "*": RealInterval.__mul__,
    "·": RealInterval.__mul__,
    "/": RealInterval.__truediv__,
}

_COMPLEX_OPS = {
    "+": ComplexInterval.__add__,
    "-": ComplexInterval.__sub__,
    "−": ComplexInterval.__sub__,
    "*": ComplexInterval.__mul__,
    "·": ComplexInterval.__mul__,
    "/": ComplexInterval.__truediv__,
}


def real_op(op, x, y):
    """Apply one of + - * / to two real intervals."""
    try:
        fn = _REAL_OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(x, y)


def complex_op(op, i, j):
    """Apply one of + - * / to two complex intervals."""
    try:
        fn = _COMPLEX_OPS[op]
    except KeyError:
        raise ValueError(f"unknown operation {op!r}") from None
    return fn(i, j)


def mag(i):
    return i.mag()


def op_norm_inf(a):
    return a.op_norm_inf()


def mat_vec(a, box):
    return a.mat_vec(box)


def subset_interior(i, j):
    return i.subset_interior(j)


def overlaps(i, j):
    return i.overlaps(j)

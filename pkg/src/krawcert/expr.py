"""System parsing and compilation to straight-line programs.

The pipeline is: system file -> expression ASTs (constants folded in exact
rational arithmetic) -> instruction tape (multivariate Horner form by
default) -> forward-mode differentiation of the tape -> dead-code
elimination -> two SlpPrograms, one for F and one for JF.

Tape semantics are deliberately simple: opcodes add/sub/mul/div/sqr/neg over
complex slots, no branches, SSA (each instruction writes a fresh slot). The
same tape is evaluated over points (no guarantees) or over interval boxes
(containment guaranteed); interval results depend on the tape shape, which
is why the compiler is careful about *which* tape it builds and never
rewrites the user's factored structure into expanded form.

Constants are kept as exact rational complex pairs and rendered per
precision level on first use: outward-rounded thin intervals for box
evaluation, nearest points for point evaluation. Folding (including
parameter substitution, merging of duplicate monomials, and coefficients
like 2*k/2) is exact, so it can only tighten enclosures, never widen or
unsound them.
"""

import re as _re
import threading
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import mparith
from ._kernel import kernel
from .errors import EvaluationError, IntervalDivisionError, ParseError
from .interval import IntervalBox, RealInterval

__all__ = [
    "ExpressionSystem",
    "SlpProgram",
    "CompiledSystem",
    "parse_system",
    "load_system",
    "compile",
    "eval_point",
    "eval_interval",
    "certify_positive_evaluation",
]

_F64 = 53

OP_ADD = kernel.OP_ADD
OP_SUB = kernel.OP_SUB
OP_MUL = kernel.OP_MUL
OP_DIV = kernel.OP_DIV
OP_SQR = kernel.OP_SQR
OP_NEG = kernel.OP_NEG


# ---------------------------------------------------------------------------
# AST


class _Num:
    __slots__ = ("re", "im")

    def __init__(self, re, im=Fraction(0)):
        self.re = Fraction(re)
        self.im = Fraction(im)

    def is_zero(self):
        return self.re == 0 and self.im == 0


class _Var:
    __slots__ = ("index", "name")

    def __init__(self, index, name):
        self.index = index
        self.name = name


class _Bin:
    __slots__ = ("op", "a", "b")

    def __init__(self, op, a, b):
        self.op = op
        self.a = a
        self.b = b


class _Neg:
    __slots__ = ("a",)

    def __init__(self, a):
        self.a = a


class _Pow:
    __slots__ = ("base", "exp")

    def __init__(self, base, exp):
        self.base = base
        self.exp = exp


class _FoldError(Exception):
    """Constant folding hit a division by zero; re-raised with position."""


def _num_add(a, b):
    return _Num(a.re + b.re, a.im + b.im)


def _num_sub(a, b):
    return _Num(a.re - b.re, a.im - b.im)


def _num_mul(a, b):
    return _Num(a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re)


def _num_div(a, b):
    den = b.re * b.re + b.im * b.im
    if den == 0:
        raise _FoldError("division by zero in a constant expression")
    return _Num((a.re * b.re + a.im * b.im) / den, (a.im * b.re - a.re * b.im) / den)


def _num_pow(a, k):
    if k < 0:
        return _num_div(_Num(1), _num_pow(a, -k))
    r = _Num(1)
    base = a
    while k:
        if k & 1:
            r = _num_mul(r, base)
        base = _num_mul(base, base)
        k >>= 1
    return r


def _make_bin(op, a, b):
    if isinstance(a, _Num) and isinstance(b, _Num):
        if op == "+":
            return _num_add(a, b)
        if op == "-":
            return _num_sub(a, b)
        if op == "*":
            return _num_mul(a, b)
        return _num_div(a, b)
    if op == "/" and isinstance(b, _Num) and b.is_zero():
        raise _FoldError("division by zero in a constant expression")
    return _Bin(op, a, b)


def _make_neg(a):
    if isinstance(a, _Num):
        return _Num(-a.re, -a.im)
    return _Neg(a)


def _make_pow(base, exp):
    if isinstance(base, _Num):
        if base.is_zero() and exp < 0:
            raise _FoldError("division by zero in a constant expression")
        return _num_pow(base, exp)
    if exp == 0:
        return _Num(1)
    if exp == 1:
        return base
    return _Pow(base, exp)


def _has_complex_constant(node):
    if isinstance(node, _Num):
        return node.im != 0
    if isinstance(node, _Var):
        return False
    if isinstance(node, _Bin):
        return _has_complex_constant(node.a) or _has_complex_constant(node.b)
    if isinstance(node, _Neg):
        return _has_complex_constant(node.a)
    return _has_complex_constant(node.base)


# ---------------------------------------------------------------------------
# tokenizer


_TOKEN_RE = _re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<punct>[-+*/^(),:=]))"
)


def _tokenize(line, lineno):
    """Token list [(kind, value, column)] for one line; '#' starts a comment."""
    tokens = []
    pos = 0
    n = len(line)
    while pos < n:
        rest = line[pos:]
        stripped = rest.lstrip()
        if not stripped or stripped.startswith("#"):
            break
        m = _TOKEN_RE.match(line, pos)
        if m is None:
            col = pos + (len(rest) - len(stripped)) + 1
            raise ParseError(f"unexpected character {stripped[0]!r}", lineno, col)
        col = m.start(m.lastgroup) + 1
        if m.lastgroup == "num":
            tokens.append(("num", Fraction(m.group("num")), col))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), col))
        else:
            tokens.append((m.group("punct"), m.group("punct"), col))
        pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens, lineno):
        self.tokens = tokens
        self.lineno = lineno
        self.pos = 0

    def peek(self):
        if self.pos < len(self.tokens):
            return self.tokens[self.pos]
        col = self.tokens[-1][2] + 1 if self.tokens else 1
        return ("eol", None, col)

    def next(self):
        t = self.peek()
        self.pos += 1
        return t

    def expect(self, kind, what=None):
        t = self.next()
        if t[0] != kind:
            raise ParseError(
                f"expected {what or kind!r}, got {self._describe(t)}",
                self.lineno,
                t[2],
            )
        return t

    def at_end(self):
        return self.pos >= len(self.tokens)

    @staticmethod
    def _describe(t):
        if t[0] == "eol":
            return "end of line"
        if t[0] == "num":
            return f"number {str(t[1])!r}"
        return repr(str(t[1]))


# ---------------------------------------------------------------------------
# parser


class _ExprParser:
    """Recursive descent over one line: expr > term > factor > atom."""

    def __init__(self, stream, env):
        self.s = stream
        self.env = env

    def parse(self):
        node = self._expr()
        if not self.s.at_end():
            t = self.s.peek()
            raise ParseError(
                f"unexpected {self.s._describe(t)}", self.s.lineno, t[2]
            )
        return node

    def _fold(self, fn, *args):
        try:
            return fn(*args)
        except _FoldError as exc:
            raise ParseError(str(exc), self.s.lineno, self._last_col) from None

    def _expr(self):
        node = self._term()
        while self.s.peek()[0] in ("+", "-"):
            op, _, col = self.s.next()
            self._last_col = col
            node = self._fold(_make_bin, op, node, self._term())
        return node

    def _term(self):
        node = self._factor()
        while self.s.peek()[0] in ("*", "/"):
            op, _, col = self.s.next()
            self._last_col = col
            node = self._fold(_make_bin, op, node, self._factor())
        return node

    def _factor(self):
        t = self.s.peek()
        if t[0] == "-":
            self.s.next()
            return _make_neg(self._factor())
        if t[0] == "+":
            self.s.next()
            return self._factor()
        return self._power()

    def _power(self):
        base = self._atom()
        if self.s.peek()[0] != "^":
            return base
        _, _, col = self.s.next()
        self._last_col = col
        sign = 1
        t = self.s.peek()
        if t[0] == "-":
            self.s.next()
            sign = -1
        t = self.s.next()
        if t[0] != "num" or t[1].denominator != 1:
            raise ParseError(
                "exponent must be an integer literal", self.s.lineno, t[2]
            )
        return self._fold(_make_pow, base, sign * int(t[1]))

    def _atom(self):
        t = self.s.next()
        if t[0] == "num":
            return _Num(t[1])
        if t[0] == "ident":
            name = t[1]
            if name == "i":
                return _Num(0, 1)
            node = self.env.get(name)
            if node is None:
                raise ParseError(f"unknown identifier {name!r}", self.s.lineno, t[2])
            return node
        if t[0] == "(":
            node = self._expr()
            self.s.expect(")", "')'")
            return node
        raise ParseError(
            f"expected a value, got {self.s._describe(t)}", self.s.lineno, t[2]
        )


@dataclass(frozen=True)
class ExpressionSystem:
    """A square system: n named variables, n expression trees."""

    variables: tuple
    expressions: tuple
    coefficient_kind: str
    params: dict = field(default_factory=dict, compare=False)

    @property
    def n(self):
        return len(self.variables)


def parse_system(text):
    """Parse a system file into an ExpressionSystem.

    Format: a `variables: x, y, ...` header; optional `param name = <value>`
    lines (values are constant expressions, folded exactly); one expression
    per remaining line; `#` comments; operators + - * / ^ with integer
    exponents; `i` is the imaginary unit.
    """
    variables = None
    var_env = {}
    params = {}
    expressions = []
    last_line = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        last_line = lineno
        tokens = _tokenize(line, lineno)
        if not tokens:
            continue
        if variables is None:
            if not (tokens[0][0] == "ident" and tokens[0][1] == "variables"):
                raise ParseError(
                    "expected a 'variables:' header line", lineno, tokens[0][2]
                )
            s = _TokenStream(tokens, lineno)
            s.next()
            s.expect(":", "':'")
            names = []
            while True:
                t = s.expect("ident", "a variable name")
                name = t[1]
                if name == "i":
                    raise ParseError(
                        "'i' is reserved for the imaginary unit", lineno, t[2]
                    )
                if name in names:
                    raise ParseError(f"duplicate variable {name!r}", lineno, t[2])
                names.append(name)
                if s.at_end():
                    break
                s.expect(",", "','")
            variables = tuple(names)
            var_env = {
                name: _Var(j, name) for j, name in enumerate(variables)
            }
            continue
        if (
            tokens[0][0] == "ident"
            and tokens[0][1] == "param"
            and len(tokens) >= 2
            and tokens[1][0] == "ident"
        ):
            s = _TokenStream(tokens, lineno)
            s.next()
            t = s.expect("ident", "a parameter name")
            name = t[1]
            if name == "i":
                raise ParseError(
                    "'i' is reserved for the imaginary unit", lineno, t[2]
                )
            if name in var_env or name in params:
                raise ParseError(f"{name!r} is already defined", lineno, t[2])
            s.expect("=", "'='")
            value = _ExprParser(s, params).parse()
            if not isinstance(value, _Num):
                raise ParseError(
                    f"parameter {name!r} must have a constant value", lineno, t[2]
                )
            params[name] = value
            continue
        env = dict(params)
        env.update(var_env)
        node = _ExprParser(_TokenStream(tokens, lineno), env).parse()
        expressions.append(node)
    if variables is None:
        raise ParseError("missing 'variables:' header line", max(last_line, 1), 1)
    if len(expressions) != len(variables):
        raise ParseError(
            f"system is not square: {len(variables)} variables but "
            f"{len(expressions)} equations",
            last_line,
            1,
        )
    kind = (
        "complex"
        if any(_has_complex_constant(e) for e in expressions)
        else "real"
    )
    return ExpressionSystem(
        variables=variables,
        expressions=tuple(expressions),
        coefficient_kind=kind,
        params={k: (v.re, v.im) for k, v in params.items()},
    )


def load_system(path):
    with open(path, "r", encoding="utf-8") as fh:
        return parse_system(fh.read())


# ---------------------------------------------------------------------------
# tape builder


class _Builder:
    """Accumulates SSA tape rows with tagged operands.

    Handles are ('x', input_index), ('c', const_index), or ('t', temp_index);
    they are remapped to flat slot numbers at projection time. Structural
    simplifications here (fold constant operands, drop additive zeros and
    multiplicative ones, squash multiplication by zero, turn t*t into the
    square primitive) are exact identities, so they never loosen containment.
    """

    def __init__(self, n_inputs):
        self.n_inputs = n_inputs
        self.code = []
        self.consts = []
        self.const_index = {}
        self.n_temps = 0
        self.zero = self.const(Fraction(0), Fraction(0))
        self.one = self.const(Fraction(1), Fraction(0))

    def var(self, j):
        return ("x", j)

    def const(self, re, im=Fraction(0)):
        key = (re, im)
        idx = self.const_index.get(key)
        if idx is None:
            idx = len(self.consts)
            self.consts.append(key)
            self.const_index[key] = idx
        return ("c", idx)

    def const_value(self, h):
        return self.consts[h[1]]

    def _is(self, h, re, im=0):
        return h[0] == "c" and self.consts[h[1]] == (re, im)

    def _append(self, op, a, b):
        dst = ("t", self.n_temps)
        self.n_temps += 1
        self.code.append((op, dst, a, b))
        return dst

    def emit(self, op, a, b=None):
        const_a = a[0] == "c"
        const_b = b is not None and b[0] == "c"
        if op == OP_NEG:
            if const_a:
                re, im = self.const_value(a)
                return self.const(-re, -im)
            return self._append(op, a, None)
        if op == OP_SQR:
            if const_a:
                v = _num_pow(_Num(*self.const_value(a)), 2)
                return self.const(v.re, v.im)
            return self._append(op, a, None)
        if const_a and const_b:
            na, nb = _Num(*self.const_value(a)), _Num(*self.const_value(b))
            if op == OP_ADD:
                v = _num_add(na, nb)
            elif op == OP_SUB:
                v = _num_sub(na, nb)
            elif op == OP_MUL:
                v = _num_mul(na, nb)
            else:
                v = _num_div(na, nb)  # parse folding rejected zero denominators
            return self.const(v.re, v.im)
        if op == OP_ADD:
            if self._is(a, 0):
                return b
            if self._is(b, 0):
                return a
        elif op == OP_SUB:
            if self._is(b, 0):
                return a
            if self._is(a, 0):
                return self.emit(OP_NEG, b)
        elif op == OP_MUL:
            if self._is(a, 0) or self._is(b, 0):
                return self.zero
            if self._is(a, 1):
                return b
            if self._is(b, 1):
                return a
            if self._is(a, -1):
                return self.emit(OP_NEG, b)
            if self._is(b, -1):
                return self.emit(OP_NEG, a)
            if a == b:
                return self._append(OP_SQR, a, None)
        elif op == OP_DIV:
            if self._is(b, 1):
                return a
        return self._append(op, a, b)

    def emit_raw(self, op, a, b=None):
        """Verbatim instruction, no structural rewriting (naive tapes)."""
        if a[0] == "c" and (b is None or b[0] == "c"):
            return self.emit(op, a, b)  # still fold pure-constant subtrees
        return self._append(op, a, b)

    def project(self, outputs):
        """Dead-code eliminate and flatten to an SlpProgram for `outputs`."""
        live = {h[1] for h in outputs if h[0] == "t"}
        keep = [False] * len(self.code)
        for idx in range(len(self.code) - 1, -1, -1):
            op, dst, a, b = self.code[idx]
            if dst[1] not in live:
                continue
            keep[idx] = True
            if a[0] == "t":
                live.add(a[1])
            if b is not None and b[0] == "t":
                live.add(b[1])
        const_used = set()
        for h in outputs:
            if h[0] == "c":
                const_used.add(h[1])
        for idx, kept in enumerate(keep):
            if not kept:
                continue
            op, dst, a, b = self.code[idx]
            if a[0] == "c":
                const_used.add(a[1])
            if b is not None and b[0] == "c":
                const_used.add(b[1])
        const_map = {}
        const_pool = []
        for old_idx in range(len(self.consts)):
            if old_idx in const_used:
                const_map[old_idx] = len(const_pool)
                const_pool.append(self.consts[old_idx])
        n = self.n_inputs
        k = len(const_pool)
        temp_map = {}
        rows = []
        for idx, kept in enumerate(keep):
            if not kept:
                continue
            op, dst, a, b = self.code[idx]
            temp_map[dst[1]] = len(temp_map)
            rows.append((op, dst, a, b))

        def slot(h):
            if h is None:
                return 0
            tag, i = h
            if tag == "x":
                return i
            if tag == "c":
                return n + const_map[i]
            return n + k + temp_map[i]

        code = np.array(
            [(op, slot(dst), slot(a), slot(b)) for op, dst, a, b in rows],
            dtype=np.intc,
        ).reshape(len(rows), 4)
        return SlpProgram(
            code=code,
            consts=tuple(const_pool),
            n_inputs=n,
            n_slots=n + k + len(rows),
            outputs=tuple(slot(h) for h in outputs),
        )


# ---------------------------------------------------------------------------
# Horner compilation


class _Term:
    __slots__ = ("coeff", "powers")

    def __init__(self, coeff):
        self.coeff = coeff  # _Num
        self.powers = {}  # atom handle -> integer exponent (may be negative)

    def mul_atom(self, h, exp):
        e = self.powers.get(h, 0) + exp
        if e == 0:
            self.powers.pop(h, None)
        else:
            self.powers[h] = e


class _HornerCompiler:
    def __init__(self, builder):
        self.b = builder
        self.power_cache = {}
        self.atom_order = {}

    def _note_atom(self, h):
        if h not in self.atom_order:
            self.atom_order[h] = len(self.atom_order)

    def compile(self, node):
        self.power_cache = {}
        self.atom_order = {}
        return self._sum(node)

    def _sum(self, node):
        terms = []
        self._flatten_sum(node, _Num(1), terms)
        return self._emit_sum(self._merge(terms))

    def _flatten_sum(self, node, sign, out):
        if isinstance(node, _Bin) and node.op in ("+", "-"):
            self._flatten_sum(node.a, sign, out)
            rhs_sign = _num_mul(sign, _Num(-1)) if node.op == "-" else sign
            self._flatten_sum(node.b, rhs_sign, out)
        elif isinstance(node, _Neg):
            self._flatten_sum(node.a, _num_mul(sign, _Num(-1)), out)
        else:
            term = _Term(sign)
            self._flatten_term(node, term)
            out.append(term)

    def _flatten_term(self, node, term):
        if isinstance(node, _Num):
            term.coeff = _num_mul(term.coeff, node)
        elif isinstance(node, _Var):
            h = self.b.var(node.index)
            self._note_atom(h)
            term.mul_atom(h, 1)
        elif isinstance(node, _Neg):
            term.coeff = _num_mul(term.coeff, _Num(-1))
            self._flatten_term(node.a, term)
        elif isinstance(node, _Bin) and node.op == "*":
            self._flatten_term(node.a, term)
            self._flatten_term(node.b, term)
        elif isinstance(node, _Bin) and node.op == "/":
            self._flatten_term(node.a, term)
            if isinstance(node.b, _Num):
                term.coeff = _num_div(term.coeff, node.b)
            else:
                h = self._opaque(node.b)
                term.mul_atom(h, -1)
        elif isinstance(node, _Pow):
            base = node.base
            if isinstance(base, _Var):
                h = self.b.var(base.index)
                self._note_atom(h)
                term.mul_atom(h, node.exp)
            else:
                h = self._opaque(base)
                term.mul_atom(h, node.exp)
        else:
            # additive subtree inside a product: compile it opaquely,
            # preserving the factored structure the user wrote
            h = self._opaque(node)
            term.mul_atom(h, 1)

    def _opaque(self, node):
        h = self._sum(node)
        self._note_atom(h)
        return h

    @staticmethod
    def _term_key(term):
        return tuple(sorted(term.powers.items()))

    def _merge(self, terms):
        merged = {}
        order = []
        for t in terms:
            key = self._term_key(t)
            if key in merged:
                merged[key].coeff = _num_add(merged[key].coeff, t.coeff)
            else:
                merged[key] = t
                order.append(key)
        return [merged[k] for k in order if not merged[k].coeff.is_zero()]

    def _emit_sum(self, terms):
        if not terms:
            return self.b.zero
        if len(terms) == 1:
            return self._emit_term(terms[0])
        degree = {}
        for t in terms:
            for h, e in t.powers.items():
                if e > 0 and e > degree.get(h, 0):
                    degree[h] = e
        if not degree:
            acc = self._emit_term(terms[0])
            for t in terms[1:]:
                acc = self.b.emit(OP_ADD, acc, self._emit_term(t))
            return acc
        pivot = min(degree, key=lambda h: (-degree[h], self.atom_order[h]))
        inside = []
        outside = []
        for t in terms:
            if t.powers.get(pivot, 0) > 0:
                t.mul_atom(pivot, -1)
                inside.append(t)
            else:
                outside.append(t)
        part = self.b.emit(OP_MUL, pivot, self._emit_sum(inside))
        if outside:
            return self.b.emit(OP_ADD, part, self._emit_sum(outside))
        return part

    def _emit_term(self, term):
        h = None
        denominator = []
        # dict order is the atom's first appearance within this term,
        # which keeps the emitted product in the order the user wrote it
        for atom, e in term.powers.items():
            if e > 0:
                p = self._power(atom, e)
                h = p if h is None else self.b.emit(OP_MUL, h, p)
            else:
                denominator.append((atom, -e))
        c = term.coeff
        if h is None:
            h = self.b.const(c.re, c.im)
        elif c.re == -1 and c.im == 0:
            h = self.b.emit(OP_NEG, h)
        elif not (c.re == 1 and c.im == 0):
            h = self.b.emit(OP_MUL, h, self.b.const(c.re, c.im))
        for atom, e in denominator:
            h = self.b.emit(OP_DIV, h, self._power(atom, e))
        return h

    def _power(self, h, k):
        if k == 1:
            return h
        key = (h, k)
        cached = self.power_cache.get(key)
        if cached is not None:
            return cached
        half = self._power(h, k // 2)
        res = self.b.emit(OP_SQR, half)
        if k & 1:
            res = self.b.emit(OP_MUL, res, h)
        self.power_cache[key] = res
        return res


class _NaiveCompiler:
    """Verbatim AST-to-tape translation (the --no-horner path)."""

    def __init__(self, builder):
        self.b = builder
        self.power_cache = {}

    def compile(self, node):
        self.power_cache = {}
        return self._walk(node)

    def _walk(self, node):
        if isinstance(node, _Num):
            return self.b.const(node.re, node.im)
        if isinstance(node, _Var):
            return self.b.var(node.index)
        if isinstance(node, _Neg):
            return self.b.emit_raw(OP_NEG, self._walk(node.a))
        if isinstance(node, _Pow):
            return self._power(self._walk(node.base), node.exp)
        op = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV}[node.op]
        return self.b.emit_raw(op, self._walk(node.a), self._walk(node.b))

    def _power(self, h, k):
        if k < 0:
            return self.b.emit_raw(OP_DIV, self.b.one, self._power(h, -k))
        if k == 1:
            return h
        key = (h, k)
        cached = self.power_cache.get(key)
        if cached is not None:
            return cached
        half = self._power(h, k // 2)
        res = self.b.emit_raw(OP_SQR, half)
        if k & 1:
            res = self.b.emit_raw(OP_MUL, res, h)
        self.power_cache[key] = res
        return res


# ---------------------------------------------------------------------------
# forward-mode differentiation of the tape


def _differentiate(builder, code_len, var_j):
    """Derivative handle for every slot written in code[:code_len], w.r.t.
    input var_j. Structural zeros and ones collapse through emit()."""
    zero = builder.zero
    one = builder.one
    d = {}

    def deriv(h):
        tag = h[0]
        if tag == "c":
            return zero
        if tag == "x":
            return one if h[1] == var_j else zero
        return d[h]

    for op, dst, a, b in list(builder.code[:code_len]):
        da = deriv(a)
        if op == OP_NEG:
            dd = builder.emit(OP_NEG, da)
        elif op == OP_SQR:
            t = builder.emit(OP_MUL, a, da)
            dd = builder.emit(OP_ADD, t, t)
        elif op == OP_ADD:
            dd = builder.emit(OP_ADD, da, deriv(b))
        elif op == OP_SUB:
            dd = builder.emit(OP_SUB, da, deriv(b))
        elif op == OP_MUL:
            db = deriv(b)
            dd = builder.emit(
                OP_ADD, builder.emit(OP_MUL, da, b), builder.emit(OP_MUL, a, db)
            )
        else:  # DIV: d(a/b) = (da - (a/b)*db) / b; the primal division
            # already guards zero denominators, so a constant derivative
            # may fold away safely
            db = deriv(b)
            if da == zero and db == zero:
                dd = zero
            else:
                num = builder.emit(OP_SUB, da, builder.emit(OP_MUL, dst, db))
                dd = builder.emit(OP_DIV, num, b)
        d[dst] = dd
    return deriv


# ---------------------------------------------------------------------------
# programs


@dataclass(frozen=True)
class SlpProgram:
    """A straight-line program: SSA instruction tape plus constant pool.

    Slot layout at evaluation time: the n_inputs inputs, then the rendered
    constants, then one slot per instruction. outputs are slot indices.
    """

    code: np.ndarray
    consts: tuple
    n_inputs: int
    n_slots: int
    outputs: tuple

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})
        object.__setattr__(self, "_cache_lock", threading.Lock())

    @property
    def n_instructions(self):
        return len(self.code)

    def instruction_counts(self):
        """Mapping opcode name -> count (for tests and reporting)."""
        names = {
            OP_ADD: "add",
            OP_SUB: "sub",
            OP_MUL: "mul",
            OP_DIV: "div",
            OP_SQR: "sqr",
            OP_NEG: "neg",
        }
        out = {}
        for op in self.code[:, 0].tolist() if len(self.code) else []:
            name = names[op]
            out[name] = out.get(name, 0) + 1
        return out

    def consts_box(self, bits):
        """Rendered constant pool for interval evaluation at the level."""
        key = ("box", bits)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        with self._cache_lock:
            cached = self._cache.get(key)
            if cached is not None:
                return cached
            if bits == _F64:
                arr = np.empty((len(self.consts), 4), dtype=np.float64)
                for idx, (re, im) in enumerate(self.consts):
                    arr[idx, 0] = mparith.float_down(re)
                    arr[idx, 1] = mparith.float_up(re)
                    arr[idx, 2] = mparith.float_down(im)
                    arr[idx, 3] = mparith.float_up(im)
                rendered = arr
            else:
                rendered = [
                    (
                        mparith.from_fraction(re, bits, "f"),
                        mparith.from_fraction(re, bits, "c"),
                        mparith.from_fraction(im, bits, "f"),
                        mparith.from_fraction(im, bits, "c"),
                    )
                    for re, im in self.consts
                ]
            self._cache[key] = rendered
            return rendered

    def consts_point(self, bits):
        """Rendered constant pool for point evaluation at the level."""
        key = ("point", bits)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        with self._cache_lock:
            cached = self._cache.get(key)
            if cached is not None:
                return cached
            if bits == _F64:
                arr = np.empty((len(self.consts), 2), dtype=np.float64)
                for idx, (re, im) in enumerate(self.consts):
                    arr[idx, 0] = float(re)
                    arr[idx, 1] = float(im)
                rendered = arr
            else:
                rendered = [
                    (
                        mparith.from_fraction(re, bits, "n"),
                        mparith.from_fraction(im, bits, "n"),
                    )
                    for re, im in self.consts
                ]
            self._cache[key] = rendered
            return rendered


@dataclass(frozen=True)
class CompiledSystem:
    """F and JF as straight-line programs over the same variable order."""

    f_slp: SlpProgram
    jac_slp: SlpProgram
    source: ExpressionSystem
    horner: bool

    @property
    def n(self):
        return self.source.n

    @property
    def coefficient_kind(self):
        return self.source.coefficient_kind


def compile(system, horner=True):
    """Compile an ExpressionSystem to tapes for F and its Jacobian."""
    n = system.n
    b = _Builder(n)
    compiler = _HornerCompiler(b) if horner else _NaiveCompiler(b)
    f_handles = [compiler.compile(node) for node in system.expressions]
    code_len = len(b.code)
    jac_handles = []
    for j in range(n):
        deriv = _differentiate(b, code_len, j)
        jac_handles.append([deriv(h) for h in f_handles])
    flat_jac = [jac_handles[j][i] for i in range(n) for j in range(n)]
    return CompiledSystem(
        f_slp=b.project(f_handles),
        jac_slp=b.project(flat_jac),
        source=system,
        horner=horner,
    )


# ---------------------------------------------------------------------------
# evaluation


def _point_array(x):
    out = np.empty((len(x), 2), dtype=np.float64)
    for i, z in enumerate(x):
        if isinstance(z, (tuple, list)):
            out[i, 0], out[i, 1] = float(z[0]), float(z[1])
        else:
            z = complex(z)
            out[i, 0], out[i, 1] = z.real, z.imag
    return out


def _eval_point_raw(prog, x, bits):
    """x: (n,2) float array at 53 bits, or list of mpf pairs above."""
    if bits == _F64:
        return kernel.eval_tape_point(
            prog.code, prog.consts_point(_F64), x, prog.n_slots
        )
    return mparith.eval_tape_point(
        prog.code, prog.consts_point(bits), x, prog.n_slots, bits
    )


def _eval_box_raw(prog, box, bits):
    """box: (n,4) float array at 53 bits, or list of mpf 4-tuples above."""
    if bits == _F64:
        return kernel.eval_tape_box(
            prog.code, prog.consts_box(_F64), box, prog.n_slots
        )
    return mparith.eval_tape_box(
        prog.code, prog.consts_box(bits), box, prog.n_slots, bits
    )


def _raise_eval(status, bad, prog):
    if status == kernel.ZERO_DIVISION:
        raise IntervalDivisionError(
            f"division by zero at instruction {bad} of the tape"
        )
    raise EvaluationError(f"non-finite value at instruction {bad} of the tape")


def eval_point(prog, x, bits=_F64):
    """Evaluate the tape at a complex point; no containment guarantee.

    Returns a list of complex at 53 bits, a list of (re, im) mpf pairs above.
    """
    if len(x) != prog.n_inputs:
        raise EvaluationError(
            f"expected {prog.n_inputs} coordinates, got {len(x)}"
        )
    if bits == _F64:
        slots, status, bad = _eval_point_raw(prog, _point_array(x), bits)
        if status != kernel.OK:
            _raise_eval(status, bad, prog)
        return [complex(slots[s, 0], slots[s, 1]) for s in prog.outputs]
    pts = []
    for z in x:
        if isinstance(z, tuple) and len(z) == 2 and isinstance(z[0], tuple):
            pts.append(z)  # already a pair of raw mpf values
        elif isinstance(z, (tuple, list)):
            pts.append(
                (
                    mparith.from_float_exact(float(z[0])),
                    mparith.from_float_exact(float(z[1])),
                )
            )
        else:
            z = complex(z)
            pts.append(
                (
                    mparith.from_float_exact(z.real),
                    mparith.from_float_exact(z.imag),
                )
            )
    slots, status, bad = _eval_point_raw(prog, pts, bits)
    if status != kernel.OK:
        _raise_eval(status, bad, prog)
    return [slots[s] for s in prog.outputs]


def eval_interval(prog, box):
    """Evaluate the tape over an interval box; containment guaranteed."""
    if not isinstance(box, IntervalBox):
        box = IntervalBox(list(box))
    bits = box.bits
    raw = box._raw()
    if len(box) != prog.n_inputs:
        raise EvaluationError(
            f"expected {prog.n_inputs} coordinates, got {len(box)}"
        )
    slots, status, bad = _eval_box_raw(prog, raw, bits)
    if status != kernel.OK:
        _raise_eval(status, bad, prog)
    if bits == _F64:
        rects = [tuple(slots[s].tolist()) for s in prog.outputs]
    else:
        rects = [slots[s] for s in prog.outputs]
    return IntervalBox._from_raw(rects, bits)


def certify_positive_evaluation(compiled, box):
    """True only if F is provably positive on the real box.

    box: a sequence of RealIntervals (or an IntervalBox with zero imaginary
    parts). Requires real coefficients; embeds the box with degenerate
    imaginary parts, evaluates the enclosure, and demands every output's
    real interval stay strictly positive. False means "not proven".
    """
    if compiled.coefficient_kind != "real":
        return False
    if isinstance(box, IntervalBox):
        cbox = box
    else:
        from .interval import ComplexInterval

        entries = []
        for r in box:
            if not isinstance(r, RealInterval):
                r = RealInterval(r)
            entries.append(
                ComplexInterval(r, RealInterval(0.0, 0.0, bits=r.bits))
            )
        cbox = IntervalBox(entries)
    try:
        out = eval_interval(compiled.f_slp, cbox)
    except (IntervalDivisionError, EvaluationError):
        return False
    for e in out:
        if not e.re.lo_fraction() > 0:
            return False
        if not e.im.contains(0):
            return False
    return True

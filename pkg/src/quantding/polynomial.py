"""Real polynomials in the ambient coordinates (x1, x2, x3) of the unit sphere."""

from __future__ import annotations

import re
from collections import defaultdict

import numpy as np

from .series import Series

MAX_DEGREE = 24


class ParseError(ValueError):
    def __init__(self, message, offset):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class Polynomial:
    """Sparse polynomial ``sum c * x1**a * x2**b * x3**c``.

    Immutable.  The representation is not reduced modulo ``|x|**2 = 1``, so two
    different polynomials may agree as functions on the sphere.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        clean = {}
        for exps, coeff in (terms or {}).items():
            coeff = float(coeff)
            if coeff != 0.0:
                clean[tuple(int(e) for e in exps)] = coeff
        self._terms = clean

    @classmethod
    def constant(cls, c):
        return cls({(0, 0, 0): c})

    @classmethod
    def coordinate(cls, i):
        exps = [0, 0, 0]
        exps[i - 1] = 1
        return cls({tuple(exps): 1.0})

    @property
    def terms(self):
        return dict(self._terms)

    @property
    def degree(self):
        return max((sum(e) for e in self._terms), default=0)

    def is_constant(self):
        return all(sum(e) == 0 for e in self._terms)

    def __repr__(self):
        if not self._terms:
            return "Polynomial(0)"
        parts = []
        for (a, b, c), coeff in sorted(self._terms.items()):
            mono = "*".join(f"x{i}^{e}" if e > 1 else f"x{i}" for i, e in zip((1, 2, 3), (a, b, c)) if e)
            parts.append(f"{coeff!r}*{mono}" if mono else repr(coeff))
        return "Polynomial(" + " + ".join(parts) + ")"

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self._terms == other._terms

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    def _lift(self, other):
        return other if isinstance(other, Polynomial) else Polynomial.constant(other)

    def __add__(self, other):
        other = self._lift(other)
        out = defaultdict(float, self._terms)
        for e, c in other._terms.items():
            out[e] += c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({e: -c for e, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        other = self._lift(other)
        out = defaultdict(float)
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                out[(e1[0] + e2[0], e1[1] + e2[1], e1[2] + e2[2])] += c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("exponent must be a nonnegative integer")
        out = Polynomial.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def evaluate(self, xyz):
        """Evaluate at ambient points, ``xyz`` of shape (..., 3)."""
        xyz = np.asarray(xyz, dtype=float)
        out = np.zeros(xyz.shape[:-1])
        for (a, b, c), coeff in self._terms.items():
            out = out + coeff * xyz[..., 0] ** a * xyz[..., 1] ** b * xyz[..., 2] ** c
        return out

    def series(self, grid, order=1):
        """Taylor series at every node of ``grid`` in the node's chart."""
        coords = grid.coordinate_series(order)
        powers = {}
        out = Series.constant(np.zeros(grid.size), order)
        for exps, coeff in self._terms.items():
            term = coeff
            for i, e in enumerate(exps):
                if e:
                    if (i, e) not in powers:
                        powers[(i, e)] = coords[i] ** e
                    term = powers[(i, e)] * term
            out = out + term
        return out


_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*^()]))")


def _tokenize(text):
    tokens = []
    pos = 0
    while True:
        m = _TOKEN.match(text, pos)
        if m is None:
            rest = text[pos:]
            if rest.strip() == "":
                break
            offset = pos + (len(rest) - len(rest.lstrip()))
            raise ParseError(f"unexpected character {text[offset]!r}", offset)
        start = m.start(m.lastgroup)
        tokens.append((m.lastgroup, m.group(m.lastgroup), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    # expr   := term (('+'|'-') term)*
    # term   := unary ('*' unary)*
    # unary  := ('+'|'-') unary | power
    # power  := atom ('^' integer)?
    # atom   := number | x1 | x2 | x3 | '(' expr ')'

    def __init__(self, text, max_degree):
        self.tokens = _tokenize(text)
        self.i = 0
        self.max_degree = max_degree

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op):
        kind, val, pos = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r}", pos)

    def parse(self):
        p = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos)
        return p

    def check(self, p, pos):
        if p.degree > self.max_degree:
            raise ParseError(f"degree {p.degree} exceeds limit {self.max_degree}", pos)
        return p

    def expr(self):
        p = self.term()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                q = self.term()
                p = p + q if val == "+" else p - q
            else:
                return p

    def term(self):
        p = self.unary()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val == "*":
                self.take()
                p = self.check(p * self.unary(), pos)
            else:
                return p

    def unary(self):
        kind, val, pos = self.peek()
        if kind == "op" and val in "+-":
            self.take()
            p = self.unary()
            return -p if val == "-" else p
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.take()
            kind, val, epos = self.take()
            if kind != "num" or not val.isdigit():
                raise ParseError("exponent must be a nonnegative integer", epos)
            n = int(val)
            if base.degree * n > self.max_degree:
                raise ParseError(f"degree {base.degree * n} exceeds limit {self.max_degree}", pos)
            return base**n
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            return Polynomial.constant(float(val))
        if kind == "id":
            if val in ("x1", "x2", "x3"):
                return Polynomial.coordinate(int(val[1]))
            raise ParseError(f"unknown identifier {val!r}", pos)
        if kind == "op" and val == "(":
            p = self.expr()
            self.expect_op(")")
            return p
        if kind == "end":
            raise ParseError("unexpected end of input", pos)
        raise ParseError(f"unexpected token {val!r}", pos)


def parse_expr(text, max_degree=MAX_DEGREE):
    """Parse an expression in x1, x2, x3 into a :class:`Polynomial`.

    >>> parse_expr("x3^2 - 0.5").evaluate([0.0, 0.0, 1.0])
    array(0.5)
    """
    return _Parser(text, max_degree).parse()

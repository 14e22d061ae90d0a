"""NC rational expressions: text -> AST -> realization, plus a direct evaluator.

Grammar (whitespace-insensitive, juxtaposition means product):

    expr   := term (('+' | '-') term)*
    term   := factor ('*'? factor)*
    factor := 'inv(' expr ')' | '(' expr ')' | variable | scalar | constant

Variables are written ``x1 .. xd`` or ``z1 .. zd``; scalars are decimal
literals; any other identifier must appear in the constants table handed to
:func:`parse`.  Division is deliberately absent: in a non-commutative world
only ``inv(.)`` is unambiguous.
"""

import re
from dataclasses import dataclass

import numpy as np

from .core import SingularMatrixError, invert_checked
from .algebra import constant_fm, coordinate_fm, fm_add, fm_inv, fm_mul, fm_neg

__all__ = [
    "Variable",
    "Constant",
    "Sum",
    "Product",
    "Negate",
    "Inverse",
    "ParseError",
    "UndefinedAtCentreError",
    "parse",
    "realize_expression",
    "eval_expression",
]


class ParseError(ValueError):
    """Syntax or lookup failure; ``offset`` is the byte position in the input."""

    def __init__(self, message, offset):
        super().__init__("%s (at offset %d)" % (message, offset))
        self.offset = offset


class UndefinedAtCentreError(ValueError):
    """An inv(...) node is singular at the centre; ``offset`` pinpoints it."""

    def __init__(self, offset, sigma_min=None):
        super().__init__(
            "expression not defined at centre Y: inv(...) at offset %d is singular"
            % offset
        )
        self.offset = offset
        self.sigma_min = sigma_min


@dataclass(frozen=True)
class Variable:
    index: int
    pos: int = -1


@dataclass(frozen=True)
class Constant:
    value: object          # complex scalar or n x n ndarray
    name: str = None
    pos: int = -1


@dataclass(frozen=True)
class Sum:
    terms: tuple
    pos: int = -1


@dataclass(frozen=True)
class Product:
    factors: tuple         # ordered: multiplication does not commute
    pos: int = -1


@dataclass(frozen=True)
class Negate:
    child: object
    pos: int = -1


@dataclass(frozen=True)
class Inverse:
    child: object
    pos: int = -1


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<sym>[+\-*()]))"
)

_VAR_RE = re.compile(r"^[xz]([1-9]\d*)$")


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise ParseError("unexpected character %r" % text[at], at)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, tokens, d, constants):
        self.tokens = tokens
        self.i = 0
        self.d = d
        self.constants = constants or {}

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.peek()
        if kind != "sym" or text != value:
            raise ParseError("expected %r" % value, off)
        return self.advance()

    def parse_expr(self):
        kind, text, off = self.peek()
        terms = [self.parse_term()]
        while True:
            kind, text, _ = self.peek()
            if kind == "sym" and text in "+-":
                self.advance()
                t = self.parse_term()
                terms.append(Negate(t, t.pos) if text == "-" else t)
            else:
                break
        if len(terms) == 1:
            return terms[0]
        return Sum(tuple(terms), off)

    def _starts_factor(self):
        kind, text, _ = self.peek()
        return kind in ("number", "name") or (kind == "sym" and text == "(")

    def parse_term(self):
        start = self.peek()[2]
        factors = [self.parse_factor()]
        while True:
            kind, text, _ = self.peek()
            if kind == "sym" and text == "*":
                self.advance()
                factors.append(self.parse_factor())
            elif self._starts_factor():
                factors.append(self.parse_factor())
            else:
                break
        if len(factors) == 1:
            return factors[0]
        return Product(tuple(factors), start)

    def parse_factor(self):
        kind, text, off = self.advance()
        if kind == "number":
            return Constant(complex(float(text)), pos=off)
        if kind == "sym" and text == "(":
            inner = self.parse_expr()
            self.expect(")")
            return inner
        if kind == "name":
            if text == "inv":
                self.expect("(")
                inner = self.parse_expr()
                self.expect(")")
                return Inverse(inner, off)
            m = _VAR_RE.match(text)
            if m:
                k = int(m.group(1))
                if k > self.d:
                    raise ParseError(
                        "variable index %d exceeds the variable count d = %d"
                        % (k, self.d), off)
                return Variable(k, off)
            if text in self.constants:
                return Constant(np.asarray(self.constants[text], dtype=np.complex128),
                                name=text, pos=off)
            raise ParseError("unknown identifier %r" % text, off)
        raise ParseError("expected a factor", off)


def parse(text, d, constants=None):
    """Parse an NC rational expression over z1..zd / x1..xd into an AST."""
    tokens = _tokenize(text)
    p = _Parser(tokens, d, constants)
    if p.peek()[0] == "end":
        raise ParseError("empty expression", 0)
    expr = p.parse_expr()
    kind, _, off = p.peek()
    if kind != "end":
        raise ParseError("trailing input", off)
    return expr


def _constant_matrix(node, n):
    v = node.value
    if isinstance(v, np.ndarray):
        if v.shape != (n, n):
            raise ValueError(
                "constant %s has shape %s, expected %d x %d"
                % (node.name or "<inline>", v.shape, n, n))
        return v
    return complex(v) * np.eye(n, dtype=np.complex128)


def realize_expression(e, y):
    """Drive the realization algorithm over the AST, recursing bottom-up.

    Every inv(...) node must be invertible at the centre; the first failing
    node is reported with its source offset.
    """
    n = y.base_n
    if isinstance(e, Variable):
        return coordinate_fm(e.index, y)
    if isinstance(e, Constant):
        return constant_fm(_constant_matrix(e, n), y)
    if isinstance(e, Negate):
        return fm_neg(realize_expression(e.child, y))
    if isinstance(e, Sum):
        acc = realize_expression(e.terms[0], y)
        for t in e.terms[1:]:
            acc = fm_add(acc, realize_expression(t, y))
        return acc
    if isinstance(e, Product):
        acc = realize_expression(e.factors[0], y)
        for f in e.factors[1:]:
            acc = fm_mul(acc, realize_expression(f, y))
        return acc
    if isinstance(e, Inverse):
        inner = realize_expression(e.child, y)
        try:
            return fm_inv(inner)
        except SingularMatrixError as exc:
            raise UndefinedAtCentreError(e.pos, exc.sigma_min) from exc
    raise TypeError("not an expression node: %r" % (e,))


def eval_expression(e, x):
    """Direct matrix arithmetic over the AST at a tuple X (the oracle path)."""
    side = x.side
    if isinstance(e, Variable):
        if e.index > x.d:
            raise ValueError("variable x%d exceeds tuple with d = %d" % (e.index, x.d))
        return x.component(e.index).copy()
    if isinstance(e, Constant):
        mat = _constant_matrix(e, x.base_n)
        return np.kron(np.eye(x.level_m), mat)
    if isinstance(e, Negate):
        return -eval_expression(e.child, x)
    if isinstance(e, Sum):
        acc = np.zeros((side, side), dtype=np.complex128)
        for t in e.terms:
            acc += eval_expression(t, x)
        return acc
    if isinstance(e, Product):
        acc = eval_expression(e.factors[0], x)
        for f in e.factors[1:]:
            acc = acc @ eval_expression(f, x)
        return acc
    if isinstance(e, Inverse):
        return invert_checked(eval_expression(e.child, x), "inv(...) argument")
    raise TypeError("not an expression node: %r" % (e,))

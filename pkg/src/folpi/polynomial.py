"""Exact bivariate polynomials in x, y over the rationals.

A polynomial is stored as a mapping ``(i, j) -> Fraction`` for the monomial
``x^i y^j``; zero coefficients are never stored.  Instances are immutable and
hashable.  The parser accepts ``+ - * ^``, parentheses, integer literals and
division by constants (so ``1/2*x`` and ``(3/4)*y^2`` both work).
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Callable, Dict, Iterable, Iterator, Mapping, Tuple

import sympy

from .errors import ParseError

Monomial = Tuple[int, int]


class Poly:
    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, object] | None = None):
        clean: Dict[Monomial, Fraction] = {}
        for (i, j), c in (terms or {}).items():
            if i < 0 or j < 0:
                raise ValueError(f"negative exponent in monomial {(i, j)}")
            c = Fraction(c)
            if c:
                clean[(int(i), int(j))] = clean.get((int(i), int(j)), Fraction(0)) + c
        self._terms = {m: c for m, c in clean.items() if c}
        self._hash = None

    # construction helpers
    @classmethod
    def const(cls, c) -> "Poly":
        return cls({(0, 0): c})

    @classmethod
    def x(cls) -> "Poly":
        return cls({(1, 0): 1})

    @classmethod
    def y(cls) -> "Poly":
        return cls({(0, 1): 1})

    @property
    def terms(self) -> Dict[Monomial, Fraction]:
        return dict(self._terms)

    def items(self) -> Iterator[Tuple[Monomial, Fraction]]:
        return iter(sorted(self._terms.items()))

    def is_zero(self) -> bool:
        return not self._terms

    def coeff(self, i: int, j: int) -> Fraction:
        return self._terms.get((i, j), Fraction(0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    # arithmetic
    def __add__(self, other) -> "Poly":
        other = _lift(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Poly(out)

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly({m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Poly":
        return self + (-_lift(other))

    def __rsub__(self, other) -> "Poly":
        return _lift(other) - self

    def __mul__(self, other) -> "Poly":
        other = _lift(other)
        out: Dict[Monomial, Fraction] = {}
        for (i1, j1), c1 in self._terms.items():
            for (i2, j2), c2 in other._terms.items():
                m = (i1 + i2, j1 + j2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Poly(out)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "Poly":
        if n < 0:
            raise ValueError("negative power of a polynomial")
        result, base = Poly.const(1), self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c) -> "Poly":
        c = Fraction(c)
        return Poly({m: v * c for m, v in self._terms.items()})

    # structure
    def order(self) -> int:
        """Vanishing order at the origin (lowest total degree)."""
        if not self._terms:
            raise ValueError("order of the zero polynomial is undefined")
        return min(i + j for i, j in self._terms)

    def degree(self) -> int:
        if not self._terms:
            return -1
        return max(i + j for i, j in self._terms)

    def initial_form(self) -> "Poly":
        """Lowest-degree homogeneous part (the tangent cone equation)."""
        d = self.order()
        return Poly({m: c for m, c in self._terms.items() if sum(m) == d})

    def x_adic_order(self) -> int:
        return min(i for i, _ in self._terms)

    def y_adic_order(self) -> int:
        return min(j for _, j in self._terms)

    def divide_monomial(self, a: int, b: int) -> "Poly":
        """Exact division by x^a y^b; raises if it does not divide."""
        out = {}
        for (i, j), c in self._terms.items():
            if i < a or j < b:
                raise ValueError(f"x^{a} y^{b} does not divide {self}")
            out[(i - a, j - b)] = c
        return Poly(out)

    def __call__(self, x, y):
        total = 0
        for (i, j), c in self._terms.items():
            total = total + c * (x ** i) * (y ** j)
        return total

    def diff_x(self) -> "Poly":
        return Poly({(i - 1, j): c * i for (i, j), c in self._terms.items() if i})

    def diff_y(self) -> "Poly":
        return Poly({(i, j - 1): c * j for (i, j), c in self._terms.items() if j})

    # chart maps
    def chart_x(self) -> "Poly":
        """Pullback by (x, y) -> (x, x*y)."""
        return Poly({(i + j, j): c for (i, j), c in self._terms.items()})

    def chart_y(self) -> "Poly":
        """Pullback by (x, y) -> (x*y, x): the second chart with the new
        exceptional line renamed to {x = 0}."""
        return Poly({(i + j, i): c for (i, j), c in self._terms.items()})

    def shift_y(self, c) -> "Poly":
        """Pullback by (x, y) -> (x, y + c)."""
        c = Fraction(c)
        if c == 0:
            return self
        out: Dict[Monomial, Fraction] = {}
        for (i, j), a in self._terms.items():
            binom = 1
            for k in range(j + 1):
                m = (i, k)
                out[m] = out.get(m, Fraction(0)) + a * binom * c ** (j - k)
                binom = binom * (j - k) // (k + 1)
        return Poly(out)

    def on_line_x0(self) -> Dict[int, Fraction]:
        """Restriction to {x = 0} as a univariate coefficient map in y."""
        return {j: c for (i, j), c in self._terms.items() if i == 0}

    # printing
    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for (i, j), c in sorted(self._terms.items(), key=lambda t: (t[0][0] + t[0][1], -t[0][0])):
            mono = "*".join(
                s for s in (_power("x", i), _power("y", j)) if s
            )
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{_frac(mag)}*{mono}"
            else:
                body = _frac(mag)
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first = parts[0]
        text = ("-" if first_sign == "-" else "") + first
        for sign, body in parts[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self) -> str:
        return f"Poly({str(self)!r})"

    def to_sympy(self, xs=None, ys=None):
        xs = xs if xs is not None else sympy.Symbol("x")
        ys = ys if ys is not None else sympy.Symbol("y")
        return sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * xs ** i * ys ** j
                           for (i, j), c in self._terms.items()])


def _power(v: str, e: int) -> str:
    if e == 0:
        return ""
    return v if e == 1 else f"{v}^{e}"


def _frac(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def _lift(v) -> Poly:
    return v if isinstance(v, Poly) else Poly.const(v)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([xy])|(\*\*|[-+*/^()]))")


def _tokenize(text: str) -> list:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r} at offset {pos}")
        num, var, op = m.groups()
        if num is not None:
            out.append(("num", int(num)))
        elif var is not None:
            out.append(("var", var))
        else:
            out.append(("op", "^" if op == "**" else op))
        pos = m.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    return out


class _Parser:
    def __init__(self, tokens: list, text: str):
        self.toks, self.i, self.text = tokens, 0, text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op):
        kind, val = self.take()
        if kind != "op" or val != op:
            raise ParseError(f"expected {op!r} in {self.text!r}")

    def expr(self) -> Poly:
        kind, val = self.peek()
        sign = 1
        if kind == "op" and val in "+-":
            self.take()
            sign = -1 if val == "-" else 1
        acc = self.term().scale(sign)
        while True:
            kind, val = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                t = self.term()
                acc = acc + t if val == "+" else acc - t
            else:
                return acc

    def term(self) -> Poly:
        acc = self.power()
        while True:
            kind, val = self.peek()
            if kind == "op" and val == "*":
                self.take()
                acc = acc * self.power()
            elif kind == "op" and val == "/":
                self.take()
                d = self.power()
                if d.degree() != 0:
                    raise ParseError("division is only allowed by nonzero constants")
                acc = acc.scale(1 / d.coeff(0, 0))
            else:
                return acc

    def power(self) -> Poly:
        base = self.atom()
        kind, val = self.peek()
        if kind == "op" and val == "^":
            self.take()
            k, e = self.take()
            if k != "num":
                raise ParseError("exponents must be nonnegative integer literals")
            return base ** e
        return base

    def atom(self) -> Poly:
        kind, val = self.take()
        if kind == "num":
            return Poly.const(val)
        if kind == "var":
            return Poly.x() if val == "x" else Poly.y()
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        if kind == "op" and val == "-":
            return -self.atom()
        raise ParseError(f"unexpected token {val!r} in {self.text!r}")


def parse_poly(text: str) -> Poly:
    toks = _tokenize(text)
    if not toks:
        raise ParseError("empty expression")
    p = _Parser(toks, text)
    out = p.expr()
    if p.i != len(toks):
        raise ParseError(f"trailing input in {text!r}")
    return out


# ------------------------------------------------------------ algebra via sympy

def gcd_with_partials(f: Poly) -> Poly:
    """gcd(f, f_x, f_y) computed by sympy over QQ, returned monic-ish as Poly."""
    xs, ys = sympy.symbols("x y")
    g = sympy.gcd_list([f.to_sympy(xs, ys), f.diff_x().to_sympy(xs, ys), f.diff_y().to_sympy(xs, ys)])
    return from_sympy(sympy.Poly(g, xs, ys, domain="QQ"))


def from_sympy(p) -> Poly:
    return Poly({m: Fraction(int(c.p), int(c.q)) for m, c in p.terms()})


def factor_univariate(coeffs: Mapping[int, Fraction]) -> list:
    """Irreducible factorization over QQ of a univariate polynomial in t.

    Returns ``[(factor_coeffs, multiplicity), ...]`` where factor_coeffs is a
    list of Fractions, lowest degree first, normalised to be monic.
    """
    t = sympy.Symbol("t")
    expr = sympy.Add(*[sympy.Rational(c.numerator, c.denominator) * t ** k for k, c in coeffs.items()])
    _, factors = sympy.factor_list(sympy.Poly(expr, t, domain="QQ"))
    out = []
    for fac, mult in factors:
        cs = [Fraction(int(c.p), int(c.q)) for c in reversed(fac.all_coeffs())]
        lead = cs[-1]
        out.append(([c / lead for c in cs], mult))
    out.sort(key=lambda fm: (len(fm[0]), fm[0]))
    return out


def univariate_str(coeffs: Iterable[Fraction], var: str = "t") -> str:
    terms = {k: c for k, c in enumerate(coeffs) if c}
    return str(Poly({(0, k): c for k, c in terms.items()})).replace("y", var)

"""Text literals for string states, e.g. ``sqrt(2)/sqrt(3)*|0> + 1/sqrt(3)*|11>``.

Terms are kets ``|bits>`` (``|e>`` is the empty string) scaled by
coefficients built from decimals, ``i``, ``sqrt(...)``, parentheses and
the four arithmetic operators.  Complex coefficients need parentheses:
``(0.5+0.5i)*|0>``.  The parsed state is normalized.
"""
from __future__ import annotations

import cmath
import re

from .qstring import QString, normalize

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<sqrt>sqrt)
  | (?P<imag>i)
  | (?P<ket>\|)
  | (?P<op>[-+*/()])
""", re.VERBOSE)
_KET_BODY = re.compile(r"(e|[01]*)>")


class StateSyntaxError(ValueError):
    """Malformed state literal; ``offset`` is the byte offset of the problem."""

    def __init__(self, message: str, text: str, pos: int):
        self.offset = len(text[:pos].encode())
        super().__init__(f"{message} at byte {self.offset}")


def _tokenize(text: str) -> list[tuple[str, object, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise StateSyntaxError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        if kind == "ket":
            body = _KET_BODY.match(text, m.end())
            if not body:
                raise StateSyntaxError("unterminated or malformed ket", text, pos)
            bits = "" if body.group(1) == "e" else body.group(1)
            out.append(("ket", bits, pos))
            pos = body.end()
            continue
        if kind == "num":
            out.append(("num", float(m.group()), pos))
        elif kind != "ws":
            out.append((kind if kind != "op" else m.group(), m.group(), pos))
        pos = m.end()
    out.append(("end", None, len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self) -> str:
        return self.toks[self.i][0]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg: str, tok=None):
        pos = (tok or self.toks[self.i])[2]
        raise StateSyntaxError(msg, self.text, pos)

    def expect(self, kind: str):
        if self.peek() != kind:
            self.fail(f"expected {kind!r}")
        return self.take()

    def expr(self):
        value = self.term()
        while self.peek() in "+-":
            op = self.take()
            rhs = self.term()
            value = self.combine(value, rhs, op)
        return value

    def combine(self, a, b, op):
        sign = 1 if op[0] == "+" else -1
        if isinstance(a, dict) and isinstance(b, dict):
            out = dict(a)
            for k, v in b.items():
                out[k] = out.get(k, 0j) + sign * v
            return out
        if isinstance(a, complex) and isinstance(b, complex):
            return a + sign * b
        self.fail("cannot add a number to a state", op)

    def term(self):
        value = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            rhs = self.unary()
            if op[0] == "*":
                if isinstance(value, dict) and isinstance(rhs, dict):
                    self.fail("cannot multiply two states", op)
                if isinstance(value, dict):
                    value, rhs = rhs, value
                value = {k: value * v for k, v in rhs.items()} if isinstance(rhs, dict) else value * rhs
            else:
                if isinstance(rhs, dict):
                    self.fail("cannot divide by a state", op)
                if rhs == 0:
                    self.fail("division by zero", op)
                value = {k: v / rhs for k, v in value.items()} if isinstance(value, dict) else value / rhs
        return value

    def unary(self):
        if self.peek() in "+-":
            op = self.take()
            value = self.unary()
            if op[0] == "-":
                value = {k: -v for k, v in value.items()} if isinstance(value, dict) else -value
            return value
        return self.atom()

    def atom(self):
        kind, val, pos = self.toks[self.i]
        if kind == "num":
            self.take()
            if self.peek() == "imag":
                self.take()
                return complex(0, val)
            return complex(val)
        if kind == "imag":
            self.take()
            return 1j
        if kind == "ket":
            self.take()
            return {val: 1 + 0j}
        if kind == "sqrt":
            self.take()
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            if isinstance(arg, dict):
                self.fail("sqrt of a state", (kind, val, pos))
            return cmath.sqrt(arg)
        if kind == "(":
            self.take()
            value = self.expr()
            self.expect(")")
            return value
        self.fail("expected a number, ket or '('")

    def parse(self) -> QString:
        value = self.expr()
        if self.peek() != "end":
            self.fail("unexpected trailing input")
        if not isinstance(value, dict):
            raise StateSyntaxError("literal is a number, not a state", self.text, 0)
        return normalize(QString(tuple(value.items())))


def parse_state_literal(text: str) -> QString:
    return _Parser(text).parse()


def _fmt_real(x: float) -> str:
    s = f"{x:.10g}"
    return "0" if s == "-0" else s


def format_coefficient(a: complex) -> str:
    if abs(a.imag) < 1e-300:
        return _fmt_real(a.real)
    if abs(a.real) < 1e-300:
        return f"{_fmt_real(a.imag)}i"
    sign = "-" if a.imag < 0 else "+"
    return f"({_fmt_real(a.real)}{sign}{_fmt_real(abs(a.imag))}i)"


def format_state(q: QString) -> str:
    """Literal form with 10 significant digits; parses back to the same state."""
    parts = []
    for bits, amp in q.terms:
        ket = f"|{bits or 'e'}>"
        if abs(amp.imag) < 1e-300 and amp.real < 0:
            coeff, sign = format_coefficient(-amp), "-"
        else:
            coeff, sign = format_coefficient(amp), "+"
        term = f"{coeff}*{ket}"
        if not parts:
            parts.append(term if sign == "+" else f"-{term}")
        else:
            parts.append(f"{sign} {term}")
    return " ".join(parts)

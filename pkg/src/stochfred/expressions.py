"""A tiny arithmetic language for kernels, noise terms and anchors in config files.

Grammar (``^`` binds tightest and is right associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" [expr ("," expr)*] ")" | "(" expr ")"

Variables: ``u``, ``v`` and ``x`` all name the function argument, ``s`` is the
noise parameter, ``n`` and ``m`` are 1-based coefficient indices.  ``pi`` is a
constant.  Functions are limited to :data:`FUNCTIONS`; anything else is an
:class:`UnknownFunctionError`.  Nothing is passed to ``eval``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np

from .errors import ConfigParseError, UnknownFunctionError

ARG_NAMES = ("u", "v", "x")
VARIABLES = ARG_NAMES + ("s", "n", "m")
CONSTANTS = {"pi": np.pi}


def _monomial(k, x=None):
    return x ** k


def _indicator(lo, hi, x=None):
    return np.where((x >= lo) & (x <= hi), 1.0, 0.0)


def _geometric(r, n=None):
    return r ** n


# name -> (callable, number of explicit arguments, implicit variable or None)
FUNCTIONS = {
    "monomial": (_monomial, 1, "x"),
    "sin": (np.sin, 1, None),
    "cos": (np.cos, 1, None),
    "exp_quad": (lambda c, x=None: np.exp(-c * x * x), 1, "x"),
    "cauchy_sqrt": (lambda x=None: 1.0 / np.sqrt(1.0 + x * x), 0, "x"),
    "indicator": (_indicator, 2, "x"),
    "geometric": (_geometric, 1, "n"),
}

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")


@dataclass(frozen=True)
class Expr:
    """Parsed expression; ``source`` is the canonical text."""

    tree: tuple
    source: str

    def uses(self, name: str) -> bool:
        return name in _names(self.tree)

    def __call__(self, x=None, s=None, n=None, m=None):
        env = {"x": x, "s": s, "n": n, "m": m}
        for name in ARG_NAMES:
            env[name] = x
        return _eval(self.tree, env)

    def bivariate(self, u, v):
        """Evaluate a kernel expression with ``u`` and ``v`` kept apart."""
        return _eval(self.tree, {"u": u, "v": v, "x": u, "s": None, "n": None, "m": None})

    def __str__(self):
        return self.source


def _names(tree) -> set:
    kind = tree[0]
    if kind == "var":
        return {tree[1]}
    if kind == "num":
        return set()
    if kind == "call":
        out = set()
        implicit = FUNCTIONS[tree[1]][2]
        if implicit is not None and len(tree[2]) == FUNCTIONS[tree[1]][1]:
            out.add(implicit)
        for a in tree[2]:
            out |= _names(a)
        return out
    if kind == "neg":
        return _names(tree[1])
    return _names(tree[2]) | _names(tree[3])


def _eval(tree, env):
    kind = tree[0]
    if kind == "num":
        # float64 so that scalar arithmetic follows IEEE rules like the array case
        return np.float64(tree[1])
    if kind == "var":
        name = tree[1]
        if name in CONSTANTS:
            return CONSTANTS[name]
        val = env.get(name)
        if val is None:
            raise ValueError(f"variable {name!r} has no value in this context")
        return val
    if kind == "neg":
        return -_eval(tree[1], env)
    if kind == "call":
        fn, nargs, implicit = FUNCTIONS[tree[1]]
        args = [_eval(a, env) for a in tree[2]]
        if implicit is not None and len(args) == nargs:
            val = env.get(implicit)
            if val is None:
                raise ValueError(f"{tree[1]} needs variable {implicit!r} in this context")
            args.append(val)
        return fn(*args)
    op, a, b = tree[1], _eval(tree[2], env), _eval(tree[3], env)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        return a / b
    return np.power(a, b)


class _Parser:
    def __init__(self, text: str, line: int, col0: int):
        self.text = text
        self.line = line
        self.col0 = col0
        self.tokens = []
        pos = 0
        while pos < len(text):
            mt = _TOKEN.match(text, pos)
            if mt.group(0).strip() == "":
                break
            start = mt.start(mt.lastindex)
            if mt.group(1):
                self.tokens.append(("num", mt.group(1), start))
            elif mt.group(2):
                self.tokens.append(("name", mt.group(2), start))
            else:
                ch = mt.group(3)
                if ch not in "+-*/^(),":
                    self.error(f"unexpected character {ch!r}", start)
                self.tokens.append(("op", ch, start))
            pos = mt.end()
        self.i = 0

    def error(self, msg, pos=None):
        if pos is None:
            pos = self.tokens[self.i][2] if self.i < len(self.tokens) else len(self.text)
        raise ConfigParseError(msg, self.line, self.col0 + pos + 1)

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else (None, None, len(self.text))

    def take(self, value=None):
        tok = self.peek()
        if tok[0] is None or (value is not None and tok[1] != value):
            self.error(f"expected {value!r}" if value else "unexpected end of expression")
        self.i += 1
        return tok

    def parse(self):
        if not self.tokens:
            self.error("empty expression", 0)
        tree = self.expr()
        if self.i != len(self.tokens):
            self.error(f"unexpected token {self.peek()[1]!r}")
        return tree

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = ("bin", op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = ("bin", op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            node = ("bin", "^", node, self.unary())
        return node

    def atom(self):
        kind, val, pos = self.peek()
        if kind == "num":
            self.take()
            return ("num", float(val))
        if kind == "name":
            self.take()
            if self.peek()[:2] == ("op", "("):
                if val not in FUNCTIONS:
                    raise UnknownFunctionError(
                        f"unknown function {val!r}; available: {', '.join(sorted(FUNCTIONS))}",
                        self.line, self.col0 + pos + 1)
                self.take("(")
                args = []
                if self.peek()[:2] != ("op", ")"):
                    args.append(self.expr())
                    while self.peek()[:2] == ("op", ","):
                        self.take()
                        args.append(self.expr())
                self.take(")")
                nargs, implicit = FUNCTIONS[val][1], FUNCTIONS[val][2]
                allowed = (nargs, nargs + 1) if implicit else (nargs,)
                if len(args) not in allowed:
                    self.error(f"{val} takes {nargs} argument(s)", pos)
                return ("call", val, tuple(args))
            if val in FUNCTIONS:
                if FUNCTIONS[val][1] == 0:
                    return ("call", val, ())
                self.error(f"function {val!r} needs arguments", pos)
            if val not in VARIABLES and val not in CONSTANTS:
                raise UnknownFunctionError(f"unknown name {val!r}", self.line, self.col0 + pos + 1)
            return ("var", val)
        if (kind, val) == ("op", "("):
            self.take()
            node = self.expr()
            self.take(")")
            return node
        self.error("expected a number, name or '('")


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _fmt_num(x: float) -> str:
    return str(int(x)) if float(x).is_integer() and abs(x) < 1e15 else repr(float(x))


def unparse(tree, parent: int = 0, right: bool = False) -> str:
    kind = tree[0]
    if kind == "num":
        return _fmt_num(tree[1])
    if kind == "var":
        return tree[1]
    if kind == "call":
        return f"{tree[1]}({', '.join(unparse(a) for a in tree[2])})"
    if kind == "neg":
        text = "-" + unparse(tree[1], 3)
        return f"({text})" if parent > 3 else text
    op = tree[1]
    p = _PREC[op]
    if op == "^":
        text = f"{unparse(tree[2], p + 1)}^{unparse(tree[3], p - 1)}"
    else:
        sep = f" {op} " if p == 1 else op
        text = f"{unparse(tree[2], p)}{sep}{unparse(tree[3], p + 1, True)}"
    return f"({text})" if p < parent else text


def parse_expr(text: str, line: int = 0, col: int = 0) -> Expr:
    tree = _Parser(text, line, col).parse()
    return Expr(tree, unparse(tree))

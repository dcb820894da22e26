"""Tiny closed-form expression parser for the free potential functions.

Grammar: reals, the declared variable name (default y, t accepted as an
alias), the imaginary unit i, + - * / ^, parentheses, and the functions
sin cos sinh cosh exp.  Parsing is deterministic; syntax errors carry the
position.  Compiled expressions evaluate vectorized over numpy arrays with
complex arithmetic.
"""

from __future__ import annotations

import numpy as np

__all__ = ["ExprError", "parse_expression"]

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "sinh": np.sinh, "cosh": np.cosh,
    "exp": np.exp,
}


class ExprError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class _Tokenizer:
    def __init__(self, src):
        self.src = src
        self.pos = 0
        self.tokens = []
        self._scan()
        self.idx = 0

    def _scan(self):
        s = self.src
        i = 0
        while i < len(s):
            c = s[i]
            if c.isspace():
                i += 1
                continue
            if c in "+-*/^()":
                self.tokens.append((c, c, i))
                i += 1
                continue
            if c.isdigit() or c == ".":
                j = i
                seen_e = False
                while j < len(s) and (s[j].isdigit() or s[j] == "."
                                      or (s[j] in "eE" and not seen_e)
                                      or (s[j] in "+-" and j > i and s[j - 1] in "eE")):
                    if s[j] in "eE":
                        seen_e = True
                    j += 1
                try:
                    val = float(s[i:j])
                except ValueError:
                    raise ExprError(f"bad number {s[i:j]!r}", i)
                self.tokens.append(("num", val, i))
                i = j
                continue
            if c.isalpha():
                j = i
                while j < len(s) and s[j].isalnum():
                    j += 1
                self.tokens.append(("name", s[i:j], i))
                i = j
                continue
            raise ExprError(f"unexpected character {c!r}", i)
        self.tokens.append(("end", None, len(s)))

    def peek(self):
        return self.tokens[self.idx]

    def next(self):
        tok = self.tokens[self.idx]
        self.idx += 1
        return tok


class _Parser:
    """Recursive descent; ^ binds tightest and associates right."""

    def __init__(self, src, variable):
        self.tk = _Tokenizer(src)
        self.variable = variable

    def parse(self):
        node = self._sum()
        kind, _, pos = self.tk.peek()
        if kind != "end":
            raise ExprError("unexpected trailing input", pos)
        return node

    def _sum(self):
        node = self._product()
        while self.tk.peek()[0] in ("+", "-"):
            op, _, _ = self.tk.next()
            rhs = self._product()
            node = (op, node, rhs)
        return node

    def _product(self):
        node = self._unary()
        while self.tk.peek()[0] in ("*", "/"):
            op, _, _ = self.tk.next()
            rhs = self._unary()
            node = (op, node, rhs)
        return node

    def _unary(self):
        kind, _, _ = self.tk.peek()
        if kind in ("+", "-"):
            op, _, _ = self.tk.next()
            operand = self._unary()
            return ("neg", operand) if op == "-" else operand
        return self._power()

    def _power(self):
        base = self._atom()
        if self.tk.peek()[0] == "^":
            self.tk.next()
            expo = self._unary()
            return ("^", base, expo)
        return base

    def _atom(self):
        kind, value, pos = self.tk.next()
        if kind == "num":
            return ("const", complex(value))
        if kind == "(":
            node = self._sum()
            k2, _, p2 = self.tk.next()
            if k2 != ")":
                raise ExprError("expected ')'", p2)
            return node
        if kind == "name":
            if value == "i":
                return ("const", 1j)
            if value in (self.variable, "t", "y"):
                return ("var",)
            if value in _FUNCS:
                k2, _, p2 = self.tk.next()
                if k2 != "(":
                    raise ExprError(f"expected '(' after {value}", p2)
                arg = self._sum()
                k3, _, p3 = self.tk.next()
                if k3 != ")":
                    raise ExprError("expected ')'", p3)
                return ("call", value, arg)
            raise ExprError(f"unknown name {value!r}", pos)
        raise ExprError("unexpected end of expression" if kind == "end"
                        else f"unexpected token {value!r}", pos)


def _evaluate(node, var):
    op = node[0]
    if op == "const":
        return node[1]
    if op == "var":
        return var
    if op == "neg":
        return -_evaluate(node[1], var)
    if op == "+":
        return _evaluate(node[1], var) + _evaluate(node[2], var)
    if op == "-":
        return _evaluate(node[1], var) - _evaluate(node[2], var)
    if op == "*":
        return _evaluate(node[1], var) * _evaluate(node[2], var)
    if op == "/":
        return _evaluate(node[1], var) / _evaluate(node[2], var)
    if op == "^":
        return _evaluate(node[1], var) ** _evaluate(node[2], var)
    if op == "call":
        return _FUNCS[node[1]](_evaluate(node[2], var))
    raise AssertionError(op)


def parse_expression(src, variable="y"):
    """Compile src to a vectorized function of one variable (complex output)."""
    tree = _Parser(src, variable).parse()

    def fn(v):
        v = np.asarray(v, dtype=complex)
        out = _evaluate(tree, v)
        return np.broadcast_to(np.asarray(out, dtype=complex), v.shape)

    fn.source = src
    return fn

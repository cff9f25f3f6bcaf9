"""Tiny boolean expression language for operational rules.

Rules are data, not code: each predicate is a text expression over the
profile attribute triples and the effective (post-margin) limits, e.g.

    window(movl) >= 1 and window(movl) <= 0.05 * max(movl)

Terms:  window(attr), max(attr), annual(attr), limit(attr), age(), numbers.
Arithmetic + - * /, comparisons > >= < <= ==, combined with and/or and
parentheses. Comparisons that reference limit() are restricted to the form
``expr > k * limit(attr)`` (or >=) with limit only on the right-hand side,
which is what makes suspicion sets provably monotone in the risk margin.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

from .model import ClientProfile, TRIPLE_ATTRIBUTES


class PredicateError(Exception):
    """Raised for unparsable or structurally invalid predicates."""


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d+)?)|(?P<name>[a-z_][a-z0-9_]*)"
    r"|(?P<op>>=|<=|==|>|<|\+|-|\*|/|\(|\)))"
)

_FUNCS = ("window", "max", "annual", "limit")


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens: list[tuple[str, str]] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos:].strip():
                raise PredicateError(f"bad token at: {text[pos:pos + 20]!r}")
            break
        pos = m.end()
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num")))
        elif m.lastgroup == "name":
            tokens.append(("name", m.group("name")))
        else:
            tokens.append(("op", m.group("op")))
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        tok = self.peek()
        if tok is None:
            raise PredicateError("unexpected end of predicate")
        self.pos += 1
        return tok

    def expect(self, value: str) -> None:
        tok = self.take()
        if tok[1] != value:
            raise PredicateError(f"expected {value!r}, found {tok[1]!r}")

    # expr := and_expr ('or' and_expr)*
    def expr(self):
        node = self.and_expr()
        while self.peek() == ("name", "or"):
            self.take()
            node = ("or", node, self.and_expr())
        return node

    def and_expr(self):
        node = self.comparison()
        while self.peek() == ("name", "and"):
            self.take()
            node = ("and", node, self.comparison())
        return node

    def comparison(self):
        node = self.sum_()
        tok = self.peek()
        if tok and tok[0] == "op" and tok[1] in (">", ">=", "<", "<=", "=="):
            self.take()
            return ("cmp", tok[1], node, self.sum_())
        if node[0] == "grouped_bool":
            return node[1]
        raise PredicateError("expected a comparison")

    def sum_(self):
        node = self.term()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in ("+", "-"):
                self.take()
                node = ("bin", tok[1], node, self.term())
            else:
                return node

    def term(self):
        node = self.factor()
        while True:
            tok = self.peek()
            if tok and tok[0] == "op" and tok[1] in ("*", "/"):
                self.take()
                node = ("bin", tok[1], node, self.factor())
            else:
                return node

    def factor(self):
        tok = self.take()
        kind, value = tok
        if kind == "num":
            return ("num", float(value))
        if kind == "op" and value == "(":
            # Could be an arithmetic group or a boolean group; parse the
            # full expression and decide by the node type.
            node = self.expr()
            self.expect(")")
            if node[0] in ("cmp", "and", "or"):
                return ("grouped_bool", node)
            return node
        if kind == "name":
            if value in _FUNCS:
                self.expect("(")
                attr_tok = self.take()
                if attr_tok[0] != "name":
                    raise PredicateError(f"{value}() needs an attribute name")
                self.expect(")")
                return ("func", value, attr_tok[1])
            if value == "age":
                self.expect("(")
                self.expect(")")
                return ("age",)
        raise PredicateError(f"unexpected token {value!r}")


def parse(text: str):
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    if parser.peek() is not None:
        raise PredicateError(f"trailing input after predicate: {text!r}")
    if node[0] == "grouped_bool":
        node = node[1]
    if node[0] not in ("cmp", "and", "or"):
        raise PredicateError("predicate must be a boolean expression")
    return node


def _contains_limit(node) -> bool:
    if node[0] == "func" and node[1] == "limit":
        return True
    return any(_contains_limit(child) for child in node[1:] if isinstance(child, tuple))


def _is_limit_product(node) -> bool:
    """Right-hand side allowed with limit(): positive constants times a
    single limit term."""
    if node[0] == "func" and node[1] == "limit":
        return True
    if node[0] == "bin" and node[1] == "*":
        _, _, left, right = node
        if left[0] == "num" and left[1] > 0 and _is_limit_product(right):
            return True
        if right[0] == "num" and right[1] > 0 and _is_limit_product(left):
            return True
    return False


def validate(node, attrs: tuple[str, ...] = TRIPLE_ATTRIBUTES) -> None:
    """Reject undeclared attributes and non-monotone uses of limit()."""
    kind = node[0]
    if kind == "func":
        if node[2] not in attrs:
            raise PredicateError(f"undeclared attribute: {node[2]!r}")
        return
    if kind in ("num", "age"):
        return
    if kind == "cmp":
        _, op, left, right = node
        if _contains_limit(left) or _contains_limit(right):
            if op not in (">", ">="):
                raise PredicateError(
                    "limit() comparisons must use > or >= (margin monotonicity)"
                )
            if _contains_limit(left):
                raise PredicateError("limit() may only appear on the right side")
            if not _is_limit_product(right):
                raise PredicateError(
                    "limit() right side must be a positive constant multiple"
                )
        validate(left, attrs)
        validate(right, attrs)
        return
    if kind in ("and", "or", "bin"):
        for child in node[1:]:
            if isinstance(child, tuple):
                validate(child, attrs)
        return
    raise PredicateError(f"unknown node kind {kind!r}")


def evaluate(
    node,
    profile: ClientProfile,
    limits: dict[str, float],
) -> bool:
    def num(n) -> float:
        kind = n[0]
        if kind == "num":
            return n[1]
        if kind == "age":
            return float(profile.account_age_years)
        if kind == "func":
            _, fn, attr = n
            if fn == "limit":
                return limits[attr]
            triple = profile.attribute(attr)
            if fn == "window":
                return triple.window_value
            if fn == "max":
                return triple.monthly_max
            return triple.annual_total
        if kind == "bin":
            _, op, a, b = n
            x, y = num(a), num(b)
            if op == "+":
                return x + y
            if op == "-":
                return x - y
            if op == "*":
                return x * y
            return x / y if y != 0 else float("inf") if x > 0 else 0.0
        raise PredicateError(f"expected numeric node, found {kind!r}")

    kind = node[0]
    if kind == "and":
        return evaluate(node[1], profile, limits) and evaluate(node[2], profile, limits)
    if kind == "or":
        return evaluate(node[1], profile, limits) or evaluate(node[2], profile, limits)
    if kind == "cmp":
        _, op, left, right = node
        x, y = num(left), num(right)
        if op == ">":
            return x > y
        if op == ">=":
            return x >= y
        if op == "<":
            return x < y
        if op == "<=":
            return x <= y
        return x == y
    raise PredicateError(f"expected boolean node, found {kind!r}")

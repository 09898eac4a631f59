"""Field-expression mini-language.

Grammar (``^`` binds tighter than unary minus on its left and is right
associative, so ``-x1^2 == -(x1^2)`` and ``2^-1 == 0.5``)::

    expr  := term (("+" | "-") term)*
    term  := unary (("*" | "/") unary)*
    unary := "-" unary | power
    power := atom ("^" unary)?
    atom  := NUMBER | VAR | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Variables are ``x1 .. xn``. Functions: ``sin cos abs sqrt min max`` and the
builtins ``lacunary(alpha, m[, axis])``, ``koch_x(i)``, ``koch_y(i)``.
Builtin arguments must be constant.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from ..currents import KOCH_ALPHA, KochCurve, koch_vertices
from ..holder import ScalarField, lacunary_series


class ExprError(ValueError):
    """Syntax or name error in a field expression, with character offset."""

    def __init__(self, message: str, position: int, expected: tuple[str, ...] = ()):
        self.position = position
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {position}{detail}")


class UnknownIdentifier(ExprError):
    pass


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Var:
    index: int  # 0-based
    pos: int = 0


@dataclass(frozen=True)
class Neg:
    operand: "FieldExpr"
    pos: int = 0


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "FieldExpr"
    right: "FieldExpr"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["FieldExpr", ...]
    pos: int = 0


FieldExpr = Union[Num, Var, Neg, BinOp, Call]

FUNCTIONS = {"sin": 1, "cos": 1, "abs": 1, "sqrt": 1, "min": 2, "max": 2}
BUILTINS = {"lacunary": (2, 3), "koch_x": (1, 1), "koch_y": (1, 1)}

_TOKEN = re.compile(r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)"
                    r"|(?P<op>[-+*/^(),]))")


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens, pos = [], 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m:
            start = len(text) - len(text[pos:].lstrip())
            raise ExprError(f"unexpected character {text[start]!r}", start,
                            ("number", "name", "operator"))
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.tok
        if val != value or kind != "op":
            found = "end of input" if kind == "end" else repr(val)
            raise ExprError(f"unexpected {found}", pos, (repr(value),))
        return self.take()

    def parse(self) -> FieldExpr:
        node = self.expr()
        kind, val, pos = self.tok
        if kind != "end":
            raise ExprError(f"unexpected {val!r}", pos, ("operator", "end of input"))
        return node

    def expr(self):
        node = self.term()
        while self.tok[1] in ("+", "-") and self.tok[0] == "op":
            _, op, pos = self.take()
            node = BinOp(op, node, self.term(), pos)
        return node

    def term(self):
        node = self.unary()
        while self.tok[1] in ("*", "/") and self.tok[0] == "op":
            _, op, pos = self.take()
            node = BinOp(op, node, self.unary(), pos)
        return node

    def unary(self):
        if self.tok[0] == "op" and self.tok[1] == "-":
            pos = self.take()[2]
            return Neg(self.unary(), pos)
        return self.power()

    def power(self):
        node = self.atom()
        if self.tok[0] == "op" and self.tok[1] == "^":
            pos = self.take()[2]
            return BinOp("^", node, self.unary(), pos)
        return node

    def atom(self):
        kind, val, pos = self.tok
        if kind == "num":
            self.take()
            return Num(float(val), pos)
        if kind == "name":
            self.take()
            var = re.fullmatch(r"x([1-9]\d*)", val)
            if var:
                return Var(int(var.group(1)) - 1, pos)
            if val not in FUNCTIONS and val not in BUILTINS:
                raise UnknownIdentifier(f"unknown identifier {val!r}", pos)
            self.expect("(")
            args = [self.expr()]
            while self.tok[0] == "op" and self.tok[1] == ",":
                self.take()
                args.append(self.expr())
            self.expect(")")
            lo, hi = BUILTINS.get(val, (FUNCTIONS.get(val), FUNCTIONS.get(val)))
            if not lo <= len(args) <= hi:
                raise ExprError(f"{val} takes {lo if lo == hi else f'{lo}-{hi}'} arguments, "
                                f"got {len(args)}", pos)
            return Call(val, tuple(args), pos)
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(val)
        raise ExprError(f"unexpected {found}", pos, ("number", "variable", "function", "'('"))


def parse_field_expr(text: str) -> FieldExpr:
    """Parse ``text`` into an expression tree.

    Raises
    ------
    ExprError
        On a syntax error, with ``position`` and ``expected`` set.
    UnknownIdentifier
        For names that are neither variables nor known functions.
    """
    return _Parser(text).parse()


def free_variables(node: FieldExpr) -> set[int]:
    if isinstance(node, Var):
        return {node.index}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        out = set().union(*(free_variables(a) for a in node.args))
        if node.name in ("koch_x", "koch_y"):
            out.add(0)
        elif node.name == "lacunary":
            axis = int(_constant(node.args[2])) - 1 if len(node.args) == 3 else 0
            out.add(axis)
        return out
    return set()


def _constant(node: FieldExpr) -> float:
    if free_variables(node):
        raise ExprError("builtin arguments must be constant", getattr(node, "pos", 0))
    return float(compile_expr(node, 1)(np.zeros((1, 1)))[0])


_UNARY = {"sin": np.sin, "cos": np.cos, "abs": np.abs, "sqrt": np.sqrt}
_BINARY = {"+": np.add, "-": np.subtract, "*": np.multiply, "/": np.divide, "^": np.power,
           "min": np.minimum, "max": np.maximum}


def compile_expr(node: FieldExpr, dim: int):
    """Vectorised evaluator ``(N, dim) -> (N,)`` for ``node``."""
    if isinstance(node, Num):
        v = node.value
        return lambda x: np.full(x.shape[0], v)
    if isinstance(node, Var):
        if node.index >= dim:
            raise ExprError(f"variable x{node.index + 1} exceeds dimension {dim}", node.pos)
        i = node.index
        return lambda x: x[:, i]
    if isinstance(node, Neg):
        inner = compile_expr(node.operand, dim)
        return lambda x: -inner(x)
    if isinstance(node, BinOp):
        a, b, op = compile_expr(node.left, dim), compile_expr(node.right, dim), _BINARY[node.op]
        return lambda x: op(a(x), b(x))
    if node.name in _UNARY:
        a, op = compile_expr(node.args[0], dim), _UNARY[node.name]
        return lambda x: op(a(x))
    if node.name in ("min", "max"):
        a, b, op = compile_expr(node.args[0], dim), compile_expr(node.args[1], dim), _BINARY[node.name]
        return lambda x: op(a(x), b(x))
    return _builtin(node, dim).func


def _builtin(node: Call, dim: int):
    if node.name == "lacunary":
        alpha = _constant(node.args[0])
        m = int(_constant(node.args[1]))
        axis = int(_constant(node.args[2])) - 1 if len(node.args) == 3 else 0
        if not 0 <= axis < dim:
            raise ExprError(f"lacunary axis {axis + 1} exceeds dimension {dim}", node.pos)
        try:
            return lacunary_series(alpha, m, "cosine_1d", dim=dim, axis=axis)
        except ValueError as exc:
            raise ExprError(str(exc), node.pos) from None
    level = int(_constant(node.args[0]))
    if level < 0 or level > 10:
        raise ExprError("koch level must lie in 0..10", node.pos)
    curve = KochCurve(level, koch_vertices(level))
    col = 0 if node.name == "koch_x" else 1
    return ScalarField(lambda x: curve(x[:, 0])[:, col], dim, KOCH_ALPHA,
                       2.0 * 12.0**KOCH_ALPHA, name=node.name)


def known_metadata(node: FieldExpr, dim: int) -> tuple[float, float, float | None] | None:
    """``(exponent, holder_bound, sup_bound)`` when it follows from the tree alone.

    Covers constants, bare coordinates and the builtins; anything else
    returns ``None`` and needs declared or estimated constants.
    """
    if isinstance(node, Num):
        return 1.0, 0.0, abs(node.value)
    if isinstance(node, Var):
        return 1.0, 1.0, None
    if isinstance(node, Call) and node.name in BUILTINS:
        fld = _builtin(node, dim)
        return fld.exponent, fld.holder_bound, fld.sup_bound
    return None


def unparse(node: FieldExpr) -> str:
    """Fully parenthesised text that parses back to an equal tree (positions aside)."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{unparse(node.operand)})"
    if isinstance(node, BinOp):
        return f"({unparse(node.left)}{node.op}{unparse(node.right)})"
    return f"{node.name}({','.join(unparse(a) for a in node.args)})"


def strip_positions(node: FieldExpr) -> FieldExpr:
    if isinstance(node, Num):
        return Num(node.value)
    if isinstance(node, Var):
        return Var(node.index)
    if isinstance(node, Neg):
        return Neg(strip_positions(node.operand))
    if isinstance(node, BinOp):
        return BinOp(node.op, strip_positions(node.left), strip_positions(node.right))
    return Call(node.name, tuple(strip_positions(a) for a in node.args))


__all__ = [
    "BinOp", "Call", "ExprError", "FieldExpr", "Neg", "Num", "UnknownIdentifier", "Var",
    "compile_expr", "free_variables", "known_metadata", "parse_field_expr", "unparse",
    "strip_positions",
]

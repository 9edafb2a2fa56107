"""Transfer-function mini-language.

Grammar (whitespace is free between tokens)::

    function := "f" "(" "x" ")" "=" expr
    expr     := term (("+" | "-") term)*
    term     := unary (("*" | "/") unary)*
    unary    := "-" unary | power
    power    := primary ("^" unary)?          # right-assoc, binds tighter than "-"
    primary  := NUMBER | "x" | "e" | "pi" | NAME "(" expr ")" | "(" expr ")"

NAME is one of exp, ln, tanh, sigmoid, relu, step, abs.  ``-x^2`` reads as
``-(x^2)`` and ``2^-1`` as ``2^(-1)``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

MAX_DEPTH = 64


class ExprError(Exception):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at byte offset {position}")
        self.position = position


class UnknownFunction(ParseError):
    pass


class DepthLimit(ParseError):
    pass


class NotConstant(ExprError):
    pass


class DomainError(ExprError, ArithmeticError):
    pass


def _sigmoid(v: float) -> float:
    if v >= 0:
        return 1.0 / (1.0 + math.exp(-v))
    z = math.exp(v)
    return z / (1.0 + z)


def _ln(v: float) -> float:
    if v <= 0:
        raise DomainError(f"ln of non-positive value {v!r}")
    return math.log(v)


FUNCTIONS: dict[str, Callable[[float], float]] = {
    "exp": math.exp,
    "ln": _ln,
    "tanh": math.tanh,
    "sigmoid": _sigmoid,
    "relu": lambda v: v if v > 0 else 0.0,
    "step": lambda v: 1.0 if v > 0 else 0.0,
    "abs": abs,
}

CONSTANTS = {"e": math.e, "pi": math.pi}


# -- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    text: str


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Node"


Node = Union[Num, Var, Const, Neg, BinOp, Call]


@dataclass(frozen=True)
class TransferExpr:
    """A parsed ``f(x)=...`` expression.

    Equality is structural on the AST, so two spellings of the same tree
    (differing only in whitespace) compare equal.
    """

    ast: Node

    def __call__(self, x: float) -> float:
        return evaluate(self, x)

    def __str__(self) -> str:
        return "f(x)=" + unparse(self.ast)

    @property
    def is_constant(self) -> bool:
        return not _mentions_x(self.ast)


# -- tokenizer -----------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()=])
    """,
    re.VERBOSE | re.ASCII,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", _offset(text, pos))
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), _offset(text, pos)))
        pos = m.end()
    tokens.append(("end", "", _offset(text, pos)))
    return tokens


def _offset(text: str, index: int) -> int:
    return len(text[:index].encode("utf-8"))


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.depth = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.tok
        if text != value or kind == "end":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", pos)
        return self.advance()

    def enter(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DepthLimit(f"expression nesting exceeds {MAX_DEPTH}", self.tok[2])

    def leave(self):
        self.depth -= 1

    def parse_function(self) -> Node:
        for expected in ("f", "(", "x", ")", "="):
            self.expect(expected)
        node = self.expr()
        self.finish()
        return node

    def finish(self):
        kind, text, pos = self.tok
        if kind != "end":
            raise ParseError(f"unexpected {text!r}", pos)

    def expr(self) -> Node:
        self.enter()
        node = self.term()
        while self.tok[0] == "op" and self.tok[1] in "+-":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        self.leave()
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.tok[0] == "op" and self.tok[1] in "*/":
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok[0] == "op" and self.tok[1] == "-":
            self.advance()
            self.enter()
            node = Neg(self.unary())
            self.leave()
            return node
        return self.power()

    def power(self) -> Node:
        base = self.primary()
        if self.tok[0] == "op" and self.tok[1] == "^":
            self.advance()
            self.enter()
            exponent = self.unary()
            self.leave()
            return BinOp("^", base, exponent)
        return base

    def primary(self) -> Node:
        kind, text, pos = self.advance()
        if kind == "num":
            return Num(float(text), text)
        if kind == "name":
            if text == "x":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if self.tok[1] != "(":
                raise ParseError(f"unknown name {text!r}", pos)
            if text not in FUNCTIONS:
                raise UnknownFunction(f"unknown function {text!r}", pos)
            self.advance()
            arg = self.expr()
            self.expect(")")
            return Call(text, arg)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", pos)


def parse_function(text: str) -> TransferExpr:
    """Parse ``f(x)=EXPR`` into a :class:`TransferExpr`."""
    ast = _Parser(text).parse_function()
    if _depth(ast) > MAX_DEPTH:
        raise DepthLimit(f"expression tree deeper than {MAX_DEPTH}", 0)
    return TransferExpr(ast)


def parse_const(text: str) -> TransferExpr:
    """Parse a bare constant expression (no ``f(x)=`` prefix)."""
    p = _Parser(text)
    ast = p.expr()
    p.finish()
    if _depth(ast) > MAX_DEPTH:
        raise DepthLimit(f"expression tree deeper than {MAX_DEPTH}", 0)
    if _mentions_x(ast):
        raise NotConstant(f"constant expression {text!r} mentions x")
    return TransferExpr(ast)


def _depth(node: Node) -> int:
    # iterative so adversarial trees cannot blow the interpreter stack
    best = 0
    stack = [(node, 1)]
    while stack:
        n, d = stack.pop()
        best = max(best, d)
        stack.extend((c, d + 1) for c in _children(n))
    return best


def _children(node: Node) -> tuple:
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, (Neg,)):
        return (node.operand,)
    if isinstance(node, Call):
        return (node.arg,)
    return ()


def _mentions_x(node: Node) -> bool:
    if isinstance(node, Var):
        return True
    return any(_mentions_x(c) for c in _children(node))


# -- evaluation ----------------------------------------------------------------

def _eval(node: Node, x: float) -> float:
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Const):
        return CONSTANTS[node.name]
    if isinstance(node, Neg):
        return -_eval(node.operand, x)
    if isinstance(node, Call):
        return FUNCTIONS[node.name](_eval(node.arg, x))
    a = _eval(node.left, x)
    b = _eval(node.right, x)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    return math.pow(a, b)


def evaluate(expr: TransferExpr, x: float) -> float:
    """Evaluate ``expr`` at ``x`` in double precision.

    Raises DomainError for undefined or non-finite results.
    """
    try:
        value = _eval(expr.ast, x)
    except DomainError:
        raise
    except (OverflowError, ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"{exc} evaluating {expr} at x={x!r}") from None
    if not math.isfinite(value):
        raise DomainError(f"non-finite result evaluating {expr} at x={x!r}")
    return value


# spec-facing alias; ``eval`` would shadow the builtin
eval_expr = evaluate


def eval_const(text: str) -> float:
    return evaluate(parse_const(text), 0.0)


# -- unparsing -----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def unparse(node: Node) -> str:
    """Render an AST back to grammar text that re-parses to the same tree."""
    return _unparse(node, 0)


def _unparse(node: Node, parent: int) -> str:
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Const):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({_unparse(node.arg, 0)})"
    if isinstance(node, Neg):
        s = "-" + _unparse(node.operand, 3)
        return f"({s})" if parent > 3 else s
    prec = _PREC[node.op]
    if node.op == "^":
        s = f"{_unparse(node.left, 5)}^{_unparse(node.right, 3)}"
    else:
        s = f"{_unparse(node.left, prec)}{node.op}{_unparse(node.right, prec + 1)}"
    return f"({s})" if prec < parent else s

"""Metric-definition expression language.

Grammar (infix, standard precedence):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative, binds above '-'
    atom   := NUMBER | IDENT | IDENT '(' expr ')' | '(' expr ')'

Coordinates are ``x0 .. x{n-1}`` plus optional user aliases; ``pi`` is a
constant.  Unary functions: sin, cos, sinh, cosh, tanh, exp, log, sqrt, atan,
and ``bump01`` (the infinitely flat smooth step on [0, 1], needed to write
blended piecewise-constant-curvature warps as single expressions).

Power exponents are restricted to constants so that jets stay single-valued;
a non-integer constant exponent is evaluated as exp(c*log(base)) and needs a
positive base.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ArityError, DomainError, ExprSyntaxError, UnknownIdentifier
from .jets import UNARY_FUNCTIONS, VALUE_FUNCTIONS, Jet3, jet_constant, jet_variable

__all__ = [
    "Var", "Const", "Unary", "Binary", "parse_expr", "to_source",
    "compile_program", "eval_jet3", "eval_program_jet", "eval_program_value",
]

FUNCTION_NAMES = frozenset(UNARY_FUNCTIONS)
_BINARY_OPS = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


# --- AST ---------------------------------------------------------------------

@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a function name
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # add sub mul div pow
    left: "Node"
    right: "Node"


Node = Var | Const | Unary | Binary


# --- tokenizer ----------------------------------------------------------------

_PUNCT = "+-*/^(),"


def _tokenize(src: str):
    tokens = []  # (kind, text_or_value, position)
    i, m = 0, len(src)
    while i < m:
        c = src[i]
        if c.isspace():
            i += 1
            continue
        if c in _PUNCT:
            tokens.append((c, c, i))
            i += 1
            continue
        if c.isdigit() or (c == "." and i + 1 < m and src[i + 1].isdigit()):
            j = i
            while j < m and src[j].isdigit():
                j += 1
            if j < m and src[j] == ".":
                j += 1
                while j < m and src[j].isdigit():
                    j += 1
            if j < m and src[j] in "eE":
                k = j + 1
                if k < m and src[k] in "+-":
                    k += 1
                if k < m and src[k].isdigit():
                    j = k
                    while j < m and src[j].isdigit():
                        j += 1
            try:
                value = float(src[i:j])
            except ValueError:
                raise ExprSyntaxError(i, f"bad number literal {src[i:j]!r}")
            tokens.append(("num", value, i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < m and (src[j].isalnum() or src[j] == "_"):
                j += 1
            tokens.append(("ident", src[i:j], i))
            i = j
            continue
        raise ExprSyntaxError(i, f"unexpected character {c!r}")
    tokens.append(("end", "", m))
    return tokens


# --- parser -------------------------------------------------------------------

class _Parser:
    def __init__(self, src: str, dimension: int, names):
        self.src = src
        self.tokens = _tokenize(src)
        self.pos = 0
        self.coords = {f"x{i}": i for i in range(dimension)}
        if names:
            for i, name in enumerate(names):
                self.coords[name] = i

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ExprSyntaxError(tok[2], f"expected {kind!r}, found {tok[1]!r}"
                                  if tok[0] != "end" else f"expected {kind!r}")
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExprSyntaxError(tok[2], f"unexpected trailing input {tok[1]!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[0] in "+-":
            op = self.advance()[0]
            node = Binary("add" if op == "+" else "sub", node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[0] in "*/":
            op = self.advance()[0]
            node = Binary("mul" if op == "*" else "div", node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "-":
            self.advance()
            arg = self.unary()
            if isinstance(arg, Const):
                return Const(-arg.value)
            return Unary("neg", arg)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "^":
            caret_pos = self.advance()[2]
            exponent = self.unary()
            if not isinstance(exponent, Const):
                raise ExprSyntaxError(
                    caret_pos, "power exponent must be a constant")
            return Binary("pow", base, exponent)
        return base

    def atom(self) -> Node:
        tok = self.advance()
        kind, text, pos = tok
        if kind == "num":
            return Const(text)
        if kind == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "ident":
            if text in FUNCTION_NAMES:
                if self.peek()[0] != "(":
                    raise ExprSyntaxError(
                        self.peek()[2], f"expected '(' after function {text!r}")
                self.advance()
                arg = self.expr()
                if self.peek()[0] == ",":
                    raise ArityError(f"{text} takes exactly one argument")
                self.expect(")")
                return Unary(text, arg)
            if text == "pi":
                return Const(math.pi)
            if text in self.coords:
                return Var(self.coords[text])
            raise UnknownIdentifier(text, pos)
        if kind == "end":
            raise ExprSyntaxError(pos, "unexpected end of input")
        raise ExprSyntaxError(pos, f"unexpected token {text!r}")


def parse_expr(src: str, dimension: int, names=None) -> Node:
    """Parse ``src`` into an AST for an n-dimensional chart.

    ``names`` optionally aliases coordinates (index = list position).
    Raises ExprSyntaxError / UnknownIdentifier / ArityError.
    """
    if not src or not src.strip():
        raise ExprSyntaxError(0, "empty expression")
    if not 2 <= dimension <= 6:
        raise ExprSyntaxError(0, f"dimension {dimension} outside 2..6")
    return _Parser(src, dimension, names).parse()


# --- printing -----------------------------------------------------------------

# binding levels: add/sub 1, mul/div 2, neg 3, pow 4, atoms 5
_LEVEL = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}


def _level(node: Node) -> int:
    if isinstance(node, Binary):
        return _LEVEL[node.op]
    if isinstance(node, Unary):
        return 3 if node.op == "neg" else 5
    if isinstance(node, Const) and node.value < 0:
        return 3  # prints with a leading minus
    return 5


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _print(node: Node, min_level: int) -> str:
    if isinstance(node, Var):
        return f"x{node.index}"
    if isinstance(node, Const):
        text = _fmt_number(node.value)
    elif isinstance(node, Unary):
        if node.op == "neg":
            text = "-" + _print(node.arg, 4)
        else:
            return f"{node.op}({_print(node.arg, 0)})"
    else:
        op = node.op
        if op == "pow":
            text = _print(node.left, 5) + "^" + _print(node.right, 3)
        else:
            left = _print(node.left, _LEVEL[op])
            right = _print(node.right, _LEVEL[op] + 1)
            text = f"{left}{_BINARY_OPS[op]}{right}"
    if _level(node) < min_level:
        return f"({text})"
    return text


def to_source(node: Node) -> str:
    """Canonical text form; re-parses to an AST equal to ``node``."""
    return _print(node, 0)


# --- compilation & evaluation ---------------------------------------------------

def compile_program(node: Node) -> tuple:
    """Flatten an AST into a postfix instruction sequence for a stack machine."""
    prog = []

    def walk(nd: Node):
        if isinstance(nd, Var):
            prog.append(("var", nd.index))
        elif isinstance(nd, Const):
            prog.append(("const", nd.value))
        elif isinstance(nd, Unary):
            walk(nd.arg)
            prog.append(("neg", None) if nd.op == "neg" else ("un", nd.op))
        else:
            if nd.op == "pow":
                walk(nd.left)
                prog.append(("pow", nd.right.value))
            else:
                walk(nd.left)
                walk(nd.right)
                prog.append((nd.op, None))

    walk(node)
    return tuple(prog)


def max_var_index(node: Node) -> int:
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return max_var_index(node.arg)
    if isinstance(node, Binary):
        return max(max_var_index(node.left), max_var_index(node.right))
    return -1


def eval_program_jet(prog: tuple, points: np.ndarray) -> Jet3:
    """Run a compiled program over ``points`` of shape (..., n) in jet mode."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    batch = points.shape[:-1]
    stack: list[Jet3] = []
    push = stack.append
    for op, arg in prog:
        if op == "var":
            if arg >= n:
                raise DomainError(f"coordinate x{arg} outside dimension {n}")
            push(jet_variable(points, arg))
        elif op == "const":
            push(jet_constant(arg, n, batch))
        elif op == "un":
            push(UNARY_FUNCTIONS[arg](stack.pop()))
        elif op == "neg":
            push(-stack.pop())
        elif op == "pow":
            push(stack.pop().pow_const(arg))
        else:
            b = stack.pop()
            a = stack.pop()
            if op == "add":
                push(a + b)
            elif op == "sub":
                push(a - b)
            elif op == "mul":
                push(a * b)
            else:
                push(a / b)
    return stack[0]


def eval_program_value(prog: tuple, points: np.ndarray) -> np.ndarray:
    """Value-only evaluation (no derivatives); much cheaper than jets."""
    points = np.asarray(points, dtype=float)
    n = points.shape[-1]
    batch = points.shape[:-1]
    stack = []
    push = stack.append
    for op, arg in prog:
        if op == "var":
            if arg >= n:
                raise DomainError(f"coordinate x{arg} outside dimension {n}")
            push(points[..., arg])
        elif op == "const":
            push(np.full(batch, float(arg)))
        elif op == "un":
            push(VALUE_FUNCTIONS[arg](stack.pop()))
        elif op == "neg":
            push(-stack.pop())
        elif op == "pow":
            x = stack.pop()
            if float(arg) == int(arg):
                if int(arg) < 0 and np.any(x == 0.0):
                    raise DomainError("division by zero")
                push(np.power(x, int(arg)))
            else:
                if np.any(x <= 0.0):
                    raise DomainError("non-integer power of nonpositive base")
                push(np.power(x, float(arg)))
        elif op == "div":
            b = stack.pop()
            if np.any(b == 0.0):
                raise DomainError("division by zero")
            stack[-1] = stack[-1] / b
        elif op == "add":
            b = stack.pop()
            stack[-1] = stack[-1] + b
        elif op == "sub":
            b = stack.pop()
            stack[-1] = stack[-1] - b
        else:
            b = stack.pop()
            stack[-1] = stack[-1] * b
    return stack[0]


def eval_jet3(ast: Node, p) -> Jet3:
    """Value and exact derivatives up to order 3 of ``ast`` at point(s) ``p``."""
    return eval_program_jet(compile_program(ast), p)

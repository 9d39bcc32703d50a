"""Tiny arithmetic expression language for problem coefficients.

Coefficients like b(x,t) or phi(x) arrive as strings in problem files and
need deterministic double-precision evaluation at mesh points.  The
grammar is

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' ['-'] integer)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'

with functions exp, sin, cos, sqrt, ln and the constants pi and e
(resolved at parse time).  Exponents of '^' are integer literals only,
so ``x^2`` is accepted and ``x^t`` is not.  Unary minus binds looser
than '^': ``-x^2`` is ``-(x^2)``.

Expressions are immutable after parsing and safe to evaluate from many
threads.  Identical (expression, point) pairs give bit-identical
results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

__all__ = [
    "Expression",
    "Program",
    "ExprSyntaxError",
    "UnknownVariableError",
    "EvalError",
    "parse",
]

_CONSTANTS = {"pi": math.pi, "e": math.e}
_FUNCTIONS = ("exp", "sin", "cos", "sqrt", "ln")

# Stack-machine opcodes shared with the kernel backends.  The compiled
# extension hardcodes the same numbering.
OP_CONST = 0
OP_VAR_X = 1
OP_VAR_T = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_DIV = 6
OP_NEG = 7
OP_POW = 8
OP_EXP = 9
OP_SIN = 10
OP_COS = 11
OP_SQRT = 12
OP_LN = 13

_FUNC_OPS = {"exp": OP_EXP, "sin": OP_SIN, "cos": OP_COS, "sqrt": OP_SQRT, "ln": OP_LN}


class ExprSyntaxError(ValueError):
    """Malformed expression source; ``offset`` is the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class UnknownVariableError(ValueError):
    """A name that is neither a declared variable, constant nor function."""

    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown variable '{name}' (at offset {offset})")
        self.name = name
        self.offset = offset


class EvalError(ArithmeticError):
    """Division by zero, ln of a nonpositive value, sqrt of a negative."""


@dataclass(frozen=True)
class Program:
    """Postfix form of an expression for the kernel backends."""

    ops: np.ndarray      # int32 opcodes
    args: np.ndarray     # float64 operands (constants, pow exponents)
    stack_need: int


class Expression:
    """Parsed arithmetic expression over a declared variable set."""

    __slots__ = ("source", "_ast", "variables")

    def __init__(self, source: str, ast: tuple, variables: frozenset):
        self.source = source
        self._ast = ast
        self.variables = variables

    def __repr__(self):
        return f"Expression({self.source!r})"

    def eval(self, bindings: Mapping[str, float]) -> float:
        """Evaluate at a point; ``bindings`` must cover all variables."""
        return _eval_scalar(self._ast, bindings)

    def __call__(self, **bindings: float) -> float:
        return _eval_scalar(self._ast, bindings)

    def eval_array(self, **bindings) -> np.ndarray:
        """Vectorized evaluation; bindings may mix arrays and scalars.

        The result is broadcast to the common shape of the bindings, so
        constant expressions still come back with the right shape.
        """
        shape = np.broadcast_shapes(*(np.shape(v) for v in bindings.values()))
        out = _eval_vector(self._ast, bindings)
        if np.shape(out) != shape:
            out = np.broadcast_to(np.asarray(out, dtype=float), shape)
        return out

    def to_string(self) -> str:
        """Fully parenthesized source that reparses to the same AST."""
        return _unparse(self._ast)

    def program(self) -> Program:
        """Compile to the postfix program consumed by the kernels."""
        if not self.variables <= {"x", "t"}:
            raise ValueError(f"program requires variables within x,t; got {sorted(self.variables)}")
        ops: list[int] = []
        args: list[float] = []
        depth = _compile(self._ast, ops, args, 0)[1]
        return Program(np.asarray(ops, dtype=np.int32), np.asarray(args, dtype=np.float64), depth)


def parse(source: str, allowed_vars: Iterable[str]) -> Expression:
    """Parse ``source`` into an :class:`Expression`.

    Raises :class:`ExprSyntaxError` with the byte offset of the problem,
    or :class:`UnknownVariableError` for undeclared names.
    """
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0)
    parser = _Parser(source, frozenset(allowed_vars))
    ast = parser.parse_expr()
    parser.skip_ws()
    if parser.pos < len(parser.src):
        raise ExprSyntaxError(f"unexpected character {parser.src[parser.pos]!r}", parser.pos)
    used = frozenset(_collect_vars(ast))
    return Expression(source, ast, used)


class _Parser:
    def __init__(self, src: str, allowed: frozenset):
        self.src = src
        self.pos = 0
        self.allowed = allowed

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos] in " \t\r\n":
            self.pos += 1

    def peek(self) -> str:
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def parse_expr(self):
        node = self.parse_term()
        while True:
            self.skip_ws()
            c = self.peek()
            if c == "+":
                self.pos += 1
                node = ("add", node, self.parse_term())
            elif c == "-":
                self.pos += 1
                node = ("sub", node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            self.skip_ws()
            c = self.peek()
            if c == "*":
                self.pos += 1
                node = ("mul", node, self.parse_unary())
            elif c == "/":
                self.pos += 1
                node = ("div", node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        self.skip_ws()
        if self.peek() == "-":
            self.pos += 1
            return ("neg", self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        node = self.parse_atom()
        self.skip_ws()
        if self.peek() == "^":
            self.pos += 1
            self.skip_ws()
            sign = 1
            if self.peek() == "-":
                sign = -1
                self.pos += 1
            start = self.pos
            while self.pos < len(self.src) and self.src[self.pos].isdigit():
                self.pos += 1
            if self.pos == start:
                raise ExprSyntaxError("'^' requires an integer literal exponent", start)
            if self.peek() == ".":
                raise ExprSyntaxError("'^' requires an integer literal exponent", start)
            node = ("pow", node, sign * int(self.src[start:self.pos]))
        return node

    def parse_atom(self):
        self.skip_ws()
        c = self.peek()
        if not c:
            raise ExprSyntaxError("unexpected end of input", self.pos)
        if c == "(":
            self.pos += 1
            node = self.parse_expr()
            self.skip_ws()
            if self.peek() != ")":
                raise ExprSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return node
        if c.isdigit() or c == ".":
            return self.parse_number()
        if c.isalpha() or c == "_":
            return self.parse_name()
        raise ExprSyntaxError(f"unexpected character {c!r}", self.pos)

    def parse_number(self):
        start = self.pos
        src = self.src
        while self.pos < len(src) and (src[self.pos].isdigit() or src[self.pos] == "."):
            self.pos += 1
        if self.pos < len(src) and src[self.pos] in "eE":
            mark = self.pos
            self.pos += 1
            if self.peek() in "+-":
                self.pos += 1
            if not self.peek().isdigit():
                self.pos = mark  # not an exponent: a trailing name like 'e'
            else:
                while self.pos < len(src) and src[self.pos].isdigit():
                    self.pos += 1
        text = src[start:self.pos]
        try:
            return ("const", float(text))
        except ValueError:
            raise ExprSyntaxError(f"bad number literal {text!r}", start) from None

    def parse_name(self):
        start = self.pos
        src = self.src
        while self.pos < len(src) and (src[self.pos].isalnum() or src[self.pos] == "_"):
            self.pos += 1
        name = src[start:self.pos]
        self.skip_ws()
        if name in _FUNCTIONS:
            if self.peek() != "(":
                raise ExprSyntaxError(f"function '{name}' needs parentheses", self.pos)
            self.pos += 1
            arg = self.parse_expr()
            self.skip_ws()
            if self.peek() != ")":
                raise ExprSyntaxError("expected ')'", self.pos)
            self.pos += 1
            return ("call", name, arg)
        if name in _CONSTANTS:
            return ("const", _CONSTANTS[name])
        if name in self.allowed:
            return ("var", name)
        raise UnknownVariableError(name, start)


def _collect_vars(node, acc=None):
    if acc is None:
        acc = set()
    tag = node[0]
    if tag == "var":
        acc.add(node[1])
    elif tag in ("add", "sub", "mul", "div"):
        _collect_vars(node[1], acc)
        _collect_vars(node[2], acc)
    elif tag == "neg":
        _collect_vars(node[1], acc)
    elif tag == "pow":
        _collect_vars(node[1], acc)
    elif tag == "call":
        _collect_vars(node[2], acc)
    return acc


def _eval_scalar(node, env) -> float:
    tag = node[0]
    if tag == "const":
        return node[1]
    if tag == "var":
        try:
            return float(env[node[1]])
        except KeyError:
            raise EvalError(f"missing binding for '{node[1]}'") from None
    if tag == "add":
        return _eval_scalar(node[1], env) + _eval_scalar(node[2], env)
    if tag == "sub":
        return _eval_scalar(node[1], env) - _eval_scalar(node[2], env)
    if tag == "mul":
        return _eval_scalar(node[1], env) * _eval_scalar(node[2], env)
    if tag == "div":
        den = _eval_scalar(node[2], env)
        if den == 0.0:
            raise EvalError("division by zero")
        return _eval_scalar(node[1], env) / den
    if tag == "neg":
        return -_eval_scalar(node[1], env)
    if tag == "pow":
        base = _eval_scalar(node[1], env)
        n = node[2]
        if n < 0 and base == 0.0:
            raise EvalError("zero raised to a negative power")
        return base ** float(n)
    # call
    arg = _eval_scalar(node[2], env)
    name = node[1]
    if name == "exp":
        try:
            return math.exp(arg)
        except OverflowError:
            return math.inf
    if name == "sin":
        return math.sin(arg)
    if name == "cos":
        return math.cos(arg)
    if name == "sqrt":
        if arg < 0.0:
            raise EvalError("sqrt of a negative value")
        return math.sqrt(arg)
    # ln
    if arg <= 0.0:
        raise EvalError("ln of a nonpositive value")
    return math.log(arg)


def _eval_vector(node, env):
    tag = node[0]
    if tag == "const":
        return node[1]
    if tag == "var":
        try:
            return np.asarray(env[node[1]], dtype=float)
        except KeyError:
            raise EvalError(f"missing binding for '{node[1]}'") from None
    if tag == "add":
        return _eval_vector(node[1], env) + _eval_vector(node[2], env)
    if tag == "sub":
        return _eval_vector(node[1], env) - _eval_vector(node[2], env)
    if tag == "mul":
        return _eval_vector(node[1], env) * _eval_vector(node[2], env)
    if tag == "div":
        den = _eval_vector(node[2], env)
        if np.any(np.asarray(den) == 0.0):
            raise EvalError("division by zero")
        return _eval_vector(node[1], env) / den
    if tag == "neg":
        return -_eval_vector(node[1], env)
    if tag == "pow":
        base = _eval_vector(node[1], env)
        n = node[2]
        if n < 0 and np.any(np.asarray(base) == 0.0):
            raise EvalError("zero raised to a negative power")
        return np.power(base, float(n))
    arg = _eval_vector(node[2], env)
    name = node[1]
    if name == "exp":
        return np.exp(arg)
    if name == "sin":
        return np.sin(arg)
    if name == "cos":
        return np.cos(arg)
    if name == "sqrt":
        if np.any(np.asarray(arg) < 0.0):
            raise EvalError("sqrt of a negative value")
        return np.sqrt(arg)
    if np.any(np.asarray(arg) <= 0.0):
        raise EvalError("ln of a nonpositive value")
    return np.log(arg)


def _unparse(node) -> str:
    tag = node[0]
    if tag == "const":
        return repr(node[1])
    if tag == "var":
        return node[1]
    if tag == "add":
        return f"({_unparse(node[1])} + {_unparse(node[2])})"
    if tag == "sub":
        return f"({_unparse(node[1])} - {_unparse(node[2])})"
    if tag == "mul":
        return f"({_unparse(node[1])} * {_unparse(node[2])})"
    if tag == "div":
        return f"({_unparse(node[1])} / {_unparse(node[2])})"
    if tag == "neg":
        return f"(-{_unparse(node[1])})"
    if tag == "pow":
        n = node[2]
        suffix = f"^{n}" if n >= 0 else f"^-{-n}"
        return f"({_unparse(node[1])}{suffix})"
    return f"{node[1]}({_unparse(node[2])})"


def _compile(node, ops, args, depth) -> tuple[int, int]:
    """Emit postfix code; returns (depth after node, max depth seen)."""
    tag = node[0]
    if tag == "const":
        ops.append(OP_CONST)
        args.append(node[1])
        return depth + 1, depth + 1
    if tag == "var":
        ops.append(OP_VAR_X if node[1] == "x" else OP_VAR_T)
        args.append(0.0)
        return depth + 1, depth + 1
    if tag in ("add", "sub", "mul", "div"):
        _, m1 = _compile(node[1], ops, args, depth)
        _, m2 = _compile(node[2], ops, args, depth + 1)
        ops.append({"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "div": OP_DIV}[tag])
        args.append(0.0)
        return depth + 1, max(m1, m2)
    if tag == "neg":
        _, m = _compile(node[1], ops, args, depth)
        ops.append(OP_NEG)
        args.append(0.0)
        return depth + 1, m
    if tag == "pow":
        _, m = _compile(node[1], ops, args, depth)
        ops.append(OP_POW)
        args.append(float(node[2]))
        return depth + 1, m
    _, m = _compile(node[2], ops, args, depth)
    ops.append(_FUNC_OPS[node[1]])
    args.append(0.0)
    return depth + 1, m

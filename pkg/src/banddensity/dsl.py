"""
Coefficient expression DSL.

Expressions are written over the index variable ``n`` with decimal literals,
``+ - * / ^``, unary minus, parentheses and the calls ``pow(x, y)`` and
``geometric(b)`` (= b^n). Parsing uses a lark LALR grammar and produces a small
immutable tree that evaluates exactly (Fraction) or in floating point.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

from lark import Lark, Transformer, Token
from lark.exceptions import UnexpectedInput, VisitError

from banddensity.errors import CoefficientOverflowError, FamilyEvaluationError, FamilySyntaxError
from banddensity.scalars import RATIONAL, Scalar

logger = logging.getLogger(__name__)

GRAMMAR = r"""
?start: expr

?expr: term
     | expr "+" term      -> add
     | expr "-" term      -> sub

?term: factor
     | term "*" factor    -> mul
     | term "/" factor    -> div

?factor: power
       | "-" factor       -> neg

?power: atom
      | atom "^" factor   -> pow

?atom: NUMBER             -> number
     | NAME "(" arguments ")" -> call
     | NAME               -> name
     | "(" expr ")"

arguments: expr ("," expr)*

NAME: /[A-Za-z_][A-Za-z0-9_]*/
NUMBER: /\d+(\.\d+)?/

%import common.WS
%ignore WS
"""

VARIABLE = "n"
FUNCTIONS = {"pow": 2, "geometric": 1}


@dataclass(frozen=True)
class Num:
    text: str


@dataclass(frozen=True)
class Var:
    name: str = VARIABLE


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: Tuple["Node", ...]


Node = Union[Num, Var, BinOp, Neg, Call]


class _TreeBuilder(Transformer):
    """Turns the lark parse tree into Node objects, validating names."""

    def number(self, children):
        return Num(str(children[0]))

    def name(self, children):
        token: Token = children[0]
        if str(token) != VARIABLE:
            raise FamilySyntaxError(f"Unknown variable {str(token)!r}; only {VARIABLE!r} is allowed",
                                    token.start_pos)
        return Var()

    def call(self, children):
        token: Token = children[0]
        args = tuple(children[1])
        expected = FUNCTIONS.get(str(token))
        if expected is None:
            raise FamilySyntaxError(
                f"Unknown function {str(token)!r}. Supported functions: {', '.join(sorted(FUNCTIONS))}",
                token.start_pos)
        if len(args) != expected:
            raise FamilySyntaxError(f"{token}() takes {expected} argument(s), got {len(args)}", token.start_pos)
        return Call(str(token), args)

    def arguments(self, children):
        return list(children)

    def add(self, children):
        return BinOp("+", children[0], children[1])

    def sub(self, children):
        return BinOp("-", children[0], children[1])

    def mul(self, children):
        return BinOp("*", children[0], children[1])

    def div(self, children):
        return BinOp("/", children[0], children[1])

    def pow(self, children):
        return BinOp("^", children[0], children[1])

    def neg(self, children):
        return Neg(children[0])


_PARSER = Lark(GRAMMAR, parser="lalr", start="start")


def parse_expression(text: str) -> Node:
    """
    Parse an expression into a tree.

    Args:
        text: Expression source, e.g. "2^(2*n-1)"

    Returns:
        Root node of the expression tree

    Raises:
        FamilySyntaxError: With the character offset of the first bad token

    Example:
        >>> parse_expression("n^2")
        BinOp(op='^', left=Var(name='n'), right=Num(text='2'))
    """
    try:
        tree = _PARSER.parse(text)
    except UnexpectedInput as e:
        position = e.pos_in_stream if e.pos_in_stream is not None and e.pos_in_stream >= 0 else len(text)
        raise FamilySyntaxError(f"Syntax error in expression {text!r}", position, text) from None
    try:
        return _TreeBuilder().transform(tree)
    except VisitError as e:
        if isinstance(e.orig_exc, FamilySyntaxError):
            e.orig_exc.text = text
            raise e.orig_exc from None
        raise


# Printing precedence levels
_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_LEVEL = 3
_POW_LEVEL = 4
_ATOM_LEVEL = 5


def _level(node: Node) -> int:
    if isinstance(node, BinOp):
        return _POW_LEVEL if node.op == "^" else _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return _NEG_LEVEL
    return _ATOM_LEVEL


def _wrap(node: Node, needs_parens: bool) -> str:
    text = print_expression(node)
    return f"({text})" if needs_parens else text


def print_expression(node: Node) -> str:
    """
    Print a tree with the minimal parentheses that parse back to the same tree.

    Example:
        >>> print_expression(parse_expression("((n)) ^ (2)"))
        'n^2'
    """
    if isinstance(node, Num):
        return node.text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.name}({', '.join(print_expression(arg) for arg in node.args)})"
    if isinstance(node, Neg):
        return "-" + _wrap(node.operand, _level(node.operand) < _NEG_LEVEL)
    if node.op == "^":
        # base binds tighter than anything but an atom; exponent is a factor
        return f"{_wrap(node.left, _level(node.left) < _ATOM_LEVEL)}^{_wrap(node.right, _level(node.right) < _NEG_LEVEL)}"
    level = _PRECEDENCE[node.op]
    left = _wrap(node.left, _level(node.left) < level)
    right = _wrap(node.right, _level(node.right) <= level)
    return f"{left} {node.op} {right}"


def _rational_pow(base: Fraction, exponent: Fraction, n: int) -> Fraction:
    if exponent.denominator != 1:
        raise FamilyEvaluationError(f"non-integer exponent {exponent} is not allowed in rational mode", n)
    if base == 0 and exponent < 0:
        raise FamilyEvaluationError("division by zero (0 raised to a negative power)", n)
    return base ** exponent.numerator


def _float_pow(base: float, exponent: float, n: int) -> float:
    try:
        if exponent == int(exponent):
            return float(base ** int(exponent))
        if base < 0:
            raise FamilyEvaluationError(f"negative base {base!r} with non-integer exponent {exponent!r}", n)
        return base ** exponent
    except ZeroDivisionError:
        raise FamilyEvaluationError("division by zero (0 raised to a negative power)", n) from None
    except OverflowError:
        raise CoefficientOverflowError(f"overflow evaluating {base!r}^{exponent!r}", n) from None


def evaluate(node: Node, n: int, mode: str = RATIONAL) -> Scalar:
    """
    Evaluate a tree at index ``n``.

    Args:
        node: Expression tree
        n: Non-negative index
        mode: 'rational' (exact Fraction) or 'float'

    Returns:
        The value as Fraction or float

    Raises:
        FamilyEvaluationError: Division by zero, non-integer exponent in rational
            mode, or negative base with a non-integer exponent in float mode
        CoefficientOverflowError: Float overflow
    """
    exact = mode == RATIONAL
    if isinstance(node, Num):
        return Fraction(node.text) if exact else float(node.text)
    if isinstance(node, Var):
        return Fraction(n) if exact else float(n)
    if isinstance(node, Neg):
        return -evaluate(node.operand, n, mode)
    if isinstance(node, Call):
        args = [evaluate(arg, n, mode) for arg in node.args]
        if node.name == "geometric":
            args = [args[0], Fraction(n) if exact else float(n)]
        return _rational_pow(args[0], args[1], n) if exact else _float_pow(args[0], args[1], n)

    left = evaluate(node.left, n, mode)
    right = evaluate(node.right, n, mode)
    if node.op == "^":
        return _rational_pow(left, right, n) if exact else _float_pow(left, right, n)
    try:
        if node.op == "+":
            result = left + right
        elif node.op == "-":
            result = left - right
        elif node.op == "*":
            result = left * right
        else:
            result = left / right
    except ZeroDivisionError:
        raise FamilyEvaluationError("division by zero", n) from None
    except OverflowError:
        raise CoefficientOverflowError(f"overflow evaluating {node.op}", n) from None
    if not exact and not math.isfinite(result):
        raise CoefficientOverflowError(f"non-finite value {result!r}", n)
    return result


@dataclass(frozen=True)
class FamilyExpr:
    """
    A parsed coefficient expression, callable as ``expr(n, mode)``.

    Attributes:
        text: Canonical printed form
        tree: Root node
    """

    text: str
    tree: Node

    @classmethod
    def parse(cls, text: str) -> "FamilyExpr":
        tree = parse_expression(text)
        return cls(print_expression(tree), tree)

    def __call__(self, n: int, mode: str = RATIONAL) -> Scalar:
        return evaluate(self.tree, n, mode)

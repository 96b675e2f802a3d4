"""Parser and evaluator for composite set expressions.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := prefix ('*' prefix)*
    prefix := INT '#' prefix | unary
    unary  := '-' unary | power
    power  := primary ('^' INT)*
    primary:= IDENT | '(' expr ')'

``k#E`` is the k-fold sumset E + ... + E, ``E^k`` the k-fold product set and ``*``
the pairwise product set. Juxtaposition is not multiplication: the product set of
A with itself is written ``A*A``.

Source strings for the set expressions that appear in the growth estimates:

=====================  ==========================
quantity               source
=====================  ==========================
AA - AA                ``A*A - A*A``
AA + AA                ``A*A + A*A``
(A-A)(A-A)             ``(A-A)*(A-A)``
B(C-D)                 ``B*(C-D)``
X - B.B                ``X - B*B``
dA, A^d                ``d#A``, ``A^d``
A^{d-1}((d-1)A + A)    ``A^(d-1)*((d-1)#A + A)``
=====================  ==========================
"""

import re
from collections.abc import Callable, Mapping
from dataclasses import dataclass

from loguru import logger

from fp_spectra.errors import (
    BadRepeatError,
    CtxMismatchError,
    EmptySetError,
    ExprSyntaxError,
    UnboundVarError,
)
from fp_spectra.field import FieldCtx
from fp_spectra.fset import FpSet, diffset, productset, set_negate, sumset


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Add:
    left: "SetExprAst"
    right: "SetExprAst"


@dataclass(frozen=True)
class Sub:
    left: "SetExprAst"
    right: "SetExprAst"


@dataclass(frozen=True)
class Mul:
    left: "SetExprAst"
    right: "SetExprAst"


@dataclass(frozen=True)
class Neg:
    operand: "SetExprAst"


@dataclass(frozen=True)
class IterSum:
    k: int
    operand: "SetExprAst"


@dataclass(frozen=True)
class IterProd:
    k: int
    operand: "SetExprAst"


SetExprAst = Var | Add | Sub | Mul | Neg | IterSum | IterProd

_TOKEN_PATTERN = re.compile(
    r"(?P<ws>\s+)|(?P<ident>[A-Z][A-Za-z0-9_]*)|(?P<int>\d+)|(?P<op>[-+*^#()])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "ident", "int", "op" or "end"
    text: str
    offset: int


def _tokenize(src: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        match = _TOKEN_PATTERN.match(src, pos)
        if match is None:
            msg = f"Unexpected character {src[pos]!r}"
            raise ExprSyntaxError(msg, len(src[:pos].encode()), "identifier, integer or operator")
        kind = match.lastgroup or ""
        if kind != "ws":
            tokens.append(_Token(kind, match.group(), len(src[:pos].encode())))
        pos = match.end()
    tokens.append(_Token("end", "", len(src.encode())))
    return tokens


class _Parser:
    """Recursive-descent parser over a token list."""

    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def _advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _is_op(self, text: str) -> bool:
        return self.current.kind == "op" and self.current.text == text

    def _expect_op(self, text: str) -> None:
        if not self._is_op(text):
            self._fail(f"'{text}'")
        self._advance()

    def _fail(self, expected: str) -> None:
        tok = self.current
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        msg = f"Unexpected {found}"
        raise ExprSyntaxError(msg, tok.offset, expected)

    def _repeat_count(self) -> int:
        tok = self.current
        if tok.kind != "int":
            self._fail("integer repeat count")
        self._advance()
        k = int(tok.text)
        if k == 0:
            msg = f"Repeat count must be at least 1 (offset {tok.offset})"
            raise BadRepeatError(msg)
        return k

    def parse(self) -> SetExprAst:
        node = self.expr()
        if self.current.kind != "end":
            self._fail("operator or end of input")
        return node

    def expr(self) -> SetExprAst:
        node = self.term()
        while self._is_op("+") or self._is_op("-"):
            op = self._advance().text
            right = self.term()
            node = Add(node, right) if op == "+" else Sub(node, right)
        return node

    def term(self) -> SetExprAst:
        node = self.prefix()
        while self._is_op("*"):
            self._advance()
            node = Mul(node, self.prefix())
        return node

    def prefix(self) -> SetExprAst:
        if self.current.kind == "int":
            k = self._repeat_count()
            self._expect_op("#")
            return IterSum(k, self.prefix())
        return self.unary()

    def unary(self) -> SetExprAst:
        if self._is_op("-"):
            self._advance()
            return Neg(self.prefix())
        return self.power()

    def power(self) -> SetExprAst:
        node = self.primary()
        while self._is_op("^"):
            self._advance()
            node = IterProd(self._repeat_count(), node)
        return node

    def primary(self) -> SetExprAst:
        tok = self.current
        if tok.kind == "ident":
            self._advance()
            return Var(tok.text)
        if self._is_op("("):
            self._advance()
            node = self.expr()
            self._expect_op(")")
            return node
        self._fail("identifier or '('")
        raise AssertionError  # unreachable, _fail always raises


def parse_expr(src: str) -> SetExprAst:
    """Parse a set expression without evaluating it.

    Args:
        src: Expression source, e.g. ``"(A-A)*(A-A)"``

    Returns:
        The abstract syntax tree

    Raises:
        ExprSyntaxError: With the byte offset and the expected token
        BadRepeatError: If a repeat count is zero

    Example:
        >>> parse_expr("3#A")
        IterSum(k=3, operand=Var(name='A'))
    """
    try:
        return _Parser(src).parse()
    except (ExprSyntaxError, BadRepeatError) as e:
        logger.error(f"Cannot parse expression '{src}': {e}")
        raise


_PRECEDENCE: dict[type, int] = {
    Add: 1,
    Sub: 1,
    Mul: 2,
    IterSum: 3,
    Neg: 4,
    IterProd: 5,
    Var: 6,
}


def _wrap(node: SetExprAst, min_prec: int) -> str:
    text = to_source(node)
    return f"({text})" if _PRECEDENCE[type(node)] < min_prec else text


def to_source(ast: SetExprAst) -> str:
    """Print an AST with the fewest parentheses that re-parse to the same tree."""
    match ast:
        case Var(name):
            return name
        case Add(left, right):
            return f"{_wrap(left, 1)} + {_wrap(right, 2)}"
        case Sub(left, right):
            return f"{_wrap(left, 1)} - {_wrap(right, 2)}"
        case Mul(left, right):
            return f"{_wrap(left, 2)}*{_wrap(right, 3)}"
        case IterSum(k, operand):
            return f"{k}#{_wrap(operand, 3)}"
        case Neg(operand):
            return f"-{_wrap(operand, 4)}"
        case IterProd(k, operand):
            return f"{_wrap(operand, 5)}^{k}"
    msg = f"Not a set expression node: {ast!r}"
    raise TypeError(msg)


def free_vars(ast: SetExprAst) -> frozenset[str]:
    """Names referenced by the expression."""
    match ast:
        case Var(name):
            return frozenset({name})
        case Add(left, right) | Sub(left, right) | Mul(left, right):
            return free_vars(left) | free_vars(right)
        case Neg(operand) | IterSum(_, operand) | IterProd(_, operand):
            return free_vars(operand)
    msg = f"Not a set expression node: {ast!r}"
    raise TypeError(msg)


def _iterate(op: Callable[[FpSet, FpSet], FpSet], base: FpSet, k: int) -> FpSet:
    acc = base
    for _ in range(k - 1):
        acc = op(acc, base)
    return acc


def eval_expr(ast: SetExprAst, env: Mapping[str, FpSet], ctx: FieldCtx) -> FpSet:
    """Evaluate an expression over sets bound in env.

    Args:
        ast: Parsed expression
        env: Name to set bindings; every set must be non-empty and live in ctx
        ctx: Field of evaluation

    Returns:
        The resulting subset of F_p

    Raises:
        UnboundVarError: If a name is missing from env
        EmptySetError: If a bound set is empty
        CtxMismatchError: If a bound set lives in another field

    Example:
        >>> A = FpSet.from_residues(make_field(5), [0, 1])
        >>> eval_expr(parse_expr("2#A"), {"A": A}, A.ctx).elements
        (0, 1, 2)
    """
    for name in sorted(free_vars(ast)):
        if name not in env:
            msg = f"Unbound variable '{name}'"
            logger.error(msg)
            raise UnboundVarError(msg)
        bound = env[name]
        if bound.ctx.p != ctx.p:
            msg = f"Variable '{name}' lives in F_{bound.ctx.p}, expected F_{ctx.p}"
            logger.error(msg)
            raise CtxMismatchError(msg)
        if bound.card == 0:
            msg = f"Variable '{name}' is bound to the empty set"
            logger.error(msg)
            raise EmptySetError(msg)

    memo: dict[SetExprAst, FpSet] = {}

    def ev(node: SetExprAst) -> FpSet:
        if node in memo:
            return memo[node]
        match node:
            case Var(name):
                result = env[name]
            case Add(left, right):
                result = sumset(ev(left), ev(right))
            case Sub(left, right):
                result = diffset(ev(left), ev(right))
            case Mul(left, right):
                result = productset(ev(left), ev(right))
            case Neg(operand):
                result = set_negate(ev(operand))
            case IterSum(k, operand):
                result = _iterate(sumset, ev(operand), k)
            case IterProd(k, operand):
                result = _iterate(productset, ev(operand), k)
            case _:
                msg = f"Not a set expression node: {node!r}"
                raise TypeError(msg)
        memo[node] = result
        return result

    result = ev(ast)
    logger.debug(f"Evaluated {to_source(ast)} over F_{ctx.p}: {result.card} elements")
    return result


def evaluate(src: str, env: Mapping[str, FpSet], ctx: FieldCtx | None = None) -> FpSet:
    """Parse and evaluate in one call; ctx defaults to the field of the first binding."""
    if ctx is None:
        if not env:
            msg = "Cannot infer the field from an empty environment"
            raise UnboundVarError(msg)
        ctx = next(iter(env.values())).ctx
    return eval_expr(parse_expr(src), env, ctx)

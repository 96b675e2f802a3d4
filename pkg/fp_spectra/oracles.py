"""Brute-force reference implementations.

Everything here follows the definitions literally (nested loops, permutation sums,
full enumeration) and is only usable at small sizes. The verification battery and
the test suite compare the fast code paths against these.
"""

import itertools
from collections import Counter
from collections.abc import Mapping, Sequence

from fp_spectra.setexpr import Add, IterProd, IterSum, Mul, Neg, SetExprAst, Sub, Var


def naive_eval(ast: SetExprAst, env: Mapping[str, frozenset[int]], p: int) -> frozenset[int]:
    """Evaluate an expression with Python sets and double loops."""

    def pairwise(op, left: frozenset[int], right: frozenset[int]) -> frozenset[int]:
        return frozenset(op(a, b) % p for a in left for b in right)

    def ev(node: SetExprAst) -> frozenset[int]:
        match node:
            case Var(name):
                return frozenset(a % p for a in env[name])
            case Add(left, right):
                return pairwise(lambda a, b: a + b, ev(left), ev(right))
            case Sub(left, right):
                return pairwise(lambda a, b: a - b, ev(left), ev(right))
            case Mul(left, right):
                return pairwise(lambda a, b: a * b, ev(left), ev(right))
            case Neg(operand):
                return frozenset(-a % p for a in ev(operand))
            case IterSum(k, operand):
                base = ev(operand)
                acc = base
                for _ in range(k - 1):
                    acc = pairwise(lambda a, b: a + b, acc, base)
                return acc
            case IterProd(k, operand):
                base = ev(operand)
                acc = base
                for _ in range(k - 1):
                    acc = pairwise(lambda a, b: a * b, acc, base)
                return acc
        msg = f"Not a set expression node: {node!r}"
        raise TypeError(msg)

    return ev(ast)


def _sign(perm: Sequence[int]) -> int:
    inversions = sum(
        1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j]
    )
    return -1 if inversions % 2 else 1


def permutation_det(rows: Sequence[Sequence[int]], p: int) -> int:
    """Determinant mod p as the signed sum over all permutations."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        term = _sign(perm)
        for i, j in enumerate(perm):
            term *= rows[i][j]
        total += term
    return total % p


def permutation_per(rows: Sequence[Sequence[int]], p: int) -> int:
    """Permanent mod p as the unsigned sum over all permutations."""
    n = len(rows)
    total = 0
    for perm in itertools.permutations(range(n)):
        term = 1
        for i, j in enumerate(perm):
            term *= rows[i][j]
        total += term
    return total % p


def _as_rows(entries: Sequence[int], d: int) -> list[list[int]]:
    return [list(entries[i * d : (i + 1) * d]) for i in range(d)]


def brute_force_counts(
    elements: Sequence[int], d: int, p: int, kind: str = "det", transpose: bool = False
) -> Counter[int]:
    """Count every d x d matrix over elements by its determinant (or permanent) value.

    With transpose=True each matrix is read column-major, i.e. its transpose is
    evaluated; the counts must not change.
    """
    value = permutation_det if kind == "det" else permutation_per
    counts: Counter[int] = Counter()
    for entries in itertools.product(elements, repeat=d * d):
        rows = _as_rows(entries, d)
        if transpose:
            rows = [list(col) for col in zip(*rows, strict=True)]
        counts[value(rows, p)] += 1
    return counts


def brute_force_diff_values(elements: Sequence[int], p: int, kind: str = "det") -> frozenset[int]:
    """{Det(X - Y)} (or Per) over all pairs of 2 x 2 matrices with entries in elements."""
    value = permutation_det if kind == "det" else permutation_per
    matrices = list(itertools.product(elements, repeat=4))
    out = set()
    for x in matrices:
        for y in matrices:
            diff = [(a - b) % p for a, b in zip(x, y, strict=True)]
            out.add(value(_as_rows(diff, 2), p))
    return frozenset(out)


def naive_incidences(
    xs: Sequence[int],
    ys: Sequence[int],
    slopes: Sequence[int],
    offsets: Sequence[int],
    p: int,
) -> int:
    """Triple loop over points and lines y = c(x - b)."""
    count = 0
    for c in slopes:
        for b in offsets:
            for x in xs:
                for y in ys:
                    if y == c * (x - b) % p:
                        count += 1
    return count

"""Explicit matrix constructions that certify subsets of a spectrum.

Each construction fixes part of a matrix so that its determinant (or permanent)
factors into set operations over A, which makes the resulting set a subset of the
spectrum without enumerating anything:

* last-row lift: a (d-1)-row prefix whose last column repeats the first column,
  with a free last row, has Det = (x_d - x_1) * Det(prefix without last column),
  so (A - A) * X_{d-1} is contained in X_d.
* block lift: subtracting rows 3, 4 from rows 1, 2 clears a 2 x 2 block, and Det
  factors as a 2 x 2 determinant of differences times a (d-2) x (d-2) one, so
  X_{d-2} * ((A-A)(A-A) - (A-A)(A-A)) is contained in X_d.
* rank-structured permanent: with the first d-1 rows constant,
  Per = (d-1)! * x_1 ... x_{d-1} * (x_d1 + ... + x_dd).

Certificates keep their formula as set-expression source so they can be
re-evaluated independently (see :func:`reevaluate`).
"""

import math
from dataclasses import dataclass, field
from typing import Literal

from loguru import logger

from fp_spectra.config import get_settings
from fp_spectra.errors import DimensionOutOfRangeError, EmptySetError, OddDimensionError
from fp_spectra.fset import FpSet, set_to_literal
from fp_spectra.setexpr import evaluate
from fp_spectra.spectra import MAX_DIM, det_spectrum, per_spectrum

CertificateTarget = Literal["det", "per", "det_diff", "per_diff"]

DET_BASE = "A*A - A*A"
PER_BASE = "A*A + A*A"
DIFF_PRODUCT = "(A-A)*(A-A)"


@dataclass(frozen=True)
class Certificate:
    """A set certified to lie inside a spectrum.

    Attributes:
        target: Spectrum the subset belongs to (det, per, det_diff or per_diff)
        d: Matrix dimension
        subset: The certified values
        formula: Set-expression source that evaluates to subset
        bindings: Sets bound to names other than A in formula
        cost: Work spent, in matrices-equivalent units
        degenerate: True when the construction collapses (factorial vanishing mod p)
        chain: Construction steps, base first
    """

    target: CertificateTarget
    d: int
    subset: FpSet
    formula: str
    bindings: dict[str, FpSet] = field(default_factory=dict)
    cost: int = 0
    degenerate: bool = False
    chain: tuple[str, ...] = ()

    @property
    def cardinality(self) -> int:
        return self.subset.card

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "d": self.d,
            "p": self.subset.ctx.p,
            "cardinality": self.cardinality,
            "subset": list(self.subset.elements),
            "formula": self.formula,
            "bindings": {k: set_to_literal(v) for k, v in sorted(self.bindings.items())},
            "cost": self.cost,
            "degenerate": self.degenerate,
            "chain": list(self.chain),
        }


def _require_nonempty(*sets: FpSet) -> None:
    for s in sets:
        if s.card == 0:
            msg = "Constructions need non-empty sets"
            logger.error(msg)
            raise EmptySetError(msg)


def reevaluate(cert: Certificate, A: FpSet) -> FpSet:
    """Evaluate the certificate formula again from A and its bindings."""
    return evaluate(cert.formula, {"A": A, **cert.bindings}, A.ctx)


def lastrow_lift(
    A: FpSet, S_prev: FpSet, d: int, prev_formula: str | None = None
) -> Certificate:
    """Certify (A - A) * S_prev inside X_d, given S_prev inside X_{d-1}.

    Args:
        A: Entry set
        S_prev: Subset of the (d-1) x (d-1) determinant spectrum of A
        d: Target dimension, d >= 2
        prev_formula: Formula of S_prev in terms of A; when given, the result formula
            is expanded in A alone instead of binding S_prev to X

    Raises:
        EmptySetError: If A or S_prev is empty
    """
    if d < 2:
        msg = f"lastrow_lift needs d >= 2, got {d}"
        raise DimensionOutOfRangeError(msg)
    _require_nonempty(A, S_prev)
    if prev_formula is None:
        formula, bindings = "(A-A)*X", {"X": S_prev}
    else:
        formula, bindings = f"(A-A)*({prev_formula})", {}
    subset = evaluate("(A-A)*X", {"A": A, "X": S_prev}, A.ctx)
    logger.debug(f"lastrow_lift d={d}: {S_prev.card} -> {subset.card}")
    return Certificate(
        target="det",
        d=d,
        subset=subset,
        formula=formula,
        bindings=bindings,
        cost=A.card**2 * S_prev.card,
        chain=(f"lastrow_lift d={d}",),
    )


def block_lift(
    A: FpSet, S_prev2: FpSet, d: int, prev_formula: str | None = None
) -> Certificate:
    """Certify S_prev2 * ((A-A)(A-A) - (A-A)(A-A)) inside X_d, given S_prev2 inside X_{d-2}.

    Raises:
        OddDimensionError: If d is odd
        DimensionOutOfRangeError: If d < 4
        EmptySetError: If A or S_prev2 is empty
    """
    if d % 2:
        msg = f"block_lift needs an even dimension, got {d}"
        logger.error(msg)
        raise OddDimensionError(msg)
    if d < 4:
        msg = f"block_lift needs d >= 4, got {d}"
        raise DimensionOutOfRangeError(msg)
    _require_nonempty(A, S_prev2)
    block = f"{DIFF_PRODUCT} - {DIFF_PRODUCT}"
    if prev_formula is None:
        formula, bindings = f"X*({block})", {"X": S_prev2}
    else:
        formula, bindings = f"({prev_formula})*({block})", {}
    subset = evaluate(f"X*({block})", {"A": A, "X": S_prev2}, A.ctx)
    logger.debug(f"block_lift d={d}: {S_prev2.card} -> {subset.card}")
    return Certificate(
        target="det",
        d=d,
        subset=subset,
        formula=formula,
        bindings=bindings,
        cost=A.card**8 + S_prev2.card * A.ctx.p,
        chain=(f"block_lift d={d}",),
    )


def per_rank_structured(A: FpSet, d: int) -> Certificate:
    """Certify (d-1)! * A^(d-1) * ((d-1)A + A) inside the permanent spectrum.

    When p <= d - 1 the factorial vanishes mod p; the subset is then {0} and the
    certificate is flagged degenerate.

    Raises:
        EmptySetError: If A is empty
    """
    if d < 2:
        msg = f"per_rank_structured needs d >= 2, got {d}"
        raise DimensionOutOfRangeError(msg)
    _require_nonempty(A)
    ctx = A.ctx
    factor = math.factorial(d - 1) % ctx.p
    K = FpSet.singleton(ctx, factor)
    formula = f"K*(A^{d - 1}*({d - 1}#A + A))"
    subset = evaluate(formula, {"A": A, "K": K}, ctx)
    degenerate = factor == 0
    if degenerate:
        logger.warning(f"({d}-1)! vanishes mod {ctx.p}; permanent certificate collapses to {{0}}")
    return Certificate(
        target="per",
        d=d,
        subset=subset,
        formula=formula,
        bindings={"K": K},
        cost=A.card**d,
        degenerate=degenerate,
        chain=(f"per_rank_structured d={d}",),
    )


def _exact_base(A: FpSet, kind: Literal["det", "per"], budget: int) -> tuple[FpSet, int]:
    """Exact 2 x 2 spectrum: enumerated when affordable, else by the 2 x 2 identity."""
    if A.card**4 <= budget:
        spectrum = det_spectrum if kind == "det" else per_spectrum
        result = spectrum(A, 2, budget=budget, workers=1)
        return result.values, result.matrices_enumerated
    formula = DET_BASE if kind == "det" else PER_BASE
    return evaluate(formula, {"A": A}), A.card**4


def chain_certificate(
    A: FpSet,
    d: int,
    target: Literal["det", "per"] = "det",
    budget: int | None = None,
) -> Certificate:
    """Lower-bound certificate for the d x d spectrum built by composing lifts.

    Determinants start from the exact 2 x 2 spectrum and apply block lifts up the
    even dimensions; an odd d then takes one last-row lift. Permanents use the exact
    2 x 2 spectrum for d = 2 and the rank-structured construction otherwise.

    Raises:
        DimensionOutOfRangeError: If d is outside [2, 8]
        EmptySetError: If A is empty
    """
    if not 2 <= d <= MAX_DIM:
        msg = f"chain_certificate needs 2 <= d <= {MAX_DIM}, got {d}"
        logger.error(msg)
        raise DimensionOutOfRangeError(msg)
    _require_nonempty(A)
    budget = get_settings().budget if budget is None else budget

    if target == "per":
        if d > 2:
            return per_rank_structured(A, d)
        base, cost = _exact_base(A, "per", budget)
        return Certificate(
            target="per", d=2, subset=base, formula=PER_BASE, cost=cost, chain=("exact d=2",)
        )

    subset, cost = _exact_base(A, "det", budget)
    formula = DET_BASE
    chain = ["exact d=2"]
    even_top = d if d % 2 == 0 else d - 1
    for k in range(4, even_top + 1, 2):
        step = block_lift(A, subset, k, prev_formula=formula)
        subset, formula, cost = step.subset, step.formula, cost + step.cost
        chain.extend(step.chain)
    if d % 2:
        step = lastrow_lift(A, subset, d, prev_formula=formula)
        subset, formula, cost = step.subset, step.formula, cost + step.cost
        chain.extend(step.chain)

    logger.info(f"det chain certificate d={d}, |A|={A.card}: {subset.card} values")
    return Certificate(
        target="det", d=d, subset=subset, formula=formula, cost=cost, chain=tuple(chain)
    )


def translated_difference(A: FpSet, a: int, target: Literal["det", "per"] = "det") -> Certificate:
    """Certify (A-a)(A-a) -+ (A-A)(A-A) inside F_2(A) (det) or G_2(A) (per).

    Since A - a is contained in A - A, this is a sub-construction of the exact
    difference-spectrum identity; it is the set the growth argument actually bounds.

    Raises:
        EmptySetError: If A is empty
        ValueError: If a is not in A
    """
    _require_nonempty(A)
    if a not in A:
        msg = f"Translation point {a} is not in A"
        raise ValueError(msg)
    T = FpSet.singleton(A.ctx, a)
    sign = "-" if target == "det" else "+"
    formula = f"(A-T)*(A-T) {sign} {DIFF_PRODUCT}"
    subset = evaluate(formula, {"A": A, "T": T})
    return Certificate(
        target="det_diff" if target == "det" else "per_diff",
        d=2,
        subset=subset,
        formula=formula,
        bindings={"T": T},
        cost=A.card**6,
        chain=(f"translated_difference a={a}",),
    )

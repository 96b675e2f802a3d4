"""Experiment presets: what each scan measures and which bound it is compared to.

A preset bundles the measured quantity for one generated set A, the lower bound the
growth estimate predicts for it, the allowed dimensions, and the hypothesis window
|A| <= p^theta. Exponents and windows are exact fractions; the window check is done
in integers (|A|^den <= p^num) so no rounding can move a set across it.

Bounds of the form min{|A|^theta, p} report which branch was active in the record
detail. The growth estimates hide constants and sometimes log factors; ratios are
raw measured/bound values with no log correction.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction

from loguru import logger

from fp_spectra.constructions import chain_certificate, per_rank_structured
from fp_spectra.errors import BudgetExceededWithoutCertificateError, ConfigInvalidError
from fp_spectra.fset import FpSet
from fp_spectra.incidence import (
    check_incidence_bound,
    check_sum_product_bridge,
    lemma8_configuration,
)
from fp_spectra.setexpr import evaluate
from fp_spectra.spectra import (
    MAX_DIM,
    det_spectrum,
    diff_det_spectrum_f2,
    diff_per_spectrum_g2,
    distribution_report,
    per_spectrum,
)

THM5_EXPONENT = Fraction(7, 4) + Fraction(1, 60)
DIFFPROD_EXPONENT = Fraction(3, 2) + Fraction(1, 90)


@dataclass(frozen=True)
class Cell:
    """Inputs of one (size, trial) scan cell.

    Attributes:
        A: The generated set
        d: Matrix dimension (or iteration depth for lemma9)
        budget: Enumeration budget in matrices
        companions: Two further sets from the same family, used as B and C by the
            presets that need more than one set
    """

    A: FpSet
    d: int
    budget: int
    companions: tuple[FpSet, FpSet]


@dataclass(frozen=True)
class Measurement:
    measured: int | float
    bound: float
    exact: bool
    hypothesis_ok: bool = True
    detail: dict[str, object] = field(default_factory=dict)


@dataclass(frozen=True)
class Preset:
    """Metadata and measurement for one named experiment.

    Attributes:
        name: CLI name
        summary: One-line description of measured vs bound
        measure: Computes the Measurement for a cell
        dims: Allowed dimensions, the first being the default
        exponent: Exponent of |A| in the bound, as a function of d (None when the
            bound is not a pure power of |A|)
        window: theta in the hypothesis |A| <= p^theta, as a function of d
    """

    name: str
    summary: str
    measure: Callable[[Cell], Measurement]
    dims: tuple[int, ...] = (2,)
    exponent: Callable[[int], Fraction] | None = None
    window: Callable[[int], Fraction] | None = None

    @property
    def default_d(self) -> int:
        return self.dims[0]


def in_window(card: int, p: int, theta: Fraction) -> bool:
    """Exact test of card <= p**theta.

    Example:
        >>> in_window(21, 101, Fraction(2, 3))
        True
        >>> in_window(22, 101, Fraction(2, 3))
        False
    """
    return card**theta.denominator <= p**theta.numerator


def power_bound(card: int, exponent: Fraction) -> float:
    return float(card) ** float(exponent)


def clamped_bound(value: float, p: int) -> tuple[float, str]:
    """min{value, p} and the name of the active branch."""
    if value <= p:
        return value, "power"
    return float(p), "p"


def _det_values(cell: Cell) -> tuple[FpSet, bool]:
    """Exact X_d when affordable, else the chain certificate (a lower bound)."""
    A, d = cell.A, cell.d
    if A.card ** (d * d) <= cell.budget:
        return det_spectrum(A, d, budget=cell.budget, workers=1).values, True
    cert = chain_certificate(A, d, "det", budget=cell.budget)
    # the d = 2 chain is the exact identity X_2 = AA - AA
    return cert.subset, d == 2


def _per_values(cell: Cell) -> tuple[FpSet, bool]:
    A, d = cell.A, cell.d
    if A.card ** (d * d) <= cell.budget:
        return per_spectrum(A, d, budget=cell.budget, workers=1).values, True
    if d == 2:
        return evaluate("A*A + A*A", {"A": A}), True
    return per_rank_structured(A, d).subset, False


def _power_measure(
    values: Callable[[Cell], tuple[FpSet, bool]],
    exponent: Callable[[int], Fraction],
    clamp: bool = False,
) -> Callable[[Cell], Measurement]:
    def measure(cell: Cell) -> Measurement:
        subset, exact = values(cell)
        bound = power_bound(cell.A.card, exponent(cell.d))
        detail: dict[str, object] = {}
        if clamp:
            bound, detail["branch"] = clamped_bound(bound, cell.A.ctx.p)
        return Measurement(subset.card, bound, exact, detail=detail)

    return measure


def _measure_diff(cell: Cell) -> Measurement:
    f2 = diff_det_spectrum_f2(cell.A, cell.budget)
    g2 = diff_per_spectrum_g2(cell.A, cell.budget)
    bound = power_bound(cell.A.card, THM5_EXPONENT)
    return Measurement(min(f2.card, g2.card), bound, True, detail={"F2": f2.card, "G2": g2.card})


def _measure_incidence(cell: Cell) -> Measurement:
    B, C = cell.companions
    grid, lines = lemma8_configuration(cell.A, B, C)
    report = check_incidence_bound(grid, lines, workers=1)
    return Measurement(
        report.incidences,
        report.rhs,
        True,
        hypothesis_ok=not report.hypothesis_failed,
        detail={
            "lines": report.lines,
            "swapped": report.swapped,
            "field_ratio": report.field_ratio,
            "excluded_zero_slope": report.excluded_zero_slope,
        },
    )


def _measure_bridge(cell: Cell) -> Measurement:
    B, C = cell.companions
    report = check_sum_product_bridge(cell.A, B, C, workers=1)
    return Measurement(
        report.measured,
        report.bound,
        True,
        hypothesis_ok=not report.hypothesis_violated,
        detail={
            "sum": report.sum_card,
            "product": report.product_card,
            "incidences": report.incidences,
            "incidence_lower_ok": report.incidence_lower_ok,
        },
    )


def _measure_power_sum(cell: Cell) -> Measurement:
    d = cell.d
    product = evaluate(f"A^{d}", {"A": cell.A}).card
    total = evaluate(f"{d}#A", {"A": cell.A}).card
    bound = power_bound(cell.A.card, _power_sum_exponent(d))
    return Measurement(product * total, bound, True, detail={"A^d": product, "dA": total})


def _measure_energy_mix(cell: Cell) -> Measurement:
    env = {"A": cell.A}
    diff = evaluate("A - A", env).card
    prod = evaluate("A*A", env).card
    measured = math.exp((18 * math.log(diff) + 9 * math.log(prod)) / 27)
    bound = power_bound(cell.A.card, Fraction(32, 27))
    return Measurement(measured, bound, True, detail={"A-A": diff, "AA": prod})


def _measure_distribution(cell: Cell) -> Measurement:
    A, d = cell.A, cell.d
    if A.card ** (d * d) > cell.budget:
        msg = (
            f"dist2 needs exact counts, but |A|^(d^2) = {A.card ** (d * d)} exceeds "
            f"the budget {cell.budget}"
        )
        logger.error(msg)
        raise BudgetExceededWithoutCertificateError(msg)
    result = det_spectrum(A, d, want_counts=True, budget=cell.budget, workers=1)
    report = distribution_report(result)
    return Measurement(
        report.max_count,
        report.expected,
        True,
        detail={
            "zero_count": report.zero_count,
            "nonzero_min": report.nonzero_min,
            "nonzero_max": report.nonzero_max,
            "max_relative_deviation": report.max_relative_deviation,
        },
    )


def _measure_prodsum(cell: Cell) -> Measurement:
    env = {"A": cell.A}
    plus = evaluate("A*A + A*A", env).card
    minus = evaluate("A*A - A*A", env).card
    bound, branch = clamped_bound(power_bound(cell.A.card, Fraction(3, 2)), cell.A.ctx.p)
    return Measurement(
        min(plus, minus), bound, True, detail={"AA+AA": plus, "AA-AA": minus, "branch": branch}
    )


def _measure_dilated_diff(cell: Cell) -> Measurement:
    B, C = cell.companions
    A = cell.A
    measured = evaluate("A*(B - C)", {"A": A, "B": B, "C": C}).card
    raw = (A.card * B.card * C.card) ** 0.5
    bound, branch = clamped_bound(raw, A.ctx.p)
    trivial = any(s.elements == (0,) for s in (A, B, C))
    return Measurement(measured, bound, True, hypothesis_ok=not trivial, detail={"branch": branch})


def _measure_diffprod(cell: Cell) -> Measurement:
    measured = evaluate("(A-A)*(A-A)", {"A": cell.A}).card
    bound, branch = clamped_bound(power_bound(cell.A.card, DIFFPROD_EXPONENT), cell.A.ctx.p)
    return Measurement(measured, bound, True, detail={"branch": branch})


def _measure_shifted_prod(cell: Cell) -> Measurement:
    env = {"A": cell.A}
    X = evaluate("(A-A)*(A-A)", env)
    B = evaluate("A - A", env)
    shifted = {"X": X, "B": B}
    minus = evaluate("X - B*B", shifted).card
    plus = evaluate("X + B*B", shifted).card
    bound, branch = clamped_bound(X.card**0.5 * B.card, cell.A.ctx.p)
    return Measurement(
        min(minus, plus),
        bound,
        True,
        hypothesis_ok=X.card >= B.card,
        detail={"X-BB": minus, "X+BB": plus, "|X|": X.card, "|B|": B.card, "branch": branch},
    )


def _even_chain_window(d: int) -> Fraction:
    half = 2 ** (d // 2)
    return Fraction(45 * half, 136 * half - 137)


def _even_chain_exponent(d: int) -> Fraction:
    return 3 + Fraction(1, 45) - Fraction(137, 45 * 2 ** (d // 2))


def _odd_chain_window(d: int) -> Fraction:
    half = 2 ** ((d - 1) // 2)
    return Fraction(45 * half, 136 * half - 137)


def _odd_chain_exponent(d: int) -> Fraction:
    return Fraction(5, 2) + Fraction(1, 90) - Fraction(137, 45 * 2 ** ((d + 1) // 2))


def _permanent_exponent(d: int) -> Fraction:
    return 2 - Fraction(1, 6) - Fraction(1, 3) * Fraction(2, 5) ** (d - 2)


def _power_sum_exponent(d: int) -> Fraction:
    return Fraction(8, 3) - Fraction(2, 3) * Fraction(2, 5) ** (d - 1)


def _const(value: Fraction) -> Callable[[int], Fraction]:
    return lambda _d: value


def _dims(lo: int, step: int = 1) -> tuple[int, ...]:
    return tuple(range(lo, MAX_DIM + 1, step))


PRESETS: dict[str, Preset] = {
    preset.name: preset
    for preset in (
        Preset(
            "thm1i",
            "f_2(A) against |A|^(3/2)",
            _power_measure(_det_values, _const(Fraction(3, 2))),
            exponent=_const(Fraction(3, 2)),
            window=_const(Fraction(2, 3)),
        ),
        Preset(
            "thm1ii",
            "f_d(A), d even >= 4, against |A|^(3 + 1/45 - 137/(45 * 2^(d/2)))",
            _power_measure(_det_values, _even_chain_exponent),
            dims=_dims(4, 2),
            exponent=_even_chain_exponent,
            window=_even_chain_window,
        ),
        Preset(
            "thm2i",
            "f_3(A) against |A|^(7/4)",
            _power_measure(_det_values, _const(Fraction(7, 4))),
            dims=(3,),
            exponent=_const(Fraction(7, 4)),
            window=_const(Fraction(4, 7)),
        ),
        Preset(
            "thm2ii",
            "f_d(A), d odd >= 5, against |A|^(5/2 + 1/90 - 137/(45 * 2^((d+1)/2)))",
            _power_measure(_det_values, _odd_chain_exponent),
            dims=_dims(5, 2),
            exponent=_odd_chain_exponent,
            window=_odd_chain_window,
        ),
        Preset(
            "thm3",
            "g_2(A) against |A|^(3/2)",
            _power_measure(_per_values, _const(Fraction(3, 2))),
            exponent=_const(Fraction(3, 2)),
            window=_const(Fraction(2, 3)),
        ),
        Preset(
            "thm4",
            "g_d(A), d >= 3, against |A|^(2 - 1/6 - (1/3)(2/5)^(d-2))",
            _power_measure(_per_values, _permanent_exponent),
            dims=_dims(3),
            exponent=_permanent_exponent,
            window=_const(Fraction(1, 2)),
        ),
        Preset(
            "thm5",
            "min(|F_2(A)|, |G_2(A)|) against |A|^(7/4 + 1/60)",
            _measure_diff,
            exponent=_const(THM5_EXPONENT),
            window=_const(Fraction(9, 16)),
        ),
        Preset(
            "conj1",
            "f_d(A) against min{|A|^4, p}",
            _power_measure(_det_values, _const(Fraction(4)), clamp=True),
            dims=(4, 2, 3, 5, 6, 7, 8),
            exponent=_const(Fraction(4)),
        ),
        Preset(
            "conj2",
            "g_d(A) against min{|A|^2, p}",
            _power_measure(_per_values, _const(Fraction(2)), clamp=True),
            dims=_dims(2),
            exponent=_const(Fraction(2)),
        ),
        Preset(
            "lemma7",
            "I((A+B) x AC, lines y = c(x - b)) against the grid incidence bound",
            _measure_incidence,
        ),
        Preset(
            "lemma8",
            "|A+B||AC| against |A|^(8/5) |B|^(2/5) |C|^(2/5)",
            _measure_bridge,
            window=_const(Fraction(1, 2)),
        ),
        Preset(
            "lemma9",
            "|A^d||dA| against |A|^(8/3 - (2/3)(2/5)^(d-1))",
            _measure_power_sum,
            dims=_dims(2),
            exponent=_power_sum_exponent,
            window=_const(Fraction(1, 2)),
        ),
        Preset(
            "lemma11",
            "(|A-A|^18 |AA|^9)^(1/27) against |A|^(32/27)",
            _measure_energy_mix,
            exponent=_const(Fraction(32, 27)),
            window=_const(Fraction(9, 16)),
        ),
        Preset(
            "dist2",
            "max_t D_d(A, t) against |A|^(d^2) / p",
            _measure_distribution,
            dims=_dims(2),
        ),
        Preset(
            "prodsum",
            "min(|AA+AA|, |AA-AA|) against min{|A|^(3/2), p}",
            _measure_prodsum,
            exponent=_const(Fraction(3, 2)),
        ),
        Preset(
            "dilated_diff",
            "|A(B-C)| against min{(|A||B||C|)^(1/2), p}",
            _measure_dilated_diff,
        ),
        Preset(
            "diffprod",
            "|(A-A)(A-A)| against min{|A|^(3/2 + 1/90), p}",
            _measure_diffprod,
            exponent=_const(DIFFPROD_EXPONENT),
        ),
        Preset(
            "shifted_prod",
            "min(|X - BB|, |X + BB|) for X = (A-A)(A-A), B = A-A, against min{|X|^(1/2)|B|, p}",
            _measure_shifted_prod,
        ),
    )
}

PRESET_NAMES = tuple(PRESETS)


def get_preset(name: str) -> Preset:
    """Look up a preset by name.

    Raises:
        ConfigInvalidError: If the name is unknown
    """
    try:
        return PRESETS[name]
    except KeyError:
        msg = f"Unknown preset '{name}'. Expected one of {', '.join(PRESET_NAMES)}"
        logger.error(msg)
        raise ConfigInvalidError(msg) from None

"""Cross-module invariant battery.

Every fast code path is checked against the brute-force oracles in
:mod:`fp_spectra.oracles`, and every certificate against the exact spectrum it
claims to sit in. ``quick`` keeps to p <= 31 and |A| <= 3; ``full`` adds the d = 4
block-lift containment, larger random batteries and 10^4 oracle matrices.

Failures are data: each invariant reports the number of cases checked and the first
counterexample as a JSON string.
"""

import json
from collections.abc import Callable, Iterator
from dataclasses import dataclass, field
from typing import Literal

from loguru import logger

from fp_spectra.config import get_settings
from fp_spectra.constructions import (
    block_lift,
    chain_certificate,
    lastrow_lift,
    per_rank_structured,
    reevaluate,
    translated_difference,
)
from fp_spectra.field import FieldCtx, make_field
from fp_spectra.fset import FpSet, SetFamilySpec, gen_set, set_dilate
from fp_spectra.incidence import (
    GridPoints,
    LineFamily,
    check_incidence_bound,
    count_incidences,
    count_incidences_dual,
    lemma8_configuration,
)
from fp_spectra.oracles import (
    brute_force_counts,
    brute_force_diff_values,
    naive_eval,
    naive_incidences,
    permutation_det,
    permutation_per,
)
from fp_spectra.rng import Xorshift64Star, derive_seed
from fp_spectra.runner import make_config, records_to_csv, run_scan
from fp_spectra.setexpr import eval_expr, parse_expr
from fp_spectra.spectra import (
    MatrixView,
    det_spectrum,
    det_value,
    diff_det_spectrum_f2,
    diff_per_spectrum_g2,
    per_spectrum,
    per_value,
)

VerifyLevel = Literal["quick", "full"]

VERIFY_SEED = 0x5EED

# stream tags for derive_seed
_MATRICES, _DILATION, _BLOCK, _INCIDENCE, _NESTED = 1, 2, 3, 4, 5

ORACLE_EXPRESSIONS = (
    "A*A - A*A",
    "A*A + A*A",
    "(A-A)*(A-A)",
    "B*(A - B)",
    "3#A",
    "A^3",
    "-A^2 + 2#B",
    "2#A*B - A",
)


@dataclass(frozen=True)
class InvariantResult:
    """Outcome of one invariant.

    Attributes:
        name: Invariant name
        passed: True if no case failed
        cases: Number of cases checked
        counterexample: JSON description of the first failing case
    """

    name: str
    passed: bool
    cases: int
    counterexample: str | None = None


@dataclass(frozen=True)
class VerificationReport:
    level: VerifyLevel
    results: tuple[InvariantResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self) -> list[InvariantResult]:
        return [r for r in self.results if not r.passed]


@dataclass
class _Tracker:
    name: str
    cases: int = 0
    counterexample: str | None = None

    def check(self, ok: bool, **case: object) -> None:
        self.cases += 1
        if not ok and self.counterexample is None:
            self.counterexample = json.dumps(case, sort_keys=True)
            logger.warning(f"Invariant {self.name} failed: {self.counterexample}")

    def result(self) -> InvariantResult:
        passed = self.counterexample is None
        return InvariantResult(self.name, passed, self.cases, self.counterexample)


@dataclass(frozen=True)
class _Scale:
    primes: tuple[int, ...] = (7, 11, 31)
    max_card: int = 3
    sets_per_card: int = 4
    oracle_matrices: int = 500
    oracle_primes: tuple[int, ...] = (7, 101)
    dilations: int = 10
    nested_pairs: int = 12
    incidence_configs: int = 20
    diff_max_card: int = 2
    det3_max_card: int = 2
    block_lift: bool = False
    scan_sizes: tuple[int, ...] = (3, 5)


SCALES: dict[str, _Scale] = {
    "quick": _Scale(),
    "full": _Scale(
        sets_per_card=8,
        oracle_matrices=10_000,
        dilations=50,
        nested_pairs=60,
        incidence_configs=100,
        diff_max_card=3,
        det3_max_card=3,
        block_lift=True,
        scan_sizes=(3, 5, 8, 12),
    ),
}


@dataclass
class _Battery:
    """Deterministic random sets shared by the checks."""

    scale: _Scale
    sets: list[FpSet] = field(default_factory=list)

    def __post_init__(self) -> None:
        for p in self.scale.primes:
            ctx = make_field(p)
            for card in range(1, self.scale.max_card + 1):
                for i in range(self.scale.sets_per_card):
                    seed = derive_seed(VERIFY_SEED, p, card, i)
                    self.sets.append(random_set(ctx, card, seed))

    def up_to(self, max_card: int) -> Iterator[FpSet]:
        return (A for A in self.sets if A.card <= max_card)


def random_set(ctx: FieldCtx, size: int, seed: int) -> FpSet:
    return gen_set(ctx, SetFamilySpec(kind="random", size=size, seed=seed))


def _describe(A: FpSet) -> dict[str, object]:
    return {"p": A.ctx.p, "A": list(A.elements)}


def _check_values(scale: _Scale) -> list[InvariantResult]:
    det_t = _Tracker("det_value_oracle")
    per_t = _Tracker("per_value_oracle")
    for p in scale.oracle_primes:
        ctx = make_field(p)
        rng = Xorshift64Star(derive_seed(VERIFY_SEED, _MATRICES, p))
        for i in range(scale.oracle_matrices):
            d = 2 + i % 3
            m = MatrixView(d, tuple(rng.below(p) for _ in range(d * d)), ctx)
            rows = m.rows
            det_t.check(det_value(m) == permutation_det(rows, p), p=p, rows=rows)
            per_t.check(per_value(m) == permutation_per(rows, p), p=p, rows=rows)
    return [det_t.result(), per_t.result()]


def _check_setexpr(battery: _Battery) -> list[InvariantResult]:
    tracker = _Tracker("setexpr_oracle")
    asts = [(src, parse_expr(src)) for src in ORACLE_EXPRESSIONS]
    sets = battery.sets
    for A, B in zip(sets, sets[1:] + sets[:1], strict=True):
        if A.ctx.p != B.ctx.p:
            continue
        env = {"A": A, "B": B}
        naive_env = {"A": frozenset(A.elements), "B": frozenset(B.elements)}
        for src, ast in asts:
            got = eval_expr(ast, env, A.ctx)
            want = naive_eval(ast, naive_env, A.ctx.p)
            tracker.check(
                frozenset(got.elements) == want, expr=src, B=list(B.elements), **_describe(A)
            )
    return [tracker.result()]


def _check_spectra(battery: _Battery, scale: _Scale) -> list[InvariantResult]:
    oracle_t = _Tracker("spectrum_counts_oracle")
    conservation_t = _Tracker("count_conservation")
    transpose_t = _Tracker("transpose_symmetry")
    identity_t = _Tracker("product_set_identity")
    for A in battery.sets:
        p = A.ctx.p
        dims = (2, 3) if A.card <= scale.det3_max_card else (2,)
        for d in dims:
            for kind, spectrum in (("det", det_spectrum), ("per", per_spectrum)):
                result = spectrum(A, d, want_counts=True, workers=1)
                counts = result.counts or {}
                want = brute_force_counts(A.elements, d, p, kind)
                oracle_t.check(counts == dict(want), kind=kind, d=d, **_describe(A))
                conservation_t.check(
                    sum(counts.values()) == A.card ** (d * d), kind=kind, d=d, **_describe(A)
                )
                if d == 2:
                    flipped = brute_force_counts(A.elements, d, p, kind, transpose=True)
                    transpose_t.check(flipped == want, kind=kind, **_describe(A))
                    formula = "A*A - A*A" if kind == "det" else "A*A + A*A"
                    from_sets = eval_expr(parse_expr(formula), {"A": A}, A.ctx)
                    identity_t.check(result.values == from_sets, kind=kind, **_describe(A))
    return [oracle_t.result(), conservation_t.result(), transpose_t.result(), identity_t.result()]


def _check_differences(battery: _Battery, scale: _Scale) -> list[InvariantResult]:
    identity_t = _Tracker("difference_spectrum_oracle")
    translated_t = _Tracker("translated_difference_containment")
    for A in battery.up_to(scale.diff_max_card):
        p = A.ctx.p
        f2 = diff_det_spectrum_f2(A)
        g2 = diff_per_spectrum_g2(A)
        want_f2 = brute_force_diff_values(A.elements, p, "det")
        want_g2 = brute_force_diff_values(A.elements, p, "per")
        identity_t.check(frozenset(f2.elements) == want_f2, kind="det", **_describe(A))
        identity_t.check(frozenset(g2.elements) == want_g2, kind="per", **_describe(A))
        a = A.elements[0]
        translated_t.check(
            translated_difference(A, a, "det").subset.issubset(f2), kind="det", **_describe(A)
        )
        translated_t.check(
            translated_difference(A, a, "per").subset.issubset(g2), kind="per", **_describe(A)
        )
    return [identity_t.result(), translated_t.result()]


def _check_dilation(scale: _Scale) -> list[InvariantResult]:
    tracker = _Tracker("dilation_equivariance")
    for i in range(scale.dilations):
        p = scale.primes[i % len(scale.primes)]
        ctx = make_field(p)
        rng = Xorshift64Star(derive_seed(VERIFY_SEED, _DILATION, i))
        A = random_set(ctx, 1 + rng.below(scale.max_card), rng.next_u64())
        lam = 1 + rng.below(p - 1)
        d = 2 + i % 2
        mu = ctx.fpow(lam, d)
        for kind, spectrum in (("det", det_spectrum), ("per", per_spectrum)):
            base = spectrum(A, d, want_counts=True, workers=1)
            scaled = spectrum(set_dilate(A, lam), d, want_counts=True, workers=1)
            moved = {ctx.fmul(mu, t): c for t, c in (base.counts or {}).items()}
            ok = scaled.values == set_dilate(base.values, mu) and scaled.counts == moved
            tracker.check(ok, kind=kind, lam=lam, d=d, **_describe(A))
    return [tracker.result()]


def _certificate_family(A: FpSet) -> dict[str, FpSet]:
    X2 = det_spectrum(A, 2, workers=1).values
    return {
        "lastrow_lift": lastrow_lift(A, X2, 3).subset,
        "block_lift": block_lift(A, X2, 4).subset,
        "per_rank_structured": per_rank_structured(A, 3).subset,
        "chain_certificate": chain_certificate(A, 5).subset,
        "chain_certificate_per": chain_certificate(A, 2, "per").subset,
    }


def _check_monotonicity(scale: _Scale) -> list[InvariantResult]:
    tracker = _Tracker("certificate_monotonicity")
    for i in range(scale.nested_pairs):
        p = scale.primes[i % len(scale.primes)]
        ctx = make_field(p)
        rng = Xorshift64Star(derive_seed(VERIFY_SEED, _NESTED, i))
        big = random_set(ctx, 2 + rng.below(scale.max_card), rng.next_u64())
        small = FpSet.from_residues(ctx, big.elements[: 1 + rng.below(big.card - 1)])
        small_certs, big_certs = _certificate_family(small), _certificate_family(big)
        for name, subset in small_certs.items():
            tracker.check(
                subset.issubset(big_certs[name]),
                certificate=name,
                small=list(small.elements),
                **_describe(big),
            )
    return [tracker.result()]


def _check_certificates(battery: _Battery, scale: _Scale) -> list[InvariantResult]:
    lastrow_t = _Tracker("lastrow_lift_containment")
    per_t = _Tracker("per_rank_containment")
    reeval_t = _Tracker("certificate_reevaluation")
    for A in battery.sets:
        X2 = det_spectrum(A, 2, workers=1).values
        X3 = det_spectrum(A, 3, workers=1).values
        cert = lastrow_lift(A, X2, 3)
        lastrow_t.check(cert.subset.issubset(X3), **_describe(A))
        chained = chain_certificate(A, 3)
        lastrow_t.check(chained.subset.issubset(X3), chain=True, **_describe(A))

        per3 = per_spectrum(A, 3, workers=1).values
        per_cert = per_rank_structured(A, 3)
        per_t.check(per_cert.subset.issubset(per3), **_describe(A))

        extra = (chain_certificate(A, 4), chain_certificate(A, 2, "per"))
        for c in (cert, chained, per_cert, *extra):
            reeval_t.check(reevaluate(c, A) == c.subset, formula=c.formula, **_describe(A))

    results = [lastrow_t.result(), per_t.result(), reeval_t.result()]
    if scale.block_lift:
        block_t = _Tracker("block_lift_containment")
        for p in (7, 11, 13):
            ctx = make_field(p)
            for i in range(scale.sets_per_card):
                A = random_set(ctx, 2, derive_seed(VERIFY_SEED, _BLOCK, p, i))
                X2 = det_spectrum(A, 2, workers=1).values
                X4 = det_spectrum(A, 4, workers=1).values
                block_t.check(block_lift(A, X2, 4).subset.issubset(X4), **_describe(A))
        results.append(block_t.result())
    return results


def _check_incidences(scale: _Scale) -> list[InvariantResult]:
    oracle_t = _Tracker("incidence_oracle")
    dual_t = _Tracker("incidence_duality")
    lower_t = _Tracker("incidence_lower_bound")
    cap_t = _Tracker("incidence_ratio_cap")
    cap = get_settings().incidence_ratio_cap
    for i in range(scale.incidence_configs):
        p = scale.primes[i % len(scale.primes)]
        ctx = make_field(p)
        rng = Xorshift64Star(derive_seed(VERIFY_SEED, _INCIDENCE, i))

        def draw(rng: Xorshift64Star = rng, ctx: FieldCtx = ctx) -> FpSet:
            return random_set(ctx, 1 + rng.below(min(ctx.p, 12)), rng.next_u64())

        xs, ys, slopes, offsets = draw(), draw(), draw(), draw()
        grid = GridPoints(xs, ys)
        lines = LineFamily.from_sets(slopes, offsets)
        case = {
            "p": p,
            "xs": list(xs.elements),
            "ys": list(ys.elements),
            "slopes": list(lines.slopes.elements),
            "offsets": list(offsets.elements),
        }
        fast = count_incidences(grid, lines, workers=1)
        naive = naive_incidences(
            xs.elements, ys.elements, lines.slopes.elements, offsets.elements, p
        )
        oracle_t.check(fast == naive, fast=fast, naive=naive, **case)
        dual_t.check(count_incidences_dual(grid, lines, workers=1) == fast, **case)

        small = 1 + rng.below(min(5, p))
        A, B, C = (random_set(ctx, small, rng.next_u64()) for _ in range(3))
        lemma_grid, lemma_lines = lemma8_configuration(A, B, C)
        report = check_incidence_bound(lemma_grid, lemma_lines, workers=1)
        lower = A.card * B.card * lemma_lines.slopes.card
        lower_t.check(report.incidences >= lower, incidences=report.incidences, lower=lower, **case)
        cap_t.check(report.ratio <= cap, ratio=report.ratio, cap=cap, **_describe(A))
    return [oracle_t.result(), dual_t.result(), lower_t.result(), cap_t.result()]


def _check_determinism(scale: _Scale, workers: int) -> list[InvariantResult]:
    tracker = _Tracker("scan_determinism")
    for preset in ("thm1i", "thm2i"):
        outputs = []
        for w in (1, max(2, workers)):
            cfg = make_config(
                preset=preset,
                p=101,
                family={"kind": "random", "size": 1},
                sizes=list(scale.scan_sizes),
                trials=2,
                seed=VERIFY_SEED,
                workers=w,
            )
            outputs.append(records_to_csv(run_scan(cfg)))
        tracker.check(outputs[0] == outputs[1], preset=preset)
    return [tracker.result()]


def run_verify(level: VerifyLevel = "quick", workers: int | None = None) -> VerificationReport:
    """Run the invariant battery.

    Args:
        level: "quick" or "full"
        workers: Worker count compared against a serial run in the determinism check;
            at the quick level that check only runs when workers > 1

    Returns:
        Pass/fail per invariant, with a serialized counterexample for each failure
    """
    scale = SCALES[level]
    workers = get_settings().workers if workers is None else workers
    battery = _Battery(scale)
    checks: list[Callable[[], list[InvariantResult]]] = [
        lambda: _check_values(scale),
        lambda: _check_setexpr(battery),
        lambda: _check_spectra(battery, scale),
        lambda: _check_differences(battery, scale),
        lambda: _check_dilation(scale),
        lambda: _check_certificates(battery, scale),
        lambda: _check_monotonicity(scale),
        lambda: _check_incidences(scale),
    ]
    # the serial-vs-pool scan comparison spawns processes
    if level == "full" or workers > 1:
        checks.append(lambda: _check_determinism(scale, workers))
    results: list[InvariantResult] = []
    for check in checks:
        results.extend(check())
    report = VerificationReport(level, tuple(results))
    logger.info(
        f"verify {level}: {len(results) - len(report.failures)}/{len(results)} invariants passed"
    )
    return report

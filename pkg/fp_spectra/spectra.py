"""Determinant and permanent spectra of matrices with entries in a subset of F_p.

The spectra are enumerated row-wise. Both Det and Per are linear in the last row,
so once the first d-1 rows are fixed the attained values are

    c_1*A + c_2*A + ... + c_d*A

where c_j are the last-row cofactors (signed minors for Det, minor permanents for
Per). Only the |A|^(d(d-1)) prefixes are visited; the last row is handled as one
iterated sumset of dilates. Cofactor vectors are tallied first and each distinct
vector is expanded once.
"""

import itertools
import math
import time
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from loguru import logger

from fp_spectra.config import get_settings
from fp_spectra.errors import DimensionOutOfRangeError, EmptySetError
from fp_spectra.field import FieldCtx
from fp_spectra.fset import FpSet, diffset, set_dilate, sumset
from fp_spectra.parallel import partition_range, run_tasks
from fp_spectra.rng import Xorshift64Star, derive_seed
from fp_spectra.setexpr import evaluate

MIN_DIM = 2
MAX_DIM = 8
SAMPLE_CHUNK = 1024
UINT64_MAX = 2**64 - 1

SpectrumKind = Literal["det", "per"]


def det_mod(rows: Sequence[Sequence[int]], p: int) -> int:
    """Determinant mod p by Gaussian elimination with row pivoting, O(n^3).

    Works for any n >= 0 (the empty matrix has determinant 1).
    """
    m = [[x % p for x in row] for row in rows]
    n = len(m)
    det = 1
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col]), None)
        if pivot is None:
            return 0
        if pivot != col:
            m[col], m[pivot] = m[pivot], m[col]
            det = -det
        pivot_row = m[col]
        pv = pivot_row[col]
        det = det * pv % p
        inv = pow(pv, -1, p)
        for r in range(col + 1, n):
            row = m[r]
            f = row[col] * inv % p
            if f:
                for c in range(col, n):
                    row[c] = (row[c] - f * pivot_row[c]) % p
    return det % p


def per_ryser(rows: Sequence[Sequence[int]], p: int) -> int:
    """Permanent mod p by Ryser's formula with Gray-code column updates, O(2^n * n).

    per(M) = sum over non-empty column sets S of (-1)^(n-|S|) prod_i sum_{j in S} m_ij.
    """
    n = len(rows)
    if n == 0:
        return 1
    row_sums = [0] * n
    total = 0
    prev = 0
    for k in range(1, 1 << n):
        gray = k ^ (k >> 1)
        flipped = gray ^ prev
        j = flipped.bit_length() - 1
        if gray & flipped:
            for i in range(n):
                row_sums[i] += rows[i][j]
        else:
            for i in range(n):
                row_sums[i] -= rows[i][j]
        prev = gray

        prod = 1
        for s in row_sums:
            prod = prod * s % p
            if not prod:
                break
        if prod:
            total += prod if (n - gray.bit_count()) % 2 == 0 else -prod
    return total % p


@dataclass(frozen=True)
class MatrixView:
    """A d x d matrix over F_p, stored row-major.

    Attributes:
        d: Dimension, 2 <= d <= 8
        entries: d*d residues in [0, p)
        ctx: Field of the entries
    """

    d: int
    entries: tuple[int, ...]
    ctx: FieldCtx

    def __post_init__(self) -> None:
        check_dimension(self.d)
        if len(self.entries) != self.d * self.d:
            msg = f"A {self.d}x{self.d} matrix needs {self.d * self.d} entries, got {len(self.entries)}"
            raise ValueError(msg)
        if any(not 0 <= x < self.ctx.p for x in self.entries):
            msg = f"Matrix entries must be residues in [0, {self.ctx.p})"
            raise ValueError(msg)

    @classmethod
    def from_rows(cls, ctx: FieldCtx, rows: Sequence[Sequence[int]]) -> "MatrixView":
        return cls(len(rows), tuple(x % ctx.p for row in rows for x in row), ctx)

    @property
    def rows(self) -> list[list[int]]:
        d = self.d
        return [list(self.entries[i * d : (i + 1) * d]) for i in range(d)]


def check_dimension(d: int) -> None:
    if not MIN_DIM <= d <= MAX_DIM:
        msg = f"Dimension {d} is outside the supported range [{MIN_DIM}, {MAX_DIM}]"
        logger.error(msg)
        raise DimensionOutOfRangeError(msg)


def det_value(m: MatrixView) -> int:
    """Determinant of m mod p.

    Example:
        >>> det_value(MatrixView.from_rows(make_field(7), [[1, 2], [3, 4]]))
        5
    """
    return det_mod(m.rows, m.ctx.p)


def per_value(m: MatrixView) -> int:
    """Permanent of m mod p (Ryser).

    Example:
        >>> per_value(MatrixView.from_rows(make_field(11), [[1, 2], [3, 4]]))
        10
    """
    return per_ryser(m.rows, m.ctx.p)


@dataclass
class SpectrumResult:
    """Attained determinant or permanent values plus enumeration statistics.

    Attributes:
        kind: "det" or "per"
        d: Matrix dimension
        values: Attained values (X_d for determinants)
        counts: Value -> number of matrices (D_d(A, t) or P_d(A, t)) when requested
        exact: True when every matrix was enumerated
        matrices_enumerated: Matrices accounted for (prefixes times |A|^d)
        elapsed: Wall time in seconds
        saturated: True if some count exceeded 2**64 - 1 and was clamped
    """

    kind: SpectrumKind
    d: int
    values: FpSet
    counts: dict[int, int] | None
    exact: bool
    matrices_enumerated: int
    elapsed: float
    saturated: bool = False
    cardinality: int = field(init=False)

    def __post_init__(self) -> None:
        self.cardinality = self.values.card

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "p": self.values.ctx.p,
            "d": self.d,
            "cardinality": self.cardinality,
            "values": list(self.values.elements),
            "counts": None
            if self.counts is None
            else {str(t): c for t, c in sorted(self.counts.items())},
            "exact": self.exact,
            "matrices_enumerated": self.matrices_enumerated,
            "saturated": self.saturated,
            "elapsed_s": round(self.elapsed, 6),
        }


def _last_row_cofactors(
    prefix: Sequence[Sequence[int]], p: int, kind: SpectrumKind
) -> tuple[int, ...]:
    """Coefficients c_j with value(M) = sum_j c_j * x_j for last row x."""
    d = len(prefix[0])
    coefficients = []
    for j in range(d):
        minor = [list(row[:j]) + list(row[j + 1 :]) for row in prefix]
        if kind == "det":
            sign = -1 if (d - 1 + j) % 2 else 1
            coefficients.append(sign * det_mod(minor, p) % p)
        else:
            coefficients.append(per_ryser(minor, p))
    return tuple(coefficients)


def _tally(counter: Counter, entries: Sequence[int], d: int, p: int, kind: SpectrumKind) -> None:
    prefix = [entries[i * d : (i + 1) * d] for i in range(d - 1)]
    # the last-row expansion is symmetric in the cofactors, so order them
    counter[tuple(sorted(_last_row_cofactors(prefix, p, kind)))] += 1


def _tally_exact(
    elements: tuple[int, ...], p: int, d: int, kind: SpectrumKind, start: int, stop: int
) -> Counter:
    counter: Counter = Counter()
    prefixes = itertools.product(elements, repeat=d * (d - 1))
    for entries in itertools.islice(prefixes, start, stop):
        _tally(counter, entries, d, p, kind)
    return counter


def _tally_sampled(
    elements: tuple[int, ...],
    p: int,
    d: int,
    kind: SpectrumKind,
    seed: int,
    chunk_start: int,
    chunk_stop: int,
    samples: int,
) -> Counter:
    counter: Counter = Counter()
    n = len(elements)
    width = d * (d - 1)
    for chunk in range(chunk_start, chunk_stop):
        rng = Xorshift64Star(derive_seed(seed, chunk))
        first = chunk * SAMPLE_CHUNK
        for _ in range(first, min(first + SAMPLE_CHUNK, samples)):
            entries = [elements[rng.below(n)] for _ in range(width)]
            _tally(counter, entries, d, p, kind)
    return counter


def _count_vector(coefficients: tuple[int, ...], a_arr: np.ndarray, p: int, dtype) -> np.ndarray:
    """Distribution of sum_j c_j * x_j over x in A^d, as a length-p count vector."""
    n = len(a_arr)
    acc = np.zeros(p, dtype=dtype)
    acc[0] = 1
    for c in coefficients:
        if c == 0:
            acc = acc * n
            continue
        shifted = np.zeros(p, dtype=dtype)
        for s in (a_arr * c) % p:
            shifted += np.roll(acc, int(s))
        acc = shifted
    return acc


def _spectrum(
    kind: SpectrumKind,
    A: FpSet,
    d: int,
    want_counts: bool,
    budget: int | None,
    seed: int | None,
    workers: int | None,
) -> SpectrumResult:
    check_dimension(d)
    if A.card == 0:
        msg = f"{kind} spectrum of the empty set is undefined"
        logger.error(msg)
        raise EmptySetError(msg)

    settings = get_settings()
    budget = settings.budget if budget is None else budget
    seed = settings.seed if seed is None else seed
    workers = settings.workers if workers is None else workers

    started = time.perf_counter()
    ctx = A.ctx
    p = ctx.p
    elements = A.elements
    n = A.card
    last_row_matrices = n**d
    total = n ** (d * d)
    exact = total <= budget

    if exact:
        prefixes = n ** (d * (d - 1))
        logger.debug(f"Exact {kind} spectrum: d={d}, |A|={n}, {prefixes} prefixes")
        tasks = [
            (elements, p, d, kind, lo, hi) for lo, hi in partition_range(prefixes, workers)
        ]
        partials = run_tasks(_tally_exact, tasks, workers)
    else:
        prefixes = max(1, min(budget // last_row_matrices, settings.sample_prefix_cap))
        logger.warning(
            f"{kind} spectrum over budget ({total} > {budget} matrices); "
            f"sampling {prefixes} prefixes with seed {seed}"
        )
        chunks = math.ceil(prefixes / SAMPLE_CHUNK)
        tasks = [
            (elements, p, d, kind, seed, lo, hi, prefixes)
            for lo, hi in partition_range(chunks, workers)
        ]
        partials = run_tasks(_tally_sampled, tasks, workers)

    tally: Counter = Counter()
    for partial in partials:
        tally.update(partial)
    logger.debug(f"{len(tally)} distinct cofactor vectors")

    dilates: dict[int, FpSet] = {}

    def dilate(c: int) -> FpSet:
        if c not in dilates:
            dilates[c] = set_dilate(A, c)
        return dilates[c]

    values_bits = 0
    for key in tally:
        contribution = dilate(key[0])
        for c in key[1:]:
            contribution = sumset(contribution, dilate(c))
        values_bits |= contribution.bits
    values = FpSet(ctx, values_bits)

    matrices = prefixes * last_row_matrices
    counts = None
    saturated = False
    if want_counts:
        dtype = np.uint64 if matrices <= UINT64_MAX else object
        a_arr = A.to_array()
        total_counts = np.zeros(p, dtype=dtype)
        for key, multiplicity in tally.items():
            total_counts += _count_vector(key, a_arr, p, dtype) * multiplicity
        counts = {}
        for t in np.flatnonzero(total_counts):
            c = int(total_counts[t])
            if c > UINT64_MAX:
                c = UINT64_MAX
                saturated = True
            counts[int(t)] = c
        if saturated:
            logger.warning("Count vector saturated at 2**64 - 1")

    result = SpectrumResult(
        kind=kind,
        d=d,
        values=values,
        counts=counts,
        exact=exact,
        matrices_enumerated=matrices,
        elapsed=time.perf_counter() - started,
        saturated=saturated,
    )
    logger.info(
        f"{kind} spectrum d={d} |A|={n} over F_{p}: {result.cardinality} values "
        f"({'exact' if exact else 'lower bound'}, {matrices} matrices)"
    )
    return result


def det_spectrum(
    A: FpSet,
    d: int,
    want_counts: bool = False,
    budget: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> SpectrumResult:
    """Distinct determinants of d x d matrices with entries in A.

    Args:
        A: Entry set, non-empty
        d: Dimension, 2 <= d <= 8
        want_counts: Also return D_d(A, t) for every t
        budget: Matrix budget (defaults to settings); above it, prefixes are sampled
            and the result is a certified lower bound with exact=False
        seed: Root seed for sampling mode (defaults to settings)
        workers: Worker processes (defaults to settings)

    Returns:
        SpectrumResult with kind "det"

    Raises:
        DimensionOutOfRangeError: If d is outside [2, 8]
        EmptySetError: If A is empty

    Example:
        >>> A = FpSet.from_residues(make_field(5), [0, 1])
        >>> det_spectrum(A, 2).values.elements
        (0, 1, 4)
    """
    return _spectrum("det", A, d, want_counts, budget, seed, workers)


def per_spectrum(
    A: FpSet,
    d: int,
    want_counts: bool = False,
    budget: int | None = None,
    seed: int | None = None,
    workers: int | None = None,
) -> SpectrumResult:
    """Distinct permanents of d x d matrices with entries in A.

    Same contract as :func:`det_spectrum`; the permanent is linear in the last row
    as well, with minor permanents as coefficients.
    """
    return _spectrum("per", A, d, want_counts, budget, seed, workers)


def _diff_spectrum(kind: SpectrumKind, A: FpSet, budget: int | None) -> FpSet:
    if A.card == 0:
        msg = "Difference spectrum of the empty set is undefined"
        logger.error(msg)
        raise EmptySetError(msg)
    budget = get_settings().budget if budget is None else budget
    # entries of X - Y range independently over A - A
    D = diffset(A, A)
    if D.card**4 <= budget:
        return _spectrum(kind, D, 2, False, budget, None, 1).values
    identity = "D*D - D*D" if kind == "det" else "D*D + D*D"
    return evaluate(identity, {"D": D})


def diff_det_spectrum_f2(A: FpSet, budget: int | None = None) -> FpSet:
    """F_2(A) = {Det(X - Y) : X, Y in M_2(A)}."""
    return _diff_spectrum("det", A, budget)


def diff_per_spectrum_g2(A: FpSet, budget: int | None = None) -> FpSet:
    """G_2(A) = {Per(X - Y) : X, Y in M_2(A)}."""
    return _diff_spectrum("per", A, budget)


@dataclass(frozen=True)
class DistributionReport:
    """How evenly the counted matrices spread over the values t.

    Attributes:
        expected: |A|^(d^2) / p, the equidistributed count
        zero_count: Count at t = 0, reported apart from the others
        nonzero_min: Smallest count over t != 0 (0 if some t is missed)
        nonzero_max: Largest count over t != 0
        max_count: Largest count over all t
        max_relative_deviation: max over t != 0 of |count - expected| / expected
    """

    expected: float
    zero_count: int
    nonzero_min: int
    nonzero_max: int
    max_count: int
    max_relative_deviation: float


def distribution_report(result: SpectrumResult) -> DistributionReport:
    """Summarize D_d(A, t) (or P_d(A, t)) against the equidistributed count.

    Raises:
        ValueError: If the result carries no counts
    """
    if result.counts is None:
        msg = "distribution_report needs a spectrum computed with want_counts=True"
        raise ValueError(msg)
    p = result.values.ctx.p
    expected = result.matrices_enumerated / p
    nonzero = [result.counts.get(t, 0) for t in range(1, p)]
    return DistributionReport(
        expected=expected,
        zero_count=result.counts.get(0, 0),
        nonzero_min=min(nonzero),
        nonzero_max=max(nonzero),
        max_count=max(result.counts.values()),
        max_relative_deviation=max(abs(c - expected) for c in nonzero) / expected,
    )

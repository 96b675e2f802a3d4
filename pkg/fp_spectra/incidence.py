"""Point-line incidences between Cartesian grids and affine line families in F_p^2.

Lines are kept as (c, b) parameter pairs for y = c(x - b) and never rasterized;
membership of c(x - b) in the y-coordinates is a lookup in a length-p boolean mask.
"""

from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from fp_spectra.config import get_settings
from fp_spectra.errors import CtxMismatchError, EmptySetError
from fp_spectra.fset import FpSet, productset, set_difference, sumset
from fp_spectra.parallel import partition_range, run_tasks

# offsets processed per vectorized block, bounds the (offsets x xs) scratch array
_BLOCK_CELLS = 1 << 20


@dataclass(frozen=True)
class GridPoints:
    """The grid xs x ys.

    Raises:
        EmptySetError: If either coordinate set is empty
        CtxMismatchError: If the coordinate sets live in different fields
    """

    xs: FpSet
    ys: FpSet

    def __post_init__(self) -> None:
        if self.xs.ctx.p != self.ys.ctx.p:
            msg = f"Grid coordinates live in F_{self.xs.ctx.p} and F_{self.ys.ctx.p}"
            raise CtxMismatchError(msg)
        if self.xs.card == 0 or self.ys.card == 0:
            msg = "Grid coordinate sets must be non-empty"
            raise EmptySetError(msg)

    @property
    def size(self) -> int:
        return self.xs.card * self.ys.card


@dataclass(frozen=True)
class LineFamily:
    """Lines y = c(x - b) for every slope c and offset b.

    Attributes:
        slopes: The set C
        offsets: The set B
        excluded_zero_slope: True when slope 0 was dropped by :meth:`from_sets`
    """

    slopes: FpSet
    offsets: FpSet
    excluded_zero_slope: bool = field(default=False)

    def __post_init__(self) -> None:
        self.slopes.ctx.require_same(self.offsets.ctx)

    @classmethod
    def from_sets(cls, slopes: FpSet, offsets: FpSet) -> "LineFamily":
        """Build the family without slope 0, as the incidence bound is stated for."""
        dropped = 0 in slopes
        if dropped:
            logger.debug("Dropping slope 0 from the line family")
            slopes = set_difference(slopes, FpSet.singleton(slopes.ctx, 0))
        return cls(slopes, offsets, excluded_zero_slope=dropped)

    @property
    def size(self) -> int:
        """Number of lines; distinct pairs give distinct lines when 0 is not a slope."""
        return self.slopes.card * self.offsets.card


def _check_ctx(g: GridPoints, lines: LineFamily) -> None:
    if g.xs.ctx.p != lines.slopes.ctx.p:
        msg = f"Grid lives in F_{g.xs.ctx.p} but lines live in F_{lines.slopes.ctx.p}"
        logger.error(msg)
        raise CtxMismatchError(msg)


def _count_block(
    xs: np.ndarray, ys_mask: np.ndarray, slopes: np.ndarray, offsets: np.ndarray, p: int
) -> int:
    """Incidences of the lines slopes x offsets with the grid xs x ys_mask."""
    block = max(1, _BLOCK_CELLS // max(1, len(xs)))
    total = 0
    for c in slopes:
        for lo in range(0, len(offsets), block):
            b = offsets[lo : lo + block]
            ys = (int(c) * (xs[None, :] - b[:, None])) % p
            total += int(np.count_nonzero(ys_mask[ys]))
    return total


def _count(
    xs: FpSet, ys: FpSet, slopes: FpSet, offsets: FpSet, workers: int | None
) -> int:
    workers = get_settings().workers if workers is None else workers
    p = xs.ctx.p
    x_arr = xs.to_array()
    mask = ys.to_mask()
    slope_arr = slopes.to_array()
    offset_arr = offsets.to_array()
    tasks = [
        (x_arr, mask, slope_arr[lo:hi], offset_arr, p)
        for lo, hi in partition_range(len(slope_arr), workers)
    ]
    return sum(run_tasks(_count_block, tasks, workers))


def count_incidences(g: GridPoints, lines: LineFamily, workers: int | None = None) -> int:
    """Exact number of (point, line) pairs with the point on the line.

    Args:
        g: Grid of points
        lines: Line family
        workers: Worker processes; slopes are partitioned across them

    Raises:
        CtxMismatchError: If grid and lines live in different fields

    Example:
        >>> F = make_field(7)
        >>> S = FpSet.from_residues(F, [0, 1, 2])
        >>> lines = LineFamily(FpSet.from_residues(F, [1, 2]), FpSet.singleton(F, 0))
        >>> count_incidences(GridPoints(S, S), lines)
        5
    """
    _check_ctx(g, lines)
    return _count(g.xs, g.ys, lines.slopes, lines.offsets, workers)


def count_incidences_dual(g: GridPoints, lines: LineFamily, workers: int | None = None) -> int:
    """Count on the transposed grid ys x xs against the lines x = c^-1 y + b.

    The point (x, y) lies on y = c(x - b) exactly when (y, x) lies on
    x = c^-1 y + b, so this equals :func:`count_incidences`.

    Raises:
        CtxMismatchError: If grid and lines live in different fields
        FieldDivisionByZeroError: If 0 is one of the slopes
    """
    _check_ctx(g, lines)
    workers = get_settings().workers if workers is None else workers
    ctx = g.xs.ctx
    p = ctx.p
    y_arr = g.ys.to_array()
    x_mask = g.xs.to_mask()
    total = 0
    for c in lines.slopes:
        inv = ctx.finv(c)
        for b in lines.offsets:
            total += int(np.count_nonzero(x_mask[(inv * y_arr + b) % p]))
    return total


@dataclass(frozen=True)
class IncidenceReport:
    """Measured incidences against the grid incidence bound.

    The bound reads I << |P1|^(3/4) |P2|^(1/2) |L|^(3/4) + |L| for |P1| <= |P2|,
    under |P1| |P2|^2 <= |L|^3 and |P1| |L| << p^2. The implied constant is never
    asserted; ratio is reported for empirical tracking.
    """

    incidences: int
    p1: int
    p2: int
    lines: int
    swapped: bool
    rhs: float
    ratio: float
    grid_hypothesis_ok: bool
    field_hypothesis_ok: bool
    field_ratio: float
    excluded_zero_slope: bool

    @property
    def hypothesis_failed(self) -> bool:
        return not (self.grid_hypothesis_ok and self.field_hypothesis_ok)


def check_incidence_bound(
    g: GridPoints, lines: LineFamily, workers: int | None = None
) -> IncidenceReport:
    """Count incidences and evaluate the grid incidence bound and its hypotheses.

    Never raises on violated hypotheses; they are reported as flags.
    """
    incidences = count_incidences(g, lines, workers)
    p1, p2 = g.xs.card, g.ys.card
    swapped = p1 > p2
    if swapped:
        p1, p2 = p2, p1
    n_lines = lines.size
    p = g.xs.ctx.p
    rhs = p1**0.75 * p2**0.5 * n_lines**0.75 + n_lines
    report = IncidenceReport(
        incidences=incidences,
        p1=p1,
        p2=p2,
        lines=n_lines,
        swapped=swapped,
        rhs=rhs,
        ratio=incidences / rhs if rhs else 0.0,
        grid_hypothesis_ok=p1 * p2 * p2 <= n_lines**3,
        field_hypothesis_ok=p1 * n_lines <= p * p,
        field_ratio=p1 * n_lines / (p * p),
        excluded_zero_slope=lines.excluded_zero_slope,
    )
    if report.hypothesis_failed:
        logger.warning(
            f"Incidence bound hypotheses fail (grid ok={report.grid_hypothesis_ok}, "
            f"field ok={report.field_hypothesis_ok}); reporting I={incidences} anyway"
        )
    return report


def lemma8_configuration(A: FpSet, B: FpSet, C: FpSet) -> tuple[GridPoints, LineFamily]:
    """Grid (A+B) x (AC) and the lines y = c(x - b) for c in C without 0, b in B.

    Every such line passes through the |A| grid points (a + b, ac).
    """
    grid = GridPoints(sumset(A, B), productset(A, C))
    return grid, LineFamily.from_sets(C, B)


@dataclass(frozen=True)
class BridgeReport:
    """|A+B| |AC| against |A|^(8/5) |B|^(2/5) |C|^(2/5), with the incidence cross-check."""

    sum_card: int
    product_card: int
    measured: int
    bound: float
    ratio: float
    hypothesis_violated: bool
    incidences: int
    incidence_lower: int
    incidence: IncidenceReport

    @property
    def incidence_lower_ok(self) -> bool:
        return self.incidences >= self.incidence_lower


def check_sum_product_bridge(
    A: FpSet, B: FpSet, C: FpSet, workers: int | None = None
) -> BridgeReport:
    """Measure |A+B| |AC| and re-derive I >= |A| |B| |C without 0| on the lemma configuration.

    The hypotheses |B|, |C| >= |A| and |A|^2 <= p are flagged, not enforced.

    Example:
        >>> F = make_field(11)
        >>> S = FpSet.from_residues(F, [1, 2])
        >>> check_sum_product_bridge(S, S, S).measured
        9
    """
    A.ctx.require_same(B.ctx)
    A.ctx.require_same(C.ctx)
    grid, lines = lemma8_configuration(A, B, C)
    measured = grid.xs.card * grid.ys.card
    bound = A.card**1.6 * B.card**0.4 * C.card**0.4
    violated = B.card < A.card or C.card < A.card or A.card * A.card > A.ctx.p
    if violated:
        logger.warning(
            f"Sum-product bridge hypotheses violated for |A|={A.card}, |B|={B.card}, "
            f"|C|={C.card}, p={A.ctx.p}"
        )
    incidence = check_incidence_bound(grid, lines, workers)
    return BridgeReport(
        sum_card=grid.xs.card,
        product_card=grid.ys.card,
        measured=measured,
        bound=bound,
        ratio=measured / bound,
        hypothesis_violated=violated,
        incidences=incidence.incidences,
        incidence_lower=A.card * B.card * lines.slopes.card,
        incidence=incidence,
    )

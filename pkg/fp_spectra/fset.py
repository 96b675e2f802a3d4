"""Subsets of F_p stored as bit vectors, plus the set generators used in experiments.

A set is a Python integer whose bit i is set iff residue i is a member. Shifts and
ORs on that integer are word-parallel, which is what the sumset kernel relies on;
scatter-style operations (dilation, product sets) go through numpy index arrays.
"""

import operator
import re
from collections.abc import Iterable, Iterator
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fp_spectra.errors import (
    BadRatioError,
    ConfigInvalidError,
    SetLiteralError,
    SizeTooLargeError,
)
from fp_spectra.field import FieldCtx
from fp_spectra.rng import Xorshift64Star


@dataclass(frozen=True)
class FpSet:
    """An immutable subset of F_p.

    Attributes:
        ctx: Field the set lives in
        bits: Occupancy bit vector (bit i set iff i is a member)
        card: Cached population count
    """

    ctx: FieldCtx
    bits: int
    card: int = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits >> self.ctx.p:
            msg = f"bit vector has members outside [0, {self.ctx.p})"
            raise ValueError(msg)
        object.__setattr__(self, "card", self.bits.bit_count())

    @classmethod
    def empty(cls, ctx: FieldCtx) -> "FpSet":
        return cls(ctx, 0)

    @classmethod
    def full(cls, ctx: FieldCtx) -> "FpSet":
        return cls(ctx, (1 << ctx.p) - 1)

    @classmethod
    def singleton(cls, ctx: FieldCtx, a: int) -> "FpSet":
        return cls(ctx, 1 << (a % ctx.p))

    @classmethod
    def from_residues(cls, ctx: FieldCtx, residues: Iterable[int]) -> "FpSet":
        """Build a set from arbitrary integers, reducing each mod p."""
        values = np.fromiter((r % ctx.p for r in residues), dtype=np.int64)
        mask = np.zeros(ctx.p, dtype=bool)
        mask[values] = True
        return cls.from_mask(ctx, mask)

    @classmethod
    def from_mask(cls, ctx: FieldCtx, mask: np.ndarray) -> "FpSet":
        """Build a set from a boolean array of length p."""
        packed = np.packbits(mask.astype(bool), bitorder="little")
        return cls(ctx, int.from_bytes(packed.tobytes(), "little"))

    def to_mask(self) -> np.ndarray:
        """Return a boolean membership array of length p."""
        nbytes = (self.ctx.p + 7) // 8
        raw = np.frombuffer(self.bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        return np.unpackbits(raw, bitorder="little")[: self.ctx.p].astype(bool)

    def to_array(self) -> np.ndarray:
        """Return the members as an ascending int64 array."""
        return np.flatnonzero(self.to_mask()).astype(np.int64)

    @cached_property
    def elements(self) -> tuple[int, ...]:
        """Members in ascending order."""
        return tuple(int(x) for x in self.to_array())

    def __contains__(self, a: object) -> bool:
        try:
            i = operator.index(a)
        except TypeError:
            return False
        return 0 <= i < self.ctx.p and bool((self.bits >> i) & 1)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements)

    def __len__(self) -> int:
        return self.card

    def __repr__(self) -> str:
        return f"FpSet(p={self.ctx.p}, {{{set_to_literal(self)}}})"

    def issubset(self, other: "FpSet") -> bool:
        self.ctx.require_same(other.ctx)
        return self.bits & ~other.bits == 0


def set_to_literal(s: FpSet) -> str:
    """Render a set as its canonical literal, e.g. ``0,1,4``."""
    return ",".join(str(a) for a in s.elements)


def set_union(s: FpSet, t: FpSet) -> FpSet:
    s.ctx.require_same(t.ctx)
    return FpSet(s.ctx, s.bits | t.bits)


def set_intersect(s: FpSet, t: FpSet) -> FpSet:
    s.ctx.require_same(t.ctx)
    return FpSet(s.ctx, s.bits & t.bits)


def set_difference(s: FpSet, t: FpSet) -> FpSet:
    s.ctx.require_same(t.ctx)
    return FpSet(s.ctx, s.bits & ~t.bits)


def set_contains(s: FpSet, a: int) -> bool:
    return a in s


def set_iter(s: FpSet) -> Iterator[int]:
    return iter(s)


def set_dilate(s: FpSet, lam: int) -> FpSet:
    """Return {lam * a : a in s}.

    Example:
        >>> ctx = make_field(7)
        >>> set_dilate(FpSet.from_residues(ctx, [1, 2]), 0).elements
        (0,)
    """
    p = s.ctx.p
    lam %= p
    if s.card == 0:
        return s
    if lam == 0:
        return FpSet.singleton(s.ctx, 0)
    if lam == 1:
        return s
    mask = np.zeros(p, dtype=bool)
    mask[(s.to_array() * lam) % p] = True
    return FpSet.from_mask(s.ctx, mask)


def set_negate(s: FpSet) -> FpSet:
    """Return {-a : a in s}."""
    return set_dilate(s, s.ctx.p - 1)


def _rotate(bits: int, shift: int, p: int, full: int) -> int:
    if shift == 0:
        return bits
    return ((bits << shift) & full) | (bits >> (p - shift))


def sumset(s: FpSet, t: FpSet) -> FpSet:
    """Return s + t.

    For each member of the smaller operand, a rotated copy of the larger operand is
    OR-ed into the accumulator, so the cost is O(min(|s|, |t|) * p / 64) word operations.
    """
    s.ctx.require_same(t.ctx)
    small, big = (s, t) if s.card <= t.card else (t, s)
    p = s.ctx.p
    full = (1 << p) - 1
    acc = 0
    for a in small.elements:
        acc |= _rotate(big.bits, a, p, full)
        if acc == full:
            break
    return FpSet(s.ctx, acc)


def diffset(s: FpSet, t: FpSet) -> FpSet:
    """Return s - t."""
    return sumset(s, set_negate(t))


def productset(s: FpSet, t: FpSet) -> FpSet:
    """Return s * t = {a * b}.

    Multiplication has no word-parallel shortcut: for each non-zero member of the
    smaller operand the larger operand is scattered through numpy; zero is one bit.
    """
    s.ctx.require_same(t.ctx)
    p = s.ctx.p
    if s.card == 0 or t.card == 0:
        return FpSet.empty(s.ctx)
    small, big = (s, t) if s.card <= t.card else (t, s)
    big_idx = big.to_array()
    mask = np.zeros(p, dtype=bool)
    for a in small.elements:
        if a == 0:
            mask[0] = True
        else:
            mask[(big_idx * a) % p] = True
    return FpSet.from_mask(s.ctx, mask)


class SetFamilySpec(BaseModel):
    """Description of a generated subset of F_p.

    Attributes:
        kind: random, interval, geometric or explicit
        size: Target cardinality (ignored for explicit sets)
        start: First element for interval and geometric kinds
        ratio: Common ratio for the geometric kind
        seed: Seed for the random kind
        elements: Residues for the explicit kind
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["random", "interval", "geometric", "explicit"]
    size: int | None = Field(default=None, ge=1)
    start: int = 0
    ratio: int = 2
    seed: int = Field(default=0, ge=0)
    elements: tuple[int, ...] = ()

    @model_validator(mode="after")
    def check_kind_fields(self) -> "SetFamilySpec":
        if self.kind == "explicit":
            if not self.elements:
                msg = "explicit sets need at least one element"
                raise ValueError(msg)
            if len(set(self.elements)) != len(self.elements):
                msg = f"duplicate elements in explicit set {list(self.elements)}"
                raise ValueError(msg)
        elif self.size is None:
            msg = f"{self.kind} sets need a size"
            raise ValueError(msg)
        return self

    def with_size(self, size: int, seed: int | None = None) -> "SetFamilySpec":
        """Copy of this template with a new size (and optionally seed)."""
        update: dict[str, int] = {"size": size}
        if seed is not None:
            update["seed"] = seed
        return self.model_copy(update=update)


def gen_set(ctx: FieldCtx, spec: SetFamilySpec) -> FpSet:
    """Generate the set described by spec.

    Args:
        ctx: Target field
        spec: Family description

    Returns:
        The generated set. Interval and random sets have exactly spec.size members;
        geometric sets may collide and have fewer.

    Raises:
        SizeTooLargeError: If spec.size > p
        BadRatioError: If the geometric ratio is 0 mod p
        SetLiteralError: If an explicit element is outside [0, p)

    Example:
        >>> gen_set(make_field(7), SetFamilySpec(kind="geometric", start=1, ratio=2, size=3)).elements
        (1, 2, 4)
    """
    p = ctx.p

    if spec.kind == "explicit":
        bad = [a for a in spec.elements if not 0 <= a < p]
        if bad:
            msg = f"explicit elements {bad} are not residues mod {p}"
            logger.error(msg)
            raise SetLiteralError(msg)
        return FpSet.from_residues(ctx, spec.elements)

    size = spec.size or 0
    if size > p:
        msg = f"Requested size {size} exceeds field size {p}"
        logger.error(msg)
        raise SizeTooLargeError(msg)

    if spec.kind == "interval":
        return FpSet.from_residues(ctx, (spec.start + i for i in range(size)))

    if spec.kind == "geometric":
        ratio = spec.ratio % p
        if ratio == 0:
            msg = f"Geometric ratio {spec.ratio} is 0 mod {p}"
            logger.error(msg)
            raise BadRatioError(msg)
        values = []
        x = spec.start % p
        for _ in range(size):
            values.append(x)
            x = x * ratio % p
        result = FpSet.from_residues(ctx, values)
        if result.card < size:
            logger.warning(
                f"Geometric progression collided: requested {size}, realized {result.card}"
            )
        return result

    # random: partial Fisher-Yates over range(p) with a sparse swap table
    rng = Xorshift64Star(spec.seed)
    swapped: dict[int, int] = {}
    chosen = []
    for i in range(size):
        j = i + rng.below(p - i)
        vi = swapped.get(i, i)
        vj = swapped.get(j, j)
        swapped[j] = vi
        chosen.append(vj)
    return FpSet.from_residues(ctx, chosen)


_GENERATOR_PATTERN = re.compile(r"^(?P<kind>[a-z]+):(?P<params>.*)$")


def _parse_params(text: str, raw: str) -> dict[str, int]:
    params: dict[str, int] = {}
    for item in filter(None, text.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            msg = f"Expected key=value in set spec '{raw}', got '{item}'"
            raise SetLiteralError(msg)
        try:
            params[key] = int(value)
        except ValueError as e:
            msg = f"Parameter '{key}' in set spec '{raw}' is not an integer"
            raise SetLiteralError(msg) from e
    return params


def parse_set_spec(ctx: FieldCtx, text: str) -> FpSet:
    """Parse a CLI set specification.

    Accepts an explicit literal such as ``0,1,4`` (whitespace ignored, duplicates
    rejected) or generator syntax ``kind:param=value,...``:
    ``random:size=8,seed=3``, ``interval:start=1,size=5``,
    ``geometric:start=1,ratio=2,size=6`` and ``symmetric:h=3`` for the interval
    [-h, h], which is stored as the residues {p-h, ..., p-1, 0, 1, ..., h}.

    Raises:
        SetLiteralError: If the text cannot be parsed
    """
    compact = re.sub(r"\s+", "", text)
    if not compact:
        msg = "Empty set specification"
        logger.error(msg)
        raise SetLiteralError(msg)

    match = _GENERATOR_PATTERN.match(compact)
    if match is None:
        try:
            residues = [int(tok) for tok in compact.split(",")]
        except ValueError as e:
            msg = f"Invalid set literal '{text}': expected comma-separated residues"
            logger.error(msg)
            raise SetLiteralError(msg) from e
        if len(set(residues)) != len(residues):
            msg = f"Duplicate residues in set literal '{text}'"
            logger.error(msg)
            raise SetLiteralError(msg)
        spec_kwargs: dict = {"kind": "explicit", "elements": tuple(residues)}
    else:
        kind = match["kind"]
        params = _parse_params(match["params"], text)
        if kind == "symmetric":
            h = params.get("h", 0)
            spec_kwargs = {"kind": "interval", "start": -h, "size": 2 * h + 1}
        elif kind in ("random", "interval", "geometric"):
            spec_kwargs = {"kind": kind, **params}
        else:
            msg = f"Unknown set generator '{kind}' in '{text}'"
            logger.error(msg)
            raise SetLiteralError(msg)

    try:
        spec = SetFamilySpec(**spec_kwargs)
    except ValidationError as e:
        msg = f"Invalid set specification '{text}': {e.errors()[0]['msg']}"
        logger.error(msg)
        raise ConfigInvalidError(msg) from e
    return gen_set(ctx, spec)

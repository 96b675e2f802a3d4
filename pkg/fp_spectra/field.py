"""Prime-field arithmetic context.

Residues are least nonnegative representatives in [0, p). Python integers never
overflow, and p < 2**31 keeps every product below 2**62, so results match a
64-bit implementation bit for bit.
"""

from dataclasses import dataclass

from loguru import logger

from fp_spectra.errors import (
    CtxMismatchError,
    FieldDivisionByZeroError,
    ModulusOverflowError,
    NotPrimeError,
)

MAX_MODULUS = 2**31

# Deterministic for every n < 3.3 * 10**24, which covers all 64-bit inputs.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin primality test for 64-bit inputs.

    Args:
        n: Integer to test

    Returns:
        True if n is prime

    Example:
        >>> is_prime(10007)
        True
        >>> is_prime(9)
        False
    """
    if n < 2:
        return False
    for w in _MR_WITNESSES:
        if n % w == 0:
            return n == w

    r, s = 0, n - 1
    while s % 2 == 0:
        r += 1
        s //= 2

    for a in _MR_WITNESSES:
        x = pow(a, s, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = pow(x, 2, n)
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class FieldCtx:
    """The prime field F_p. Immutable; build it with :func:`make_field`.

    Attributes:
        p: Odd prime modulus, 3 <= p < 2**31
    """

    p: int

    def __post_init__(self) -> None:
        if self.p >= MAX_MODULUS:
            msg = f"Modulus {self.p} is too large (must be below 2**31)"
            raise ModulusOverflowError(msg)
        if self.p < 3 or self.p % 2 == 0 or not is_prime(self.p):
            msg = f"{self.p} is not an odd prime"
            raise NotPrimeError(msg)

    def reduce(self, a: int) -> int:
        """Map any integer to its residue in [0, p)."""
        return a % self.p

    def fadd(self, a: int, b: int) -> int:
        """Return a + b mod p."""
        s = a + b
        return s - self.p if s >= self.p else s

    def fsub(self, a: int, b: int) -> int:
        """Return a - b mod p."""
        s = a - b
        return s + self.p if s < 0 else s

    def fneg(self, a: int) -> int:
        """Return -a mod p."""
        return 0 if a == 0 else self.p - a

    def fmul(self, a: int, b: int) -> int:
        """Return a * b mod p."""
        return (a * b) % self.p

    def fpow(self, a: int, e: int) -> int:
        """Return a**e mod p for e >= 0."""
        return pow(a, e, self.p)

    def finv(self, a: int) -> int:
        """Return the multiplicative inverse of a.

        Raises:
            FieldDivisionByZeroError: If a is 0 mod p
        """
        if a % self.p == 0:
            msg = f"0 has no inverse in F_{self.p}"
            raise FieldDivisionByZeroError(msg)
        return pow(a, -1, self.p)

    def require_same(self, other: "FieldCtx") -> None:
        """Raise CtxMismatchError unless other is the same field."""
        if other.p != self.p:
            msg = f"Field mismatch: F_{self.p} vs F_{other.p}"
            raise CtxMismatchError(msg)


def make_field(p: int) -> FieldCtx:
    """Validate p and build a field context.

    Args:
        p: Candidate modulus

    Returns:
        FieldCtx for F_p

    Raises:
        NotPrimeError: If p is composite, even or below 3
        ModulusOverflowError: If p >= 2**31

    Example:
        >>> make_field(7).fmul(3, 5)
        1
    """
    try:
        ctx = FieldCtx(p)
    except (NotPrimeError, ModulusOverflowError) as e:
        logger.error(str(e))
        raise
    logger.debug(f"Created field context F_{p}")
    return ctx


def fadd(ctx: FieldCtx, a: int, b: int) -> int:
    """Return a + b in ctx."""
    return ctx.fadd(a, b)


def fsub(ctx: FieldCtx, a: int, b: int) -> int:
    """Return a - b in ctx."""
    return ctx.fsub(a, b)


def fneg(ctx: FieldCtx, a: int) -> int:
    """Return -a in ctx."""
    return ctx.fneg(a)


def fmul(ctx: FieldCtx, a: int, b: int) -> int:
    """Return a * b in ctx."""
    return ctx.fmul(a, b)


def fpow(ctx: FieldCtx, a: int, e: int) -> int:
    """Return a ** e in ctx."""
    return ctx.fpow(a, e)


def finv(ctx: FieldCtx, a: int) -> int:
    """Return the inverse of a in ctx; raises like FieldCtx.finv on a = 0."""
    return ctx.finv(a)

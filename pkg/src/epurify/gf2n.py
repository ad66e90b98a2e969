"""Arithmetic in GF(2^n) for 1 <= n <= 16.

Elements are n-bit integers; bit i holds the coefficient of Z^i. Each
degree uses a fixed modulus: the lexicographically smallest irreducible
polynomial of that degree, listed in ``IRREDUCIBLE``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_DEGREE = 16

# Smallest irreducible polynomial over GF(2) of each degree (bit i = coeff of Z^i).
IRREDUCIBLE: dict[int, int] = {
    1: 0x2,  # Z
    2: 0x7,  # Z^2 + Z + 1
    3: 0xB,  # Z^3 + Z + 1
    4: 0x13,  # Z^4 + Z + 1
    5: 0x25,  # Z^5 + Z^2 + 1
    6: 0x43,  # Z^6 + Z + 1
    7: 0x83,  # Z^7 + Z + 1
    8: 0x11B,  # Z^8 + Z^4 + Z^3 + Z + 1
    9: 0x203,
    10: 0x409,
    11: 0x805,
    12: 0x1009,
    13: 0x201B,
    14: 0x4021,
    15: 0x8003,
    16: 0x1002B,
}


class FieldError(ValueError):
    pass


class DegreeMismatchError(FieldError):
    pass


class ZeroInverseError(FieldError, ZeroDivisionError):
    pass


def check_degree(n: int) -> None:
    if not 1 <= n <= MAX_DEGREE:
        raise FieldError(f"field degree must be in [1, {MAX_DEGREE}], got {n}")


@dataclass(frozen=True, order=True)
class FieldElement:
    value: int
    n: int

    def __post_init__(self):
        check_degree(self.n)
        if not 0 <= self.value < (1 << self.n):
            raise FieldError(f"value {self.value} does not fit in GF(2^{self.n})")

    def __add__(self, other: FieldElement) -> FieldElement:
        return gf_add(self, other)

    __sub__ = __add__

    def __mul__(self, other: FieldElement) -> FieldElement:
        return gf_mul(self, other)

    def inverse(self) -> FieldElement:
        return gf_inv(self)

    def __int__(self) -> int:
        return self.value


def _same_degree(a: FieldElement, b: FieldElement) -> int:
    if a.n != b.n:
        raise DegreeMismatchError(f"GF(2^{a.n}) vs GF(2^{b.n})")
    return a.n


def mul_int(a: int, b: int, n: int) -> int:
    """Shift-and-XOR product of two n-bit field values, reduced mod IRREDUCIBLE[n]."""
    try:
        modulus = IRREDUCIBLE[n]
    except KeyError:
        raise FieldError(f"field degree must be in [1, {MAX_DEGREE}], got {n}") from None
    top = 1 << n
    result = 0
    while b:
        if b & 1:
            result ^= a
        b >>= 1
        a <<= 1
        if a & top:
            a ^= modulus
    return result


def inv_int(a: int, n: int) -> int:
    if a == 0:
        raise ZeroInverseError("zero has no multiplicative inverse")
    # a^(2^n - 2) by square-and-multiply
    result, base, e = 1, a, (1 << n) - 2
    while e:
        if e & 1:
            result = mul_int(result, base, n)
        base = mul_int(base, base, n)
        e >>= 1
    return result


def gf_add(a: FieldElement, b: FieldElement) -> FieldElement:
    n = _same_degree(a, b)
    return FieldElement(a.value ^ b.value, n)


def gf_mul(a: FieldElement, b: FieldElement) -> FieldElement:
    n = _same_degree(a, b)
    return FieldElement(mul_int(a.value, b.value, n), n)


def gf_inv(a: FieldElement) -> FieldElement:
    return FieldElement(inv_int(a.value, a.n), a.n)


@lru_cache(maxsize=None)
def mul_table(n: int) -> np.ndarray:
    """Full 2^n x 2^n multiplication table (n <= 8), read-only."""
    check_degree(n)
    if n > 8:
        raise FieldError("multiplication tables are only built for n <= 8")
    size = 1 << n
    table = np.array(
        [[mul_int(a, b, n) for b in range(size)] for a in range(size)], dtype=np.int64
    )
    table.setflags(write=False)
    return table

"""Exact rational scalars and the c-bit fixed-point codec.

Rationals are :class:`fractions.Fraction`. The codec maps reals in [0, 1]
onto the grid ``{j / 2**c : 0 <= j < 2**c}`` and back, with bit vectors
stored least-significant bit first (bit ``j`` carries weight ``2**j / 2**c``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence


class DomainError(ValueError):
    """An argument lies outside the domain of an exact operation."""


def to_fraction(value) -> Fraction:
    """Coerce ints, Fractions, decimal strings and ``"p/q"`` strings exactly.

    Floats are accepted and converted exactly (their binary value), which is
    what the Monte-Carlo samplers want when they feed dyadic points.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise DomainError(f"non-finite value {value!r}")
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def fractions(values: Iterable) -> tuple[Fraction, ...]:
    return tuple(to_fraction(v) for v in values)


def format_fraction(q: Fraction) -> str:
    """Serialize as ``"p/q"``; integers are written ``"p/1"`` so parsing is uniform."""
    q = to_fraction(q)
    return f"{q.numerator}/{q.denominator}"


def parse_fraction(text: str) -> Fraction:
    return to_fraction(text)


def lcm_of_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = math.lcm(out, to_fraction(v).denominator)
    return out


def relu(z: Fraction) -> Fraction:
    return z if z > 0 else Fraction(0)


def sign(z: Fraction) -> int:
    """Threshold convention: 0 for z <= 0, 1 for z > 0."""
    return 1 if z > 0 else 0


def sqrt_bounds(q: Fraction, bits: int = 64) -> tuple[Fraction, Fraction]:
    """Rational ``lo <= sqrt(q) <= hi`` with ``hi - lo <= 2**-bits``.

    Exact when ``q`` is the square of a rational.
    """
    q = to_fraction(q)
    if q < 0:
        raise DomainError("square root of a negative rational")
    p, r = q.numerator, q.denominator
    sp, sr = math.isqrt(p), math.isqrt(r)
    if sp * sp == p and sr * sr == r:
        root = Fraction(sp, sr)
        return root, root
    scale = 1 << bits
    # sqrt(p/r) = sqrt(p*r)/r
    n = p * r * scale * scale
    s = math.isqrt(n)
    lo = Fraction(s, r * scale)
    hi = Fraction(s + 1, r * scale)
    return lo, hi


def exact_sqrt(q: Fraction) -> Fraction | None:
    lo, hi = sqrt_bounds(q, 1)
    return lo if lo == hi else None


@dataclass(frozen=True)
class FixedPointGrid:
    """The grid ``I = {j/2**c : 0 <= j <= 2**c - 1}``."""

    c: int

    def __post_init__(self):
        if not isinstance(self.c, int) or self.c < 1:
            raise DomainError(f"bit count must be a positive integer, got {self.c!r}")

    @property
    def size(self) -> int:
        return 1 << self.c

    @property
    def step(self) -> Fraction:
        return Fraction(1, self.size)

    def points(self) -> list[Fraction]:
        return [Fraction(j, self.size) for j in range(self.size)]

    def trunc(self, x) -> Fraction:
        return trunc(x, self)

    def bin(self, x) -> tuple[int, ...]:
        return to_bits(x, self)

    def real(self, bits: Sequence[int]) -> Fraction:
        return from_bits(bits, self)


def _grid(grid) -> FixedPointGrid:
    return grid if isinstance(grid, FixedPointGrid) else FixedPointGrid(int(grid))


def trunc(x, grid) -> Fraction:
    """Largest grid point not exceeding ``x``; ``x = 1`` clamps to ``(2**c-1)/2**c``."""
    g = _grid(grid)
    x = to_fraction(x)
    if x < 0 or x > 1:
        raise DomainError(f"trunc expects x in [0, 1], got {x}")
    j = min(math.floor(x * g.size), g.size - 1)
    return Fraction(j, g.size)


def to_bits(x, grid) -> tuple[int, ...]:
    """LSB-first binary representation of a grid point."""
    g = _grid(grid)
    x = to_fraction(x)
    j = x * g.size
    if j.denominator != 1 or not 0 <= j < g.size:
        raise DomainError(f"{x} is not a point of the {g.c}-bit grid")
    j = int(j)
    return tuple((j >> k) & 1 for k in range(g.c))


def from_bits(bits: Sequence[int], grid) -> Fraction:
    g = _grid(grid)
    if len(bits) != g.c:
        raise DomainError(f"expected {g.c} bits, got {len(bits)}")
    j = 0
    for k, b in enumerate(bits):
        if b not in (0, 1):
            raise DomainError(f"bit {k} is {b!r}, not 0/1")
        j |= int(b) << k
    return Fraction(j, g.size)


def encode_vector(xs: Sequence, grid) -> tuple[int, ...]:
    """``bin(trunc(x))`` per coordinate, concatenated (c bits per coordinate)."""
    out: list[int] = []
    for x in xs:
        out.extend(to_bits(trunc(x, grid), grid))
    return tuple(out)


def decode_vector(bits: Sequence[int], grid) -> tuple[Fraction, ...]:
    g = _grid(grid)
    if len(bits) % g.c:
        raise DomainError(f"bit count {len(bits)} is not a multiple of c={g.c}")
    return tuple(from_bits(bits[i:i + g.c], g) for i in range(0, len(bits), g.c))


def msb_bit(x, j: int) -> int:
    """The ``j``-th most significant binary digit of ``x`` in [0, 1] (j >= 1)."""
    return to_bits(trunc(x, j), j)[0]


def _sgn(q: Fraction) -> int:
    return (q > 0) - (q < 0)


def sign_sqrt_ext(a: Fraction, b: Fraction, m: Fraction) -> int:
    """Exact sign of ``a + b*sqrt(m)`` for rationals with ``m >= 0``."""
    sa, sb = _sgn(a), _sgn(b) if m else 0
    if sb == 0:
        return sa
    if sa == 0 or sa == sb:
        return sb
    t = a * a - b * b * m
    return sa if t > 0 else (sb if t < 0 else 0)


def _mul_ext(x: tuple[Fraction, Fraction], y: tuple[Fraction, Fraction], m: Fraction):
    return (x[0] * y[0] + x[1] * y[1] * m, x[0] * y[1] + x[1] * y[0])


def sign_biquadratic(c0, c1, c2, c3, m, n) -> int:
    """Exact sign of ``c0 + c1*sqrt(m) + c2*sqrt(n) + c3*sqrt(m)*sqrt(n)``.

    Written as ``P + Q*sqrt(n)`` with ``P, Q`` in Q(sqrt(m)); when P and Q have
    opposite signs the comparison reduces to the sign of ``P**2 - n*Q**2``.
    """
    m, n = to_fraction(m), to_fraction(n)
    if m < 0 or n < 0:
        raise DomainError("radicands must be non-negative")
    p = (to_fraction(c0), to_fraction(c1))
    q = (to_fraction(c2), to_fraction(c3))
    sp = sign_sqrt_ext(p[0], p[1], m)
    sq = sign_sqrt_ext(q[0], q[1], m) if n else 0
    if sq == 0:
        return sp
    if sp == 0 or sp == sq:
        return sq
    p2 = _mul_ext(p, p, m)
    q2 = _mul_ext(q, q, m)
    t = sign_sqrt_ext(p2[0] - n * q2[0], p2[1] - n * q2[1], m)
    return sp if t > 0 else (sq if t < 0 else 0)

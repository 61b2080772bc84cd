"""The metaplectic group Mp2(Z) with exact branch bookkeeping.

An element is a pair (g, phi) where phi(tau) = sign * sqrt(c tau + d), the
square root being the principal branch. Since c tau + d never crosses the
negative real axis on the upper half plane unless c = 0, this phi is
continuous, and ``sign`` identifies the lift.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np

Word = tuple[tuple[str, int], ...]

LETTERS = ("S", "T")


@dataclass(frozen=True)
class MetaplecticElement:
    a: int
    b: int
    c: int
    d: int
    sign: int = 1
    word: Word | None = None

    def __post_init__(self) -> None:
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"Matrix {self.matrix} does not have determinant 1")
        if self.sign not in (1, -1):
            raise ValueError(f"Branch sign must be +1 or -1, got {self.sign}")

    @property
    def matrix(self) -> tuple[tuple[int, int], tuple[int, int]]:
        return ((self.a, self.b), (self.c, self.d))

    @property
    def key(self) -> tuple[int, int, int, int, int]:
        """Identity of the group element, ignoring any cached word."""
        return (self.a, self.b, self.c, self.d, self.sign)

    def same_as(self, other: MetaplecticElement) -> bool:
        return self.key == other.key

    def act(self, tau: complex) -> complex:
        return (self.a * tau + self.b) / (self.c * tau + self.d)

    def phi(self, tau: complex) -> complex:
        return self.sign * cmath.sqrt(self.c * tau + self.d)

    def with_word(self, word: Word | None) -> MetaplecticElement:
        return MetaplecticElement(self.a, self.b, self.c, self.d, self.sign, word)

    def __mul__(self, other: MetaplecticElement) -> MetaplecticElement:
        return mp_mul(self, other)


IDENTITY = MetaplecticElement(1, 0, 0, 1, 1, ())
S = MetaplecticElement(0, -1, 1, 0, 1, (("S", 1),))
T = MetaplecticElement(1, 1, 0, 1, 1, (("T", 1),))
Z = MetaplecticElement(-1, 0, 0, -1, 1, (("S", 2),))


def _half_plane(c: int, d: int) -> str:
    """Where c w + d lies for w in the upper half plane: U, L, P(ositive) or N(egative)."""
    if c > 0:
        return "U"
    if c < 0:
        return "L"
    return "P" if d > 0 else "N"


def _cocycle(first: MetaplecticElement, second: MetaplecticElement, product_c: int) -> int:
    """sqrt(j(g, h i)) sqrt(j(h, i)) / sqrt(j(gh, i)) for principal square roots."""
    outer = _half_plane(first.c, first.d)
    inner = _half_plane(second.c, second.d)
    if "P" in (outer, inner):
        return 1
    match outer, inner:
        case ("U", "U"):
            return 1 if product_c >= 0 else -1
        case ("L", "L"):
            return 1 if product_c < 0 else -1
        case ("U", "L") | ("L", "U"):
            return 1
        case ("N", "L") | ("L", "N"):
            return 1
        case _:
            # N with U, or N with N: the arguments add up past pi
            return -1


def mp_mul(x: MetaplecticElement, y: MetaplecticElement) -> MetaplecticElement:
    """(g, phi)(h, psi) = (gh, (phi o h) psi)."""
    a = x.a * y.a + x.b * y.c
    b = x.a * y.b + x.b * y.d
    c = x.c * y.a + x.d * y.c
    d = x.c * y.b + x.d * y.d
    sign = x.sign * y.sign * _cocycle(x, y, c)
    word = None
    if x.word is not None and y.word is not None:
        word = _merge(x.word + y.word)
    return MetaplecticElement(a, b, c, d, sign, word)


def mp_inv(x: MetaplecticElement) -> MetaplecticElement:
    matrix_inverse = MetaplecticElement(x.d, -x.b, -x.c, x.a)
    sign = x.sign * _cocycle(x, matrix_inverse, 0)
    word = None
    if x.word is not None:
        word = _merge(tuple((letter, -power) for letter, power in reversed(x.word)))
    return MetaplecticElement(x.d, -x.b, -x.c, x.a, sign, word)


def generator_power(letter: str, power: int) -> MetaplecticElement:
    match letter:
        case "T":
            return MetaplecticElement(1, power, 0, 1, 1, (("T", power),) if power else ())
        case "S":
            result = IDENTITY
            for _ in range(power % 8):
                result = mp_mul(result, S)
            return result.with_word((("S", power % 8),) if power % 8 else ())
        case _:
            raise ValueError(f"Unknown generator {letter!r}; expected one of {LETTERS}")


def _merge(word: Iterable[tuple[str, int]]) -> Word:
    merged: list[tuple[str, int]] = []
    for letter, power in word:
        if merged and merged[-1][0] == letter:
            power += merged.pop()[1]
        if letter == "S":
            power %= 8
        if power:
            merged.append((letter, power))
    return tuple(merged)


def evaluate_word(word: Sequence[tuple[str, int]]) -> MetaplecticElement:
    result = IDENTITY
    for letter, power in word:
        result = mp_mul(result, generator_power(letter, power))
    return result.with_word(_merge(word))


def word_decompose(x: MetaplecticElement) -> Word:
    """Word in S and T whose product is x, branch included.

    Euclid on the first column: peel T^k S off the left until c = 0, then
    finish with T^b or Z T^-b. A trailing S^4 = (I, -1) fixes the branch.
    """
    a, b, c, d = x.a, x.b, x.c, x.d
    letters: list[tuple[str, int]] = []
    while c != 0:
        k = a // c
        letters.append(("T", k))
        a, b = a - k * c, b - k * d
        letters.append(("S", 1))
        a, b, c, d = c, d, -a, -b
    if a == 1:
        letters.append(("T", b))
    else:
        letters.extend([("S", 2), ("T", -b)])

    word = _merge(letters)
    if not evaluate_word(word).same_as(x):
        word = _merge((*word, ("S", 4)))
    return word


def random_element(
    rng: np.random.Generator, length: int = 8, spread: int = 4
) -> MetaplecticElement:
    """Product of random generator powers; carries its word."""
    word = []
    for _ in range(length):
        letter = LETTERS[int(rng.integers(0, 2))]
        power = int(rng.integers(-spread, spread + 1))
        word.append((letter, power))
    return evaluate_word(word)


def reduce_to_fundamental_domain(tau: complex, max_steps: int = 200) -> MetaplecticElement:
    """g in Mp2(Z) with |Re(g tau)| <= 1/2 and |g tau| >= 1, built from T powers and S."""
    if tau.imag <= 0:
        raise ValueError(f"tau must lie in the upper half plane, got {tau}")
    g = IDENTITY
    z = tau
    for _ in range(max_steps):
        shift = math.floor(z.real + 0.5)
        if shift:
            g = mp_mul(generator_power("T", -shift), g)
            z = g.act(tau)
        if abs(z) >= 1.0:
            return g
        # Im(-1/z) = Im(z) / |z|^2 grows, so the loop ends
        g = mp_mul(S, g)
        z = g.act(tau)
    raise ValueError(f"{tau} did not reach the fundamental domain in {max_steps} steps")

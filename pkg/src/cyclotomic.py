"""Exact arithmetic in cyclotomic fields Q(zeta_M).

Elements are stored over the power basis 1, zeta_M, ..., zeta_M^(phi(M)-1),
reduced modulo the M-th cyclotomic polynomial, so equality of two elements of
the same field is equality of coefficient vectors.
"""

from __future__ import annotations

import cmath
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from sympy import QQ, Poly, Rational, cyclotomic_poly, factorint, legendre_symbol, symbols

_X = symbols("x")

Scalar = int | Fraction


class CycloDivisionError(ZeroDivisionError):
    pass


@lru_cache(maxsize=256)
def cyclotomic_coefficients(modulus: int) -> tuple[int, ...]:
    """Coefficients of the modulus-th cyclotomic polynomial, constant term first."""
    if modulus < 1:
        raise ValueError(f"Cyclotomic modulus must be positive, got {modulus}")
    coeffs = Poly(cyclotomic_poly(modulus, _X), _X).all_coeffs()
    return tuple(int(c) for c in reversed(coeffs))


def field_degree(modulus: int) -> int:
    return len(cyclotomic_coefficients(modulus)) - 1


def reduce_exponents(modulus: int, values: Mapping[int, Scalar]) -> list[Scalar]:
    """Reduce sum values[j] * zeta_M^j to power-basis coordinates."""
    phi_coeffs = cyclotomic_coefficients(modulus)
    degree = len(phi_coeffs) - 1

    work = np.zeros(modulus, dtype=object)
    for exponent, value in values.items():
        if value:
            work[exponent % modulus] += value

    support = [(j, c) for j, c in enumerate(phi_coeffs[:-1]) if c]
    offsets = np.array([j for j, _ in support], dtype=np.int64)
    weights = np.array([c for _, c in support], dtype=object)

    # x^top = -sum_j c_j x^(top - degree + j), since the cyclotomic polynomial is monic
    for top in range(modulus - 1, degree - 1, -1):
        lead = work[top]
        if lead:
            work[top - degree + offsets] -= lead * weights
            work[top] = 0

    return list(work[:degree])


@lru_cache(maxsize=64)
def power_table(modulus: int) -> np.ndarray:
    """Integer matrix whose row j holds the power-basis coordinates of zeta_M^j."""
    phi_coeffs = cyclotomic_coefficients(modulus)
    degree = len(phi_coeffs) - 1
    lower = np.array(phi_coeffs[:-1], dtype=object)

    rows = np.zeros((modulus, degree), dtype=object)
    current = np.zeros(degree, dtype=object)
    current[0] = 1
    for j in range(modulus):
        rows[j] = current
        carry = current[-1]
        shifted = np.zeros(degree, dtype=object)
        shifted[1:] = current[:-1]
        if carry:
            shifted -= carry * lower
        current = shifted

    largest = max((abs(int(v)) for v in rows.ravel()), default=0)
    if largest < 2**31:
        return rows.astype(np.int64)
    return rows


def _to_fraction(value: Scalar | Rational) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    return Fraction(int(value.p), int(value.q))


@dataclass(frozen=True, eq=False)
class CycloNumber:
    modulus: int
    coeffs: tuple[Fraction, ...]

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def from_exponents(cls, modulus: int, values: Mapping[int, Scalar]) -> CycloNumber:
        reduced = reduce_exponents(modulus, values)
        return cls(modulus, tuple(_to_fraction(v) for v in reduced))

    @classmethod
    def from_coefficients(cls, modulus: int, coeffs: Iterable[Scalar]) -> CycloNumber:
        return cls.from_exponents(modulus, dict(enumerate(coeffs)))

    @classmethod
    def rational(cls, value: Scalar, modulus: int = 1) -> CycloNumber:
        return cls.from_exponents(modulus, {0: value})

    @property
    def degree(self) -> int:
        return len(self.coeffs)

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def lift(self, modulus: int) -> CycloNumber:
        """Rewrite in Q(zeta_modulus); modulus must be a multiple of self.modulus."""
        if modulus == self.modulus:
            return self
        if modulus % self.modulus:
            raise ValueError(f"Cannot lift Q(zeta_{self.modulus}) into Q(zeta_{modulus})")
        step = modulus // self.modulus
        return CycloNumber.from_exponents(
            modulus, {j * step: c for j, c in enumerate(self.coeffs) if c}
        )

    def _common(self, other: CycloNumber | Scalar) -> tuple[CycloNumber, CycloNumber]:
        if not isinstance(other, CycloNumber):
            other = CycloNumber.rational(other, self.modulus)
        modulus = math.lcm(self.modulus, other.modulus)
        return self.lift(modulus), other.lift(modulus)

    def __add__(self, other: CycloNumber | Scalar) -> CycloNumber:
        a, b = self._common(other)
        return CycloNumber(a.modulus, tuple(x + y for x, y in zip(a.coeffs, b.coeffs, strict=True)))

    __radd__ = __add__

    def __neg__(self) -> CycloNumber:
        return CycloNumber(self.modulus, tuple(-x for x in self.coeffs))

    def __sub__(self, other: CycloNumber | Scalar) -> CycloNumber:
        return self + (-other)

    def __rsub__(self, other: Scalar) -> CycloNumber:
        return (-self) + other

    def __mul__(self, other: CycloNumber | Scalar) -> CycloNumber:
        if not isinstance(other, CycloNumber):
            factor = _to_fraction(other)
            return CycloNumber(self.modulus, tuple(x * factor for x in self.coeffs))
        a, b = self._common(other)
        product: dict[int, Fraction] = {}
        for i, x in enumerate(a.coeffs):
            if not x:
                continue
            for j, y in enumerate(b.coeffs):
                if y:
                    product[i + j] = product.get(i + j, Fraction(0)) + x * y
        return CycloNumber.from_exponents(a.modulus, product)

    __rmul__ = __mul__

    def inverse(self) -> CycloNumber:
        if self.is_zero():
            raise CycloDivisionError(f"Division by zero in Q(zeta_{self.modulus})")
        if self.degree == 1:
            return CycloNumber(self.modulus, (1 / self.coeffs[0],))
        element = Poly(
            [Rational(c.numerator, c.denominator) for c in reversed(self.coeffs)], _X, domain=QQ
        )
        modulus_poly = Poly(list(reversed(cyclotomic_coefficients(self.modulus))), _X, domain=QQ)
        inverse = element.invert(modulus_poly)
        coeffs = [_to_fraction(c) for c in reversed(inverse.all_coeffs())]
        return CycloNumber.from_coefficients(self.modulus, coeffs)

    def __truediv__(self, other: CycloNumber | Scalar) -> CycloNumber:
        if not isinstance(other, CycloNumber):
            if not other:
                raise CycloDivisionError(f"Division by zero in Q(zeta_{self.modulus})")
            return self * (1 / _to_fraction(other))
        return self * other.inverse()

    def __rtruediv__(self, other: Scalar) -> CycloNumber:
        return self.inverse() * other

    def __pow__(self, exponent: int) -> CycloNumber:
        base = self if exponent >= 0 else self.inverse()
        result = CycloNumber.rational(1, self.modulus)
        for _ in range(abs(exponent)):
            result = result * base
        return result

    def conj(self) -> CycloNumber:
        """Complex conjugate: zeta_M -> zeta_M^(M-1)."""
        return CycloNumber.from_exponents(
            self.modulus, {(-j) % self.modulus: c for j, c in enumerate(self.coeffs) if c}
        )

    def __eq__(self, other: object) -> bool:
        if isinstance(other, int | Fraction):
            other = CycloNumber.rational(other)
        if not isinstance(other, CycloNumber):
            return NotImplemented
        a, b = self._common(other)
        return a.coeffs == b.coeffs

    def embed(self) -> complex:
        total = 0j
        for j, c in enumerate(self.coeffs):
            if c:
                total += float(c) * cmath.exp(2j * math.pi * j / self.modulus)
        return total

    def as_rational(self) -> Fraction | None:
        if any(self.coeffs[1:]):
            return None
        return self.coeffs[0]

    def to_json(self) -> dict[str, object]:
        return {"M": self.modulus, "coeffs": [str(c) for c in self.coeffs]}

    @classmethod
    def from_json(cls, payload: Mapping[str, object]) -> CycloNumber:
        modulus = int(payload["M"])  # type: ignore[arg-type]
        raw = payload["coeffs"]
        if not isinstance(raw, list):
            raise ValueError("CycloNumber JSON needs a 'coeffs' list")
        return cls.from_coefficients(modulus, [Fraction(str(c)) for c in raw])

    def __str__(self) -> str:
        terms = []
        for j, c in enumerate(self.coeffs):
            if not c:
                continue
            terms.append(str(c) if j == 0 else f"{c}*ζ{self.modulus}^{j}")
        return " + ".join(terms) if terms else "0"

    def __repr__(self) -> str:
        return f"CycloNumber({self})"


def root_of_unity(modulus: int, exponent: int) -> CycloNumber:
    """zeta_modulus ** exponent in canonical form."""
    if modulus < 1:
        raise ValueError(f"Root of unity needs a positive modulus, got {modulus}")
    return CycloNumber.from_exponents(modulus, {exponent % modulus: 1})


def sqrt_exponents(n: int) -> tuple[int, dict[int, int]]:
    """sqrt(n) for a positive integer n as an integer combination of roots of unity.

    Returns (modulus, {exponent: coefficient}). Odd primes use quadratic Gauss
    sums, sqrt(2) = zeta_8 + zeta_8^7.
    """
    if n < 1:
        raise ValueError(f"sqrt_exponents needs a positive integer, got {n}")

    square, squarefree = 1, 1
    for prime, power in factorint(n).items():
        square *= prime ** (power // 2)
        if power % 2:
            squarefree *= prime

    factors: list[tuple[int, dict[int, int]]] = []
    for prime in factorint(squarefree):
        if prime == 2:
            factors.append((8, {1: 1, 7: 1}))
            continue
        gauss = {a: int(legendre_symbol(a, prime)) for a in range(1, prime)}
        if prime % 4 == 1:
            factors.append((prime, gauss))
        else:
            # the Gauss sum is i*sqrt(p); multiply by zeta_4^3 = -i
            shifted = {4 * a + 3 * prime: c for a, c in gauss.items()}
            factors.append((4 * prime, shifted))

    modulus = math.lcm(1, *(m for m, _ in factors))
    product = {0: square}
    for factor_modulus, terms in factors:
        step = modulus // factor_modulus
        merged: dict[int, int] = {}
        for e1, c1 in product.items():
            for e2, c2 in terms.items():
                key = (e1 + e2 * step) % modulus
                merged[key] = merged.get(key, 0) + c1 * c2
        product = {e: c for e, c in merged.items() if c}
    return modulus, product

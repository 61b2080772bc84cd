"""Exact matrices of the Weil representation rho and its dual rho*.

A WeilMatrix stores its entries over the power basis of Q(zeta_M),
M = lcm(level, 8), as one integer tensor of shape (n, n, phi(M)) plus a
common positive denominator. The pair is kept reduced, so two matrices are
equal exactly when their tensors and denominators agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from src.cyclotomic import CycloNumber, power_table
from src.lattice import DiscriminantForm
from src.metaplectic import MetaplecticElement, word_decompose

_INT64_HEADROOM = 2**62


def working_modulus(df: DiscriminantForm) -> int:
    return math.lcm(df.level, 8)


def _max_abs(array: np.ndarray) -> int:
    if array.size == 0:
        return 0
    return int(max(abs(int(array.max())), abs(int(array.min()))))


def _as_object(array: np.ndarray) -> np.ndarray:
    return array if array.dtype == object else array.astype(object)


@dataclass(frozen=True, eq=False)
class WeilMatrix:
    modulus: int
    numer: np.ndarray
    den: int

    __hash__ = None  # type: ignore[assignment]

    @classmethod
    def build(cls, modulus: int, numer: np.ndarray, den: int) -> WeilMatrix:
        if den == 0:
            raise ZeroDivisionError("WeilMatrix denominator is zero")
        if den < 0:
            numer, den = -numer, -den
        content = math.gcd(den, *(int(v) for v in np.unique(numer)))
        if content > 1:
            numer = numer // content
            den //= content
        if numer.dtype == object and _max_abs(numer) < 2**31:
            numer = numer.astype(np.int64)
        return cls(modulus, numer, int(den))

    @classmethod
    def identity(cls, modulus: int, dim: int) -> WeilMatrix:
        degree = power_table(modulus).shape[1]
        numer = np.zeros((dim, dim, degree), dtype=np.int64)
        numer[np.arange(dim), np.arange(dim), 0] = 1
        return cls(modulus, numer, 1)

    @property
    def dim(self) -> int:
        return self.numer.shape[0]

    @property
    def degree(self) -> int:
        return self.numer.shape[2]

    def __matmul__(self, other: WeilMatrix) -> WeilMatrix:
        if self.modulus != other.modulus or self.dim != other.dim:
            raise ValueError("WeilMatrix product needs matching modulus and dimension")
        powers = power_table(self.modulus)
        degree = self.degree
        bound = _max_abs(self.numer) * _max_abs(other.numer) * self.dim * degree
        bound *= max(1, _max_abs(powers)) * 2 * degree
        left, right, table = self.numer, other.numer, powers[: 2 * degree - 1]
        if bound >= _INT64_HEADROOM or left.dtype == object or right.dtype == object:
            left, right, table = _as_object(left), _as_object(right), _as_object(table)

        spread = np.zeros((self.dim, self.dim, 2 * degree - 1), dtype=left.dtype)
        for a in range(degree):
            block = left[:, :, a]
            if not block.any():
                continue
            spread[:, :, a : a + degree] += np.tensordot(block, right, axes=([1], [0]))
        numer = spread @ table
        return WeilMatrix.build(self.modulus, numer, self.den * other.den)

    def conj(self) -> WeilMatrix:
        return WeilMatrix(self.modulus, self.numer @ _conjugation_map(self.modulus), self.den)

    def transpose(self) -> WeilMatrix:
        return WeilMatrix(self.modulus, self.numer.transpose(1, 0, 2).copy(), self.den)

    def conj_transpose(self) -> WeilMatrix:
        return self.conj().transpose()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WeilMatrix):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.den == other.den
            and self.numer.shape == other.numer.shape
            and bool(np.array_equal(self.numer, other.numer))
        )

    def is_identity(self) -> bool:
        return self == WeilMatrix.identity(self.modulus, self.dim)

    def is_unitary(self) -> bool:
        return (self @ self.conj_transpose()).is_identity()

    def entry(self, row: int, column: int) -> CycloNumber:
        coeffs = [Fraction(int(v), self.den) for v in self.numer[row, column]]
        return CycloNumber(self.modulus, tuple(coeffs))

    def to_complex(self) -> np.ndarray:
        roots = np.exp(2j * np.pi * np.arange(self.degree) / self.modulus)
        return (self.numer.astype(float) @ roots) / self.den

    def to_json(self) -> dict[str, object]:
        rows = [
            [self.entry(i, j).to_json() for j in range(self.dim)] for i in range(self.dim)
        ]
        floats = self.to_complex()
        return {
            "M": self.modulus,
            "dim": self.dim,
            "entries": rows,
            "float": [[[float(z.real), float(z.imag)] for z in row] for row in floats],
        }


@lru_cache(maxsize=16)
def _conjugation_map(modulus: int) -> np.ndarray:
    powers = power_table(modulus)
    degree = powers.shape[1]
    return powers[[(-j) % modulus for j in range(degree)]]


class WeilRepresentation:
    """Generator matrices of rho for one discriminant form, computed once."""

    def __init__(self, df: DiscriminantForm):
        self.df = df
        self.modulus = working_modulus(df)
        self.powers = power_table(self.modulus)
        self.step = self.modulus // df.level
        self._s_powers: dict[int, WeilMatrix] = {}

    def t_power(self, power: int) -> WeilMatrix:
        n = self.df.size
        exponents = (self.df.value_numerators * power * self.step) % self.modulus
        numer = np.zeros((n, n, self.powers.shape[1]), dtype=self.powers.dtype)
        numer[np.arange(n), np.arange(n)] = self.powers[exponents]
        return WeilMatrix(self.modulus, numer, 1)

    @cached_property
    def rho_T(self) -> WeilMatrix:
        return self.t_power(1)

    @cached_property
    def rho_S(self) -> WeilMatrix:
        # rho(S)[beta, alpha] = conj(g) e(-(beta, alpha)) / |L'/L|, using 1/g = conj(g)/|g|^2
        df = self.df
        conj_counts = np.bincount((-df.value_numerators) % df.level, minlength=df.level)
        by_pairing = np.zeros((df.level, self.powers.shape[1]), dtype=object)
        for b in range(df.level):
            for r, count in enumerate(conj_counts):
                if count:
                    by_pairing[b] += int(count) * _as_object(
                        self.powers[((r - b) % df.level) * self.step]
                    )
        numer = by_pairing[df.pairing_numerators()]
        return WeilMatrix.build(self.modulus, numer, df.size)

    def s_power(self, power: int) -> WeilMatrix:
        power %= 8
        if power not in self._s_powers:
            result = WeilMatrix.identity(self.modulus, self.df.size)
            for _ in range(power):
                result = result @ self.rho_S
            self._s_powers[power] = result
        return self._s_powers[power]

    def __call__(self, element: MetaplecticElement) -> WeilMatrix:
        word = element.word if element.word is not None else word_decompose(element)
        result = WeilMatrix.identity(self.modulus, self.df.size)
        for letter, power in word:
            factor = self.s_power(power) if letter == "S" else self.t_power(power)
            result = result @ factor
        return result


@lru_cache(maxsize=16)
def representation(df: DiscriminantForm) -> WeilRepresentation:
    return WeilRepresentation(df)


def rho_T(df: DiscriminantForm) -> WeilMatrix:
    return representation(df).rho_T


def rho_S(df: DiscriminantForm) -> WeilMatrix:
    return representation(df).rho_S


def rho(df: DiscriminantForm, element: MetaplecticElement) -> WeilMatrix:
    return representation(df)(element)


def rho_dual(df: DiscriminantForm, element: MetaplecticElement) -> WeilMatrix:
    return rho(df, element).conj()


def central_phase(df: DiscriminantForm) -> tuple[CycloNumber, bool]:
    """Scalar c with rho(S)^2 e_alpha = c e_(-alpha), and whether that shape holds."""
    square = representation(df).s_power(2)
    phase = square.entry(int(df.negation[0]), 0)
    expected = np.zeros_like(square.numer)
    columns = np.arange(df.size)
    expected[df.negation, columns] = square.numer[int(df.negation[0]), 0]
    return phase, bool(np.array_equal(expected, square.numer))

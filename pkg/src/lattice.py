"""Even lattices, their discriminant forms and Gauss sums."""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np
import pandas as pd
from sympy import ZZ, Matrix
from sympy.matrices.normalforms import smith_normal_decomp

from src.cyclotomic import CycloNumber, field_degree, sqrt_exponents

DfElement = tuple[int, ...]

# Beyond this field degree the Milgram identity is compared in the float embedding.
EXACT_MILGRAM_DEGREE = 20_000


class LatticeError(ValueError):
    pass


@dataclass(frozen=True)
class Lattice:
    gram: tuple[tuple[int, ...], ...]
    sig_pos: int
    sig_neg: int

    @property
    def rank(self) -> int:
        return len(self.gram)

    @property
    def signature(self) -> int:
        return self.sig_pos - self.sig_neg

    @property
    def is_orthogonal_type(self) -> bool:
        """Signature (2, l) with l >= 3, as needed by the Eisenstein pipeline."""
        return self.sig_pos == 2 and self.sig_neg >= 3

    @property
    def eisenstein_weight(self) -> Fraction:
        return 1 + Fraction(self.sig_neg, 2)

    def require_orthogonal_type(self) -> None:
        if not self.is_orthogonal_type:
            raise LatticeError(
                f"Signature ({self.sig_pos},{self.sig_neg}) is not of the form (2,l) with l >= 3"
            )

    def matrix(self) -> Matrix:
        return Matrix(self.gram)


def _sign_changes(coeffs: Sequence[int]) -> int:
    signs = [c > 0 for c in coeffs if c]
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def _inertia(gram: Matrix) -> tuple[int, int]:
    # The characteristic polynomial of a symmetric matrix is real-rooted, so
    # Descartes' rule of signs counts positive and negative eigenvalues exactly.
    coeffs = [int(c) for c in gram.charpoly().all_coeffs()]
    degree = len(coeffs) - 1
    mirrored = [c * (-1) ** (degree - j) for j, c in enumerate(coeffs)]
    return _sign_changes(coeffs), _sign_changes(mirrored)


def validate_lattice(gram: Sequence[Sequence[int]]) -> Lattice:
    rows = [list(row) for row in gram]
    size = len(rows)
    if size == 0 or any(len(row) != size for row in rows):
        raise LatticeError("Gram matrix must be square and non-empty")

    for i, row in enumerate(rows):
        for j, value in enumerate(row):
            if isinstance(value, bool) or not isinstance(value, int | np.integer):
                if isinstance(value, float) and value.is_integer():
                    rows[i][j] = int(value)
                    continue
                raise LatticeError(f"Gram entry ({i},{j}) = {value!r} is not an integer")
            rows[i][j] = int(value)

    for i in range(size):
        for j in range(i + 1, size):
            if rows[i][j] != rows[j][i]:
                raise LatticeError(
                    f"Gram matrix is not symmetric: entry ({i},{j}) = {rows[i][j]} "
                    f"but ({j},{i}) = {rows[j][i]}"
                )
        if rows[i][i] % 2:
            raise LatticeError(f"Lattice is not even: odd diagonal entry {rows[i][i]} at ({i},{i})")

    matrix = Matrix(rows)
    if matrix.det() == 0:
        raise LatticeError("Gram matrix is singular")

    sig_pos, sig_neg = _inertia(matrix)
    return Lattice(tuple(tuple(row) for row in rows), sig_pos, sig_neg)


def isometric_copy(lat: Lattice, basis_change: Sequence[Sequence[int]]) -> Lattice:
    """The same lattice written in another basis: P^T G P for unimodular P."""
    p = Matrix(basis_change)
    if p.shape != (lat.rank, lat.rank) or abs(p.det()) != 1:
        raise LatticeError("Basis change must be a unimodular matrix of the lattice rank")
    transformed = p.T * lat.matrix() * p
    return validate_lattice([[int(v) for v in row] for row in transformed.tolist()])


def load_gram(path: str | Path) -> Lattice:
    file_path = Path(path)
    suffix = file_path.suffix.lower()

    if suffix == ".json":
        payload = json.loads(file_path.read_text())
        if not isinstance(payload, dict) or "gram" not in payload:
            raise LatticeError(f"{file_path.name}: expected a JSON object with a 'gram' key")
        return validate_lattice(payload["gram"])

    if suffix == ".csv":
        frame = pd.read_csv(file_path, header=None, dtype=str, encoding="utf-8-sig")
    elif suffix in {".xlsx", ".xls"}:
        frame = pd.read_excel(file_path, header=None, dtype=str)
    else:
        raise LatticeError(f"Unsupported file extension for {file_path.name}")

    numeric = frame.apply(lambda column: pd.to_numeric(column.str.strip(), errors="coerce"))
    if numeric.isna().to_numpy().any():
        raise LatticeError(f"{file_path.name}: Gram cells must all be integers")
    return validate_lattice(numeric.astype("int64").to_numpy().tolist())


@dataclass(frozen=True)
class DiscriminantForm:
    orders: tuple[int, ...]
    generators: tuple[tuple[Fraction, ...], ...]
    q_gram: tuple[tuple[Fraction, ...], ...]
    level: int
    size: int
    # rows of the left Smith transform belonging to the non-trivial divisors
    transform: tuple[tuple[int, ...], ...]
    gram: tuple[tuple[int, ...], ...]
    signature: int = 0

    @property
    def is_trivial(self) -> bool:
        return not self.orders

    def normalize(self, coords: Sequence[int]) -> DfElement:
        if len(coords) != len(self.orders):
            raise LatticeError(
                f"Element {tuple(coords)} has {len(coords)} coordinates, "
                f"expected {len(self.orders)}"
            )
        return tuple(int(c) % d for c, d in zip(coords, self.orders, strict=True))

    def zero(self) -> DfElement:
        return (0,) * len(self.orders)

    def negate(self, coords: Sequence[int]) -> DfElement:
        return self.normalize([-c for c in coords])

    def add(self, a: Sequence[int], b: Sequence[int]) -> DfElement:
        return self.normalize([x + y for x, y in zip(a, b, strict=True)])

    @cached_property
    def q_numerators(self) -> tuple[int, ...]:
        """level * q(gen_i) for each generator."""
        return tuple(int(self.q_gram[i][i] * self.level) for i in range(len(self.orders)))

    @cached_property
    def bilinear_numerators(self) -> np.ndarray:
        rank = len(self.orders)
        table = np.zeros((rank, rank), dtype=np.int64)
        for i in range(rank):
            for j in range(rank):
                value = 2 * self.q_gram[i][i] if i == j else self.q_gram[i][j]
                table[i, j] = int((value % 1) * self.level)
        return table

    @cached_property
    def elements(self) -> np.ndarray:
        """All elements as rows of coordinates, first coordinate varying slowest."""
        if self.is_trivial:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices(self.orders, dtype=np.int64)
        return grids.reshape(len(self.orders), -1).T

    def index_of(self, coords: Sequence[int]) -> int:
        element = self.normalize(coords)
        if self.is_trivial:
            return 0
        return int(np.ravel_multi_index(element, self.orders))

    def element_at(self, index: int) -> DfElement:
        return tuple(int(c) for c in self.elements[index])

    @cached_property
    def negation(self) -> np.ndarray:
        """negation[i] is the index of -elements[i]."""
        if self.is_trivial:
            return np.zeros(1, dtype=np.int64)
        negated = (-self.elements) % np.array(self.orders, dtype=np.int64)
        return np.ravel_multi_index(negated.T, self.orders)

    @cached_property
    def value_numerators(self) -> np.ndarray:
        """level * q(alpha) mod level for every element, in element order."""
        x = self.elements
        if self.is_trivial:
            return np.zeros(1, dtype=np.int64)
        diagonal = (x * x) @ np.array(self.q_numerators, dtype=np.int64)
        upper = np.triu(self.bilinear_numerators, k=1)
        cross = np.einsum("ni,ij,nj->n", x, upper, x)
        return (diagonal + cross) % self.level

    def pairing_numerators(self) -> np.ndarray:
        """level * (alpha, beta) mod level for all pairs of elements."""
        x = self.elements
        if self.is_trivial:
            return np.zeros((1, 1), dtype=np.int64)
        return (x @ self.bilinear_numerators @ x.T) % self.level

    def to_json(self) -> dict[str, object]:
        return {
            "orders": list(self.orders),
            "q_gram": [[str(v) for v in row] for row in self.q_gram],
            "level": self.level,
            "size": self.size,
            "signature": self.signature,
        }

    def to_text(self) -> str:
        lines = [
            f"orders: {list(self.orders)}",
            f"size: {self.size}",
            f"level: {self.level}",
            f"signature mod 8: {self.signature % 8}",
        ]
        if self.orders:
            lines.append("q_gram:")
            width = max(len(str(v)) for row in self.q_gram for v in row)
            for row in self.q_gram:
                lines.append("  " + " ".join(str(v).rjust(width) for v in row))
        return "\n".join(lines)


def discriminant_form(lat: Lattice) -> DiscriminantForm:
    gram = lat.matrix()
    diagonal, left, right = smith_normal_decomp(gram, domain=ZZ)

    orders: list[int] = []
    generators: list[tuple[Fraction, ...]] = []
    transform: list[tuple[int, ...]] = []
    for i in range(lat.rank):
        entry = int(diagonal[i, i])
        if entry == 0:
            raise LatticeError("Gram matrix is singular")
        order = abs(entry)
        if order == 1:
            continue
        sign = 1 if entry > 0 else -1
        orders.append(order)
        generators.append(tuple(Fraction(sign * int(right[r, i]), order) for r in range(lat.rank)))
        transform.append(tuple(int(left[i, c]) for c in range(lat.rank)))

    def pair(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
        return sum(
            (u[r] * lat.gram[r][c] * v[c] for r in range(lat.rank) for c in range(lat.rank)),
            Fraction(0),
        )

    rank = len(orders)
    q_gram = [[Fraction(0)] * rank for _ in range(rank)]
    for i in range(rank):
        q_gram[i][i] = (pair(generators[i], generators[i]) / 2) % 1
        for j in range(i + 1, rank):
            q_gram[i][j] = q_gram[j][i] = pair(generators[i], generators[j]) % 1

    level = math.lcm(1, *(v.denominator for row in q_gram for v in row))
    size = math.prod(orders)
    if size != abs(int(gram.det())):
        raise LatticeError(f"Discriminant group order {size} does not match |det| of the Gram")

    return DiscriminantForm(
        orders=tuple(orders),
        generators=tuple(generators),
        q_gram=tuple(tuple(row) for row in q_gram),
        level=level,
        size=size,
        transform=tuple(transform),
        gram=lat.gram,
        signature=lat.signature,
    )


def qvalue(df: DiscriminantForm, a: Sequence[int]) -> Fraction:
    x = df.normalize(a)
    total = Fraction(0)
    for i, xi in enumerate(x):
        if not xi:
            continue
        total += xi * xi * df.q_gram[i][i]
        for j in range(i + 1, len(x)):
            total += xi * x[j] * df.q_gram[i][j]
    return total % 1


def bilinear(df: DiscriminantForm, a: Sequence[int], b: Sequence[int]) -> Fraction:
    x, y = df.normalize(a), df.normalize(b)
    total = Fraction(0)
    for i, xi in enumerate(x):
        for j, yj in enumerate(y):
            if xi and yj:
                value = 2 * df.q_gram[i][i] if i == j else df.q_gram[i][j]
                total += xi * yj * value
    return total % 1


def element_from_vector(df: DiscriminantForm, vector: Sequence[Fraction | int]) -> DfElement:
    """Class in L'/L of a dual-lattice vector given in lattice-basis coordinates."""
    v = [Fraction(c) for c in vector]
    if len(v) != len(df.gram):
        raise LatticeError(f"Vector has {len(v)} coordinates, lattice rank is {len(df.gram)}")
    image = [sum((row[c] * v[c] for c in range(len(v))), Fraction(0)) for row in df.gram]
    if any(value.denominator != 1 for value in image):
        raise LatticeError(f"Vector {tuple(str(c) for c in v)} is not in the dual lattice")
    coords = [sum(row[c] * int(image[c]) for c in range(len(image))) for row in df.transform]
    return df.normalize(coords)


def gauss_sum(df: DiscriminantForm) -> CycloNumber:
    """Sum of exp(2 pi i q(alpha)) over L'/L in Q(zeta_M), M = lcm(level, 8)."""
    modulus = math.lcm(df.level, 8)
    step = modulus // df.level
    counts = np.bincount(df.value_numerators, minlength=df.level)
    return CycloNumber.from_exponents(
        modulus, {r * step: int(count) for r, count in enumerate(counts) if count}
    )


def milgram_check(lat: Lattice) -> bool:
    df = discriminant_form(lat)
    g = gauss_sum(df)
    root_modulus, root_terms = sqrt_exponents(df.size)
    modulus = math.lcm(df.level, 8, root_modulus)
    step = modulus // root_modulus
    phase = (lat.signature % 8) * (modulus // 8)
    expected_terms = {e * step + phase: c for e, c in root_terms.items()}

    if field_degree(modulus) > EXACT_MILGRAM_DEGREE:
        target = math.sqrt(df.size) * np.exp(2j * np.pi * lat.signature / 8)
        return abs(g.embed() - target) <= 1e-12 * max(1.0, math.sqrt(df.size))

    return g.lift(modulus) == CycloNumber.from_exponents(modulus, expected_terms)

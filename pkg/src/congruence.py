"""Obstruction criterion, constant-term formula and the Eisenstein-cusp congruence.

Principal parts carry n < 0 with n in Z + q(alpha); cusp bases and E carry
the dual representation, n in Z - q(alpha). The pairing matches c(alpha, n)
of the first with c(alpha, -n) of the second.
"""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from src.intlinalg import NoSolutionError, integer_rank, solve_congruence
from src.tables import (
    BasisTable,
    FourierTable,
    Key,
    Number,
    PrincipalPart,
    TableError,
    format_alpha,
)


class IntegralityError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ObstructionResult:
    admissible: bool
    witness: int | None = None
    value: Number = Fraction(0)

    def to_json(self) -> dict[str, Any]:
        return {
            "admissible": self.admissible,
            "witness": self.witness,
            "pairing": str(self.value),
        }


@dataclass(frozen=True)
class CongruenceSolution:
    combo: tuple[int, ...]
    f: FourierTable
    d: int
    N: Fraction

    def to_json(self) -> dict[str, Any]:
        return {
            "combo": list(self.combo),
            "d": self.d,
            "N": str(self.N),
            "f": self.f.to_json(),
        }


@dataclass(frozen=True)
class StabilizationReport:
    depths: tuple[Fraction, ...]
    ranks: tuple[int, ...]
    forms: int

    @property
    def rank(self) -> int:
        return self.ranks[-1] if self.ranks else 0

    @property
    def stable(self) -> bool:
        return self.rank == self.forms

    def to_json(self) -> dict[str, Any]:
        return {
            "forms": self.forms,
            "rank": self.rank,
            "stable": self.stable,
            "ranks": {
                str(depth): rank for depth, rank in zip(self.depths, self.ranks, strict=True)
            },
        }


def _terms(a: PrincipalPart | Mapping[Key, Number]) -> Mapping[Key, Number]:
    return a.terms if isinstance(a, PrincipalPart) else a


def _depth_of(terms: Mapping[Key, Number]) -> Fraction:
    return max((abs(n) for _, n in terms), default=Fraction(0))


def _check_orders(a: PrincipalPart | Mapping[Key, Number], f: FourierTable) -> None:
    if isinstance(a, PrincipalPart) and a.orders != f.orders:
        raise TableError(
            f"Principal part on L'/L with orders {a.orders} cannot pair with a table on {f.orders}"
        )


def pairing(a: PrincipalPart | Mapping[Key, Number], f: FourierTable) -> Number:
    """sum of a(alpha, n) c(f, alpha, -n) over the stored terms of a."""
    terms = _terms(a)
    _check_orders(a, f)
    depth = _depth_of(terms)
    if f.depth < depth:
        raise TableError(f"Table of depth {f.depth} cannot pair with terms down to n = {-depth}")
    total: Number = Fraction(0)
    for (alpha, n), value in terms.items():
        total += value * f.coefficient(alpha, -n)
    return total


def obstruction_check(p: PrincipalPart, cusps: BasisTable) -> ObstructionResult:
    """Admissible iff p pairs to zero with every cusp form; otherwise names the first witness."""
    if cusps.kind != "cusp":
        raise TableError(f"Obstruction check needs a basis of cusp forms, got kind {cusps.kind!r}")
    if cusps.depth < p.depth:
        raise TableError(f"Cusp basis of depth {cusps.depth} is too short for p of depth {p.depth}")
    for index, form in enumerate(cusps.forms):
        value = pairing(p, form)
        if value != 0:
            return ObstructionResult(admissible=False, witness=index, value=value)
    return ObstructionResult(admissible=True)


def _require_exact(table: FourierTable, name: str) -> None:
    if not table.is_exact:
        raise TableError(f"{name} must have exact rational coefficients; rationalize it first")


def constant_term(
    p: PrincipalPart,
    E: FourierTable,
    cusps: BasisTable | None = None,
) -> Fraction:
    """c(f, 0, 0) = -1/2 sum c(E, alpha, n) p(alpha, -n), with E rescaled to c(E, 0, 0) = 2.

    Given ``cusps``, admissible principal parts must give an integer.
    """
    _require_exact(E, "E")
    zero = tuple(0 for _ in E.orders)
    leading = Fraction(E.coefficient(zero, 0))
    if leading == 0:
        raise TableError("E has no constant term c(E, 0, 0) to normalize against")
    value = -Fraction(1, 2) * Fraction(pairing(p, E.scaled(Fraction(2) / leading)))

    if cusps is not None and value.denominator != 1 and obstruction_check(p, cusps).admissible:
        raise IntegralityError(
            f"Constant term {value} of an admissible principal part is not an integer"
        )
    return value


def lift_weight(p: PrincipalPart, E: FourierTable) -> Fraction:
    """Weight c(f, 0, 0) / 2 of the Borcherds lift; it must lie in (1/2)Z."""
    value = constant_term(p, E)
    if value.denominator != 1:
        raise IntegralityError(f"Constant term {value} is not an integer, so c/2 is not in (1/2)Z")
    return value / 2


def _indices(E: FourierTable, cusps: BasisTable, N: Fraction) -> list[Key]:
    keys = set(E.coeffs)
    for form in cusps.forms:
        keys.update(form.coeffs)
    return sorted((key for key in keys if 0 <= key[1] <= N), key=lambda key: (key[1], key[0]))


def _integral(value: Number, label: str) -> int:
    value = Fraction(value)
    if value.denominator != 1:
        raise TableError(f"{label} = {value} is not an integer")
    return int(value)


def _basis_row(cusps: BasisTable, alpha: tuple[int, ...], n: Fraction) -> list[int]:
    label = f"({format_alpha(alpha)}, {n})"
    return [
        _integral(form.coefficient(alpha, n), f"c(cusp {i}, {label})")
        for i, form in enumerate(cusps.forms)
    ]


def _combination(
    combo: tuple[int, ...], cusps: BasisTable, weight: Fraction, N: Fraction
) -> FourierTable:
    coeffs: dict[Key, Number] = {}
    for x, form in zip(combo, cusps.forms, strict=True):
        if not x:
            continue
        for key, value in form.coeffs.items():
            if key[1] <= N:
                coeffs[key] = coeffs.get(key, Fraction(0)) + x * Fraction(value)
    return FourierTable(
        weight=weight,
        orders=cusps.orders,
        coeffs={key: value for key, value in coeffs.items() if value},
        depth=N,
        dual=True,
        cusp=True,
    )


def congruence_solve(
    E: FourierTable, d: int, cusps: BasisTable, N: Fraction | int
) -> CongruenceSolution:
    """Integer x with sum x_i cusp_i = d E mod d coefficientwise up to depth N."""
    N = Fraction(N)
    if d < 1:
        raise ValueError(f"Modulus d must be positive, got {d}")
    _require_exact(E, "E")
    if E.orders != cusps.orders:
        raise TableError(f"E lives on orders {E.orders} but the cusp basis on {cusps.orders}")
    if E.depth < N or cusps.depth < N:
        raise TableError(f"Depth N = {N} exceeds E (depth {E.depth}) or the basis ({cusps.depth})")

    indices = _indices(E, cusps, N)
    rows: list[list[int]] = []
    rhs: list[int] = []
    for alpha, n in indices:
        label = f"({format_alpha(alpha)}, {n})"
        rhs.append(_integral(d * Fraction(E.coefficient(alpha, n)), f"c(dE, {label})"))
        rows.append(_basis_row(cusps, alpha, n))

    width = len(cusps.forms)
    combo = solve_congruence(rows, rhs, d, width)
    if combo is None:
        # shortest unsolvable prefix locates the obstructing coefficient
        lo, hi = 1, len(rows)
        while lo < hi:
            mid = (lo + hi) // 2
            if solve_congruence(rows[:mid], rhs[:mid], d, width) is None:
                hi = mid
            else:
                lo = mid + 1
        alpha, n = indices[lo - 1]
        raise NoSolutionError(
            f"No cusp combination is congruent to {d}*E mod {d}; first obstruction at "
            f"alpha = {format_alpha(alpha)}, n = {n} (check d, basis integrality and N)",
            row=(alpha, n),
        )

    solution = CongruenceSolution(
        combo=tuple(combo),
        f=_combination(tuple(combo), cusps, E.weight, N),
        d=d,
        N=N,
    )
    failure = verify_congruence(solution, E, d, cusps)
    if failure is not None:
        raise NoSolutionError(f"Solution fails the congruence at {failure}", row=failure)
    return solution


def verify_congruence(
    solution: CongruenceSolution, E: FourierTable, d: int, cusps: BasisTable
) -> Key | None:
    """First (alpha, n) with c(f) != c(dE) mod d, or None."""
    rebuilt = _combination(solution.combo, cusps, E.weight, solution.N)
    for alpha, n in _indices(E, cusps, solution.N):
        stored = Fraction(solution.f.coefficient(alpha, n))
        if stored != rebuilt.coefficient(alpha, n):
            return alpha, n
        difference = stored - d * Fraction(E.coefficient(alpha, n))
        if difference.denominator != 1 or difference.numerator % d:
            return alpha, n
    return None


def stabilization_rank(cusps: BasisTable, N: Fraction | int) -> StabilizationReport:
    """Rank of the coefficient matrix of the basis over 0 < n <= m for m = 1, 2, ..., N."""
    N = Fraction(N)
    if cusps.depth < N:
        raise TableError(f"Basis of depth {cusps.depth} is shorter than N = {N}")
    keys = sorted(
        {key for form in cusps.forms for key in form.coeffs if 0 < key[1] <= N},
        key=lambda key: (key[1], key[0]),
    )
    depths = [Fraction(m) for m in range(1, int(N) + 1)]
    if not depths or depths[-1] != N:
        depths.append(N)

    ranks = []
    width = len(cusps.forms)
    for depth in depths:
        rows = [_basis_row(cusps, alpha, n) for alpha, n in keys if n <= depth]
        ranks.append(integer_rank(rows, width))
    return StabilizationReport(depths=tuple(depths), ranks=tuple(ranks), forms=width)

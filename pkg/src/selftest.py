"""Built-in consistency checks run by ``cli.py selftest``."""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import numpy as np
from sympy import Matrix

from src.congruence import congruence_solve, constant_term, obstruction_check, verify_congruence
from src.eisenstein import fourier_coeffs_E, rationalize
from src.lattice import LatticeError, discriminant_form, milgram_check, validate_lattice
from src.metaplectic import evaluate_word, random_element
from src.tables import BasisTable, FourierTable, PrincipalPart
from src.weil import representation

HYPERBOLIC_PLANE = ((0, 1), (1, 0))
EXAMPLE_LATTICE = (
    (2, 0, 0, 0, 0),
    (0, 2, 0, 0, 0),
    (0, 0, -2, 0, 0),
    (0, 0, 0, -2, 0),
    (0, 0, 0, 0, -2),
)

# (ST)^3 S^6 is the identity of Mp2(Z)
BRAID_RELATION = (("S", 1), ("T", 1), ("S", 1), ("T", 1), ("S", 1), ("T", 1), ("S", 6))

MILGRAM_COUNT = 200
MILGRAM_MAX_RANK = 8
MILGRAM_MAX_DET = 5000
WORD_SAMPLES = 100
WELL_DEFINED_LATTICES = 5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class SelftestReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def add(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append(CheckResult(name, passed, detail))

    def to_json(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [
                {"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks
            ],
        }

    def to_text(self) -> str:
        lines = [
            f"{'ok  ' if c.passed else 'FAIL'} {c.name}" + (f": {c.detail}" if c.detail else "")
            for c in self.checks
        ]
        lines.append("selftest passed" if self.passed else "selftest FAILED")
        return "\n".join(lines)


def random_even_gram(
    rng: np.random.Generator, rank: int, bound: int = 3, max_det: int = 64
) -> list[list[int]]:
    """Random nonsingular even symmetric Gram matrix with |det| <= max_det."""
    while True:
        upper = rng.integers(-bound, bound + 1, size=(rank, rank))
        gram = np.triu(upper, 1)
        gram = gram + gram.T + np.diag(2 * rng.integers(-bound, bound + 1, size=rank))
        det = int(Matrix(gram.tolist()).det())
        if det != 0 and abs(det) <= max_det:
            return [[int(v) for v in row] for row in gram]


def delta_coefficients(N: int) -> list[int]:
    """tau(0..N) from Delta = q prod (1 - q^n)^24."""
    series = [1] + [0] * N
    for n in range(1, N + 1):
        for _ in range(24):
            for m in range(N, n - 1, -1):
                series[m] -= series[m - n]
    return [0, *series[:N]]


def delta_basis(N: int) -> BasisTable:
    """One-form cusp basis {Delta} on the trivial discriminant form, weight 12."""
    tau = delta_coefficients(N)
    coeffs = {((), Fraction(n)): Fraction(tau[n]) for n in range(1, N + 1)}
    form = FourierTable(
        weight=Fraction(12), orders=(), coeffs=coeffs, depth=Fraction(N), dual=True, cusp=True
    )
    return BasisTable(weight=Fraction(12), orders=(), forms=(form,), depth=Fraction(N))


def _milgram_gram(rng: np.random.Generator, max_rank: int, max_det: int) -> list[list[int]]:
    rank = int(rng.integers(1, max_rank + 1))
    # small entries keep |det| of the larger ranks within reach of max_det
    return random_even_gram(rng, rank, bound=3 if rank <= 4 else 1, max_det=max_det)


def check_milgram(
    report: SelftestReport,
    rng: np.random.Generator,
    count: int,
    max_rank: int = MILGRAM_MAX_RANK,
    max_det: int = MILGRAM_MAX_DET,
) -> None:
    started = time.perf_counter()
    failures = []
    for _ in range(count):
        lat = validate_lattice(_milgram_gram(rng, max_rank, max_det))
        if not milgram_check(lat):
            failures.append(lat.gram)
    lat = validate_lattice(EXAMPLE_LATTICE)
    if not milgram_check(lat):
        failures.append(lat.gram)
    elapsed = time.perf_counter() - started
    detail = (
        f"{count + 1} lattices (rank <= {max_rank}, |det| <= {max_det}) in {elapsed:.1f}s"
        if not failures
        else f"first failure: {failures[0]}"
    )
    report.add("Milgram formula", not failures, detail)


def check_well_defined(
    report: SelftestReport,
    rng: np.random.Generator,
    samples: int,
    lattices: int = WELL_DEFINED_LATTICES,
) -> None:
    """rho must agree on different words for the same element of Mp2(Z)."""
    grams: list[Any] = [EXAMPLE_LATTICE]
    grams.extend(
        random_even_gram(rng, int(rng.integers(1, 4)), max_det=16) for _ in range(lattices - 1)
    )
    for gram in grams:
        df = discriminant_form(validate_lattice(gram))
        rep = representation(df)
        bad = 0
        for _ in range(samples):
            g = random_element(rng, length=4, spread=3)
            h = random_element(rng, length=4, spread=3)
            padded = evaluate_word((*(g.word or ()), *BRAID_RELATION, *(h.word or ())))
            product = g * h
            if not padded.same_as(product):
                bad += 1
                continue
            if rep(padded) != rep(product.with_word(None)):
                bad += 1
            elif rep(g) @ rep(h) != rep(product):
                bad += 1
        report.add(f"rho well defined on {df.orders}", bad == 0, f"{bad}/{samples} mismatches")


def check_691(report: SelftestReport, progress: Callable[[str], None] | None = None) -> None:
    """Numeric E on the hyperbolic plane, rational reconstruction, then the 691 congruence."""
    df = discriminant_form(validate_lattice(HYPERBOLIC_PLANE))
    numeric = fourier_coeffs_E(df, 12, 2, progress=progress)
    exact, d = rationalize(numeric, max_den=1000)
    report.add("denominator of E is 691", d == 691, f"d = {d}")

    cusps = delta_basis(2)
    solution = congruence_solve(exact, d, cusps, 2)
    report.add(
        "Delta congruent to 691 E",
        solution.combo == (65520 % 691,) and verify_congruence(solution, exact, d, cusps) is None,
        f"x = {list(solution.combo)} mod {d}",
    )

    p = PrincipalPart(orders=(), terms={((), Fraction(-2)): 1, ((), Fraction(-1)): 24})
    admissible = obstruction_check(p, cusps).admissible
    value = constant_term(p, exact, cusps)
    report.add(
        "constant term of q^-2 + 24 q^-1",
        admissible and value == -196560,
        f"admissible = {admissible}, c(f, 0, 0) = {value}",
    )


def run_selftest(
    seed: int = 0,
    milgram_count: int = MILGRAM_COUNT,
    word_samples: int = WORD_SAMPLES,
    progress: Callable[[str], None] | None = None,
) -> SelftestReport:
    rng = np.random.default_rng(seed)
    report = SelftestReport()
    steps: list[tuple[str, Callable[[], None]]] = [
        ("Milgram corpus", lambda: check_milgram(report, rng, milgram_count)),
        ("rho well-definedness", lambda: check_well_defined(report, rng, word_samples)),
        ("691 congruence", lambda: check_691(report, progress)),
    ]
    for name, step in steps:
        if progress:
            progress(name)
        try:
            step()
        except (LatticeError, ValueError, ArithmeticError, RuntimeError) as e:
            report.add(name, False, f"{type(e).__name__}: {e}")
    return report

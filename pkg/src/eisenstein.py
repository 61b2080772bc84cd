"""Vector-valued Eisenstein series of the dual Weil representation.

E(tau) = sum over Gamma_inf \\ Mp2(Z) of phi(tau)^(-2k) rho*(gamma)^(-1) e_0.

Cosets are grouped into translation orbits gamma_{c,d} T^m. Each orbit is
summed in closed form (Lipschitz summation), so the only truncation is in
c <= C. For t in Z - q(beta), t > 0 this gives

    c(E, beta, t) = K_k t^(k-1) sum_c c^(-k) sum_{d mod c} rho(gamma_cd)[0, beta] e(t d / c)

with K_k = (2 pi)^k e^(-pi i k / 2) / Gamma(k), and c(E, beta, 0) = [beta = 0].

For small half-integral k the sharp cutoff at C converges like 1 / C.
Extrapolated sums taper the terms C / 2 < c <= C with a smooth step, which
leaves an error in powers C^-(k - 3/2), C^-(k - 1), ... that Richardson
steps over C, 2C, 4C, ... remove one at a time.
"""

from __future__ import annotations

import math
import time
from collections.abc import Callable
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import pairwise

import numpy as np
from sympy import bernoulli, divisor_sigma

from src.env import DEFAULT_MAX_C, DEFAULT_TOLERANCE
from src.lattice import DiscriminantForm, LatticeError
from src.metaplectic import (
    IDENTITY,
    MetaplecticElement,
    reduce_to_fundamental_domain,
    word_decompose,
)
from src.tables import FourierTable
from src.weil import representation, rho

# c-values per work unit; fixed so the reduction order never depends on the worker count
BLOCK = 32
FIRST_TRUNCATION = 16
DECAY_EPS = 1e-17
RICHARDSON_STEPS = 3
# samples * Im(tau) below this lets e(t (x + samples)) alias onto the table
ALIAS_SPAN = 6.0
# lowest point of the fundamental domain
FUNDAMENTAL_HEIGHT = math.sqrt(3) / 2

Progress = Callable[[str], None]


class ReconstructionError(ValueError):
    pass


def check_weight(df: DiscriminantForm, k: Fraction | int | str) -> Fraction:
    weight = Fraction(k)
    if weight <= 2:
        raise LatticeError(
            f"Weight k = {weight} must exceed 2 for the Eisenstein series to converge"
        )
    if (2 * weight).denominator != 1:
        raise LatticeError(f"Weight k = {weight} is not in (1/2)Z")
    if (2 * weight + df.signature) % 4:
        raise LatticeError(
            f"Weight k = {weight} and signature {df.signature} give 2k + signature not divisible "
            "by 4; the Eisenstein series vanishes identically"
        )
    return weight


def _completion(c: int, d: int) -> MetaplecticElement:
    a = pow(d, -1, c) if c > 1 else 0
    return MetaplecticElement(a, (a * d - 1) // c, c, d)


def _units(c: int) -> np.ndarray:
    d = np.arange(c, dtype=np.int64)
    return d[np.gcd(d, c) == 1]


def coset_reps(C: int) -> list[MetaplecticElement]:
    """Representatives (c, d mod c), 0 <= c <= C, of Gamma_inf \\ Mp2(Z) / <T>."""
    if C < 0:
        raise ValueError(f"Truncation C must be non-negative, got {C}")
    reps = [IDENTITY]
    for c in range(1, C + 1):
        reps.extend(_completion(c, int(d)) for d in _units(c))
    return reps


def tail_bound(k: Fraction | float, C: int, tau: complex) -> float:
    """Bound for the omitted sum over c > C of |c tau + d|^(-k)."""
    if C < 1:
        return math.inf
    kf, y = float(k), tau.imag
    return 2 * y ** (1 - kf) * C ** (2 - kf) / (kf - 2) + y ** (-kf) * C ** (1 - kf) / (kf - 1)


@lru_cache(maxsize=8)
def _numeric_generators(df: DiscriminantForm) -> tuple[np.ndarray, ...]:
    rep = representation(df)
    return tuple(rep.s_power(p).to_complex() for p in range(8))


def _t_phases(df: DiscriminantForm, powers: np.ndarray | int) -> np.ndarray:
    """Diagonals of rho(T)^p, one row per power, from exact residues mod level."""
    numerators = np.outer(np.atleast_1d(powers), df.value_numerators) % df.level
    return np.exp(2j * np.pi * numerators / df.level)


def numeric_rho(df: DiscriminantForm, element: MetaplecticElement) -> np.ndarray:
    """rho(element) in floating point, multiplied out along its word."""
    s_powers = _numeric_generators(df)
    matrix = np.eye(df.size, dtype=complex)
    for letter, power in word_decompose(element):
        if letter == "S":
            matrix = matrix @ s_powers[power % 8]
        else:
            matrix = matrix * _t_phases(df, power)
    return matrix


class CosetRows:
    """Row 0 of rho(gamma_{c,d}) for every coset with 1 <= c <= limit.

    Row 0 only depends on the bottom row (c, d). With c' = c - d and
    d = j c' + d', gamma_{c',d'} T^(j+1) S T has bottom row (c, d) and the
    standard branch, so each row is one S-product away from a smaller c.
    """

    def __init__(self, df: DiscriminantForm) -> None:
        self.df = df
        self.limit = 0
        self._s = _numeric_generators(df)[1]
        self._t = _t_phases(df, 1)[0]
        self._rows = np.zeros((0, df.size), dtype=complex)
        # offsets[c] is the first row of c; index 0 is unused
        self._offsets = np.zeros(2, dtype=np.int64)
        # slot of d among the units of c, at c (c - 1) / 2 + d
        self._positions = np.zeros(0, dtype=np.int64)
        self._residues: list[np.ndarray] = [np.zeros(0, dtype=np.int64)]

    def extend(self, limit: int) -> None:
        if limit <= self.limit:
            return
        start = self.limit + 1
        residues = [_units(c) for c in range(start, limit + 1)]
        counts = np.array([len(r) for r in residues], dtype=np.int64)
        self._offsets = np.concatenate([self._offsets, self._offsets[-1] + np.cumsum(counts)])

        positions = []
        for c, units in zip(range(start, limit + 1), residues, strict=True):
            slots = np.full(c, -1, dtype=np.int64)
            slots[units] = np.arange(len(units))
            positions.append(slots)
        self._positions = np.concatenate([self._positions, *positions])

        rows = np.empty((int(self._offsets[-1]), self.df.size), dtype=complex)
        rows[: len(self._rows)] = self._rows
        for c, units in zip(range(start, limit + 1), residues, strict=True):
            first = int(self._offsets[c])
            if c == 1:
                rows[first] = self._s[0]
                continue
            parent = c - units
            reduced = units % parent
            index = self._offsets[parent] + self._positions[parent * (parent - 1) // 2 + reduced]
            shifted = rows[index] * _t_phases(self.df, units // parent + 1)
            rows[first : first + len(units)] = (shifted @ self._s) * self._t

        self._rows = rows
        self._residues.extend(residues)
        self.limit = limit

    def block(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        """Units d mod c and the matching rows."""
        if not 1 <= c <= self.limit:
            raise ValueError(f"c = {c} is outside the table 1..{self.limit}")
        return self._residues[c], self._rows[self._offsets[c] : self._offsets[c + 1]]


def cutoff_weight(x: float) -> float:
    """Smooth step: 1 up to x = 1/2, falling to 0 at x = 1 with every derivative."""
    if x <= 0.5:
        return 1.0
    if x >= 1.0:
        return 0.0
    y = 2 * x - 1
    rise, fall = math.exp(-1 / y), math.exp(-1 / (1 - y))
    return fall / (rise + fall)


def _neumaier(total: np.ndarray, comp: np.ndarray, term: np.ndarray) -> None:
    t, c, x = total.view(np.float64), comp.view(np.float64), term.view(np.float64)
    s = t + x
    c += np.where(np.abs(t) >= np.abs(x), (t - s) + x, (x - s) + t)
    t[...] = s


BlockSums = tuple[np.ndarray, np.ndarray | None]


def _block_sums(
    table: CosetRows, k: float, u_max: int, c_start: int, c_stop: int, cutoff: int | None
) -> BlockSums:
    """Plain sums over c_start <= c < c_stop, and the same sums tapered at ``cutoff``."""
    level = table.df.level
    u = np.arange(u_max + 1, dtype=np.int64)
    plain = np.zeros((u_max + 1, table.df.size), dtype=complex)
    plain_comp = np.zeros_like(plain)
    weighted = np.zeros_like(plain)
    weighted_comp = np.zeros_like(plain)
    for c in range(c_start, c_stop):
        residues, rows = table.block(c)
        modulus = level * c
        phases = np.exp(2j * np.pi * (np.outer(u, residues) % modulus) / modulus)
        term = np.ascontiguousarray((phases @ rows) * c ** (-k))
        _neumaier(plain, plain_comp, term)
        if cutoff is not None:
            tapered = np.ascontiguousarray(term * cutoff_weight(c / cutoff))
            _neumaier(weighted, weighted_comp, tapered)
    if cutoff is None:
        return plain + plain_comp, None
    return plain + plain_comp, weighted + weighted_comp


def _range_sums(
    table: CosetRows,
    k: float,
    u_max: int,
    lo: int,
    hi: int,
    threads: int,
    cutoff: int | None = None,
) -> BlockSums:
    """Sums over lo <= c < hi, reduced block by block in a fixed order."""
    blocks = [(start, min(start + BLOCK, hi)) for start in range(lo, hi, BLOCK)]
    shape = (u_max + 1, table.df.size)
    plain, plain_comp = np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex)
    weighted, weighted_comp = np.zeros(shape, dtype=complex), np.zeros(shape, dtype=complex)

    def run(bounds: tuple[int, int]) -> BlockSums:
        return _block_sums(table, k, u_max, bounds[0], bounds[1], cutoff)

    if threads <= 1 or len(blocks) <= 1:
        parts = [run(bounds) for bounds in blocks]
    else:
        # numpy releases the GIL in the products; the table is only read
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(run, blocks))

    for part, part_weighted in parts:
        _neumaier(plain, plain_comp, np.ascontiguousarray(part))
        if part_weighted is not None:
            _neumaier(weighted, weighted_comp, np.ascontiguousarray(part_weighted))
    if cutoff is None:
        return plain + plain_comp, None
    return plain + plain_comp, weighted + weighted_comp


def tail_exponents(k: Fraction | float) -> tuple[float, ...]:
    """Powers of 1 / C left in a smoothly truncated sum, leading first."""
    kf = float(k)
    return tuple(kf - 1.5 + step / 2 for step in range(RICHARDSON_STEPS))


def richardson(
    snapshots: list[np.ndarray], exponents: tuple[float, ...]
) -> tuple[np.ndarray, np.ndarray]:
    """Extrapolated value and error estimate per entry from sums at C, 2C, 4C, ...

    Each order removes the next power of 1 / C. Its estimate is the change
    between its last two values. Every entry keeps the order whose estimate
    is smallest.
    """
    orders = [list(snapshots)]
    for p in exponents:
        previous = orders[-1]
        if len(previous) < 3:
            break
        factor = 2.0**p
        orders.append(
            [(factor * late - early) / (factor - 1) for early, late in pairwise(previous)]
        )

    value = snapshots[-1]
    estimate = np.full(value.shape, np.inf)
    for values in orders:
        if len(values) < 2:
            continue
        change = np.abs(values[-1] - values[-2])
        better = change < estimate
        value = np.where(better, values[-1], value)
        estimate = np.where(better, change, estimate)
    return value, estimate


def _schedule(truncation: int | None, max_truncation: int, extrapolate: bool) -> list[int]:
    if truncation is not None:
        if truncation < 1:
            raise ValueError(f"Truncation C must be positive, got {truncation}")
        if not extrapolate:
            return [truncation // 2, truncation] if truncation >= 2 else [truncation]
        if truncation % 2:
            raise ValueError(f"Extrapolated sums need an even truncation C, got {truncation}")
        schedule = [truncation]
        while len(schedule) <= RICHARDSON_STEPS and schedule[0] % 4 == 0:
            schedule.insert(0, schedule[0] // 2)
        return schedule

    if max_truncation < 1:
        raise ValueError(f"Maximal truncation must be positive, got {max_truncation}")
    if not extrapolate:
        schedule = [FIRST_TRUNCATION]
        while schedule[-1] < max_truncation:
            schedule.append(min(2 * schedule[-1], max_truncation))
        return schedule
    # ratio 2 throughout, so every Richardson step sees the same factor
    first = FIRST_TRUNCATION if max_truncation >= FIRST_TRUNCATION else max_truncation
    schedule = [max(2, first - first % 2)]
    while 2 * schedule[-1] <= max_truncation:
        schedule.append(2 * schedule[-1])
    return schedule


@dataclass(frozen=True, eq=False)
class EisensteinExpansion:
    """Fourier expansion of E; row u of the arrays belongs to t = u / level."""

    df: DiscriminantForm
    weight: Fraction
    truncation: int
    coefficients: np.ndarray
    errors: np.ndarray
    converged: bool = True
    dual: bool = True

    @property
    def u_max(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def exponents(self) -> np.ndarray:
        return np.arange(self.u_max + 1) / self.df.level

    def valid_mask(self) -> np.ndarray:
        u = np.arange(self.u_max + 1)[:, None]
        return (u + self.df.value_numerators[None, :]) % self.df.level == 0

    def evaluate_many(self, taus: np.ndarray) -> np.ndarray:
        phases = np.exp(2j * np.pi * np.outer(np.asarray(taus, dtype=complex), self.exponents))
        return phases @ self.coefficients

    def evaluate(self, tau: complex) -> np.ndarray:
        return self.evaluate_many(np.array([tau]))[0]

    def to_table(self, depth: Fraction | int) -> FourierTable:
        depth = Fraction(depth)
        level = self.df.level
        coeffs: dict = {}
        errors: dict = {}
        valid = self.valid_mask()
        for u, beta in zip(*np.nonzero(valid), strict=True):
            n = Fraction(int(u), level)
            if n > depth:
                continue
            key = (self.df.element_at(int(beta)), n)
            value = self.coefficients[u, beta]
            coeffs[key] = float(value.real)
            errors[key] = float(self.errors[u, beta] + abs(value.imag))
        return FourierTable(
            weight=self.weight,
            orders=self.df.orders,
            coeffs=coeffs,
            depth=depth,
            dual=True,
            cusp=False,
            errors=errors,
        )


def _lipschitz_scale(k: Fraction, u_max: int, level: int) -> np.ndarray:
    kf = float(k)
    constant = (2 * np.pi) ** kf * np.exp(-0.5j * np.pi * kf) / math.gamma(kf)
    t = np.arange(u_max + 1) / level
    scale = np.zeros(u_max + 1, dtype=complex)
    scale[1:] = constant * t[1:] ** (kf - 1)
    return scale


def eisenstein_expansion(
    df: DiscriminantForm,
    k: Fraction | int | str,
    u_max: int,
    *,
    truncation: int | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_truncation: int = DEFAULT_MAX_C,
    threads: int = 1,
    extrapolate: bool = False,
    progress: Progress | None = None,
) -> EisensteinExpansion:
    """Coefficients of E for t = u / level, u <= u_max.

    With ``truncation`` set, sums to that C and estimates the error from
    C / 2. Otherwise C doubles from FIRST_TRUNCATION until the estimated
    error drops below ``tolerance`` (relative) or C reaches
    ``max_truncation``.

    ``extrapolate`` tapers every sum smoothly over C / 2 < c <= C and
    runs Richardson steps over the sums at C / 8, C / 4, C / 2 and C, as far
    as C divides. The reported error is the estimate of the order used.
    """
    weight = check_weight(df, k)
    kf = float(weight)
    scale = _lipschitz_scale(weight, u_max, df.level)
    valid = (np.arange(u_max + 1)[:, None] + df.value_numerators[None, :]) % df.level == 0
    schedule = _schedule(truncation, max_truncation, extrapolate)
    exponents = tail_exponents(weight)

    def coefficients_of(sums: np.ndarray) -> np.ndarray:
        table = np.where(valid, scale[:, None] * sums, 0)
        table[0, 0] = 1.0
        return table

    table = CosetRows(df)
    total = np.zeros((u_max + 1, df.size), dtype=complex)
    comp = np.zeros_like(total)
    snapshots: list[np.ndarray] = []
    reached = 0
    started = time.perf_counter()
    value = coefficients_of(total)
    estimate = np.full(total.shape, np.inf)
    converged = False

    for C in schedule:
        table.extend(C)
        if extrapolate and reached < C // 2:
            part, _ = _range_sums(table, kf, u_max, reached + 1, C // 2 + 1, threads)
            _neumaier(total, comp, part)
            reached = C // 2
        below = total + comp
        part, tapered = _range_sums(
            table, kf, u_max, reached + 1, C + 1, threads, C if extrapolate else None
        )
        _neumaier(total, comp, part)
        reached = C
        if tapered is not None:
            snapshots.append(coefficients_of(below + tapered))
        else:
            snapshots.append(coefficients_of(total + comp))

        if extrapolate:
            value, estimate = richardson(snapshots, exponents)
        else:
            value = snapshots[-1]
            if len(snapshots) >= 2:
                estimate = np.abs(snapshots[-1] - snapshots[-2])

        relative = math.inf
        if len(snapshots) >= 2:
            relative = float(np.max(estimate / np.maximum(1.0, np.abs(value))))
        if progress:
            elapsed = time.perf_counter() - started
            progress(f"C={C}: relative change {relative:.3e} ({elapsed:.1f}s)")
        if truncation is None and relative <= tolerance:
            converged = True
            break

    if truncation is not None:
        converged = True
    elif not converged and progress:
        progress(f"C reached {reached} before the tolerance {tolerance:g} was met")

    if len(snapshots) < 2:
        estimate = np.full(total.shape, tail_bound(weight, reached, 1j))
    errors = np.where(valid, estimate + 1e-14 * np.maximum(1.0, np.abs(value)), 0.0)
    errors[0, 0] = 0.0
    return EisensteinExpansion(
        df=df,
        weight=weight,
        truncation=reached,
        coefficients=value,
        errors=errors,
        converged=converged,
    )


def decay_index(k: Fraction | float, height: float, level: int, depth: Fraction | int = 0) -> int:
    """Smallest u_max (a multiple of level) beyond which t^(k-1) e^(-2 pi t y) < DECAY_EPS."""
    kf = float(k)
    if height <= 0:
        raise ValueError(f"Im(tau) must be positive, got {height}")
    t = max(1, math.ceil(float(depth)), math.ceil((kf - 1) / (2 * math.pi * height)))
    limit = math.log(DECAY_EPS)
    while (kf - 1) * math.log(t) - 2 * math.pi * t * height > limit:
        t += 1
    return t * level


@lru_cache(maxsize=32)
def _cached_expansion(
    df: DiscriminantForm,
    k: Fraction,
    u_max: int,
    truncation: int | None,
    tolerance: float,
    max_truncation: int,
    extrapolate: bool,
    threads: int,
) -> EisensteinExpansion:
    return eisenstein_expansion(
        df,
        k,
        u_max,
        truncation=truncation,
        tolerance=tolerance,
        max_truncation=max_truncation,
        extrapolate=extrapolate,
        threads=threads,
    )


def eval_E(
    df: DiscriminantForm,
    k: Fraction | int | str,
    tau: complex,
    C: int | None = None,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    max_truncation: int = DEFAULT_MAX_C,
    extrapolate: bool = False,
    threads: int = 1,
) -> tuple[np.ndarray, float]:
    """E(tau) as a vector over L'/L, with the tail bound of the truncation."""
    weight = check_weight(df, k)
    if tau.imag <= 0:
        raise ValueError(f"tau must lie in the upper half plane, got {tau}")
    u_max = decay_index(weight, tau.imag, df.level)
    expansion = _cached_expansion(
        df, weight, u_max, C, tolerance, max_truncation, extrapolate, threads
    )
    return expansion.evaluate(tau), tail_bound(weight, expansion.truncation, tau)


def evaluate_reduced(expansion: EisensteinExpansion, tau: complex) -> np.ndarray:
    """E(tau) through the transformation law from the reduction of tau.

    The expansion is only summed at points with Im >= sqrt(3) / 2, so the
    values do not inherit its coefficients at small heights.
    """
    g = reduce_to_fundamental_domain(tau)
    matrix = numeric_rho(expansion.df, g)
    if expansion.dual:
        matrix = matrix.conj()
    image = expansion.evaluate(g.act(tau))
    return np.linalg.solve(matrix, image) / g.phi(tau) ** int(2 * expansion.weight)


def sample_coefficients(expansion: EisensteinExpansion, samples: int, height: float) -> np.ndarray:
    """Coefficients t = u / level recovered from E along Im(tau) = height.

    The DFT runs over one full period x in [0, level), with ``samples``
    points per unit, so exponents of different classes mod 1 stay
    orthogonal. Entries whose index violates the class condition come out
    as numerical noise.
    """
    level = expansion.df.level
    count = level * samples
    x = np.arange(count) / samples
    values = np.array([evaluate_reduced(expansion, complex(xj, height)) for xj in x])
    spectrum = np.fft.fft(values, axis=0) / count

    rows = min(expansion.u_max + 1, count)
    u = np.arange(rows)
    recovered = np.zeros((expansion.u_max + 1, expansion.df.size), dtype=complex)
    recovered[:rows] = spectrum[:rows] * np.exp(2 * np.pi * (u / level) * height)[:, None]
    return recovered


def class_leakage(expansion: EisensteinExpansion, recovered: np.ndarray, depth: Fraction) -> float:
    """Largest recovered coefficient at an index with n not in Z - q(beta).

    Measured relative to the largest class coefficient up to ``depth``, or
    absolutely when every coefficient is below 1.
    """
    rows = int(depth * expansion.df.level) + 1
    valid = expansion.valid_mask()[:rows]
    if valid.all():
        return 0.0
    scale = max(1.0, float(np.max(np.abs(recovered[:rows][valid]))))
    return float(np.max(np.abs(recovered[:rows][~valid]))) / scale


def sampling_check(
    expansion: EisensteinExpansion, samples: int, height: float, depth: Fraction
) -> tuple[float, float]:
    """Class leakage and the largest relative deviation of sampled from summed coefficients."""
    recovered = sample_coefficients(expansion, samples, height)
    rows = int(depth * expansion.df.level) + 1
    valid = expansion.valid_mask()[:rows]
    direct = expansion.coefficients[:rows][valid]
    deviation = np.abs(recovered[:rows][valid] - direct) / np.maximum(1.0, np.abs(direct))
    return class_leakage(expansion, recovered, depth), float(np.max(deviation))


def fourier_coeffs_E(
    df: DiscriminantForm,
    k: Fraction | int | str,
    N: Fraction | int,
    C: int | None = None,
    samples: int | None = None,
    *,
    height: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_truncation: int = DEFAULT_MAX_C,
    extrapolate: bool = False,
    threads: int = 1,
    progress: Progress | None = None,
) -> FourierTable:
    """Table of c(E, beta, n) for 0 <= n <= N.

    The coefficients come straight from the orbit sums. With ``progress``
    set, E is also sampled over a full period at ``height`` and the DFT of
    those samples is reported against the sums.
    """
    weight = check_weight(df, k)
    depth = Fraction(N)
    if depth < 0:
        raise ValueError(f"Depth N must be non-negative, got {depth}")
    # deeper tables lower the contour so e^(2 pi n y) does not amplify sampling round-off
    y = height if height is not None else min(0.5, 2.0 / max(float(depth), 1.0))
    if y <= 0:
        raise ValueError(f"Sampling height must be positive, got {y}")

    min_samples = 8 * (math.ceil(depth) + df.level)
    if samples is None:
        samples = 1 << (max(min_samples, math.ceil(ALIAS_SPAN / y)) - 1).bit_length()
    if samples < min_samples:
        raise ValueError(f"{samples} samples cannot resolve depth {depth}: need >= {min_samples}")
    if samples * y < ALIAS_SPAN:
        raise ValueError(
            f"{samples} samples alias the expansion at height {y}: "
            f"need >= {math.ceil(ALIAS_SPAN / y)}"
        )

    u_max = decay_index(weight, FUNDAMENTAL_HEIGHT, df.level, depth)
    expansion = eisenstein_expansion(
        df,
        weight,
        u_max,
        truncation=C,
        tolerance=tolerance,
        max_truncation=max_truncation,
        extrapolate=extrapolate,
        threads=threads,
        progress=progress,
    )
    if progress:
        leakage, deviation = sampling_check(expansion, samples, y, depth)
        progress(f"class leakage up to depth {depth}: {leakage:.3e}")
        progress(f"sampled coefficients deviate by {deviation:.3e} (relative)")
    return expansion.to_table(depth)


def reconstruct_rational(value: float, error: float, max_den: int, label: str = "") -> Fraction:
    """Nearest p/q with q <= max_den, refusing far or ambiguous snaps."""
    prefix = f"{label}: " if label else ""
    if not math.isfinite(value):
        raise ReconstructionError(f"{prefix}value {value} is not finite")
    window = max(10 * error, 1e-15 * max(1.0, abs(value)))
    snapped = Fraction(value).limit_denominator(max_den)
    distance = abs(float(snapped) - value)
    if distance > window:
        raise ReconstructionError(
            f"{prefix}nearest rational with denominator <= {max_den} is {snapped}, "
            f"{distance:.3g} away from {value!r}; numeric error is {error:.3g}"
        )
    if abs(value) * max_den >= 2**52:
        raise ReconstructionError(
            f"{prefix}{value!r} is too large to reconstruct denominators up to {max_den} "
            "in double precision"
        )

    q = np.arange(1, max_den + 1, dtype=np.float64)
    lo = np.ceil((value - window) * q)
    hi = np.floor((value + window) * q)
    count = hi - lo + 1
    den, num = snapped.denominator, snapped.numerator
    matches = (q % den == 0) & (lo == num * (q // den))
    ambiguous = (count >= 2) | ((count == 1) & ~matches)
    if ambiguous.any():
        q_bad = int(q[np.argmax(ambiguous)])
        raise ReconstructionError(
            f"{prefix}{value!r} +- {window:.3g} admits rationals other than {snapped} "
            f"(first with denominator {q_bad}); lower max_den or increase C"
        )
    return snapped


def rationalize(table: FourierTable, max_den: int) -> tuple[FourierTable, int]:
    """Snap a numeric table to exact rationals; d is the lcm of all denominators."""
    if max_den < 1:
        raise ValueError(f"max_den must be positive, got {max_den}")
    exact: dict = {}
    for (alpha, n), value in table.coeffs.items():
        if isinstance(value, Fraction):
            exact[(alpha, n)] = value
            continue
        label = f"c(E, {alpha}, {n})"
        error = table.errors.get((alpha, n), 0.0)
        exact[(alpha, n)] = reconstruct_rational(value, error, max_den, label)
    d = math.lcm(1, *(v.denominator for v in exact.values()))
    rational = FourierTable(
        weight=table.weight,
        orders=table.orders,
        coeffs=exact,
        depth=table.depth,
        dual=table.dual,
        cusp=table.cusp,
    )
    return rational, d


def eval_fourier(table: FourierTable, tau: complex) -> np.ndarray:
    size = math.prod(table.orders)
    values = np.zeros(size, dtype=complex)
    for (alpha, n), c in table.coeffs.items():
        index = int(np.ravel_multi_index(alpha, table.orders)) if table.orders else 0
        values[index] += complex(float(c)) * np.exp(2j * np.pi * float(n) * tau)
    return values


def transformation_residual(
    source: FourierTable | EisensteinExpansion,
    df: DiscriminantForm,
    element: MetaplecticElement,
    tau: complex,
) -> float:
    """Relative residual of f(g tau) = phi(tau)^(2k) rho(g) f(tau), with rho* for dual tables."""
    if isinstance(source, EisensteinExpansion):
        evaluate = source.evaluate
    else:
        def evaluate(z: complex) -> np.ndarray:
            return eval_fourier(source, z)

    matrix = rho(df, element).to_complex()
    if source.dual:
        matrix = matrix.conj()
    lhs = evaluate(element.act(tau))
    rhs = element.phi(tau) ** int(2 * source.weight) * (matrix @ evaluate(tau))
    return float(np.linalg.norm(lhs - rhs) / max(np.linalg.norm(lhs), 1e-300))


def boundedness(
    source: FourierTable | EisensteinExpansion,
    samples: int = 64,
    heights: tuple[float, ...] = (1.0, 1.25, 1.5, 2.0, 3.0),
) -> float:
    """max |f(tau)| over a grid with Im(tau) >= 1."""
    x = np.arange(samples) / samples
    largest = 0.0
    for y in heights:
        taus = x + 1j * y
        if isinstance(source, EisensteinExpansion):
            values = source.evaluate_many(taus)
        else:
            values = np.array([eval_fourier(source, tau) for tau in taus])
        largest = max(largest, float(np.max(np.abs(values))))
    return largest


def level_one_eisenstein(k: int, N: int) -> FourierTable:
    """Classical E_k = 1 - (2k / B_k) sum sigma_(k-1)(n) q^n on the trivial discriminant form."""
    if k < 4 or k % 2:
        raise ValueError(f"Level one Eisenstein series need even k >= 4, got {k}")
    b = bernoulli(k)
    factor = Fraction(-2 * k) / Fraction(int(b.p), int(b.q))
    coeffs: dict = {((), Fraction(0)): Fraction(1)}
    for n in range(1, N + 1):
        coeffs[((), Fraction(n))] = factor * int(divisor_sigma(n, k - 1))
    return FourierTable(weight=Fraction(k), orders=(), coeffs=coeffs, depth=Fraction(N))

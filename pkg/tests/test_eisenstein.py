import math
from fractions import Fraction

import numpy as np
import pytest

from src.congruence import congruence_solve
from src.eisenstein import (
    FUNDAMENTAL_HEIGHT,
    CosetRows,
    EisensteinExpansion,
    ReconstructionError,
    _schedule,
    boundedness,
    check_weight,
    class_leakage,
    coset_reps,
    cutoff_weight,
    decay_index,
    eisenstein_expansion,
    eval_E,
    eval_fourier,
    evaluate_reduced,
    fourier_coeffs_E,
    level_one_eisenstein,
    numeric_rho,
    rationalize,
    reconstruct_rational,
    richardson,
    sample_coefficients,
    tail_bound,
    tail_exponents,
    transformation_residual,
)
from src.lattice import LatticeError, qvalue
from src.metaplectic import S, T, MetaplecticElement, evaluate_word, random_element
from src.tables import FourierTable, load_basis
from src.weil import rho

A2_WEIGHT = 9
EXAMPLE_WEIGHT = Fraction(5, 2)


@pytest.fixture(scope="module")
def a2_expansion(a2_df) -> EisensteinExpansion:
    u_max = decay_index(A2_WEIGHT, 0.5, a2_df.level)
    return eisenstein_expansion(a2_df, A2_WEIGHT, u_max, truncation=64)


@pytest.mark.parametrize(
    ("k", "message"),
    [(2, "exceed 2"), (Fraction(11, 4), "1/2"), (3, "divisible by 4"), (Fraction(7, 2), "by 4")],
)
def test_check_weight_rejects(example_df, k, message):
    with pytest.raises(LatticeError, match=message):
        check_weight(example_df, k)


def test_check_weight_accepts(example_df, a2_df, trivial_df):
    assert check_weight(example_df, "5/2") == Fraction(5, 2)
    assert check_weight(a2_df, 9) == 9
    assert check_weight(trivial_df, 12) == 12


def test_coset_reps():
    reps = coset_reps(3)
    assert len(reps) == 1 + 1 + 1 + 2
    assert [(g.c, g.d) for g in reps[1:]] == [(1, 0), (2, 1), (3, 1), (3, 2)]
    with pytest.raises(ValueError):
        coset_reps(-1)


def test_tail_bound_decreases():
    assert tail_bound(12, 0, 1j) == math.inf
    assert tail_bound(12, 64, 1j) < tail_bound(12, 32, 1j) < 1e-15


def test_level_one_reference():
    e4 = level_one_eisenstein(4, 3)
    assert [e4.coefficient((), n) for n in range(4)] == [1, 240, 2160, 6720]
    assert level_one_eisenstein(12, 1).coefficient((), 1) == Fraction(65520, 691)
    with pytest.raises(ValueError):
        level_one_eisenstein(5, 2)


@pytest.mark.parametrize("k", [8, 12])
def test_trivial_form_recovers_level_one_series(trivial_df, k):
    expansion = eisenstein_expansion(trivial_df, k, 6, truncation=64)
    reference = level_one_eisenstein(k, 6)
    assert expansion.coefficients[0, 0] == 1
    for n in range(1, 7):
        expected = float(reference.coefficient((), n))
        value = expansion.coefficients[n, 0]
        assert value.real == pytest.approx(expected, rel=1e-10)
        assert abs(value.imag) <= 1e-10 * expected
        assert expansion.errors[n, 0] <= 1e-9 * expected


def test_adaptive_truncation_converges(trivial_df):
    messages: list[str] = []
    expansion = eisenstein_expansion(trivial_df, 12, 3, tolerance=1e-12, progress=messages.append)
    assert expansion.converged
    assert expansion.truncation <= 64
    assert messages and messages[0].startswith("C=16")


def test_eval_e_matches_the_q_series(trivial_df):
    tau = 0.1 + 1.0j
    values, bound = eval_E(trivial_df, 12, tau)
    expected = eval_fourier(level_one_eisenstein(12, 25), tau)
    assert values.shape == (1,)
    assert values[0] == pytest.approx(expected[0], rel=1e-10)
    assert bound < 1e-8
    with pytest.raises(ValueError, match="upper half plane"):
        eval_E(trivial_df, 12, 0.5 - 0.1j)


def test_expansion_respects_the_index_classes(a2_expansion, a2_df):
    valid = a2_expansion.valid_mask()
    assert not np.any(a2_expansion.coefficients[~valid])
    assert a2_expansion.coefficients[0, 0] == 1
    # only beta = 0 carries n = 0
    assert np.all(a2_expansion.coefficients[0, 1:] == 0)
    # E_beta = E_(-beta)
    assert np.allclose(a2_expansion.coefficients[:, 1], a2_expansion.coefficients[:, 2])
    assert a2_df.negation.tolist() == [0, 2, 1]


@pytest.mark.parametrize(
    ("element", "tau"),
    [
        (S, 0.1 + 1.3j),
        (T, 0.1 + 1.3j),
        (evaluate_word([("S", 1), ("T", 1), ("S", 1)]), 0.1 + 1.3j),
        (evaluate_word([("T", 1), ("S", 1), ("T", -1)]), 0.45 + 1.0j),
        (evaluate_word([("S", 3)]), -0.2 + 0.9j),
    ],
)
def test_expansion_transforms_with_the_dual_representation(a2_expansion, a2_df, element, tau):
    assert min(tau.imag, element.act(tau).imag) >= 0.5
    assert transformation_residual(a2_expansion, a2_df, element, tau) < 1e-8


def test_truncated_table_evaluates_like_the_expansion(a2_expansion, a2_df):
    table = a2_expansion.to_table(Fraction(a2_expansion.u_max, a2_df.level))
    tau = 0.3 + 0.8j
    assert np.allclose(eval_fourier(table, tau), a2_expansion.evaluate(tau), rtol=1e-10)
    assert transformation_residual(table, a2_df, S, 0.1 + 1.3j) < 1e-6


def test_full_period_sampling_recovers_the_coefficients(a2_expansion, a2_df):
    depth = Fraction(2)
    recovered = sample_coefficients(a2_expansion, 64, 0.5)
    rows = int(depth * a2_df.level) + 1
    valid = a2_expansion.valid_mask()[:rows]
    direct = a2_expansion.coefficients[:rows][valid]
    scale = float(np.max(np.abs(direct)))
    assert np.allclose(recovered[:rows][valid], direct, rtol=1e-8, atol=1e-10 * scale)
    assert class_leakage(a2_expansion, recovered, depth) < 1e-8


def test_class_leakage_is_relative(a2_expansion):
    recovered = np.array(a2_expansion.coefficients)
    recovered[1, 0] = 1e-3 * np.max(np.abs(recovered[:7]))
    assert not a2_expansion.valid_mask()[1, 0]
    assert class_leakage(a2_expansion, recovered, Fraction(2)) == pytest.approx(1e-3)


def test_reduced_evaluation_agrees_in_the_upper_region(a2_expansion):
    for tau in (0.1 + 1.3j, 2.4 + 0.9j, -0.7 + 1.1j):
        assert np.allclose(
            evaluate_reduced(a2_expansion, tau), a2_expansion.evaluate(tau), rtol=1e-10
        )


def test_fourier_table_comes_from_the_sums(a2_df):
    messages: list[str] = []
    depth = Fraction(2)
    table = fourier_coeffs_E(a2_df, A2_WEIGHT, depth, 64, progress=messages.append)
    u_max = decay_index(A2_WEIGHT, FUNDAMENTAL_HEIGHT, a2_df.level, depth)
    direct = eisenstein_expansion(a2_df, A2_WEIGHT, u_max, truncation=64).to_table(depth)
    assert table.coeffs == direct.coeffs
    assert table.errors == direct.errors

    leakage = next(m for m in messages if m.startswith("class leakage"))
    assert float(leakage.rsplit(" ", 1)[1]) < 1e-8
    deviation = next(m for m in messages if m.startswith("sampled coefficients"))
    assert float(deviation.split()[4]) < 1e-8
def test_fft_needs_enough_samples(a2_df):
    with pytest.raises(ValueError, match="cannot resolve"):
        fourier_coeffs_E(a2_df, A2_WEIGHT, 2, 16, samples=8)
    with pytest.raises(ValueError, match="non-negative"):
        fourier_coeffs_E(a2_df, A2_WEIGHT, -1, 16)


def test_boundedness_of_the_trivial_series(trivial_df):
    expansion = eisenstein_expansion(trivial_df, 12, 12, truncation=32)
    largest = boundedness(expansion)
    # E_12(i) = 441 E_4(i)^3 / 691 is about 1.969
    assert 1.95 < largest < 2.0


def test_example_lattice_structure(example_df):
    expansion = eisenstein_expansion(example_df, Fraction(5, 2), 8, truncation=16)
    assert expansion.coefficients.shape == (9, 32)
    assert expansion.coefficients[0, 0] == 1
    assert not np.any(expansion.coefficients[~expansion.valid_mask()])
    table = expansion.to_table(2)
    assert all(n <= 2 for _, n in table.coeffs)
    assert all((n + qvalue(example_df, alpha)).denominator == 1 for alpha, n in table.coeffs)


def test_reconstruct_rational():
    assert reconstruct_rational(0.5, 1e-12, 100) == Fraction(1, 2)
    assert reconstruct_rational(65520 / 691, 1e-9, 1000) == Fraction(65520, 691)
    assert reconstruct_rational(-3.0, 0.0, 10) == -3


@pytest.mark.parametrize(
    ("value", "error", "max_den", "message"),
    [
        (0.5, 1e-3, 100, "admits rationals"),
        (0.123456789, 1e-12, 10, "away from"),
        (1e12, 1e-3, 100_000, "too large"),
        (float("nan"), 0.0, 10, "not finite"),
    ],
)
def test_reconstruct_rational_refuses(value, error, max_den, message):
    with pytest.raises(ReconstructionError, match=message):
        reconstruct_rational(value, error, max_den, "c")


def test_rationalize_gives_the_691_denominator(trivial_df):
    numeric = fourier_coeffs_E(trivial_df, 12, 2)
    exact, d = rationalize(numeric, max_den=1000)
    assert d == 691
    assert exact.is_exact
    assert exact.coefficient((), 0) == 1
    assert exact.coefficient((), 2) == Fraction(134250480, 691)


def test_rationalize_keeps_exact_entries():
    table = FourierTable(
        weight=Fraction(12),
        orders=(),
        coeffs={((), Fraction(0)): Fraction(1, 3), ((), Fraction(1)): 0.25},
        depth=Fraction(1),
        errors={((), Fraction(1)): 1e-12},
    )
    exact, d = rationalize(table, 10)
    assert exact.coeffs == {((), Fraction(0)): Fraction(1, 3), ((), Fraction(1)): Fraction(1, 4)}
    assert d == 12
    with pytest.raises(ValueError, match="max_den"):
        rationalize(table, 0)


@pytest.mark.slow
def test_worker_count_does_not_change_the_sums(a2_df):
    serial = eisenstein_expansion(a2_df, A2_WEIGHT, 30, truncation=128, threads=1)
    parallel = eisenstein_expansion(a2_df, A2_WEIGHT, 30, truncation=128, threads=2)
    assert np.array_equal(serial.coefficients, parallel.coefficients)
    assert np.array_equal(serial.errors, parallel.errors)


def test_coset_rows_match_the_word_products(a2_df, example_df):
    for df in (a2_df, example_df):
        table = CosetRows(df)
        table.extend(12)
        for rep in coset_reps(12)[1:]:
            residues, rows = table.block(rep.c)
            slot = int(np.flatnonzero(residues == rep.d)[0])
            assert np.allclose(rows[slot], numeric_rho(df, rep)[0], atol=1e-12)


def test_coset_rows_extend_in_steps(example_df):
    whole, steps = CosetRows(example_df), CosetRows(example_df)
    whole.extend(20)
    for limit in (3, 4, 11, 20):
        steps.extend(limit)
    for c in range(1, 21):
        assert np.array_equal(whole.block(c)[0], steps.block(c)[0])
        assert np.array_equal(whole.block(c)[1], steps.block(c)[1])
    with pytest.raises(ValueError, match="outside"):
        whole.block(21)


def test_numeric_rho_matches_the_exact_matrices(a2_df):
    for word in ([("S", 1)], [("T", -2), ("S", 3), ("T", 1)], [("S", 1), ("T", 4), ("S", 5)]):
        element = evaluate_word(word)
        assert np.allclose(numeric_rho(a2_df, element), rho(a2_df, element).to_complex())


def test_cutoff_weight_is_a_smooth_step():
    assert cutoff_weight(0.2) == cutoff_weight(0.5) == 1.0
    assert cutoff_weight(1.0) == cutoff_weight(1.3) == 0.0
    assert cutoff_weight(0.75) == pytest.approx(0.5)
    samples = [cutoff_weight(x) for x in np.linspace(0.5, 1.0, 51)]
    assert all(a >= b for a, b in zip(samples, samples[1:], strict=False))


def test_truncation_schedules():
    assert _schedule(1024, 1024, extrapolate=True) == [128, 256, 512, 1024]
    assert _schedule(24, 1024, extrapolate=True) == [6, 12, 24]
    assert _schedule(64, 1024, extrapolate=False) == [32, 64]
    assert _schedule(None, 100, extrapolate=True) == [16, 32, 64]
    assert _schedule(None, 100, extrapolate=False) == [16, 32, 64, 100]
    with pytest.raises(ValueError, match="even"):
        _schedule(25, 1024, extrapolate=True)


def test_richardson_removes_the_leading_tail_powers():
    exponents = tail_exponents(Fraction(5, 2))
    assert exponents == (1.0, 1.5, 2.0)
    limit = np.array([3.0 + 1.0j, -2.0])
    truncations = [16, 32, 64, 128]

    exact_tail = [limit + np.array([5.0, 0.0]) / C + 2.0 / C**1.5 for C in truncations]
    value, estimate = richardson(exact_tail, exponents)
    assert np.allclose(value, limit, rtol=0, atol=1e-12)
    assert np.all(estimate < 1e-10)

    # one power more than the steps remove: the estimate must still cover the error
    longer_tail = [limit + 5.0 / C + 2.0 / C**1.5 - 40.0 / C**2.5 for C in truncations]
    value, estimate = richardson(longer_tail, exponents)
    error = np.abs(value - limit)
    assert np.all(error <= estimate)
    assert np.all(estimate < np.abs(longer_tail[-1] - limit))


def test_richardson_falls_back_to_the_plain_change():
    snapshots = [np.array([1.5]), np.array([1.25])]
    value, estimate = richardson(snapshots, (1.0,))
    assert value.tolist() == [1.25]
    assert estimate.tolist() == [0.25]


@pytest.fixture(scope="module")
def example_expansion(example_df) -> EisensteinExpansion:
    u_max = decay_index(EXAMPLE_WEIGHT, 0.5, example_df.level)
    return eisenstein_expansion(
        example_df, EXAMPLE_WEIGHT, u_max, truncation=1024, extrapolate=True
    )


def _random_pairs(seed: int, count: int = 20) -> list[tuple[MetaplecticElement, complex]]:
    """Random (g, tau) with tau and g tau both at height >= 0.5."""
    rng = np.random.default_rng(seed)
    pairs = []
    while len(pairs) < count:
        g = random_element(rng, length=4, spread=2)
        tau = complex(rng.uniform(-0.5, 0.5), rng.uniform(0.6, 1.5))
        if min(tau.imag, g.act(tau).imag) >= 0.5:
            pairs.append((g, tau))
    return pairs


@pytest.mark.slow
def test_example_lattice_coefficients_are_integral(example_df, fixtures):
    numeric = fourier_coeffs_E(example_df, EXAMPLE_WEIGHT, 5, 1024, extrapolate=True)
    exact, d = rationalize(numeric, max_den=2)
    assert d == 1
    assert all(value.denominator == 1 for value in exact.coeffs.values())
    zero = example_df.zero()
    assert exact.coefficient(zero, 0) == 1
    assert exact.coefficient(zero, 4) == -166
    assert exact.coefficient((1, 1, 1, 1, 1), Fraction(9, 4)) == -100

    cusps = load_basis(fixtures / "example5_cusps.json", example_df)
    solution = congruence_solve(exact, d, cusps, cusps.depth)
    assert solution.combo == ()
    assert solution.f.coeffs == {}


@pytest.mark.slow
def test_example_lattice_satisfies_the_transformation_law(example_expansion, example_df):
    for g, tau in _random_pairs(seed=5):
        assert transformation_residual(example_expansion, example_df, g, tau) < 1e-6


@pytest.mark.slow
def test_example_lattice_error_estimates_are_small(example_expansion):
    valid = example_expansion.valid_mask()
    valid[0, 0] = False
    errors = example_expansion.errors[valid]
    assert np.all(errors > 0)
    assert np.max(errors) < 0.05


def test_trivial_form_satisfies_the_transformation_law(trivial_df):
    u_max = decay_index(12, 0.5, trivial_df.level)
    expansion = eisenstein_expansion(trivial_df, 12, u_max, truncation=64)
    for g, tau in _random_pairs(seed=12):
        assert transformation_residual(expansion, trivial_df, g, tau) < 1e-6

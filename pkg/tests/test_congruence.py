from fractions import Fraction

import pytest

from src.congruence import (
    IntegralityError,
    congruence_solve,
    constant_term,
    lift_weight,
    obstruction_check,
    pairing,
    stabilization_rank,
    verify_congruence,
)
from src.intlinalg import NoSolutionError
from src.selftest import delta_coefficients
from src.tables import (
    BasisTable,
    FourierTable,
    PrincipalPart,
    TableError,
    load_basis,
    load_fourier_table,
    load_principal_part,
)

TAU = delta_coefficients(10)


def _form(values: dict[int, int], depth: int, weight: int = 12) -> FourierTable:
    return FourierTable(
        weight=Fraction(weight),
        orders=(),
        coeffs={((), Fraction(n)): Fraction(c) for n, c in values.items()},
        depth=Fraction(depth),
        cusp=True,
    )


def _basis(*forms: FourierTable, depth: int, kind: str = "cusp") -> BasisTable:
    return BasisTable(
        weight=Fraction(12), orders=(), forms=forms, depth=Fraction(depth), kind=kind
    )


def _principal(terms: dict[int, int]) -> PrincipalPart:
    return PrincipalPart(orders=(), terms={((), Fraction(n)): c for n, c in terms.items()})


@pytest.fixture
def E(fixtures):
    return load_fourier_table(fixtures / "e12_exact.json")


@pytest.fixture
def delta(fixtures):
    return load_basis(fixtures / "delta_cusps.json")


def test_delta_coefficients():
    assert TAU == [0, 1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]


def test_pairing(delta):
    form = delta.forms[0]
    assert pairing(_principal({-1: 1}), form) == 1
    assert pairing(_principal({-2: 1, -1: 24}), form) == 0
    assert pairing(_principal({}), form) == 0
    assert pairing(_principal({-3: 2, -1: 1}), form) == 2 * 252 + 1


def test_pairing_checks_shapes(delta):
    p = PrincipalPart(orders=(2,), terms={((1,), Fraction(-3, 4)): 1})
    with pytest.raises(TableError, match="orders"):
        pairing(p, delta.forms[0])
    with pytest.raises(TableError, match="depth"):
        pairing(_principal({-11: 1}), delta.forms[0])


def test_obstruction(delta):
    blocked = obstruction_check(_principal({-1: 1}), delta)
    assert not blocked.admissible
    assert blocked.witness == 0
    assert blocked.value == 1

    assert obstruction_check(_principal({-2: 1, -1: 24}), delta).admissible
    assert obstruction_check(_principal({-1: 1}), _basis(depth=1)).admissible


def test_obstruction_does_not_depend_on_the_basis():
    first = _form({n: TAU[n] for n in range(1, 4)}, 3)
    p = _principal({-3: 1, -1: -252})
    assert obstruction_check(p, _basis(first, depth=3)).admissible
    assert obstruction_check(p, _basis(first.scaled(-5), depth=3)).admissible
    assert not obstruction_check(_principal({-3: 1}), _basis(first.scaled(2), depth=3)).admissible


def test_obstruction_needs_cusp_forms_of_enough_depth(delta):
    with pytest.raises(TableError, match="cusp forms"):
        obstruction_check(_principal({-1: 1}), _basis(depth=2, kind="full"))
    with pytest.raises(TableError, match="too short"):
        obstruction_check(_principal({-3: 1}), _basis(depth=2))


def test_example_lattice_has_no_obstructions(fixtures, example_df):
    cusps = load_basis(fixtures / "example5_cusps.json", example_df)
    p = PrincipalPart(orders=example_df.orders, terms={(example_df.zero(), Fraction(-1)): 1})
    assert obstruction_check(p, cusps).admissible


def test_constant_term(fixtures, E, delta):
    p = load_principal_part(fixtures / "ppart_q2_24q1.json")
    assert constant_term(p, E, delta) == -196560
    assert lift_weight(p, E) == -98280


def test_constant_term_of_an_obstructed_part(E, delta):
    p = _principal({-1: 1})
    assert constant_term(p, E, delta) == Fraction(-65520, 691)
    with pytest.raises(IntegralityError, match="not an integer"):
        lift_weight(p, E)


def test_constant_term_flags_non_integral_admissible_parts():
    E = FourierTable(
        weight=Fraction(12),
        orders=(),
        coeffs={((), Fraction(0)): Fraction(1), ((), Fraction(1)): Fraction(1, 2)},
        depth=Fraction(1),
    )
    with pytest.raises(IntegralityError, match="admissible"):
        constant_term(_principal({-1: 1}), E, _basis(depth=1))
    assert constant_term(_principal({-1: 1}), E) == Fraction(-1, 2)


def test_constant_term_needs_an_exact_normalizable_e():
    numeric = FourierTable(
        weight=Fraction(12), orders=(), coeffs={((), Fraction(0)): 1.0}, depth=Fraction(1)
    )
    with pytest.raises(TableError, match="exact"):
        constant_term(_principal({-1: 1}), numeric)
    no_constant = FourierTable(
        weight=Fraction(12),
        orders=(),
        coeffs={((), Fraction(1)): Fraction(1)},
        depth=Fraction(1),
    )
    with pytest.raises(TableError, match="constant term"):
        constant_term(_principal({-1: 1}), no_constant)


def test_691_congruence(E, delta):
    solution = congruence_solve(E, 691, delta, 10)
    assert solution.combo == (566,)
    assert solution.f.coefficient((), 1) == 566
    assert solution.f.coefficient((), 2) == 566 * -24
    assert verify_congruence(solution, E, 691, delta) is None
    assert solution.to_json()["combo"] == [566]


def test_composite_modulus(E, delta):
    # x must be even and congruent to 2 * 566 mod 691
    assert congruence_solve(E, 2 * 691, delta, 5).combo == (1132,)


def test_empty_basis_on_the_example_lattice(fixtures, example_df):
    cusps = load_basis(fixtures / "example5_cusps.json", example_df)
    E = FourierTable(
        weight=Fraction(5, 2),
        orders=example_df.orders,
        coeffs={(example_df.zero(), Fraction(0)): Fraction(1)},
        depth=Fraction(2),
    )
    solution = congruence_solve(E, 1, cusps, 2)
    assert solution.combo == ()
    assert solution.f.coeffs == {}


def test_unsolvable_system_names_the_obstruction(E):
    broken = _form({n: (0 if n == 2 else TAU[n]) for n in range(1, 11)}, 10)
    with pytest.raises(NoSolutionError) as caught:
        congruence_solve(E, 691, _basis(broken, depth=10), 10)
    assert caught.value.row == ((), Fraction(2))


def test_congruence_input_checks(E, delta):
    with pytest.raises(TableError, match="not an integer"):
        congruence_solve(E, 7, delta, 3)
    with pytest.raises(ValueError, match="positive"):
        congruence_solve(E, 0, delta, 3)
    with pytest.raises(TableError, match="exceeds"):
        congruence_solve(E, 691, delta, 11)


def test_verify_congruence_spots_a_tampered_solution(E, delta):
    solution = congruence_solve(E, 691, delta, 3)
    tampered = type(solution)(combo=(567,), f=solution.f, d=691, N=solution.N)
    assert verify_congruence(tampered, E, 691, delta) == ((), Fraction(1))


def test_stabilization(delta):
    report = stabilization_rank(delta, 1)
    assert report.stable
    assert report.ranks == (1,)

    empty = stabilization_rank(_basis(depth=2), 2)
    assert empty.stable
    assert empty.rank == 0

    first = _form({1: 1, 2: -24, 3: 252}, 3)
    second = _form({1: 1, 2: -24, 3: 0}, 3)
    report = stabilization_rank(_basis(first, second, depth=3), 3)
    assert report.ranks == (1, 1, 2)
    assert report.stable
    assert not stabilization_rank(_basis(first, second, depth=3), 2).stable

    half = stabilization_rank(_basis(first, depth=3), Fraction(5, 2))
    assert half.depths == (1, 2, Fraction(5, 2))
    assert half.to_json()["ranks"] == {"1": 1, "2": 1, "5/2": 1}

    with pytest.raises(TableError, match="shorter"):
        stabilization_rank(delta, 11)

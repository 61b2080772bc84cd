import pytest
from sympy import Matrix

from src.intlinalg import integer_rank, solve_congruence, solve_integer


def _satisfies(rows, rhs, modulus, x):
    return all((sum(a * b for a, b in zip(row, x, strict=True)) - r) % modulus == 0
               for row, r in zip(rows, rhs, strict=True))


def test_solve_integer():
    A = Matrix([[2, 4, 6], [1, 0, 3]])
    b = Matrix([8, 4])
    y = solve_integer(A, b)
    assert y is not None
    assert A * y == b
    assert solve_integer(Matrix([[2, 4]]), Matrix([3])) is None


def test_solve_integer_tall_system():
    A = Matrix([[1, 0], [0, 2], [1, 2]])
    assert solve_integer(A, Matrix([1, 2, 3])) == Matrix([1, 1])
    assert solve_integer(A, Matrix([1, 2, 4])) is None


def test_single_congruence():
    assert solve_congruence([[1]], [65520], 691, 1) == [566]
    assert solve_congruence([[2]], [1], 4, 1) is None


def test_system_of_congruences():
    rows, rhs = [[2], [3]], [4, 3]
    assert solve_congruence(rows, rhs, 6, 1) == [5]

    rows = [[1, 2, 0], [0, 3, 5], [4, 0, 7]]
    rhs = [3, 1, 6]
    x = solve_congruence(rows, rhs, 12, 3)
    assert x is not None
    assert all(0 <= v < 12 for v in x)
    assert _satisfies(rows, rhs, 12, x)


def test_degenerate_systems():
    assert solve_congruence([], [], 5, 2) == [0, 0]
    assert solve_congruence([[]], [3], 3, 0) == []
    assert solve_congruence([[]], [1], 3, 0) is None
    assert solve_congruence([[7, 9]], [5], 1, 2) == [0, 0]
    with pytest.raises(ValueError, match="positive"):
        solve_congruence([[1]], [1], 0, 1)
    with pytest.raises(ValueError, match="right-hand"):
        solve_congruence([[1]], [1, 2], 3, 1)


def test_integer_rank():
    assert integer_rank([[1, 2], [2, 4]], 2) == 1
    assert integer_rank([[1, 0], [0, 691]], 2) == 2
    assert integer_rank([], 3) == 0

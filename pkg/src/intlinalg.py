"""Linear systems and congruences over Z via the Smith normal form."""

from __future__ import annotations

from collections.abc import Sequence

from sympy import ZZ, Matrix, eye, zeros
from sympy.matrices.normalforms import smith_normal_decomp


class NoSolutionError(RuntimeError):
    def __init__(self, message: str, row: object = None):
        super().__init__(message)
        self.row = row


def _matrix(rows: Sequence[Sequence[int]], width: int) -> Matrix:
    if not rows:
        return zeros(0, width)
    return Matrix([[int(v) for v in row] for row in rows])


def solve_integer(A: Matrix, b: Matrix) -> Matrix | None:
    """Some y in Z^n with A y = b, or None.

    With D = U A V diagonal the system becomes D z = U b, y = V z.
    """
    m, n = A.shape
    if m == 0:
        return zeros(n, 1)
    D, U, V = smith_normal_decomp(A, domain=ZZ)
    if D != U * A * V:
        raise ArithmeticError("Smith normal form decomposition did not reproduce the matrix")
    target = U * b
    z = zeros(n, 1)
    for i in range(m):
        pivot = int(D[i, i]) if i < n else 0
        value = int(target[i, 0])
        if pivot == 0:
            if value != 0:
                return None
            continue
        if value % pivot:
            return None
        z[i, 0] = value // pivot
    return V * z


def solve_congruence(
    rows: Sequence[Sequence[int]], rhs: Sequence[int], modulus: int, width: int
) -> list[int] | None:
    """x in (Z/modulus)^width with rows . x = rhs mod modulus, reduced to [0, modulus)."""
    if modulus < 1:
        raise ValueError(f"Modulus must be positive, got {modulus}")
    if len(rows) != len(rhs):
        raise ValueError(f"{len(rows)} rows but {len(rhs)} right-hand sides")
    if width == 0 or not rows:
        if all(int(v) % modulus == 0 for v in rhs):
            return [0] * width
        return None
    if modulus == 1:
        return [0] * width

    A = _matrix(rows, width)
    augmented = A.row_join(modulus * eye(len(rows)))
    solution = solve_integer(augmented, Matrix([int(v) for v in rhs]))
    if solution is None:
        return None
    return [int(solution[i, 0]) % modulus for i in range(width)]


def integer_rank(rows: Sequence[Sequence[int]], width: int) -> int:
    if not rows or width == 0:
        return 0
    return int(_matrix(rows, width).rank())

import cmath
import itertools
import json
from fractions import Fraction

import numpy as np
import pytest

from src.lattice import (
    LatticeError,
    bilinear,
    discriminant_form,
    element_from_vector,
    gauss_sum,
    isometric_copy,
    load_gram,
    milgram_check,
    qvalue,
    validate_lattice,
)
from src.selftest import random_even_gram
from tests.lattices import A1_GRAM, A2_GRAM, EXAMPLE_GRAM, HYPERBOLIC_GRAM

E8_GRAM = [
    [2, -1, 0, 0, 0, 0, 0, 0],
    [-1, 2, -1, 0, 0, 0, 0, 0],
    [0, -1, 2, -1, 0, 0, 0, -1],
    [0, 0, -1, 2, -1, 0, 0, 0],
    [0, 0, 0, -1, 2, -1, 0, 0],
    [0, 0, 0, 0, -1, 2, -1, 0],
    [0, 0, 0, 0, 0, -1, 2, 0],
    [0, 0, -1, 0, 0, 0, 0, 2],
]


@pytest.mark.parametrize(
    ("gram", "message"),
    [
        ([], "square"),
        ([[2, 1]], "square"),
        ([[2, 1], [0, 2]], "not symmetric"),
        ([[1, 0], [0, 2]], "not even"),
        ([[2, 2], [2, 2]], "singular"),
        ([[2, 0.5], [0.5, 2]], "not an integer"),
    ],
)
def test_validate_lattice_rejects(gram, message):
    with pytest.raises(LatticeError, match=message):
        validate_lattice(gram)


def test_signature_and_weight():
    lat = validate_lattice(EXAMPLE_GRAM)
    assert (lat.sig_pos, lat.sig_neg) == (2, 3)
    assert lat.signature == -1
    assert lat.is_orthogonal_type
    assert lat.eisenstein_weight == Fraction(5, 2)

    a2 = validate_lattice(A2_GRAM)
    assert (a2.sig_pos, a2.sig_neg) == (2, 0)
    assert not a2.is_orthogonal_type
    with pytest.raises(LatticeError, match="not of the form"):
        a2.require_orthogonal_type()


def test_example_discriminant_form(example_df):
    assert example_df.orders == (2, 2, 2, 2, 2)
    assert example_df.size == 32
    assert example_df.level == 4
    units = [tuple(int(i == j) for j in range(5)) for i in range(5)]
    values = sorted(qvalue(example_df, unit) for unit in units)
    assert values == [Fraction(1, 4)] * 2 + [Fraction(3, 4)] * 3


def test_small_forms(a1_df, a2_df, trivial_df):
    assert a1_df.orders == (2,)
    assert qvalue(a1_df, (1,)) == Fraction(1, 4)
    assert a1_df.level == 4

    assert a2_df.orders == (3,)
    assert qvalue(a2_df, (1,)) == Fraction(1, 3)
    assert qvalue(a2_df, (2,)) == Fraction(1, 3)
    assert bilinear(a2_df, (1,), (1,)) == Fraction(2, 3)

    assert trivial_df.is_trivial
    assert trivial_df.size == 1
    assert trivial_df.level == 1
    assert trivial_df.elements.shape == (1, 0)


def test_element_arithmetic(example_df):
    alpha = (1, 0, 1, 1, 0)
    assert example_df.add(alpha, alpha) == example_df.zero()
    assert example_df.negate(alpha) == alpha
    assert example_df.element_at(example_df.index_of(alpha)) == alpha
    assert (example_df.negation == np.arange(32)).all()
    with pytest.raises(LatticeError, match="coordinates"):
        example_df.normalize((1, 0))


def test_value_tables_match_scalar_versions(a2_df, example_df):
    for df in (a2_df, example_df):
        values = df.value_numerators
        pairing = df.pairing_numerators()
        assert (pairing == pairing.T).all()
        for index in range(df.size):
            alpha = df.element_at(index)
            assert Fraction(int(values[index]), df.level) == qvalue(df, alpha)
            beta = df.element_at((3 * index + 1) % df.size)
            expected = bilinear(df, alpha, beta)
            column = df.index_of(beta)
            assert Fraction(int(pairing[index, column]), df.level) == expected


def test_element_from_vector(example_df):
    alpha = element_from_vector(example_df, [Fraction(1, 2), 0, 0, 0, 0])
    assert qvalue(example_df, alpha) == Fraction(1, 4)
    beta = element_from_vector(example_df, [0, 0, Fraction(1, 2), 0, 0])
    assert qvalue(example_df, beta) == Fraction(3, 4)
    assert element_from_vector(example_df, [1, 0, 0, 0, 0]) == example_df.zero()
    with pytest.raises(LatticeError, match="dual lattice"):
        element_from_vector(example_df, [Fraction(1, 3), 0, 0, 0, 0])


def test_gauss_sums(example_df, a2_df, trivial_df):
    assert cmath.isclose(gauss_sum(example_df).embed(), 4 - 4j, abs_tol=1e-12)
    assert cmath.isclose(gauss_sum(a2_df).embed(), 3**0.5 * 1j, abs_tol=1e-12)
    assert gauss_sum(trivial_df) == 1


@pytest.mark.parametrize("gram", [EXAMPLE_GRAM, A1_GRAM, A2_GRAM, HYPERBOLIC_GRAM, E8_GRAM,
                                  [[-2, 1], [1, 4]], [[4, 1, 0], [1, -6, 2], [0, 2, 8]]])
def test_milgram(gram):
    assert milgram_check(validate_lattice(gram))


def test_isometric_copy_keeps_the_form():
    lat = validate_lattice(A2_GRAM)
    copy = isometric_copy(lat, [[1, 1], [0, 1]])
    assert copy.gram == ((2, 3), (3, 6))
    assert all(type(v) is int for row in copy.gram for v in row)
    original, moved = discriminant_form(lat), discriminant_form(copy)
    assert moved.level == original.level
    assert sorted(moved.value_numerators) == sorted(original.value_numerators)
    with pytest.raises(LatticeError, match="unimodular"):
        isometric_copy(lat, [[2, 0], [0, 1]])


def _images_of_generators(original, moved, basis_change):
    """Classes in ``original`` of the generators of ``moved`` under v -> P v."""
    images = []
    for generator in moved.generators:
        vector = [
            sum((p * g for p, g in zip(row, generator, strict=True)), Fraction(0))
            for row in basis_change
        ]
        images.append(element_from_vector(original, vector))
    return images


def _image(original, images, element):
    result = original.zero()
    for coefficient, image in zip(element, images, strict=True):
        result = original.add(result, [coefficient * c for c in image])
    return result


@pytest.mark.parametrize(
    ("gram", "basis_change"),
    [
        (A2_GRAM, [[1, 1], [0, 1]]),
        ([[-2, 1], [1, 4]], [[2, 1], [1, 1]]),
        (
            EXAMPLE_GRAM,
            [[1, 1, 0, 0, 0], [0, 1, 0, 0, 1], [0, 0, 1, 1, 0], [0, 0, 0, 1, 0], [0, 0, 0, 0, 1]],
        ),
    ],
)
def test_generator_map_between_smith_forms_preserves_the_form(gram, basis_change):
    lat = validate_lattice(gram)
    original = discriminant_form(lat)
    moved = discriminant_form(isometric_copy(lat, basis_change))
    images = _images_of_generators(original, moved, basis_change)
    mapped = {tuple(x): _image(original, images, x) for x in moved.elements.tolist()}

    assert len(set(mapped.values())) == original.size == moved.size
    for x, image in mapped.items():
        assert qvalue(moved, x) == qvalue(original, image)
    for x, y in itertools.product(mapped, repeat=2):
        assert bilinear(moved, x, y) == bilinear(original, mapped[x], mapped[y])


def _sum_indices(df):
    if df.is_trivial:
        return np.zeros((1, 1), dtype=np.int64)
    orders = np.array(df.orders, dtype=np.int64)
    sums = (df.elements[:, None, :] + df.elements[None, :, :]) % orders
    flat = np.ravel_multi_index(sums.reshape(-1, len(df.orders)).T, df.orders)
    return flat.reshape(df.size, df.size)


_rng = np.random.default_rng(11)
SCAN_GRAMS = [
    pytest.param(A1_GRAM, id="A1"),
    pytest.param(A2_GRAM, id="A2"),
    pytest.param(EXAMPLE_GRAM, id="example"),
    pytest.param([[4, 1, 0], [1, -6, 2], [0, 2, 8]], id="order-216"),
    pytest.param(random_even_gram(_rng, 2, max_det=64), id="random-rank-2"),
    pytest.param(random_even_gram(_rng, 3, max_det=64), id="random-rank-3"),
    pytest.param(random_even_gram(_rng, 4, max_det=512), id="random-rank-4"),
]


@pytest.mark.parametrize("gram", SCAN_GRAMS)
def test_form_tables_are_consistent_on_every_pair(gram):
    df = discriminant_form(validate_lattice(gram))
    assert df.size <= 512
    values = df.value_numerators
    pairing = df.pairing_numerators()
    total = _sum_indices(df)

    # q(a + b) - q(a) - q(b) = (a, b) mod 1
    assert ((values[total] - values[:, None] - values[None, :] - pairing) % df.level == 0).all()
    assert (values[df.negation] == values).all()
    assert (2 * df.size) % df.level == 0

    if df.size <= 64:
        for a, b in itertools.product(map(tuple, df.elements.tolist()), repeat=2):
            defect = qvalue(df, df.add(a, b)) - qvalue(df, a) - qvalue(df, b)
            assert (defect - bilinear(df, a, b)).denominator == 1
        for a in map(tuple, df.elements.tolist()):
            assert qvalue(df, df.negate(a)) == qvalue(df, a)


def test_e8_is_unimodular():
    df = discriminant_form(validate_lattice(E8_GRAM))
    assert df.is_trivial
    assert validate_lattice(E8_GRAM).signature == 8


def test_load_gram(tmp_path, fixtures):
    assert load_gram(fixtures / "example5.json").gram == tuple(map(tuple, EXAMPLE_GRAM))

    csv_path = tmp_path / "a2.csv"
    csv_path.write_text("2,1\n1,2\n")
    assert load_gram(csv_path).gram == ((2, 1), (1, 2))

    bad = tmp_path / "bad.csv"
    bad.write_text("2,x\n1,2\n")
    with pytest.raises(LatticeError, match="integers"):
        load_gram(bad)

    no_key = tmp_path / "no_key.json"
    no_key.write_text(json.dumps({"matrix": A1_GRAM}))
    with pytest.raises(LatticeError, match="'gram'"):
        load_gram(no_key)

    with pytest.raises(LatticeError, match="extension"):
        load_gram(tmp_path / "gram.txt")

import itertools

import numpy as np
import pytest

from oracles import PolyField
from qxbtpir.fieldcore import (
    FieldError, FieldSpec, field_arith, field_make, field_of_order, fourier_matrix,
    is_irreducible, smallest_prime_power_at_least,
)

# Frozen from tests/oracles.py (schoolbook polynomial arithmetic).
GF8_MUL = [
    [0, 0, 0, 0, 0, 0, 0, 0], [0, 1, 2, 3, 4, 5, 6, 7], [0, 2, 4, 6, 3, 1, 7, 5],
    [0, 3, 6, 5, 7, 4, 1, 2], [0, 4, 3, 7, 6, 2, 5, 1], [0, 5, 1, 4, 2, 7, 3, 6],
    [0, 6, 7, 1, 5, 3, 2, 4], [0, 7, 5, 2, 1, 6, 4, 3],
]
DEFAULT_MODULI = {(2, 2): (1, 1, 1), (2, 3): (1, 1, 0, 1), (3, 2): (1, 0, 1),
                  (2, 4): (1, 1, 0, 0, 1), (5, 2): (2, 0, 1)}
SMALL_FIELDS = [(2, 1), (3, 1), (5, 1), (7, 1), (2, 2), (2, 3), (3, 2), (2, 4), (5, 2), (2, 5), (2, 6)]


def test_prime_field_gf2():
    F = field_make(2, 1)
    assert F.q == 2 and F.p == 2 and F.r == 1


def test_gf8_default_modulus_is_x3_x_1():
    F = field_make(2, 3)
    assert F.q == 8
    assert F.modulus == (1, 1, 0, 1)


@pytest.mark.parametrize("pr", sorted(DEFAULT_MODULI))
def test_default_modulus_matches_oracle(pr):
    assert field_make(*pr).modulus == DEFAULT_MODULI[pr]
    assert PolyField(*pr).modulus == DEFAULT_MODULI[pr]


def test_rejections():
    with pytest.raises(FieldError):
        field_make(4, 1)
    with pytest.raises(FieldError):
        field_make(2, 2, (1, 0, 1))  # x^2 + 1 = (x + 1)^2 over Z_2
    with pytest.raises(FieldError):
        field_make(2, 21)


def test_small_examples():
    F5 = field_make(5)
    assert int(F5.add(3, 4)) == 2
    F8 = field_make(2, 3)
    x, x2 = 2, 4  # indices of x and x^2
    assert int(F8.mul(x, x2)) == 3  # x + 1
    assert int(field_make(7).inv(3)) == 5
    with pytest.raises(ZeroDivisionError):
        F5.inv(0)


def test_gf8_table_frozen():
    F = field_make(2, 3)
    a, b = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    assert F.mul(a, b).tolist() == GF8_MUL


@pytest.mark.parametrize("pr", [(3, 2), (2, 4), (5, 2)])
def test_arithmetic_matches_oracle(pr):
    F, O = field_make(*pr), PolyField(*pr)
    for a, b in itertools.product(range(F.q), repeat=2):
        assert int(F.add(a, b)) == O.add(a, b)
        assert int(F.mul(a, b)) == O.mul(a, b)
        assert int(F.sub(a, b)) == O.sub(a, b)


def test_log_table_path_matches_oracle():
    F, O = field_make(2, 9), PolyField(2, 9)  # q = 512 uses log/exp tables
    rng = np.random.default_rng(3)
    for a, b in rng.integers(0, 512, size=(200, 2)):
        assert int(F.mul(int(a), int(b))) == O.mul(int(a), int(b))
    for a in rng.integers(1, 512, size=50):
        assert int(F.mul(int(a), F.inv(int(a)))) == 1


@pytest.mark.parametrize("pr", SMALL_FIELDS)
def test_inverse_exhaustive(pr):
    F = field_make(*pr)
    a = np.arange(1, F.q)
    assert np.all(F.mul(a, F.inv(a)) == 1)


@pytest.mark.parametrize("pr", SMALL_FIELDS)
def test_trace_linear_and_surjective(pr):
    F = field_make(*pr)
    a, b = np.meshgrid(F.elements(), F.elements(), indexing="ij")
    assert np.array_equal(F.trace(F.add(a, b)) % F.p, (F.trace(a) + F.trace(b)) % F.p)
    for c in range(F.p):
        assert np.array_equal(F.trace(F.mul(c, a)) % F.p, (c * F.trace(a)) % F.p)
    assert set(F.trace(F.elements()).tolist()) == set(range(F.p))


def test_trace_examples():
    assert int(field_make(5).trace(3)) == 3
    F4 = field_make(2, 2)
    assert int(F4.trace(0)) == 0 and int(F4.trace(1)) == 0
    g = F4.generator
    assert int(F4.trace(g)) == 1
    assert [int(F4.trace(a)) for a in range(4)] == [PolyField(2, 2).trace(a) for a in range(4)]


def test_character_examples():
    assert field_make(5).character(0) == pytest.approx(1)
    assert field_make(2).character(1) == pytest.approx(-1)
    F4 = field_make(2, 2)
    assert F4.character(F4.generator) == pytest.approx(-1)


@pytest.mark.parametrize("q", [2, 3, 4, 5, 8, 9])
def test_character_homomorphism_and_fourier(q):
    F = field_of_order(q)
    a, b = np.meshgrid(F.elements(), F.elements(), indexing="ij")
    assert np.allclose(F.character(F.add(a, b)), F.character(a) * F.character(b))
    M = fourier_matrix(F)
    assert np.allclose(M @ M.conj().T, q * np.eye(q), atol=1e-9)


def test_field_element_wrapper():
    F = field_make(2, 3)
    x = F(2)
    assert int(x * F(4)) == 3
    assert int(x / x) == 1
    assert (x + x) == F(0)
    assert x.coeffs == (0, 1, 0)
    assert int(x ** 7) == 1
    assert int(field_arith(F(3), F(5), "mul")) == GF8_MUL[3][5]
    with pytest.raises(FieldError):
        _ = F(1) + field_make(2, 2)(1)


def test_serialization_round_trip():
    F = field_make(3, 2)
    d = F.to_dict()
    assert d == {"p": 3, "r": 2, "modulus": [1, 0, 1]}
    assert FieldSpec.from_dict(d) is F


def test_prime_power_search():
    assert smallest_prime_power_at_least(8) == (2, 3)
    assert smallest_prime_power_at_least(10) == (11, 1)
    assert smallest_prime_power_at_least(14) == (2, 4)
    assert is_irreducible((1, 1, 0, 1), 2)
    assert not is_irreducible((1, 0, 1), 2)

from fractions import Fraction

import pytest

from vnoether import GrassmannAlgebra


def test_generators_anticommute():
    alg = GrassmannAlgebra(3)
    a, b = alg.generator(0), alg.generator(1)
    assert a * b == -(b * a)
    assert (a * a).is_zero()


def test_scalar_arithmetic():
    alg = GrassmannAlgebra(2)
    x = alg.scalar(Fraction(1, 2)) + alg.generator(0) * 3
    y = x - alg.generator(0) * 3
    assert y == alg.scalar(Fraction(1, 2))
    assert (x * 0).is_zero()


def test_parity():
    alg = GrassmannAlgebra(3)
    assert alg.scalar(2).parity == 0
    assert alg.generator(1).parity == 1
    assert (alg.generator(0) * alg.generator(1)).parity == 0
    mixed = alg.scalar(1) + alg.generator(0)
    assert mixed.parity is None


def test_range_check():
    alg = GrassmannAlgebra(2)
    with pytest.raises(ValueError):
        alg.generator(2)

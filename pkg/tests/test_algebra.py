import random
from fractions import Fraction

import pytest

from vnoether import (EVEN, KIND_GHOST, ODD, DeclarationError, EvaluationError,
                      FieldSymbol, GradedPoly, GrassmannAlgebra, JetCapError,
                      coordinate_symbol, jet, normalize, poly_from_data,
                      poly_to_data)
from vnoether.algebra import mi_binomial, mi_permutations, multi_index

from helpers import CH2 as C, PHI, PSI, rand_poly

P = GradedPoly.variable


def test_multi_index_canonical():
    assert multi_index((2, 0, 1)) == (0, 1, 2)
    assert multi_index(()) == ()
    assert mi_permutations((0, 0, 1)) == 3
    assert mi_binomial((0, 0, 1), (0,)) == 2


def test_odd_square_vanishes():
    c = jet(C)
    assert (P(c) * P(c)).is_zero()


def test_reordering_sign():
    c, cx = jet(C), jet(C, (0,))
    # c_x*c normalizes to -c*c_x, so the difference collapses to one
    # monomial with coefficient 2 after reordering with sign
    assert P(cx) * P(c) == -(P(c) * P(cx))
    assert P(cx) * P(c) - P(c) * P(cx) == -2 * (P(c) * P(cx))
    assert (P(cx) * P(c) + P(c) * P(cx)).is_zero()


def test_like_terms_collect():
    phi = P(jet(PHI))
    assert phi + phi == 2 * phi


def test_normalize_tree_and_idempotence():
    symbols = {"phi": PHI, "c": C}
    tree = ("add",
            ("mul", ("var", "c", ()), ("var", "c", ())),
            ("pow", ("var", "phi", ()), 2))
    poly = normalize(tree, symbols)
    assert poly == P(jet(PHI)) ** 2
    assert normalize(poly, symbols) == poly


def test_normalize_unknown_symbol():
    with pytest.raises(DeclarationError):
        normalize(("var", "zeta", ()), {"phi": PHI})


def test_canonical_form_uniqueness_random():
    # random reassociation/reordering of products denote the same element
    rng = random.Random(5)
    vars_ = [jet(PHI), jet(PHI, (0,)), jet(PSI), jet(C), jet(C, (0,))]
    for _ in range(100):
        factors = [rng.choice(vars_) for _ in range(rng.randint(2, 5))]
        left = GradedPoly.constant(1)
        for v in factors:
            left = left * P(v)
        # reassociate: random split point, then multiply the blocks
        k = rng.randint(1, len(factors) - 1)
        a = GradedPoly.constant(1)
        for v in factors[:k]:
            a = a * P(v)
        b = GradedPoly.constant(1)
        for v in factors[k:]:
            b = b * P(v)
        assert a * b == left
        # reorder with the graded sign: count odd transpositions via bubble
        perm = list(range(len(factors)))
        rng.shuffle(perm)
        sign = 1
        order = list(perm)
        for i in range(len(order)):
            for j in range(len(order) - 1 - i):
                if order[j] > order[j + 1]:
                    if factors[order[j]].parity and factors[order[j + 1]].parity:
                        sign = -sign
                    order[j], order[j + 1] = order[j + 1], order[j]
        right = GradedPoly.constant(sign)
        for idx in perm:
            right = right * P(factors[idx])
        assert right == left


def test_graded_commutativity_random():
    rng = random.Random(6)
    done = 0
    while done < 200:
        p = rand_poly(rng, parity=rng.randint(0, 1))
        q = rand_poly(rng, parity=rng.randint(0, 1))
        if p.is_zero() or q.is_zero():
            continue
        sign = -1 if (p.parity and q.parity) else 1
        assert p * q == (q * p) * Fraction(sign)
        done += 1


def test_mixed_parity_product_example():
    phi, c = P(jet(PHI)), P(jet(C))
    assert (phi + c) * (phi - c) == phi ** 2


def test_partial_examples():
    phi, c, cx = jet(PHI), jet(C), jet(C, (0,))
    assert (P(phi) ** 2).partial(phi) == 2 * P(phi)
    assert (P(c) * P(cx)).partial(c) == P(cx)
    assert (P(c) * P(cx)).partial(cx) == -P(c)
    assert (P(phi)).partial(jet(PSI)).is_zero()
    assert P(phi).partial(phi) == GradedPoly.constant(1)


def test_partial_left_leibniz_random():
    rng = random.Random(7)
    done = 0
    while done < 80:
        p = rand_poly(rng, parity=rng.randint(0, 1))
        q = rand_poly(rng, parity=rng.randint(0, 1))
        if p.is_zero() or q.is_zero():
            continue
        v = rng.choice([jet(PHI), jet(C), jet(C, (0,)), jet(PSI, (0,))])
        sign = -1 if (v.parity and p.parity) else 1
        lhs = (p * q).partial(v)
        rhs = p.partial(v) * q + Fraction(sign) * (p * q.partial(v))
        assert lhs == rhs
        done += 1


def test_total_derivative_examples():
    phi, phix, phixx = jet(PHI), jet(PHI, (0,)), jet(PHI, (0, 0))
    c, cx, cxx = jet(C), jet(C, (0,)), jet(C, (0, 0))
    assert (P(phi) * P(phix)).total_derivative(0) == P(phix) ** 2 + P(phi) * P(phixx)
    assert (P(c) * P(cx)).total_derivative(0) == P(c) * P(cxx)
    p = P(jet(PHI))
    assert p.total_derivative(0).total_derivative(1) == P(jet(PHI, (0, 1)))
    assert p.total_derivative(1).total_derivative(0) == P(jet(PHI, (0, 1)))


def test_total_derivatives_commute_random():
    rng = random.Random(8)
    for _ in range(120):
        p = rand_poly(rng, dim=2, max_order=3)
        a = p.total_derivative(0).total_derivative(1)
        b = p.total_derivative(1).total_derivative(0)
        assert a == b


def test_coordinate_symbols():
    x0, x1 = coordinate_symbol(0), coordinate_symbol(1)
    p = P(jet(x0)) ** 2 * P(jet(PHI))
    dp = p.total_derivative(0)
    assert dp == 2 * P(jet(x0)) * P(jet(PHI)) + P(jet(x0)) ** 2 * P(jet(PHI, (0,)))
    assert P(jet(x0)).total_derivative(1).is_zero()
    assert P(jet(x1)).total_derivative(1) == GradedPoly.constant(1)
    with pytest.raises(DeclarationError):
        jet(x0, (0,))


def test_jet_cap():
    p = P(jet(PHI, (0,) * 6))
    with pytest.raises(JetCapError):
        p.total_derivative(0, cap=6)
    assert p.total_derivative(0, cap=7) == P(jet(PHI, (0,) * 7))


def test_evaluate_examples():
    alg = GrassmannAlgebra(4)
    phi = jet(PHI)
    assert (P(phi) ** 2).evaluate({phi: Fraction(3)}, alg) == alg.scalar(9)
    c, cx = jet(C), jet(C, (0,))
    t1, t2 = alg.generator(0), alg.generator(1)
    assert (P(c) * P(c)).evaluate({c: t1}, alg).is_zero()
    assert (P(c) * P(cx)).evaluate({c: t1, cx: t2}, alg) == t1 * t2
    with pytest.raises(EvaluationError):
        P(phi).evaluate({}, alg)


def test_evaluate_homomorphism_random():
    rng = random.Random(9)
    alg = GrassmannAlgebra(4)
    variables = [jet(PHI), jet(PSI), jet(C), jet(FieldSymbol("b", KIND_GHOST, ODD))]
    done = 0
    while done < 100:
        p = rand_poly(rng, max_order=0, max_factors=2)
        q = rand_poly(rng, max_order=0, max_factors=2)
        assign = {}
        gens = iter(range(4))
        for v in sorted(p.variables() | q.variables(),
                        key=lambda v: v.symbol.name):
            if v.parity == ODD:
                assign[v] = alg.generator(next(gens))
            else:
                assign[v] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
        ev = lambda r: r.evaluate(assign, alg)
        assert ev(p * q) == ev(p) * ev(q)
        assert ev(p + q) == ev(p) + ev(q)
        done += 1


def test_serialization_roundtrip():
    rng = random.Random(10)
    symbols = {s.name: s for s in (PHI, PSI, C)}
    for _ in range(25):
        p = rand_poly(rng, symbols=(PHI, PSI, C), dim=2)
        data = poly_to_data(p)
        assert poly_from_data(data, symbols) == p
    assert poly_to_data(GradedPoly.zero()) == []


def test_antifield_parity_invariant():
    from vnoether import antifield
    assert antifield(PHI).parity == ODD
    assert antifield(C).parity == EVEN
    assert antifield(PHI).base is PHI

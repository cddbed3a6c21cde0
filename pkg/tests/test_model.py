from fractions import Fraction

import pytest

from vnoether import (GradedPoly, check_noether_identity, euler_lagrange, jet,
                      load_model, poly_to_data, print_elaborated)
from vnoether.model import ElaborationError, ParseError, parse

P = GradedPoly.variable

MAXWELL = """
dim 2
metric euclidean
field A[mu] even
ghost c odd for gauge
let F[mu,nu] = d[mu](A[nu]) - d[nu](A[mu])
lagrangian (-1/4)*F[mu,nu]*F[mu,nu]
identity gauge: 1*d[nu](EL(A[nu]))
symmetry gauge_sym: A[mu] <- -d[mu](c)
"""


def test_parse_minimal_scalar():
    model = load_model("dim 1\nfield phi even\nlagrangian (1/2)*d[x](phi)^2\n")
    phi = model.symbols["phi"]
    assert model.lagrangian.density == Fraction(1, 2) * P(jet(phi, (0,))) ** 2


def test_parse_maxwell():
    src = parse(MAXWELL)
    assert src.dim == 2
    assert [f[0] for f in src.fields] == ["A"]
    assert list(src.identities) == ["gauge"]


def test_elaborate_maxwell_euclidean():
    model = load_model(MAXWELL)
    a0, a1 = model.symbols["A0"], model.symbols["A1"]
    f01 = P(jet(a1, (0,))) - P(jet(a0, (1,)))
    assert model.lagrangian.density == -Fraction(1, 2) * f01 * f01
    el = euler_lagrange(model.lagrangian)
    assert check_noether_identity(model.identities["gauge"], el)
    c = model.symbols["c"]
    sym = model.symmetries["gauge_sym"]
    assert sym.component(a0) == -P(jet(c, (0,)))
    assert sym.component(a1) == -P(jet(c, (1,)))
    assert model.ghost_of("gauge") is c


def test_elaborate_maxwell_minkowski_signs():
    model = load_model(MAXWELL.replace("metric euclidean",
                                       "metric minkowski +-"))
    a0, a1 = model.symbols["A0"], model.symbols["A1"]
    f01 = P(jet(a1, (0,))) - P(jet(a0, (1,)))
    assert model.lagrangian.density == Fraction(1, 2) * f01 * f01
    el = euler_lagrange(model.lagrangian)
    assert check_noether_identity(model.identities["gauge"], el)


def test_metric_flip_preserves_monomial_support():
    euclid = load_model(MAXWELL)
    mink = load_model(MAXWELL.replace("metric euclidean",
                                      "metric minkowski +-"))
    support_e = {k for k in euclid.lagrangian.density.terms}
    support_m = {k for k in mink.lagrangian.density.terms}
    # identical monomial structure; only coefficient signs change
    assert {tuple((v.symbol.name, v.index, e) for v, e in key[0])
            for key in support_e} \
        == {tuple((v.symbol.name, v.index, e) for v, e in key[0])
            for key in support_m}


def test_dim1_family_collapses():
    model = load_model("dim 1\nfield B[mu] even\nlagrangian B[0]^2\n")
    assert set(model.symbols) == {"B0"}


def test_summation_arity_error():
    with pytest.raises(ElaborationError, match="3 times"):
        load_model("dim 2\nfield a[m] even\nlagrangian a[mu]*a[mu]*a[mu]\n")


def test_unbound_index_error():
    with pytest.raises(ElaborationError, match="appears once"):
        load_model("dim 2\nfield a[m] even\nlagrangian a[mu]\n")


def test_parse_error_position():
    with pytest.raises(ParseError) as err:
        parse("dim 2\nfield ) even\n")
    assert err.value.line == 2


def test_duplicate_declaration():
    with pytest.raises(ParseError, match="duplicate"):
        parse("field a even\nfield a even\n")


def test_unknown_symbol():
    with pytest.raises(ElaborationError, match="unknown"):
        load_model("dim 1\nfield a even\nlagrangian a*b\n")


def test_macro_hygiene():
    # the summation index inside the macro body must not capture the
    # caller's letters
    model = load_model("""
dim 2
field a[m] even
field b[m] even
let T[mu] = a[nu]*d[nu](b[mu])
lagrangian T[nu]*a[nu]
""")
    a0, a1 = model.symbols["a0"], model.symbols["a1"]
    b0, b1 = model.symbols["b0"], model.symbols["b1"]
    expect = GradedPoly.zero()
    for nu in range(2):
        t = GradedPoly.zero()
        for inner in range(2):
            b = (b0, b1)[nu]
            t = t + P(jet((a0, a1)[inner])) * P(jet(b, (inner,)))
        expect = expect + t * P(jet((a0, a1)[nu]))
    assert model.lagrangian.density == expect


def test_ghost_parity_validation():
    bad = MAXWELL.replace("ghost c odd for gauge", "ghost c even for gauge")
    with pytest.raises(ElaborationError, match="parity"):
        load_model(bad)


def test_empty_model_defaults():
    model = load_model("")
    assert model.dim == 1
    assert model.lagrangian.density.is_zero()
    assert not model.identities and not model.symmetries


def test_division_by_constant_only():
    load_model("dim 1\nfield a even\nlagrangian a^2/4\n")
    with pytest.raises(ElaborationError, match="division"):
        load_model("dim 1\nfield a even\nlagrangian a/a\n")


def test_print_parse_roundtrip():
    for source in (MAXWELL,
                   MAXWELL.replace("metric euclidean", "metric minkowski +-"),
                   "dim 1\nfield phi even\nlagrangian (1/2)*d[x](phi)^2\n"):
        model = load_model(source)
        text = print_elaborated(model)
        again = load_model(text)
        assert again.dim == model.dim
        assert again.signature == model.signature
        assert poly_to_data(again.lagrangian.density) \
            == poly_to_data(model.lagrangian.density)
        assert set(again.symbols) == set(model.symbols)
        for name, op in model.identities.items():
            got = {(s.name, i): poly_to_data(p)
                   for (s, i), p in again.identities[name].coefficients.items()}
            want = {(s.name, i): poly_to_data(p)
                    for (s, i), p in op.coefficients.items()}
            assert got == want
        for name, ups in model.symmetries.items():
            got = {s.name: poly_to_data(p)
                   for s, p in again.symmetries[name].vertical}
            want = {s.name: poly_to_data(p) for s, p in ups.vertical}
            assert got == want
        # printing is idempotent once flat
        assert print_elaborated(again) == text

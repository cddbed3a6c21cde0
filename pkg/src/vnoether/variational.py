"""Variational subcomplex operators.

Euler-Lagrange expressions, the Lepage equivalent with its coefficient
recursion, the first variational formula as an executable residual, an
exactness decision procedure for horizontal forms (ansatz plus exact
linear solve, with the Euler-Lagrange obstruction separating "provably
not exact" from "ansatz too small"), variational-symmetry tests, Noether
currents and weak-conservation witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, combinations_with_replacement
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .algebra import (DEFAULT_JET_CAP, EVEN, ODD, FieldSymbol, GradedPoly,
                      jet, mi_add, mi_permutations, mi_remove,
                      multi_indices, multi_indices_up_to, var_key)
from .forms import (GeneralizedVectorField, MixedForm,
                    UnsupportedDerivation, contract, lie_derivative,
                    omega_contracted, omega_pair_contracted, prolong)
from .linsolve import solve_sparse

EXACT = "exact"
NOT_EXACT = "not_exact"
BOUND_EXHAUSTED = "bound_exhausted"


class ConsistencyError(ValueError):
    """A supplied witness does not satisfy the identity it claims to."""


@dataclass(frozen=True)
class Lagrangian:
    density: GradedPoly
    dim: int
    parity: int = EVEN
    jet_cap: int = DEFAULT_JET_CAP

    def __post_init__(self):
        if self.density.jet_order() > self.jet_cap:
            raise ValueError("Lagrangian exceeds the jet cap")
        p = self.density.parity
        if p is not None and p != self.parity:
            raise ValueError("declared parity does not match the density")

    def form(self) -> MixedForm:
        return MixedForm.density(self.density, self.dim)

    def field_symbols(self) -> list:
        return sorted((s for s in self.density.symbols() if s.coord is None),
                      key=lambda s: s.sort_key)


@dataclass
class EulerLagrange:
    components: dict  # FieldSymbol -> GradedPoly

    def component(self, sym: FieldSymbol) -> GradedPoly:
        return self.components.get(sym, GradedPoly.zero())

    def is_zero(self) -> bool:
        return all(p.is_zero() for p in self.components.values())

    def sorted_items(self):
        return sorted(self.components.items(), key=lambda it: it[0].sort_key)


@dataclass
class Current:
    components: dict  # coordinate index -> GradedPoly
    dim: int

    def component(self, mu: int) -> GradedPoly:
        return self.components.get(mu, GradedPoly.zero())

    def form(self) -> MixedForm:
        out = {}
        for mu, poly in self.components.items():
            if poly.is_zero():
                continue
            horiz, sign = omega_contracted(self.dim, mu)
            cur = out.get(((), horiz), GradedPoly.zero())
            s = cur + poly * Fraction(sign)
            if s.is_zero():
                out.pop(((), horiz), None)
            else:
                out[((), horiz)] = s
        return MixedForm(self.dim, out)

    def divergence(self, cap: int = DEFAULT_JET_CAP) -> GradedPoly:
        out = GradedPoly.zero()
        for mu, poly in self.components.items():
            out = out + poly.total_derivative(mu, cap)
        return out

    @staticmethod
    def from_form(form: MixedForm) -> "Current":
        comps = {}
        for (contact, horiz), poly in form.components.items():
            if contact or len(horiz) != form.dim - 1:
                raise ValueError("not a horizontal (n-1)-form")
            missing = [i for i in range(form.dim) if i not in horiz]
            mu = missing[0]
            _, sign = omega_contracted(form.dim, mu)
            comps[mu] = poly * Fraction(sign)
        return Current(comps, form.dim)


@dataclass
class Superpotential:
    """Antisymmetric pair table; the (n-2)-form is half the trace against
    omega_{nu mu}."""
    components: dict  # (nu, mu) -> GradedPoly, antisymmetric
    dim: int

    def component(self, nu: int, mu: int) -> GradedPoly:
        p = self.components.get((nu, mu))
        if p is not None:
            return p
        q = self.components.get((mu, nu))
        if q is not None:
            return -q
        return GradedPoly.zero()

    def is_antisymmetric(self) -> bool:
        for (nu, mu), p in self.components.items():
            if nu == mu and not p.is_zero():
                return False
            q = self.components.get((mu, nu))
            if q is None:
                continue
            if not (p + q).is_zero():
                return False
        return True

    def form(self) -> MixedForm:
        out = {}
        for nu in range(self.dim):
            for mu in range(nu + 1, self.dim):
                poly = self.component(nu, mu)
                if poly.is_zero():
                    continue
                horiz, sign = omega_pair_contracted(self.dim, nu, mu)
                cur = out.get(((), horiz), GradedPoly.zero())
                s = cur + poly * Fraction(sign)
                if not s.is_zero():
                    out[((), horiz)] = s
                elif ((), horiz) in out:
                    del out[((), horiz)]
        return MixedForm(self.dim, out)

    def divergence(self, mu: int, cap: int = DEFAULT_JET_CAP) -> GradedPoly:
        """d_nu U^{nu mu}."""
        out = GradedPoly.zero()
        for nu in range(self.dim):
            if nu == mu:
                continue
            out = out + self.component(nu, mu).total_derivative(nu, cap)
        return out


# ---------------------------------------------------------------------------
# Euler-Lagrange operator and the variational one-form

def euler_lagrange(L: Lagrangian,
                   symbols: Optional[Sequence[FieldSymbol]] = None) -> EulerLagrange:
    """E_A = sum over multi-indices of (-d)_I applied to the left partial."""
    if symbols is None:
        symbols = L.field_symbols()
    comps = {}
    for sym in symbols:
        out = GradedPoly.zero()
        for v in L.density.variables():
            if v.symbol != sym:
                continue
            term = L.density.partial(v).total_derivative_multi(v.index, L.jet_cap)
            out = out + (term if len(v.index) % 2 == 0 else -term)
        comps[sym] = out
    return EulerLagrange(comps)


def euler_lagrange_form(L: Lagrangian,
                        el: Optional[EulerLagrange] = None) -> MixedForm:
    """The source form: contact slot against each Euler-Lagrange component."""
    if el is None:
        el = euler_lagrange(L)
    out = MixedForm.zero(L.dim)
    for sym, poly in el.sorted_items():
        if poly.is_zero():
            continue
        out = out + MixedForm.contact(jet(sym), L.dim).wedge(
            MixedForm.density(poly, L.dim))
    return out


# ---------------------------------------------------------------------------
# Lepage equivalent

def lepage_table(L: Lagrangian) -> dict:
    """Tensor-normalized coefficient recursion with the free local functions
    set to zero; totally symmetric in all indices, keyed by (symbol,
    multi-index).  Division by the permutation count converts the multiset
    partial derivative into the symmetric tensor component."""
    density = L.density
    order = density.jet_order()
    syms = L.field_symbols()
    table: Dict[Tuple[FieldSymbol, tuple], GradedPoly] = {}
    for k in range(order, 0, -1):
        for sym in syms:
            for mi in multi_indices(L.dim, k):
                mi = tuple(mi)
                val = density.partial(jet(sym, mi)) \
                    * Fraction(1, mi_permutations(mi))
                for lam in range(L.dim):
                    upper = table.get((sym, mi_add(mi, lam)))
                    if upper is not None:
                        val = val - upper.total_derivative(lam, L.jet_cap)
                if not val.is_zero():
                    table[(sym, mi)] = val
    return table


def lepage_equivalent(L: Lagrangian, table: Optional[dict] = None) -> MixedForm:
    """Lepage form: the contact slot at each tail multi-index pairs with the
    tensor coefficient times the number of orderings of the tail."""
    if table is None:
        table = lepage_table(L)
    out = L.form()
    for (sym, sigma) in sorted(table, key=lambda k: (k[0].sort_key, k[1])):
        val = table[(sym, sigma)]
        for lam in sorted(set(sigma)):
            tail = mi_remove(sigma, lam)
            weight = Fraction(mi_permutations(tail))
            horiz, sign = omega_contracted(L.dim, lam)
            omega_lam = MixedForm(L.dim,
                                  {((), horiz): val * (weight * sign)})
            out = out + MixedForm.contact(jet(sym, tail), L.dim).wedge(omega_lam)
    return out


def check_lepage(L: Lagrangian) -> bool:
    """dL + d_H Xi - (source form) must normalize to zero exactly."""
    xi = lepage_equivalent(L)
    lhs = (L.form().exterior_differential(L.jet_cap)
           - euler_lagrange_form(L)
           + xi.horizontal_differential(L.jet_cap))
    return lhs.is_zero()


# ---------------------------------------------------------------------------
# first variational formula

def first_variational_residual(ups: GeneralizedVectorField,
                               L: Lagrangian) -> MixedForm:
    """Difference of the two sides of the first variational formula for a
    vertical derivation; identically zero when the conventions cohere."""
    if not ups.is_vertical():
        raise UnsupportedDerivation(
            "the horizontal term of the variational formula is out of scope")
    deriv = prolong(ups, L.dim, L.jet_cap)
    lhs = lie_derivative(deriv, L.form(), L.jet_cap)
    source = contract(deriv, euler_lagrange_form(L))
    boundary = contract(deriv, lepage_equivalent(L)).horizontal_part()
    return lhs - source - boundary.horizontal_differential(L.jet_cap)


# ---------------------------------------------------------------------------
# monomial ansatz machinery

def _class_vector(key, include_coords: bool):
    even, odd = key
    counts: Dict[FieldSymbol, int] = {}
    for v, e in even:
        if v.symbol.coord is None or include_coords:
            counts[v.symbol] = counts.get(v.symbol, 0) + e
    for v in odd:
        counts[v.symbol] = counts.get(v.symbol, 0) + 1
    return tuple(sorted(counts.items(), key=lambda it: it[0].sort_key))


def _split_by_class(poly: GradedPoly, include_coords: bool) -> dict:
    out: Dict[tuple, GradedPoly] = {}
    for key, c in poly.terms.items():
        cls = _class_vector(key, include_coords)
        cur = out.get(cls, GradedPoly.zero())
        out[cls] = cur + GradedPoly({key: c})
    return out


def _x_degree(key) -> int:
    even, _ = key
    return sum(e for v, e in even if v.symbol.coord is not None)


def _symbol_monomials(sym: FieldSymbol, degree: int, dim: int, max_order: int):
    """All degree-d monomials in the jets of one symbol, as polynomials."""
    variables = [jet(sym, mi) for mi in multi_indices_up_to(dim, max_order)]
    if sym.parity == ODD:
        combos = combinations(variables, degree)
    else:
        combos = combinations_with_replacement(variables, degree)
    out = []
    for combo in combos:
        p = GradedPoly.constant(1)
        for v in combo:
            p = p * GradedPoly.variable(v)
        if not p.is_zero():
            out.append(p)
    return out


def _coordinate_monomials(coords: Sequence[FieldSymbol], max_degree: int):
    out = [GradedPoly.constant(1)]
    if not coords or max_degree <= 0:
        return out
    variables = [jet(s) for s in coords]
    for d in range(1, max_degree + 1):
        for combo in combinations_with_replacement(variables, d):
            p = GradedPoly.constant(1)
            for v in combo:
                p = p * GradedPoly.variable(v)
            out.append(p)
    return out


def _class_monomials(cls, dim: int, order_caps: Mapping[FieldSymbol, int],
                     coords: Sequence[FieldSymbol], x_degree: int) -> list:
    """Deterministically ordered candidate monomials of an exact per-symbol
    degree vector, times coordinate monomials."""
    parts = [GradedPoly.constant(1)]
    for sym, degree in cls:
        cap = order_caps.get(sym, 0)
        sym_monos = _symbol_monomials(sym, degree, dim, cap)
        parts = [p * m for p in parts for m in sym_monos]
    xparts = _coordinate_monomials(coords, x_degree)
    out = [p * x for p in parts for x in xparts]
    # dedupe while keeping deterministic order
    seen = set()
    uniq = []
    for p in out:
        if p.is_zero():
            continue
        key = next(iter(p.terms))
        if key in seen:
            continue
        seen.add(key)
        uniq.append(p)
    uniq.sort(key=lambda p: _mono_sort(p))
    return uniq


def _mono_sort(p: GradedPoly):
    key = next(iter(p.terms))
    even, odd = key
    seq = [(var_key(v), e) for v, e in even] + [(var_key(v), 1) for v in odd]
    seq.sort()
    return (sum(e for _, e in seq), tuple(seq))


@dataclass
class ExactnessResult:
    status: str
    witness: Optional[MixedForm] = None

    def __bool__(self):
        return self.status == EXACT


def _linear_witness(unknown_exprs: List[Tuple[object, GradedPoly]],
                    target: GradedPoly):
    """Solve sum(c_i * expr_i) = target; returns {slot: poly} built from the
    slot labels of the unknowns, or None."""
    cols = len(unknown_exprs)
    row_index: Dict[tuple, int] = {}
    rows: List[Dict[int, Fraction]] = []
    rhs: List[Fraction] = []

    def row_for(key):
        ri = row_index.get(key)
        if ri is None:
            ri = len(rows)
            row_index[key] = ri
            rows.append({})
            rhs.append(Fraction(0))
        return ri

    for ci, (_, expr) in enumerate(unknown_exprs):
        for key, c in expr.terms.items():
            rows[row_for(key)][ci] = rows[row_for(key)].get(ci, Fraction(0)) + c
    for key, c in target.terms.items():
        rhs[row_for(key)] = c
    sol = solve_sparse(rows, rhs, cols)
    if sol is None:
        return None
    return sol


def _order_caps_for(poly: GradedPoly, shift: int, floor: int = 0) -> dict:
    caps: Dict[FieldSymbol, int] = {}
    for v in poly.variables():
        if v.symbol.coord is not None:
            continue
        caps[v.symbol] = max(caps.get(v.symbol, 0), len(v.index))
    return {s: max(o + shift, floor) for s, o in caps.items()}


def horizontal_antiderivative(rho: MixedForm,
                              coords: Sequence[FieldSymbol] = (),
                              cap: int = DEFAULT_JET_CAP,
                              max_degree: Optional[int] = None) -> ExactnessResult:
    """Decide d_H-exactness of a horizontal form of degree n or n-1 and
    produce an antiderivative.

    The search solves an exact linear system over a monomial ansatz of jet
    order at most the order of the input (tried in escalating rungs) and
    matching polynomial degree per symbol.  Failure is split into a provable
    obstruction (Euler-Lagrange expressions or non-closedness) and ansatz
    exhaustion.
    """
    if not rho.is_horizontal():
        raise ValueError("input must be horizontal")
    n = rho.dim
    degrees = rho.horizontal_degrees()
    if not degrees:
        return ExactnessResult(EXACT, MixedForm.zero(n))
    if len(degrees) > 1:
        raise ValueError("input must have homogeneous horizontal degree")
    degree = degrees.pop()
    if degree == n:
        return _antiderivative_density(rho, coords, cap, max_degree)
    if degree == n - 1:
        return _antiderivative_boundary(rho, coords, cap, max_degree)
    raise ValueError("only degrees n and n-1 are supported")


def _ansatz_rungs(target_polys: List[GradedPoly], coords, max_degree):
    """Escalating (order caps, x degree) configurations up to the documented
    bound: jet order of the target, polynomial degree of the target."""
    union = GradedPoly.zero()
    for p in target_polys:
        union = union + p
    global_order = union.jet_order()
    xdeg = max((_x_degree(k) for k in union.terms), default=0)
    if coords:
        xdeg += 1
    rungs = []
    for shift in (-1, 0):
        caps = _order_caps_for(union, shift)
        rungs.append((caps, xdeg))
    syms = {v.symbol for v in union.variables() if v.symbol.coord is None}
    rungs.append(({s: global_order for s in syms}, xdeg))
    seen = set()
    out = []
    for caps, x in rungs:
        key = (tuple(sorted(((s.name, o) for s, o in caps.items()))), x)
        if key not in seen:
            seen.add(key)
            out.append((caps, x))
    return out


def _antiderivative_density(rho: MixedForm, coords, cap, max_degree):
    n = rho.dim
    density = rho.coefficient(horiz=tuple(range(n)))
    if density.is_zero():
        return ExactnessResult(EXACT, MixedForm.zero(n))
    symbols = sorted({v.symbol for v in density.variables() if v.symbol.coord is None},
                     key=lambda s: s.sort_key)
    obstruction = euler_lagrange(Lagrangian(density, n, parity=density.parity
                                            if density.parity is not None else EVEN,
                                            jet_cap=cap), symbols)
    if not obstruction.is_zero():
        return ExactnessResult(NOT_EXACT)
    classes = _split_by_class(density, include_coords=False)
    sigma: Dict[int, GradedPoly] = {mu: GradedPoly.zero() for mu in range(n)}
    for cls in sorted(classes, key=str):
        target = classes[cls]
        if not cls and not coords:
            # constant-coefficient density with no base coordinates in the
            # ring: total derivatives never produce constants
            return ExactnessResult(NOT_EXACT)
        if max_degree is not None and _max_class_degree(cls) > max_degree:
            return ExactnessResult(BOUND_EXHAUSTED)
        solved = False
        for caps_map, xdeg in _ansatz_rungs([target], coords, max_degree):
            monos = _class_monomials(cls, n, caps_map, coords, xdeg)
            if max_degree is not None:
                monos = [m for m in monos if m.degree() <= max_degree]
            unknowns = []
            for mu in range(n):
                for m in monos:
                    unknowns.append(((mu, m), m.total_derivative(mu, cap)))
            sol = _linear_witness(unknowns, target)
            if sol is not None:
                for ((mu, m), _), c in zip(unknowns, sol):
                    if c:
                        sigma[mu] = sigma[mu] + m * c
                solved = True
                break
        if not solved:
            return ExactnessResult(BOUND_EXHAUSTED)
    witness = Current(sigma, n).form()
    check = witness.horizontal_differential(cap) - rho
    if not check.is_zero():
        raise AssertionError("antiderivative failed its own re-check")
    return ExactnessResult(EXACT, witness)


def _max_class_degree(cls) -> int:
    return sum(d for _, d in cls)


def _antiderivative_boundary(rho: MixedForm, coords, cap, max_degree):
    n = rho.dim
    if n == 1:
        # a 0-form has no horizontal antiderivative; only zero is exact
        if rho.is_zero():
            return ExactnessResult(EXACT, MixedForm.zero(n))
        return ExactnessResult(NOT_EXACT)
    closed = rho.horizontal_differential(cap)
    if not closed.is_zero():
        return ExactnessResult(NOT_EXACT)
    current = Current.from_form(rho)
    combined = GradedPoly.zero()
    for mu in range(n):
        combined = combined + current.component(mu)
    classes: Dict[tuple, Dict[int, GradedPoly]] = {}
    for mu in range(n):
        for cls, part in _split_by_class(current.component(mu),
                                         include_coords=False).items():
            classes.setdefault(cls, {})[mu] = part
    pairs = [(nu, mu) for nu in range(n) for mu in range(nu + 1, n)]
    table: Dict[Tuple[int, int], GradedPoly] = {p: GradedPoly.zero() for p in pairs}
    for cls in sorted(classes, key=str):
        targets = classes[cls]
        if not cls and not coords:
            return ExactnessResult(NOT_EXACT)
        union = GradedPoly.zero()
        for part in targets.values():
            union = union + part
        solved = False
        for caps_map, xdeg in _ansatz_rungs([union], coords, max_degree):
            monos = _class_monomials(cls, n, caps_map, coords, xdeg)
            if max_degree is not None:
                monos = [m for m in monos if m.degree() <= max_degree]
            unknowns = []
            for (nu, mu) in pairs:
                for m in monos:
                    # slot value enters component mu with +d_nu and component
                    # nu with -d_mu (antisymmetry folded in)
                    unknowns.append((((nu, mu), m), None))
            exprs = []
            for ((nu, mu), m), _ in unknowns:
                contrib = {}
                contrib[mu] = m.total_derivative(nu, cap)
                contrib[nu] = -m.total_derivative(mu, cap)
                exprs.append(contrib)
            sol = _solve_component_system(exprs, targets, n)
            if sol is not None:
                for (((nu, mu), m), _), c in zip(unknowns, sol):
                    if c:
                        table[(nu, mu)] = table[(nu, mu)] + m * c
                solved = True
                break
        if not solved:
            return ExactnessResult(BOUND_EXHAUSTED)
    sup = Superpotential({p: v for p, v in table.items()}, n)
    witness = sup.form()
    check = witness.horizontal_differential(cap) - rho
    if not check.is_zero():
        raise AssertionError("antiderivative failed its own re-check")
    return ExactnessResult(EXACT, witness)


def _solve_component_system(exprs: List[Dict[int, GradedPoly]],
                            targets: Dict[int, GradedPoly], n: int):
    """Linear solve where each unknown contributes polynomials to several
    labeled components."""
    cols = len(exprs)
    row_index: Dict[tuple, int] = {}
    rows: List[Dict[int, Fraction]] = []
    rhs: List[Fraction] = []

    def row_for(comp, key):
        ri = row_index.get((comp, key))
        if ri is None:
            ri = len(rows)
            row_index[(comp, key)] = ri
            rows.append({})
            rhs.append(Fraction(0))
        return ri

    for ci, contrib in enumerate(exprs):
        for comp, poly in contrib.items():
            for key, c in poly.terms.items():
                ri = row_for(comp, key)
                rows[ri][ci] = rows[ri].get(ci, Fraction(0)) + c
    for comp, poly in targets.items():
        for key, c in poly.terms.items():
            rhs[row_for(comp, key)] = c
    return solve_sparse(rows, rhs, cols)


# ---------------------------------------------------------------------------
# variational symmetries, currents, conservation witnesses

@dataclass
class SymmetryResult:
    status: str
    sigma: Optional[MixedForm] = None  # horizontal (n-1)-form witness

    def __bool__(self):
        return self.status == EXACT


def is_variational_symmetry(ups: GeneralizedVectorField, L: Lagrangian,
                            coords: Sequence[FieldSymbol] = (),
                            max_degree: Optional[int] = None) -> SymmetryResult:
    """A vertical derivation is a variational symmetry iff its Lie
    derivative of the Lagrangian is a total divergence; returns the witness."""
    if not ups.is_vertical():
        raise UnsupportedDerivation("variational-symmetry test needs vertical input")
    deriv = prolong(ups, L.dim, L.jet_cap)
    rho = lie_derivative(deriv, L.form(), L.jet_cap)
    if not rho.is_horizontal():
        rho = rho.horizontal_part()
    result = horizontal_antiderivative(rho, coords, L.jet_cap, max_degree)
    return SymmetryResult(result.status, result.witness)


def noether_current(ups: GeneralizedVectorField, L: Lagrangian,
                    sigma: MixedForm) -> Current:
    """Current of a variational symmetry: the witness minus the horizontal
    projection of the contracted Lepage equivalent.  The witness is
    re-validated; a bad one raises ConsistencyError."""
    deriv = prolong(ups, L.dim, L.jet_cap)
    lhs = lie_derivative(deriv, L.form(), L.jet_cap)
    if not (sigma.horizontal_differential(L.jet_cap) - lhs).is_zero():
        raise ConsistencyError("sigma does not witness the symmetry condition")
    boundary = contract(deriv, lepage_equivalent(L)).horizontal_part()
    return Current.from_form(sigma - boundary)


@dataclass
class WitnessResult:
    status: str
    table: Optional[dict] = None  # (FieldSymbol, MultiIndex) -> GradedPoly

    def __bool__(self):
        return self.status == EXACT


def _cls_dict(cls) -> dict:
    return dict(cls)


def _cls_key(d: Mapping) -> tuple:
    return tuple(sorted(((s, v) for s, v in d.items() if v),
                        key=lambda it: it[0].sort_key))


def _cls_deg(cls) -> int:
    return sum(v for _, v in cls)


def weak_conservation_witness(J: Current, el: EulerLagrange,
                              cap: int = DEFAULT_JET_CAP,
                              max_degree: Optional[int] = None) -> WitnessResult:
    """Solve  div J = sum w^{A,I} d_I E_A  exactly for the coefficients w.

    Candidate coefficient monomials are collected per degree-vector class,
    closing over classes the products introduce (those must cancel among
    itself).  Returns NOT_EXACT when some divergence monomial is not a
    multiple of any prolonged Euler-Lagrange monomial (provably no witness
    exists), BOUND_EXHAUSTED when the bounded ansatz has no solution.
    """
    target = J.divergence(cap)
    if target.is_zero():
        return WitnessResult(EXACT, {})
    order = target.jet_order()
    basis = []  # (sym, index, d_I E_A, e-monomial classes)
    for sym, comp in el.sorted_items():
        if comp.is_zero():
            continue
        base_order = comp.jet_order()
        for index in multi_indices_up_to(J.dim, max(0, order - base_order)):
            de = comp.total_derivative_multi(index, cap)
            ecls = {_cls_key(_cls_dict(_class_vector(k, True)))
                    for k in de.terms}
            basis.append((sym, tuple(index), de, ecls))
    # provable obstruction: a divergence monomial no product can equal
    all_ecls = set()
    for _, _, _, ecls in basis:
        all_ecls.update(ecls)
    for tk in target.terms:
        tcls = _cls_dict(_class_vector(tk, True))
        if not any(all(tcls.get(s, 0) >= v for s, v in ec) for ec in all_ecls):
            return WitnessResult(NOT_EXACT)
    # class closure for the candidate coefficients
    deg_cap = max_degree if max_degree is not None else target.degree()
    frontier_cap = max((_cls_deg(_class_vector(k, True)) for k in target.terms),
                       default=0) + max((_cls_deg(ec) for ec in all_ecls),
                                        default=0)
    frontier = {_cls_key(_cls_dict(_class_vector(k, True)))
                for k in target.terms}
    chosen = set()  # (basis position, coefficient class)
    for _ in range(8):
        changed = False
        for bi, (_, _, _, ecls) in enumerate(basis):
            for fcls in sorted(frontier, key=str):
                fdict = _cls_dict(fcls)
                for ec in sorted(ecls, key=str):
                    edict = _cls_dict(ec)
                    if not all(fdict.get(s, 0) >= v for s, v in edict.items()):
                        continue
                    mdict = {s: fdict.get(s, 0) - edict.get(s, 0)
                             for s in fdict}
                    mcls = _cls_key(mdict)
                    if _cls_deg(mcls) > deg_cap or (bi, mcls) in chosen:
                        continue
                    chosen.add((bi, mcls))
                    changed = True
                    for ec2 in ecls:
                        combined = dict(mdict)
                        for s, v in ec2:
                            combined[s] = combined.get(s, 0) + v
                        newf = _cls_key(combined)
                        if _cls_deg(newf) <= frontier_cap:
                            if newf not in frontier:
                                frontier.add(newf)
                                changed = True
        if not changed:
            break
    caps_map = {}
    for _, _, de, _ in basis:
        for v in list(target.variables()) + list(de.variables()):
            if v.symbol.coord is None:
                caps_map[v.symbol] = order
    unknowns = []
    for bi, (sym, index, de, _) in enumerate(basis):
        classes = sorted((mcls for (b, mcls) in chosen if b == bi), key=str)
        for mcls in classes:
            coords = [s for s, _ in mcls if s.coord is not None]
            jet_cls = tuple((s, v) for s, v in mcls if s.coord is None)
            xdeg = sum(v for s, v in mcls if s.coord is not None)
            for m in _class_monomials(jet_cls, J.dim, caps_map, coords, xdeg):
                if _x_degree(next(iter(m.terms))) != xdeg:
                    continue
                unknowns.append(((sym, index, m), m * de))
    if not unknowns:
        return WitnessResult(BOUND_EXHAUSTED)
    sol = _linear_witness(unknowns, target)
    if sol is None:
        return WitnessResult(BOUND_EXHAUSTED)
    table: Dict[tuple, GradedPoly] = {}
    for ((sym, index, m), _), c in zip(unknowns, sol):
        if c:
            key = (sym, index)
            table[key] = table.get(key, GradedPoly.zero()) + m * c
    table = {k: v for k, v in table.items() if not v.is_zero()}
    return WitnessResult(EXACT, table)


def expand_witness(table: Mapping, el: EulerLagrange,
                   cap: int = DEFAULT_JET_CAP) -> GradedPoly:
    out = GradedPoly.zero()
    for (sym, index), w in table.items():
        out = out + w * el.component(sym).total_derivative_multi(index, cap)
    return out

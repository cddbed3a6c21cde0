"""Mixed contact/horizontal forms and the bicomplex operators.

A mixed form is stored sparsely as a map

    (contact labels, horizontal subset)  ->  coefficient polynomial

meaning ``f * th^A_{I1} ^ ... ^ th^A_{Ik} ^ dx^{j1} ^ ... ^ dx^{jr}``
with the coefficient on the left.  Contact slots are labels (symbol,
multi-index); they are never expanded except inside the exterior
differential, where ``d s^A_I = th^A_I + s^A_{I+lam} dx^lam``.

Sign conventions, all derived from the bigraded commutation rule
``a^b = (-1)^(|a||b| + [a][b]) b^a`` with form degree |.| and parity [.]:

* two contact slots swap with -1 unless both carry odd parity (then +1,
  so an odd contact slot may repeat);
* dx factors anticommute with each other and with every contact slot;
* a degree-0 coefficient g commutes with dx and picks up (-1)^([g][th])
  when moved past a contact slot.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional

from .algebra import (DEFAULT_JET_CAP, EVEN, ODD, FieldSymbol, GradedPoly,
                      JetVariable, _bump, jet, var_key)


class UnsupportedDerivation(ValueError):
    """Operation restricted to vertical derivations got a horizontal one."""


# ---------------------------------------------------------------------------
# basis bookkeeping

def _sort_contact(labels):
    """Sort contact labels; returns (tuple, sign) or None when an even label
    repeats (its square vanishes)."""
    labels = list(labels)
    sign = 1
    for i in range(1, len(labels)):
        j = i
        while j > 0 and var_key(labels[j - 1]) > var_key(labels[j]):
            if not (labels[j - 1].parity and labels[j].parity):
                sign = -sign
            labels[j - 1], labels[j] = labels[j], labels[j - 1]
            j -= 1
    for a, b in zip(labels, labels[1:]):
        if a == b and a.parity == EVEN:
            return None
    return tuple(labels), sign


def _sort_horiz(idxs):
    idxs = list(idxs)
    sign = 1
    for i in range(1, len(idxs)):
        j = i
        while j > 0 and idxs[j - 1] > idxs[j]:
            sign = -sign
            idxs[j - 1], idxs[j] = idxs[j], idxs[j - 1]
            j -= 1
    for a, b in zip(idxs, idxs[1:]):
        if a == b:
            return None
    return tuple(idxs), sign


def _parity_sum(labels) -> int:
    return sum(l.parity for l in labels) % 2


def _accumulate(acc: dict, key, poly: GradedPoly):
    cur = acc.get(key)
    s = poly if cur is None else cur + poly
    if s.is_zero():
        acc.pop(key, None)
    else:
        acc[key] = s


class MixedForm:
    """Sparse graded form of mixed contact and horizontal degree."""

    __slots__ = ("dim", "components")

    def __init__(self, dim: int, components: Optional[Mapping] = None):
        self.dim = dim
        self.components = {}
        if components:
            for key, poly in components.items():
                if poly and not poly.is_zero():
                    self.components[key] = poly

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(dim: int) -> "MixedForm":
        return MixedForm(dim)

    @staticmethod
    def from_poly(p: GradedPoly, dim: int) -> "MixedForm":
        return MixedForm(dim, {((), ()): p})

    @staticmethod
    def density(p: GradedPoly, dim: int) -> "MixedForm":
        """p * dx^0 ^ ... ^ dx^{n-1} (coefficient on the volume form)."""
        return MixedForm(dim, {((), tuple(range(dim))): p})

    @staticmethod
    def dx(lam: int, dim: int) -> "MixedForm":
        return MixedForm(dim, {((), (lam,)): GradedPoly.constant(1)})

    @staticmethod
    def contact(v: JetVariable, dim: int) -> "MixedForm":
        if v.symbol.coord is not None:
            raise UnsupportedDerivation("base coordinates have no contact form")
        return MixedForm(dim, {((v,), ()): GradedPoly.constant(1)})

    # -- linear structure ---------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, MixedForm):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        out = dict(self.components)
        for key, poly in other.components.items():
            _accumulate(out, key, poly)
        return MixedForm(self.dim, out)

    def __neg__(self):
        return MixedForm(self.dim, {k: -p for k, p in self.components.items()})

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, Fraction)):
            return MixedForm(self.dim,
                             {k: p * scalar for k, p in self.components.items()})
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, MixedForm):
            return NotImplemented
        return self.dim == other.dim and self.components == other.components

    def __hash__(self):
        return hash((self.dim, frozenset(self.components.items())))

    def is_zero(self) -> bool:
        return not self.components

    def sorted_components(self):
        def key(item):
            (contact, horiz), _ = item
            return (len(contact), len(horiz),
                    tuple(var_key(v) for v in contact), horiz)
        return sorted(self.components.items(), key=key)

    def contact_degrees(self) -> set:
        return {len(k[0]) for k in self.components}

    def horizontal_degrees(self) -> set:
        return {len(k[1]) for k in self.components}

    def is_horizontal(self) -> bool:
        return all(len(k[0]) == 0 for k in self.components)

    def coefficient(self, contact=(), horiz=()) -> GradedPoly:
        return self.components.get((tuple(contact), tuple(horiz)),
                                   GradedPoly.zero())

    # -- wedge product ------------------------------------------------------

    def wedge(self, other: "MixedForm") -> "MixedForm":
        if other.dim != self.dim:
            raise ValueError("dimension mismatch")
        out = {}
        for (i1, j1), p in self.components.items():
            pi1 = _parity_sum(i1)
            for (i2, j2), q in other.components.items():
                for qp in (EVEN, ODD):
                    qpart = q.parity_part(qp)
                    if qpart.is_zero():
                        continue
                    sign = 1
                    if qp and pi1:
                        sign = -sign          # q past the contact block of self
                    if (len(j1) * len(i2)) % 2:
                        sign = -sign          # contact block of other past dx block
                    cs = _sort_contact(i1 + i2)
                    if cs is None:
                        continue
                    contact, csign = cs
                    hs = _sort_horiz(j1 + j2)
                    if hs is None:
                        continue
                    horiz, hsign = hs
                    coeff = (p * qpart) * Fraction(sign * csign * hsign)
                    if not coeff.is_zero():
                        _accumulate(out, (contact, horiz), coeff)
        return MixedForm(self.dim, out)

    # -- differentials ------------------------------------------------------

    def total_derivative(self, lam: int, cap: int = DEFAULT_JET_CAP) -> "MixedForm":
        """d_lam acting on coefficients and contact labels (an even
        derivation, so no Leibniz signs appear)."""
        out = {}
        for (contact, horiz), f in self.components.items():
            df = f.total_derivative(lam, cap)
            if not df.is_zero():
                _accumulate(out, (contact, horiz), df)
            for i, lab in enumerate(contact):
                bumped = _bump(lab, lam, cap)
                cs = _sort_contact(contact[:i] + (bumped,) + contact[i + 1:])
                if cs is None:
                    continue
                newc, sign = cs
                _accumulate(out, (newc, horiz), f * Fraction(sign))
        return MixedForm(self.dim, out)

    def horizontal_differential(self, cap: int = DEFAULT_JET_CAP) -> "MixedForm":
        out = {}
        for lam in range(self.dim):
            dform = self.total_derivative(lam, cap)
            for (contact, horiz), f in dform.components.items():
                hs = _sort_horiz((lam,) + horiz)
                if hs is None:
                    continue
                newh, hsign = hs
                sign = hsign * (-1 if len(contact) % 2 else 1)
                _accumulate(out, (contact, newh), f * Fraction(sign))
        return MixedForm(self.dim, out)

    def vertical_differential(self) -> "MixedForm":
        out = MixedForm(self.dim)
        for (contact, horiz), f in self.components.items():
            rest = MixedForm(self.dim, {(contact, horiz): GradedPoly.constant(1)})
            dvf = _vertical_differential_poly(f, self.dim)
            out = out + dvf.wedge(rest)
        return out

    def exterior_differential(self, cap: int = DEFAULT_JET_CAP) -> "MixedForm":
        return self.horizontal_differential(cap) + self.vertical_differential()

    def horizontal_part(self) -> "MixedForm":
        """h0: kill every component of positive contact degree."""
        return MixedForm(self.dim, {k: p for k, p in self.components.items()
                                    if len(k[0]) == 0})

    def __repr__(self):
        from .render import form_text
        return f"MixedForm({form_text(self)})"


def _vertical_differential_poly(f: GradedPoly, dim: int) -> MixedForm:
    """d_V of a degree-0 coefficient: sum of th^A_I * (left partial), with
    the partial moved left of the contact slot."""
    out = {}
    for v in sorted(f.variables(), key=var_key):
        if v.symbol.coord is not None:
            continue
        g = f.partial(v)
        if g.is_zero():
            continue
        for gp in (EVEN, ODD):
            part = g.parity_part(gp)
            if part.is_zero():
                continue
            sign = -1 if (gp and v.parity) else 1
            _accumulate(out, ((v,), ()), part * Fraction(sign))
    return MixedForm(dim, out)


# ---------------------------------------------------------------------------
# volume form helpers

def volume_form(dim: int) -> MixedForm:
    return MixedForm.density(GradedPoly.constant(1), dim)


def omega_contracted(dim: int, mu: int):
    """omega_mu = del_mu | omega, as (horizontal subset, sign)."""
    horiz = tuple(i for i in range(dim) if i != mu)
    return horiz, (-1) ** mu


def omega_pair_contracted(dim: int, nu: int, mu: int):
    """omega_{nu mu} = del_nu | omega_mu, as (horizontal subset, sign)."""
    if nu == mu:
        raise ValueError("omega_{nu mu} needs distinct indices")
    horiz_mu, sign = omega_contracted(dim, mu)
    pos = horiz_mu.index(nu)
    horiz = tuple(i for i in horiz_mu if i != nu)
    return horiz, sign * (-1) ** pos


# ---------------------------------------------------------------------------
# generalized vector fields and their prolongations

@dataclass(frozen=True)
class GeneralizedVectorField:
    """Components of a generalized graded vector field with polynomial
    coefficients; the symmetry machinery downstream requires the vertical
    case, horizontal components are supported by prolongation only."""

    vertical: tuple         # tuple of (FieldSymbol, GradedPoly)
    horizontal: tuple = ()  # tuple of (coordinate index, GradedPoly)

    @staticmethod
    def make(vertical: Mapping, horizontal: Optional[Mapping] = None):
        vert = tuple(sorted(((s, p) for s, p in vertical.items()
                             if not p.is_zero()), key=lambda it: it[0].sort_key))
        horiz = tuple(sorted(((i, p) for i, p in (horizontal or {}).items()
                              if not p.is_zero())))
        return GeneralizedVectorField(vert, horiz)

    def vertical_map(self) -> dict:
        return dict(self.vertical)

    def horizontal_map(self) -> dict:
        return dict(self.horizontal)

    def component(self, sym: FieldSymbol) -> GradedPoly:
        for s, p in self.vertical:
            if s == sym:
                return p
        return GradedPoly.zero()

    @property
    def parity(self) -> int:
        parities = set()
        for sym, poly in self.vertical:
            p = poly.parity
            if p is None:
                raise UnsupportedDerivation(
                    f"component for {sym.name} has mixed parity")
            parities.add((p + sym.parity) % 2)
        for _, poly in self.horizontal:
            p = poly.parity
            if p is None:
                raise UnsupportedDerivation("horizontal component has mixed parity")
            parities.add(p)
        if not parities:
            return EVEN
        if len(parities) > 1:
            raise UnsupportedDerivation("components of mixed total parity")
        return parities.pop()

    def is_vertical(self) -> bool:
        return not self.horizontal

    def is_projectable(self) -> bool:
        """ups^lam may depend on base coordinates only."""
        return all(all(v.symbol.coord is not None for v in p.variables())
                   for _, p in self.horizontal)


class ContactDerivation:
    """Jet prolongation of a generalized vector field.  Pairings with the
    contact basis are memoized per (symbol, multi-index)."""

    def __init__(self, source: GeneralizedVectorField, dim: int,
                 cap: int = DEFAULT_JET_CAP):
        self.source = source
        self.dim = dim
        self.cap = cap
        self.parity = source.parity
        self._dx = dict(source.horizontal)
        self._base = {}
        self._memo = {}

    def _base_coefficient(self, sym: FieldSymbol) -> GradedPoly:
        """ups^A - s^A_mu ups^mu: the order-0 prolongation seed."""
        cached = self._base.get(sym)
        if cached is not None:
            return cached
        out = self.source.component(sym)
        for lam, up in self._dx.items():
            out = out - GradedPoly.variable(jet(sym, (lam,))) * up
        self._base[sym] = out
        return out

    def theta_coefficient(self, v: JetVariable) -> GradedPoly:
        """Pairing with th^A_I: equals d_I of the order-0 seed."""
        sym = v.symbol
        if sym.coord is not None:
            return GradedPoly.zero()
        if self.source.component(sym).is_zero() and not self._dx:
            return GradedPoly.zero()
        key = (sym, v.index)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        if not v.index:
            out = self._base_coefficient(sym)
        else:
            prev = self.theta_coefficient(JetVariable(sym, v.index[:-1]))
            out = prev.total_derivative(v.index[-1], self.cap)
        self._memo[key] = out
        return out

    def dx_coefficient(self, lam: int) -> GradedPoly:
        return self._dx.get(lam, GradedPoly.zero())

    def is_vertical(self) -> bool:
        return not self._dx

    def apply_to_poly(self, f: GradedPoly) -> GradedPoly:
        """The derivation applied to a ring element."""
        out = GradedPoly.zero()
        for lam, up in self._dx.items():
            out = out + up * f.total_derivative(lam, self.cap)
        for v in f.variables():
            if v.symbol.coord is not None:
                continue
            coeff = self.theta_coefficient(v)
            if coeff.is_zero():
                continue
            out = out + coeff * f.partial(v)
        return out


def prolong(source: GeneralizedVectorField, dim: int,
            cap: int = DEFAULT_JET_CAP) -> ContactDerivation:
    return ContactDerivation(source, dim, cap)


def contract(deriv: ContactDerivation, form: MixedForm) -> MixedForm:
    """Interior product: the graded antiderivation of form degree -1 pairing
    the derivation with the basis one-forms."""
    out = {}
    for (contact, horiz), f in form.components.items():
        for fp in (EVEN, ODD):
            fpart = f.parity_part(fp)
            if fpart.is_zero():
                continue
            labels_par = 0  # parity of contact labels strictly before slot i
            for i, lab in enumerate(contact):
                coeff = deriv.theta_coefficient(lab)
                if not coeff.is_zero():
                    prefix_par = (fp + labels_par) % 2
                    sign = -1 if i % 2 else 1
                    if prefix_par and deriv.parity:
                        sign = -sign
                    cpar = (deriv.parity + lab.parity) % 2
                    if cpar and labels_par:
                        sign = -sign
                    value = (fpart * coeff) * Fraction(sign)
                    if not value.is_zero():
                        _accumulate(out, (contact[:i] + contact[i + 1:], horiz),
                                    value)
                labels_par = (labels_par + lab.parity) % 2
            for j, lam in enumerate(horiz):
                coeff = deriv.dx_coefficient(lam)
                if coeff.is_zero():
                    continue
                deg = len(contact) + j
                prefix_par = (fp + labels_par) % 2
                sign = -1 if deg % 2 else 1
                if prefix_par and deriv.parity:
                    sign = -sign
                if deriv.parity and labels_par:
                    sign = -sign
                value = (fpart * coeff) * Fraction(sign)
                if not value.is_zero():
                    _accumulate(out, (contact, horiz[:j] + horiz[j + 1:]), value)
    return MixedForm(form.dim, out)


def lie_derivative(deriv: ContactDerivation, form: MixedForm,
                   cap: int = DEFAULT_JET_CAP) -> MixedForm:
    """Cartan formula: contract after d plus d after contract."""
    return (contract(deriv, form.exterior_differential(cap))
            + contract(deriv, form).exterior_differential(cap))


def is_nilpotent(deriv: ContactDerivation) -> bool:
    """A vertical derivation squares to zero iff it is odd and annihilates
    its own coefficients."""
    if not deriv.is_vertical():
        raise UnsupportedDerivation("nilpotency test supports vertical derivations")
    if deriv.parity != ODD:
        return False
    for _, poly in deriv.source.vertical:
        if not deriv.apply_to_poly(poly).is_zero():
            return False
    return True

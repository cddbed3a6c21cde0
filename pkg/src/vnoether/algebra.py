"""Exact graded-commutative polynomial ring over jet variables.

The ring is generated by jet variables: formal partial derivatives of
declared field symbols, indexed by symmetric multi-indices over the base
coordinates ``0..n-1``.  Even variables commute; odd variables anticommute
and square to zero.  Coefficients are arbitrary-precision rationals, so
every identity check in the package reduces to "normalizes to the zero
polynomial".

Base coordinates themselves may enter coefficients: a symbol carrying a
``coord`` index is an even order-0 generator whose total derivative is the
Kronecker delta instead of a jet bump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement
from typing import Iterable, Iterator, Mapping, NamedTuple, Optional, Sequence

EVEN = 0
ODD = 1

KIND_FIELD = "field"
KIND_GHOST = "ghost"
KIND_ANTIFIELD = "antifield"
_KIND_RANK = {KIND_FIELD: 0, KIND_GHOST: 1, KIND_ANTIFIELD: 2}

DEFAULT_JET_CAP = 6

MultiIndex = tuple  # sorted tuple of coordinate indices


class DeclarationError(ValueError):
    """A term tree or model refers to an undeclared or ill-typed symbol."""


class EvaluationError(ValueError):
    """A variable occurring in the expression has no assigned value."""


class JetCapError(RuntimeError):
    """An operation would create a jet variable above the configured cap."""

    def __init__(self, order: int, cap: int):
        super().__init__(f"jet order {order} exceeds cap {cap}")
        self.order = order
        self.cap = cap


# ---------------------------------------------------------------------------
# multi-indices (symmetric, stored as sorted tuples; multiset semantics)

def multi_index(indices: Iterable[int]) -> MultiIndex:
    out = tuple(sorted(indices))
    if any((not isinstance(i, int)) or i < 0 for i in out):
        raise ValueError(f"bad multi-index {out!r}")
    return out


def mi_add(index: MultiIndex, lam: int) -> MultiIndex:
    return tuple(sorted(index + (lam,)))


def mi_multiplicity(index: MultiIndex, lam: int) -> int:
    return index.count(lam)


def mi_remove(index: MultiIndex, lam: int) -> MultiIndex:
    pos = index.index(lam)
    return index[:pos] + index[pos + 1:]


def mi_contains(big: MultiIndex, small: MultiIndex) -> bool:
    return all(big.count(i) >= small.count(i) for i in set(small))


def mi_subtract(big: MultiIndex, small: MultiIndex) -> MultiIndex:
    out = list(big)
    for i in small:
        out.remove(i)
    return tuple(out)


def mi_binomial(big: MultiIndex, small: MultiIndex) -> int:
    """Multiset binomial: number of ways to pick `small` inside `big`."""
    prod = 1
    for i in set(small):
        prod *= math.comb(big.count(i), small.count(i))
    return prod


def mi_permutations(index: MultiIndex) -> int:
    """Number of distinct orderings of the multi-index entries."""
    num = math.factorial(len(index))
    for i in set(index):
        num //= math.factorial(index.count(i))
    return num


def multi_indices(dim: int, order: int) -> Iterator[MultiIndex]:
    """All multi-indices of exactly the given order over dim coordinates."""
    return combinations_with_replacement(range(dim), order)


def multi_indices_up_to(dim: int, order: int) -> Iterator[MultiIndex]:
    for k in range(order + 1):
        yield from multi_indices(dim, k)


# ---------------------------------------------------------------------------
# symbols and jet variables

@dataclass(frozen=True)
class FieldSymbol:
    """A declared generator: field, ghost or antifield.

    Antifields link back to the field they pair with and carry opposite
    parity.  A symbol with ``coord`` set models a base coordinate x^i.
    """

    name: str
    kind: str = KIND_FIELD
    parity: int = EVEN
    base: Optional["FieldSymbol"] = None
    coord: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _KIND_RANK:
            raise DeclarationError(f"unknown symbol kind {self.kind!r}")
        if self.parity not in (EVEN, ODD):
            raise DeclarationError(f"parity must be 0 or 1, got {self.parity!r}")
        if self.kind == KIND_ANTIFIELD:
            if self.base is None:
                raise DeclarationError(f"antifield {self.name!r} needs a base field")
            if self.parity != (self.base.parity + 1) % 2:
                raise DeclarationError(
                    f"antifield {self.name!r} parity must be opposite to its base")
        elif self.base is not None:
            raise DeclarationError(f"{self.kind} {self.name!r} cannot carry a base link")
        if self.coord is not None and (self.kind != KIND_FIELD or self.parity != EVEN):
            raise DeclarationError("coordinate symbols are even and of kind 'field'")

    @property
    def sort_key(self):
        return (_KIND_RANK[self.kind], self.name)


class JetVariable(NamedTuple):
    symbol: FieldSymbol
    index: MultiIndex

    @property
    def parity(self) -> int:
        return self.symbol.parity

    @property
    def order(self) -> int:
        return len(self.index)


def jet(symbol: FieldSymbol, index: Iterable[int] = ()) -> JetVariable:
    index = multi_index(index)
    if symbol.coord is not None and index:
        raise DeclarationError(f"coordinate {symbol.name!r} has no jets")
    return JetVariable(symbol, index)


def coordinate_symbol(i: int, name: Optional[str] = None) -> FieldSymbol:
    return FieldSymbol(name if name is not None else f"x{i}", KIND_FIELD, EVEN, coord=i)


def var_key(v: JetVariable):
    """Global variable order: (kind, name, multi-index lexicographic)."""
    return (_KIND_RANK[v.symbol.kind], v.symbol.name, v.index)


def _bump(v: JetVariable, lam: int, cap: int) -> JetVariable:
    if len(v.index) + 1 > cap:
        raise JetCapError(len(v.index) + 1, cap)
    return JetVariable(v.symbol, mi_add(v.index, lam))


# ---------------------------------------------------------------------------
# monomial keys
#
# A term key is a pair (even, odd):
#   even: tuple of (JetVariable, exponent), sorted by var_key, exponents > 0
#   odd:  tuple of distinct odd JetVariables, sorted by var_key
# The monomial value is coeff * prod(even factors) * prod(odd factors).

def _merge_even(a, b):
    if not a:
        return b
    if not b:
        return a
    exps = {}
    for v, e in a:
        exps[v] = exps.get(v, 0) + e
    for v, e in b:
        exps[v] = exps.get(v, 0) + e
    return tuple(sorted(exps.items(), key=lambda it: var_key(it[0])))


def _merge_odd(a, b):
    """Merge two sorted odd tuples; returns (tuple, sign) or None if a
    variable repeats (odd squares vanish)."""
    if not a:
        return b, 1
    if not b:
        return a, 1
    sign = 1
    out = []
    i = j = 0
    na = len(a)
    while i < na and j < len(b):
        ka, kb = var_key(a[i]), var_key(b[j])
        if ka == kb:
            return None
        if ka < kb:
            out.append(a[i])
            i += 1
        else:
            if (na - i) % 2:
                sign = -sign
            out.append(b[j])
            j += 1
    out.extend(a[i:])
    out.extend(b[j:])
    return tuple(out), sign


def _sort_odd(seq):
    """Sort a sequence of odd variables by transpositions; returns
    (tuple, sign) or None when a variable repeats."""
    seq = list(seq)
    sign = 1
    for i in range(1, len(seq)):
        j = i
        while j > 0 and var_key(seq[j - 1]) > var_key(seq[j]):
            sign = -sign
            seq[j - 1], seq[j] = seq[j], seq[j - 1]
            j -= 1
    for a, b in zip(seq, seq[1:]):
        if a == b:
            return None
    return tuple(seq), sign


def _key_parity(key) -> int:
    return len(key[1]) % 2


def _key_degree(key) -> int:
    even, odd = key
    return sum(e for _, e in even) + len(odd)


def _key_order(key) -> int:
    even, odd = key
    orders = [len(v.index) for v, _ in even] + [len(v.index) for v in odd]
    return max(orders, default=0)


def _key_sort(key):
    """Graded-lexicographic monomial order (degree, then variable sequence)."""
    even, odd = key
    seq = [(var_key(v), e) for v, e in even] + [(var_key(v), 1) for v in odd]
    seq.sort()
    return (_key_degree(key), tuple(seq))


_EMPTY_KEY = ((), ())


class GradedPoly:
    """Canonical-form polynomial: mapping from monomial keys to rationals."""

    __slots__ = ("terms",)

    def __init__(self, terms: Optional[Mapping] = None):
        if terms:
            self.terms = {k: c for k, c in terms.items() if c != 0}
        else:
            self.terms = {}

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero() -> "GradedPoly":
        return GradedPoly()

    @staticmethod
    def constant(c) -> "GradedPoly":
        c = Fraction(c)
        return GradedPoly({_EMPTY_KEY: c}) if c else GradedPoly()

    @staticmethod
    def variable(v: JetVariable) -> "GradedPoly":
        if v.parity == ODD:
            return GradedPoly({((), (v,)): Fraction(1)})
        return GradedPoly({(((v, 1),), ()): Fraction(1)})

    # -- ring structure -----------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            s = out.get(k, 0) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        return GradedPoly(out) if out else GradedPoly()

    __radd__ = __add__

    def __neg__(self):
        return GradedPoly({k: -c for k, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0:
                return GradedPoly()
            return GradedPoly({k: c * other for k, c in self.terms.items()})
        other = _coerce(other)
        out = {}
        for (e1, o1), c1 in self.terms.items():
            for (e2, o2), c2 in other.terms.items():
                merged = _merge_odd(o1, o2)
                if merged is None:
                    continue
                odd, sign = merged
                key = (_merge_even(e1, e2), odd)
                s = out.get(key, 0) + sign * c1 * c2
                if s:
                    out[key] = s
                else:
                    del out[key]
        return GradedPoly(out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return _coerce(other) * self

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative powers are not in the ring")
        out = GradedPoly.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = GradedPoly.constant(other)
        if not isinstance(other, GradedPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- inspection ---------------------------------------------------------

    @property
    def parity(self) -> Optional[int]:
        """0 or 1 for parity-homogeneous polynomials, None if mixed."""
        parities = {_key_parity(k) for k in self.terms}
        if not parities:
            return None
        if len(parities) == 1:
            return parities.pop()
        return None

    def parity_part(self, p: int) -> "GradedPoly":
        return GradedPoly({k: c for k, c in self.terms.items() if _key_parity(k) == p})

    def jet_order(self) -> int:
        return max((_key_order(k) for k in self.terms), default=0)

    def degree(self) -> int:
        return max((_key_degree(k) for k in self.terms), default=0)

    def variables(self) -> set:
        out = set()
        for even, odd in self.terms:
            out.update(v for v, _ in even)
            out.update(odd)
        return out

    def symbols(self) -> set:
        return {v.symbol for v in self.variables()}

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda it: _key_sort(it[0]))

    def constant_term(self) -> Fraction:
        return self.terms.get(_EMPTY_KEY, Fraction(0))

    # -- derivations --------------------------------------------------------

    def partial(self, v: JetVariable) -> "GradedPoly":
        """Left graded partial derivative with respect to a jet variable."""
        out = {}
        if v.parity == EVEN:
            for (even, odd), c in self.terms.items():
                for i, (w, e) in enumerate(even):
                    if w == v:
                        if e == 1:
                            key = (even[:i] + even[i + 1:], odd)
                        else:
                            key = (even[:i] + ((w, e - 1),) + even[i + 1:], odd)
                        s = out.get(key, 0) + c * e
                        if s:
                            out[key] = s
                        else:
                            del out[key]
                        break
        else:
            for (even, odd), c in self.terms.items():
                for i, w in enumerate(odd):
                    if w == v:
                        key = (even, odd[:i] + odd[i + 1:])
                        sign = -1 if i % 2 else 1
                        s = out.get(key, 0) + sign * c
                        if s:
                            out[key] = s
                        else:
                            del out[key]
                        break
        return GradedPoly(out)

    def total_derivative(self, lam: int, cap: int = DEFAULT_JET_CAP) -> "GradedPoly":
        """Total derivative d_lam: jets are bumped, coordinates give deltas."""
        out = {}

        def put(key, c):
            s = out.get(key, 0) + c
            if s:
                out[key] = s
            else:
                del out[key]

        for (even, odd), c in self.terms.items():
            for i, (v, e) in enumerate(even):
                rest = even[:i] + (((v, e - 1),) if e > 1 else ()) + even[i + 1:]
                if v.symbol.coord is not None:
                    if v.symbol.coord == lam:
                        put((rest, odd), c * e)
                    continue
                bumped = _bump(v, lam, cap)
                put((_merge_even(rest, ((bumped, 1),)), odd), c * e)
            for i, v in enumerate(odd):
                bumped = _bump(v, lam, cap)
                ins = _sort_odd(odd[:i] + (bumped,) + odd[i + 1:])
                if ins is None:
                    continue
                new_odd, sign = ins
                put((even, new_odd), c * sign)
        return GradedPoly(out)

    def total_derivative_multi(self, index: MultiIndex,
                               cap: int = DEFAULT_JET_CAP) -> "GradedPoly":
        p = self
        for lam in index:
            p = p.total_derivative(lam, cap)
        return p

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, assignment: Mapping, algebra):
        """Evaluate in a finite Grassmann algebra.

        Even variables may be assigned rationals or even algebra elements,
        odd variables odd algebra elements (typically distinct generators).
        """
        total = algebra.zero()
        for (even, odd), c in self.terms.items():
            val = algebra.scalar(c)
            for v, e in even:
                if v not in assignment:
                    raise EvaluationError(f"no value assigned to {v.symbol.name}{v.index}")
                val = val * (algebra.lift(assignment[v]) ** e)
            for v in odd:
                if v not in assignment:
                    raise EvaluationError(f"no value assigned to {v.symbol.name}{v.index}")
                val = val * algebra.lift(assignment[v])
            total = total + val
        return total

    def __repr__(self):
        from .render import poly_text
        return f"GradedPoly({poly_text(self)})"


def _coerce(x) -> GradedPoly:
    if isinstance(x, GradedPoly):
        return x
    if isinstance(x, (int, Fraction)):
        return GradedPoly.constant(x)
    raise TypeError(f"cannot coerce {type(x).__name__} into the ring")


# ---------------------------------------------------------------------------
# term trees
#
# normalize() turns a raw nested-tuple expression into canonical form.  Trees
# are what the model parser produces:
#   int | Fraction
#   ("var", name, (indices...))
#   ("add", t1, t2, ...) / ("mul", t1, t2, ...) / ("neg", t)
#   ("pow", t, k)
#   ("d", lam, t)          total derivative

def normalize(tree, symbols: Mapping[str, FieldSymbol],
              cap: int = DEFAULT_JET_CAP) -> GradedPoly:
    if isinstance(tree, (int, Fraction)):
        return GradedPoly.constant(tree)
    if isinstance(tree, GradedPoly):
        return tree
    if not isinstance(tree, tuple) or not tree:
        raise DeclarationError(f"bad term tree node {tree!r}")
    tag = tree[0]
    if tag == "var":
        _, name, index = tree
        if name not in symbols:
            raise DeclarationError(f"unknown symbol {name!r}")
        return GradedPoly.variable(jet(symbols[name], index))
    if tag == "add":
        out = GradedPoly.zero()
        for sub in tree[1:]:
            out = out + normalize(sub, symbols, cap)
        return out
    if tag == "mul":
        out = GradedPoly.constant(1)
        for sub in tree[1:]:
            out = out * normalize(sub, symbols, cap)
        return out
    if tag == "neg":
        return -normalize(tree[1], symbols, cap)
    if tag == "pow":
        return normalize(tree[1], symbols, cap) ** tree[2]
    if tag == "d":
        return normalize(tree[2], symbols, cap).total_derivative(tree[1], cap)
    raise DeclarationError(f"bad term tree tag {tag!r}")


# ---------------------------------------------------------------------------
# structured serialization (the CLI's machine-readable schema)

def poly_to_data(p: GradedPoly) -> list:
    out = []
    for (even, odd), c in p.sorted_terms():
        out.append({
            "coeff": f"{c.numerator}/{c.denominator}" if c.denominator != 1 else str(c.numerator),
            "even": [[v.symbol.name, list(v.index), e] for v, e in even],
            "odd": [[v.symbol.name, list(v.index)] for v in odd],
        })
    return out


def poly_from_data(data: Sequence, symbols: Mapping[str, FieldSymbol]) -> GradedPoly:
    total = GradedPoly.zero()
    for mono in data:
        p = GradedPoly.constant(Fraction(mono["coeff"]))
        for name, index, e in mono["even"]:
            p = p * GradedPoly.variable(jet(symbols[name], index)) ** e
        for name, index in mono["odd"]:
            p = p * GradedPoly.variable(jet(symbols[name], index))
        total = total + p
    return total

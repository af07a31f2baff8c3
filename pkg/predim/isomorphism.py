"""
isomorphism
~~~~~~~~~~~

Deciding whether two tuples have the same type, by comparing their closures.

Two tuples `a` and `b` have the same type exactly when there is a bijection
from `cl(a)` to `cl(b)`, sending each `a_i` to `b_i`, which preserves the order,
the colours and all algebraic relations over the rationals.  An order
preserving bijection between finite ordered sets is unique, so the question is
whether that forced bijection works.  We decide it on the finite presentation:

- the closures have the same size and the tuples sit at the same positions;
- colours agree position by position;
- the same positions form (greedy) transcendence bases;
- each other point has the same minimal polynomial over the basis, written
  in variables named by position, and is the same root of it (counted from
  below).

All of this is collected into a :class:`TypeFingerprint`.  Cuts of the basis
over the rationals are only compared through the named points.

When a comparison fails, we also try to transport the first closure along the
map the tuple entries determine (entries which are generators substitute for
one another, common entries fix their closures) and report a point whose
colour, or a pair whose order, is not preserved.
"""

import itertools as _itertools
from dataclasses import dataclass as _dataclass
import logging as _logging

import sympy as _sympy

from . import field as _field
from . import structure as _structure
from . import utils as _utils

_logger = _logging.getLogger(__name__)

DEFAULT_PROFILE_CAP = 3

_FINGERPRINTS = _utils.Cache(maxcount=4096)
_RELATIONS = _utils.Cache(maxcount=4096)

_X = _sympy.Symbol("x")

def _position_symbol(position):
    return _sympy.Symbol("y{}".format(position))


@_dataclass(frozen=True, repr=False)
class TypeFingerprint():
    """Positional description of the closure of a tuple.  Two tuples have
    equal fingerprints exactly when their closures are isomorphic over the
    tuples.

    :param size: Number of points in the closure.
    :param positions: Position of each tuple entry in the closure's order.
    :param colours: Colour of each closure point, by position.
    :param independent: Whether each point is independent of the points
      below it (the greedy transcendence basis).
    :param profile: Transcendence degree of every set of positions up to the
      profile cap, as pairs `(positions, trdeg)`.
    :param relations: For each dependent position, the triple `(position,
      minimal polynomial text, root index)`.
    """
    size: int
    positions: tuple
    colours: tuple
    independent: tuple
    profile: tuple
    relations: tuple

    def __repr__(self):
        return "TypeFingerprint(size={}, positions={}, colours={}, relations={})".format(
            self.size, self.positions, self.colours, self.relations)

    def to_dict(self):
        return {"size": self.size, "positions": list(self.positions),
            "colours": list(self.colours), "independent": list(self.independent),
            "profile": [[list(p), r] for p, r in self.profile],
            "relations": [list(r) for r in self.relations]}


class TypeComparison():
    """Outcome of :func:`types_equal`.  Truthy if the types are equal.

    :param equal: The verdict.
    :param bijection: Map from `cl(a)` to `cl(b)` when equal, else `None`.
    :param obstruction: When not equal, dictionary with `kind` (one of
      "length", "equality", "closure-size", "order", "colour", "dependence",
      "relation"), a `detail` message and the `points` involved.
    :param fast_path: Whether both tuples were coloured and so compared by
      order alone.
    """
    def __init__(self, equal, bijection=None, obstruction=None, fast_path=False):
        self.equal = equal
        self.bijection = bijection
        self.obstruction = obstruction
        self.fast_path = fast_path

    def __bool__(self):
        return self.equal

    def __repr__(self):
        if self.equal:
            return "TypeComparison(equal, {})".format(self.bijection)
        return "TypeComparison(not equal, {})".format(self.obstruction)

    def to_dict(self):
        return {"equal": self.equal, "fast_path": self.fast_path,
            "bijection": None if self.bijection is None else dict(self.bijection),
            "obstruction": self.obstruction}


def _obstruction(kind, detail, points=()):
    return {"kind": kind, "detail": detail, "points": list(points)}


def _generator_symbol(M, name):
    """The transcendental generator symbol which is the value of point `name`,
    or `None`."""
    expr = M.value(name).as_expr()
    if expr.is_Symbol and expr.name in M.tower.transcendental_names:
        return expr
    return None


def _relation_shortcut(M, basis, point):
    """When the basis points are distinct transcendental generators and the
    point is a rational function of them, its relation is linear in `x`."""
    symbols = [_generator_symbol(M, n) for n in basis]
    if any(s is None for s in symbols) or len(set(symbols)) != len(symbols):
        return None
    expr = M.value(point).as_expr()
    if not expr.free_symbols <= set(symbols):
        return None
    num, den = _sympy.fraction(_sympy.together(expr))
    return (den * _X - num), symbols


def _groebner_relation(M, basis, point, ys):
    """Minimal polynomial of `point` over the basis points, by eliminating the
    tower generators from the presentation."""
    tower = M.tower
    polys, dens = [], []
    for sym, name in zip(ys + [_X], list(basis) + [point]):
        num, den = _sympy.fraction(_sympy.together(M.value(name).as_expr()))
        polys.append(_sympy.expand(sym * den - num))
        dens.append(den)
    used = set().union(*(p.free_symbols for p in polys)) - set(ys) - {_X}
    for spec in reversed(tower.generators):
        own = tower.symbol(spec.name)
        if isinstance(spec, _field.Algebraic) and own in used:
            rule = _sympy.sympify(spec.poly)
            polys.append(rule)
            dens.append(_sympy.Poly(rule, own).LC())
            used |= rule.free_symbols
    z = _sympy.Symbol("_saturate")
    polys.append(_sympy.expand(z * _sympy.Mul(*dens) - 1))
    eliminate = [z] + [tower.symbol(n) for n in tower.names if tower.symbol(n) in used]
    basis_g = _sympy.groebner(polys, *eliminate, _X, *ys, order="lex")
    candidates = [g for g in basis_g.exprs
        if not (g.free_symbols & set(eliminate)) and _X in g.free_symbols]
    if not candidates:
        raise AssertionError("No relation found for '{}' over {}".format(point, list(basis)))
    return min(candidates, key=lambda g: (_sympy.degree(g, _X), _sympy.count_ops(g)))


def _evaluate_at(M, expr, ys, basis, point=None):
    subs = {y: M.value(n).as_expr() for y, n in zip(ys, basis)}
    if point is not None:
        subs[_X] = M.value(point).as_expr()
    return M.tower.element(expr.xreplace(subs))


def _canonical(poly_expr, ys):
    poly = _sympy.Poly(poly_expr, _X, *ys, domain=_sympy.QQ)
    _, poly = poly.clear_denoms()
    _, poly = poly.primitive()
    if poly.LC() < 0:
        poly = -poly
    return poly


def _root_index(M, poly, ys, basis, point):
    """How many real roots of the relation, specialised at the basis values,
    lie below the point."""
    domain = _sympy.QQ.frac_field(*ys) if ys else _sympy.QQ
    sequence = _sympy.Poly(poly.as_expr(), _X, domain=domain).sturm()
    x = M.value(point)

    def variations(at_minus_infinity):
        signs = []
        for p in sequence:
            coeffs = [_evaluate_at(M, _sympy.sympify(c), ys, basis) for c in p.all_coeffs()]
            if at_minus_infinity:
                s = coeffs[0].sign() * (-1) ** (len(coeffs) - 1)
            else:
                value = M.tower.zero
                for c in coeffs:
                    value = value * x + c
                s = value.sign()
            if s:
                signs.append(s)
        return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

    return variations(True) - variations(False) - 1


def minimal_relation(M, basis, point):
    """Canonical minimal polynomial of `point` over the points `basis`, as a
    primitive integer polynomial in `x` and `y0, y1, ...` (one per basis point),
    together with the root index of the point.

    :return: Pair `(expression, root_index)`.
    """
    basis = tuple(basis)
    key = (M, basis, point)
    def compute():
        ys = [_position_symbol(i) for i in range(len(basis))]
        shortcut = _relation_shortcut(M, basis, point)
        if shortcut is not None:
            expr, symbols = shortcut
            poly = _canonical(expr.xreplace(dict(zip(symbols, ys))), ys)
            return poly.as_expr(), 0
        eliminated = _groebner_relation(M, basis, point, ys)
        _, factors = _sympy.factor_list(eliminated, _X, *ys)
        for factor, _ in factors:
            if _X in factor.free_symbols and _evaluate_at(M, factor, ys, basis, point).is_zero:
                poly = _canonical(factor, ys)
                return poly.as_expr(), _root_index(M, poly, ys, basis, point)
        raise AssertionError("No factor of the relation vanishes at '{}'".format(point))
    return _RELATIONS.get_or_compute(key, compute)


def _describe(M, entries, profile_cap):
    closure = _structure.closure(M, entries).in_order()
    if len(closure) > M.size_bound:
        raise _structure.SizeGuard("Closure of {} has {} points (bound {})".format(
            list(entries), len(closure), M.size_bound))
    index = {n: i for i, n in enumerate(closure)}
    independent, basis, rank = [], [], 0
    for name in closure:
        r = M.trdeg(basis + [name])
        independent.append(r > rank)
        if r > rank:
            basis.append(name)
            rank = r
    relations = []
    basis_positions = [index[n] for n in basis]
    for name in closure:
        if name in basis:
            continue
        relation, root = minimal_relation(M, basis, name)
        relation = relation.xreplace({_position_symbol(i): _sympy.Symbol("p{}".format(p))
            for i, p in enumerate(basis_positions)})
        relations.append((index[name], _sympy.sstr(relation), root))
    profile = []
    for size in range(1, min(profile_cap, len(closure)) + 1):
        for combo in _itertools.combinations(range(len(closure)), size):
            profile.append((combo, M.trdeg([closure[i] for i in combo])))
    fingerprint = TypeFingerprint(len(closure), tuple(index[n] for n in entries),
        tuple(M.is_coloured(n) for n in closure), tuple(independent), tuple(profile), tuple(relations))
    return fingerprint, closure


def fingerprint(M, entries, over=(), profile_cap=DEFAULT_PROFILE_CAP):
    """The :class:`TypeFingerprint` of the tuple `entries` followed by the
    parameters `over`."""
    return _fingerprint_and_closure(M, tuple(entries) + tuple(over), profile_cap)[0]

def _fingerprint_and_closure(M, entries, profile_cap):
    for n in entries:
        if n not in M:
            raise _structure.InvariantViolation("unknown-point", "No point named '{}'".format(n))
    key = (M, entries, profile_cap)
    return _FINGERPRINTS.get_or_compute(key, lambda: _describe(M, entries, profile_cap))


def _equality_pattern(entries):
    return [[i for i, y in enumerate(entries) if y == x][0] for x in entries]

def _order_pattern(M, entries):
    return [M.position(n) for n in entries]


def _transport(M, a, closure_a, N, b):
    """Map from points of `closure_a` into `N` determined by the tuples alone."""
    mapping = {}
    for x, y in zip(a, b):
        mapping.setdefault(x, y)
    symbols = {}
    fixed = set()
    if M is N:
        common = [x for x, y in zip(a, b) if x == y]
        if common:
            for u in _structure.closure(M, common):
                mapping.setdefault(u, u)
                s = _generator_symbol(M, u)
                if s is not None:
                    fixed.add(s)
    for x, y in zip(a, b):
        sx, sy = _generator_symbol(M, x), _generator_symbol(N, y)
        if sx is not None and sy is not None and x != y:
            symbols[sx] = sy
    if len(set(symbols.values())) != len(symbols):
        return mapping
    known = set(symbols) | fixed
    for u in closure_a:
        if u in mapping or not symbols:
            continue
        expr = M.value(u).as_expr()
        if not expr.free_symbols <= known:
            continue
        target = N.tower.element(expr.xreplace(symbols))
        match = next((v for v in N.names if (N.value(v) - target).is_zero), None)
        if match is not None:
            mapping[u] = match
    return mapping


def _transport_obstruction(M, closure_a, N, mapping):
    for u in closure_a:
        if u in mapping and M.is_coloured(u) != N.is_coloured(mapping[u]):
            return _obstruction("colour", "'{}' is {}coloured but its image '{}' is {}coloured".format(
                u, "" if M.is_coloured(u) else "un", mapping[u], "" if N.is_coloured(mapping[u]) else "un"),
                [u, mapping[u]])
    mapped = [u for u in closure_a if u in mapping]
    for u, v in _itertools.combinations(mapped, 2):
        if N.position(mapping[u]) > N.position(mapping[v]):
            return _obstruction("order", "'{}' < '{}' but '{}' > '{}'".format(u, v, mapping[u], mapping[v]),
                [u, v, mapping[u], mapping[v]])
    return None


def _fast_path(M, a, N, b):
    if _equality_pattern(a) != _equality_pattern(b):
        return TypeComparison(False, obstruction=_obstruction("equality",
            "Repeated entries differ", list(a) + list(b)), fast_path=True)
    sorted_a = sorted(range(len(a)), key=lambda i: M.position(a[i]))
    sorted_b = sorted(range(len(b)), key=lambda i: N.position(b[i]))
    if sorted_a != sorted_b:
        return TypeComparison(False, obstruction=_obstruction("order",
            "Tuples are ordered differently", list(a) + list(b)), fast_path=True)
    return TypeComparison(True, bijection=dict(zip(a, b)), fast_path=True)


def types_equal(M, a, b, N=None, over=(), fast=True, profile_cap=DEFAULT_PROFILE_CAP):
    """Decide whether the tuple `a` of points of `M` has the same type as the
    tuple `b` of points of `N` (default `M`), over the parameters `over`
    (point names present in both).

    :param fast: If both tuples are coloured and both structures are in the
      class, compare order alone (coloured sets are closed and independent).
    :return: :class:`TypeComparison`.
    """
    N = M if N is None else N
    a = tuple(a) + tuple(over)
    b = tuple(b) + tuple(over)
    if len(a) != len(b):
        return TypeComparison(False, obstruction=_obstruction("length",
            "Tuples have lengths {} and {}".format(len(a), len(b))))
    for n in a:
        if n not in M:
            raise _structure.InvariantViolation("unknown-point", "No point named '{}'".format(n))
    for n in b:
        if n not in N:
            raise _structure.InvariantViolation("unknown-point", "No point named '{}'".format(n))
    if fast and all(M.is_coloured(n) for n in a) and all(N.is_coloured(n) for n in b) \
            and _structure.in_class(M) and _structure.in_class(N):
        return _fast_path(M, a, N, b)
    if _equality_pattern(a) != _equality_pattern(b):
        return TypeComparison(False, obstruction=_obstruction("equality",
            "Repeated entries differ", list(a) + list(b)))

    fa, closure_a = _fingerprint_and_closure(M, a, profile_cap)
    fb, closure_b = _fingerprint_and_closure(N, b, profile_cap)
    if fa == fb:
        return TypeComparison(True, bijection=dict(zip(closure_a, closure_b)))

    for source, target, s_tuple, t_tuple, closure in ((M, N, a, b, closure_a), (N, M, b, a, closure_b)):
        found = _transport_obstruction(source, closure, target,
            _transport(source, s_tuple, closure, target, t_tuple))
        if found is not None:
            found["transport"] = True
            return TypeComparison(False, obstruction=found)

    if fa.size != fb.size:
        return TypeComparison(False, obstruction=_obstruction("closure-size",
            "Closures have {} and {} points".format(fa.size, fb.size), closure_a + closure_b))
    if fa.positions != fb.positions:
        i = next(i for i, (p, q) in enumerate(zip(fa.positions, fb.positions)) if p != q)
        return TypeComparison(False, obstruction=_obstruction("order",
            "Entry {} is at position {} of its closure, against {}".format(i, fa.positions[i], fb.positions[i]),
            [a[i], b[i]]))
    if fa.colours != fb.colours:
        i = next(i for i, (p, q) in enumerate(zip(fa.colours, fb.colours)) if p != q)
        return TypeComparison(False, obstruction=_obstruction("colour",
            "Colours differ at closure position {}".format(i), [closure_a[i], closure_b[i]]))
    if fa.independent != fb.independent or fa.profile != fb.profile:
        return TypeComparison(False, obstruction=_obstruction("dependence",
            "Algebraic dependence differs", closure_a + closure_b))
    i = next(i for i, (p, q) in enumerate(zip(fa.relations, fb.relations)) if p != q)
    ra, rb = fa.relations[i], fb.relations[i]
    return TypeComparison(False, obstruction=_obstruction("relation",
        "Point at position {} satisfies {} (root {}) against {} (root {})".format(ra[0], ra[1], ra[2], rb[1], rb[2]),
        [closure_a[ra[0]], closure_b[rb[0]]]))

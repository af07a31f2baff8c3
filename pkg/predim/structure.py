"""
structure
~~~~~~~~~

Finite coloured ordered configurations, and the predimension calculus on them.

A :class:`ColouredStructure` is a finite set of named points, each a
:class:`predim.field.FieldElement` of one tower, with a subset of the names
"coloured" (the predicate `p`).  Points are kept in declaration order (used to
break ties reproducibly) and, separately, in the order of their values.

For a set of points `A`, the predimension is

    delta(A) = trdeg(A) - |A n p|

and `A` is closed in `B` when `delta(C/A) >= 0` for every `A <= C <= B`.  Since
an uncoloured point never lowers `delta`, a set `A` is closed in `B` exactly when
the coloured points of `B - A` are algebraically independent over `A`.  All
the operations here use that criterion, with full subset enumeration available
as a cross-check (guarded by a size bound).
"""

import functools as _functools
import itertools as _itertools
import logging as _logging
from dataclasses import dataclass as _dataclass
from typing import Optional as _Optional

from . import field as _field
from . import utils as _utils

_logger = _logging.getLogger(__name__)

DEFAULT_SIZE_BOUND = 20


class SizeGuard(ValueError):
    """An exhaustive enumeration would exceed the configured size bound."""
    pass

class InvariantViolation(ValueError):
    """A structure breaks one of its construction rules; `rule` names it."""
    def __init__(self, rule, message, names=()):
        super().__init__("{} ({})".format(message, rule))
        self.rule = rule
        self.names = tuple(names)


class SubsetHandle():
    """A subset of the points of a structure.  Iterates in declaration order.

    :param structure: The owning :class:`ColouredStructure`.
    :param members: Iterable of point names.
    """
    __slots__ = ("_structure", "_members")

    def __init__(self, structure, members):
        members = frozenset(members)
        unknown = members - structure.name_set
        if unknown:
            raise InvariantViolation("unknown-point", "No points named {}".format(sorted(unknown)))
        self._structure = structure
        self._members = members

    @property
    def structure(self):
        return self._structure

    @property
    def members(self):
        return self._members

    @property
    def names(self):
        """Members in declaration order."""
        return [n for n in self._structure.names if n in self._members]

    def in_order(self):
        """Members in the order of their values."""
        return [n for n in self._structure.order if n in self._members]

    def __iter__(self):
        return iter(self.names)

    def __len__(self):
        return len(self._members)

    def __contains__(self, name):
        return name in self._members

    def __eq__(self, other):
        if isinstance(other, SubsetHandle):
            return self._members == other._members and self._structure is other._structure
        if isinstance(other, (set, frozenset)):
            return self._members == other
        return NotImplemented

    def __hash__(self):
        return hash(self._members)

    def __or__(self, other):
        return SubsetHandle(self._structure, self._members | frozenset(other))

    def __sub__(self, other):
        return SubsetHandle(self._structure, self._members - frozenset(other))

    def issubset(self, other):
        return self._members <= frozenset(other)

    def __repr__(self):
        return "{{{}}}".format(", ".join(self.names))


class ColouredStructure():
    """Finite coloured ordered configuration over a field tower.

    :param tower: The :class:`predim.field.FieldTower` housing the values.
    :param points: Mapping (or sequence of pairs) from point name to value.
      Values may be field elements, rationals, text or sympy expressions in the
      generator names.
    :param colours: Iterable of names of coloured points.
    :param size_bound: Largest set size for exhaustive subset enumeration.
    """
    def __init__(self, tower, points, colours=(), size_bound=DEFAULT_SIZE_BOUND):
        self._tower = tower
        self._size_bound = int(size_bound)
        items = list(points.items()) if hasattr(points, "items") else list(points)
        self._names = []
        self._values = {}
        for name, value in items:
            if not isinstance(name, str) or not name:
                raise InvariantViolation("point-name", "Bad point name {!r}".format(name))
            if name in self._values:
                raise InvariantViolation("unique-names", "Point '{}' declared twice".format(name), [name])
            self._names.append(name)
            self._values[name] = tower.element(value)
        self._name_set = frozenset(self._names)
        self._colours = frozenset(colours)
        unknown = self._colours - self._name_set
        if unknown:
            raise InvariantViolation("unknown-point", "Colours name unknown points {}".format(sorted(unknown)))
        for name in self._names:
            if name in self._colours and self._values[name].is_rational():
                raise InvariantViolation("rational-uncoloured",
                    "Point '{}' is a rational constant and cannot be coloured".format(name), [name])
        for a, b in _itertools.combinations(self._names, 2):
            if (self._values[a] - self._values[b]).is_zero:
                raise InvariantViolation("distinct-values",
                    "Points '{}' and '{}' have the same value".format(a, b), [a, b])
        cmp = lambda a, b: (self._values[a] - self._values[b]).sign()
        self._order = tuple(sorted(self._names, key=_functools.cmp_to_key(cmp)))
        self._positions = {name: i for i, name in enumerate(self._order)}
        self._declared = {name: i for i, name in enumerate(self._names)}
        self._trdeg_cache = _utils.Cache(maxcount=1 << 16)
        self._membership = None

    @property
    def tower(self):
        return self._tower

    @property
    def names(self):
        """Point names in declaration order."""
        return list(self._names)

    @property
    def name_set(self):
        return self._name_set

    @property
    def colours(self):
        """Frozen set of coloured point names."""
        return self._colours

    @property
    def order(self):
        """Point names sorted by value."""
        return self._order

    @property
    def size_bound(self):
        return self._size_bound

    def position(self, name):
        """Position of the point in the order (0 is the smallest)."""
        return self._positions[name]

    def declared_index(self, name):
        return self._declared[name]

    def value(self, name):
        return self._values[name]

    def is_coloured(self, name):
        return name in self._colours

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._name_set

    def __repr__(self):
        parts = ["{}{}".format(n, "*" if n in self._colours else "") for n in self._order]
        return "ColouredStructure(<{}>)".format(" < ".join(parts))

    def subset(self, names=None):
        """A :class:`SubsetHandle`; all points if `names` is `None`."""
        return self._handle(names)

    def _handle(self, names):
        if names is None:
            return SubsetHandle(self, self._names)
        if isinstance(names, SubsetHandle):
            if names.structure is self:
                return names
            return SubsetHandle(self, names.members)
        if isinstance(names, str):
            names = [names]
        return SubsetHandle(self, names)

    def sorted_names(self, names):
        """The given names, in declaration order."""
        names = frozenset(names)
        return [n for n in self._names if n in names]

    def trdeg(self, names):
        """Transcendence degree of the values of a set of points (memoised)."""
        key = frozenset(self._handle(names).members)
        return self._trdeg_cache.get_or_compute(key,
            lambda: self._tower.trdeg([self._values[n] for n in self.sorted_names(key)]))

    def delta(self, names):
        """The predimension `trdeg(A) - |p(A)|`."""
        handle = self._handle(names)
        return self.trdeg(handle) - len(handle.members & self._colours)

    def delta_rel(self, names, over):
        """`delta(C/A) = delta(C u A) - delta(A)`."""
        c, a = self._handle(names), self._handle(over)
        return self.delta(c | a) - self.delta(a)

    def restrict(self, names):
        """Substructure on the given points (same tower)."""
        keep = self._handle(names).members
        points = [(n, self._values[n]) for n in self._names if n in keep]
        return ColouredStructure(self._tower, points, self._colours & keep, self._size_bound)

    def with_colours(self, colours):
        """Same points, different colouring."""
        return ColouredStructure(self._tower, [(n, self._values[n]) for n in self._names],
            colours, self._size_bound)

    def points_in_order(self):
        """List of `(name, value, coloured)` by increasing value."""
        return [(n, self._values[n], n in self._colours) for n in self._order]

    def to_dict(self):
        """Canonical JSON-ready form: points sorted by order, colours listed,
        tower embedded."""
        return {
            "tower": self._tower.to_dict(),
            "points": [{"name": n, "value": str(self._values[n]), "coloured": n in self._colours,
                "position": self._positions[n], "declared": self._declared[n]} for n in self._order],
            "colours": sorted(self._colours),
        }

    @staticmethod
    def from_dict(data, size_bound=DEFAULT_SIZE_BOUND):
        tower = _field.FieldTower.from_dict(data["tower"])
        points = sorted(data["points"], key=lambda p: p.get("declared", p["position"]))
        return ColouredStructure(tower, [(p["name"], p["value"]) for p in points],
            data["colours"], size_bound)


def _is_dependent(M, base, names):
    return M.trdeg(base | frozenset(names)) < M.trdeg(base) + len(names)

def _find_circuit(M, base, candidates):
    """A minimal set of `candidates` algebraically dependent over `base`, or
    `None` if the candidates are independent over it.  Greedy in the given
    order, then shrunk."""
    base = frozenset(base)
    independent = []
    rank = M.trdeg(base)
    for x in candidates:
        trial = M.trdeg(base | frozenset(independent) | {x})
        if trial > rank + len(independent):
            independent.append(x)
            continue
        circuit = independent + [x]
        for y in list(independent):
            smaller = [z for z in circuit if z != y]
            if _is_dependent(M, base, smaller):
                circuit = smaller
        return circuit
    return None


def delta(M, A):
    """`delta(A) = trdeg(A) - |p(A)|`; may be negative."""
    return M.delta(A)

def delta_rel(M, C, A):
    """`delta(C/A) = delta(C u A) - delta(A)`."""
    return M.delta_rel(C, A)


def is_closed(M, A, B=None, exhaustive=False):
    """Decide `A` closed in `B` (all points of `M` if `B` is `None`).

    :param exhaustive: If `True`, enumerate every intermediate set; raises
      :class:`SizeGuard` if `|B - A|` exceeds the structure's size bound.
    """
    A = M.subset(A)
    B = M.subset(B)
    if not A.issubset(B):
        raise ValueError("{} is not a subset of {}".format(A, B))
    extra = M.sorted_names(B.members - A.members)
    if exhaustive:
        if len(extra) > M.size_bound:
            raise SizeGuard("Cannot enumerate {} points (bound {})".format(len(extra), M.size_bound))
        for size in range(1, len(extra) + 1):
            for combo in _itertools.combinations(extra, size):
                if M.delta_rel(combo, A) < 0:
                    return False
        return True
    coloured = [x for x in extra if M.is_coloured(x)]
    return not _is_dependent(M, A.members, coloured)


def closedness_witness(M, A, B=None):
    """A minimal set `C` of points of `B - A` with `delta(C/A) < 0`, or `None`
    if `A` is closed in `B`."""
    A = M.subset(A)
    B = M.subset(B)
    extra = [x for x in M.sorted_names(B.members - A.members) if M.is_coloured(x)]
    circuit = _find_circuit(M, A.members, extra)
    return None if circuit is None else M.subset(circuit)


def closure_tower(M, A):
    """The closure of `A` in `M` together with the witness sets adjoined to
    reach it: `A = B_0 < B_1 < ... < B_n = cl(A)`, each `B_{i+1} - B_i` a minimal
    set with negative relative predimension over `B_i`.

    :return: Pair `(closure, steps)` with `steps` a list of
      :class:`SubsetHandle`.
    """
    current = set(M.subset(A).members)
    steps = []
    while True:
        candidates = [x for x in M.names if x not in current and M.is_coloured(x)]
        circuit = _find_circuit(M, current, candidates)
        if circuit is None:
            break
        _logger.debug("Closure adjoins %s (delta %s)", circuit, M.delta_rel(circuit, current))
        current.update(circuit)
        steps.append(M.subset(circuit))
    return M.subset(current), steps


def closure(M, A):
    """The smallest closed subset of `M` containing `A`."""
    return closure_tower(M, A)[0]


def dim(M, A):
    """`dim(A) = delta(cl(A))`."""
    return M.delta(closure(M, A))

def in_CL(M, x, A):
    """Whether `x` is in the geometric closure of `A`: `dim(xA) = dim(A)`."""
    A = M.subset(A)
    return dim(M, A | {x}) == dim(M, A)

def geometric_closure(M, A):
    """All points `x` of `M` with :func:`in_CL`."""
    A = M.subset(A)
    base = dim(M, A)
    return M.subset([x for x in M.names if x in A or dim(M, A | {x}) == base])


def basis_and_core(M, order=None):
    """A transcendence basis (greedy, scanning points in `order`, declaration
    order by default) and its core, the closure of the basis.

    :return: Pair of :class:`SubsetHandle`.
    """
    basis = []
    rank = 0
    for name in (M.names if order is None else order):
        r = M.trdeg(basis + [name])
        if r > rank:
            basis.append(name)
            rank = r
    basis = M.subset(basis)
    core = closure(M, basis)
    if core.members != basis.members | M.colours:
        raise AssertionError("Core {} differs from basis plus colours".format(core))
    return basis, core


@_dataclass(frozen=True)
class ClassMembership():
    """Outcome of :func:`check_class_membership`.  `violation` is a set with
    negative predimension; `minimal` says whether it was certified smallest
    (by size, then declaration order)."""
    ok: bool
    violation: _Optional[SubsetHandle] = None
    delta: _Optional[int] = None
    minimal: bool = True
    method: str = "criterion"

    def to_dict(self):
        out = {"ok": self.ok, "method": self.method}
        if not self.ok:
            out["violation"] = self.violation.names
            out["delta"] = self.delta
            out["minimal"] = self.minimal
        return out


def check_class_membership(M, exhaustive=False, max_size=None):
    """Decide whether every subset of `M` has non-negative predimension.

    The structure is in the class exactly when its coloured points are
    algebraically independent.  A violation is reported as the smallest
    dependent set of coloured points (ties broken by declaration order), which
    is also the first negative set found by enumerating all subsets.

    :param exhaustive: Enumerate all subsets of all points instead (guarded by
      the size bound).
    :param max_size: Largest violation size searched for minimality; beyond it
      a (non-minimal) circuit is reported.
    """
    if exhaustive:
        if len(M) > M.size_bound:
            raise SizeGuard("Cannot enumerate subsets of {} points (bound {})".format(len(M), M.size_bound))
        for size in range(1, len(M) + 1):
            for combo in _itertools.combinations(M.names, size):
                d = M.delta(combo)
                if d < 0:
                    return ClassMembership(False, M.subset(combo), d, True, "enumeration")
        return ClassMembership(True, method="enumeration")

    coloured = [n for n in M.names if M.is_coloured(n)]
    if M.trdeg(coloured) == len(coloured):
        return ClassMembership(True)
    limit = len(coloured) if max_size is None else min(len(coloured), max_size)
    limit = min(limit, M.size_bound)
    for size in range(1, limit + 1):
        for combo in _itertools.combinations(coloured, size):
            if M.trdeg(combo) < size:
                return ClassMembership(False, M.subset(combo), M.delta(combo), True)
    circuit = _find_circuit(M, (), coloured)
    return ClassMembership(False, M.subset(circuit), M.delta(circuit), False)


def in_class(M):
    """Cached boolean class membership."""
    if M._membership is None:
        M._membership = check_class_membership(M).ok
    return M._membership

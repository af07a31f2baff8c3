"""
scenarios
~~~~~~~~~

Two finite configurations, built and checked with the type oracle.

- :func:`build_dprank_witness` builds `k` sequences of uncoloured points, each
  point `x` with a coloured companion `x + q`, and a pivot whose closure holds
  one coloured point inside each sequence's run of companions.  Each sequence
  is indiscernible over the others, but not over the pivot.
- :func:`build_nondistal_witness` builds uncoloured points `alpha < I < b < J`
  with the coloured sum `alpha + a0 + b` and the uncoloured sum
  `alpha + b + b0`.  Then `IbJ` is indiscernible over nothing, `IJ` is
  indiscernible over `alpha`, but `IbJ` is not indiscernible over `alpha`.

Indiscernibility is checked up to a window: all increasing tuples of length
at most the window must have the same type.
"""

import itertools as _itertools
import logging as _logging

from . import field as _field
from . import structure as _structure
from . import isomorphism as _isomorphism

_logger = _logging.getLogger(__name__)

DEFAULT_WINDOW = 3

_Fraction = _field.Fraction


class ConstructionInfeasible(ValueError):
    pass


class WindowVerdict():
    """Outcome of :func:`window_indiscernible`.

    :param ok: Whether all increasing tuples up to the window had one type.
    :param failing: `None`, or the pair of tuples found to differ.
    :param comparison: The :class:`TypeComparison` for the failing pair.
    :param checked: Number of tuples compared.
    """
    def __init__(self, ok, failing=None, comparison=None, checked=0):
        self.ok = ok
        self.failing = failing
        self.comparison = comparison
        self.checked = checked

    def __bool__(self):
        return self.ok

    def to_dict(self):
        out = {"ok": self.ok, "checked": self.checked}
        if not self.ok:
            out["failing"] = [list(t) for t in self.failing]
            out["obstruction"] = self.comparison.obstruction
        return out


def window_indiscernible(M, sequence, over=(), window=DEFAULT_WINDOW, profile_cap=_isomorphism.DEFAULT_PROFILE_CAP):
    """Check that every increasing tuple from `sequence` of length at most
    `window` has the same type over `over`.  Stops at the first failure."""
    checked = 0
    for size in range(1, min(window, len(sequence)) + 1):
        tuples = list(_itertools.combinations(sequence, size))
        first = tuples[0]
        for other in tuples[1:]:
            comparison = _isomorphism.types_equal(M, first, other, over=over, profile_cap=profile_cap)
            checked += 1
            if not comparison.equal:
                _logger.debug("Tuples %s and %s differ over %s: %s", first, other, list(over), comparison.obstruction)
                return WindowVerdict(False, (first, other), comparison, checked)
    return WindowVerdict(True, checked=checked)


def order_display(M, names=None):
    """The points in increasing order, coloured ones marked `*`."""
    names = M.order if names is None else [n for n in M.order if n in set(names)]
    return " < ".join("{}{}".format(n, "*" if M.is_coloured(n) else "") for n in names)


class ScenarioReport():
    """A built scenario with its verdicts.

    :param kind: "dp-rank" or "non-distal".
    :param structure: The :class:`ColouredStructure`.
    :param parameters: Dictionary of the build parameters.
    :param verdicts: Dictionary of named checks.
    :param notes: Interpretation notes.
    """
    def __init__(self, kind, structure, parameters, verdicts, notes):
        self.kind = kind
        self.structure = structure
        self.parameters = parameters
        self.verdicts = verdicts
        self.notes = notes

    @property
    def ok(self):
        """Whether every verdict came out as the construction intends."""
        return all(v.get("expected", True) == v.get("holds") for v in self.verdicts.values()
            if isinstance(v, dict) and "holds" in v)

    def point_table(self):
        M = self.structure
        return [{"name": n, "value": str(v), "coloured": c, "position": M.position(n)}
            for n, v, c in M.points_in_order()]

    def to_dict(self):
        return {"kind": self.kind, "parameters": self.parameters, "points": self.point_table(),
            "order": order_display(self.structure), "verdicts": self.verdicts, "notes": list(self.notes)}


def _guard(count, size_bound):
    if count > size_bound:
        raise _structure.SizeGuard("Scenario needs {} points (bound {})".format(count, size_bound))


def _verdict(holds, expected=True, **extra):
    out = {"holds": bool(holds), "expected": expected}
    out.update(extra)
    return out


class DpRankScenario(ScenarioReport):
    """The dp-rank configuration.

    :param sequences: Lists of point names, one per sequence.
    :param companions: Map from each sequence point to its coloured companion.
    :param pivot: Name of the pivot point.
    :param pivot_closure: Coloured companions of the pivot, one per sequence.
    """
    def __init__(self, structure, sequences, companions, pivot, pivot_closure, window, parameters, verdicts, notes):
        super().__init__("dp-rank", structure, parameters, verdicts, notes)
        self.sequences = sequences
        self.companions = companions
        self.pivot = pivot
        self.pivot_closure = pivot_closure
        self.window = window


_LABELS = "abefghijklmnorsuv"

def build_dprank_witness(k=2, L=2, window=DEFAULT_WINDOW, seed=0, size_bound=_structure.DEFAULT_SIZE_BOUND,
        precision_budget=_field.DEFAULT_PRECISION_BUDGET):
    """Build and check `k` sequences of length `L` and a pivot.

    Sequence `j` lives in the block starting at `W (j + 1)`, `W = 4 (L + 2)`:
    its points `x_i` have witnesses `[B + i + 1/4, B + i + 3/4]`, companions are
    `x_i + (L + 1)` (coloured) and the coloured point `c_j` is placed between
    the companions of `x_0` and `x_1`.  The pivot is the uncoloured sum of the
    `c_j`, so its closure is the pivot together with all the `c_j`.

    :raises SizeGuard: if the `2kL + k + 1` points exceed `size_bound`.
    :raises ConstructionInfeasible: if the intended order is not realised.
    """
    k, L, window = int(k), int(L), int(window)
    if k < 2 or L < 2 or window < 1:
        raise ValueError("Need k >= 2, L >= 2 and window >= 1")
    if k > len(_LABELS):
        raise ValueError("At most {} sequences".format(len(_LABELS)))
    _guard(2 * k * L + k + 1, size_bound)
    width = 4 * (L + 2)
    q = L + 1
    generators, points, colours = [], [], set()
    sequences, companions, pivot_closure = [], {}, []
    for j in range(k):
        block = width * (j + 1)
        label = _LABELS[j]
        sequence = []
        for i in range(L):
            name = "{}{}".format(label, i)
            generators.append(_field.Transcendental(name,
                (block + i + _Fraction(1, 4), block + i + _Fraction(3, 4)), "{}:{}".format(seed, name)))
            sequence.append(name)
        c = "c{}".format(j + 1)
        generators.append(_field.Transcendental(c,
            (block + q + _Fraction(7, 8), block + q + _Fraction(9, 8)), "{}:{}".format(seed, c)))
        sequences.append(sequence)
        pivot_closure.append(c)
    tower = _field.FieldTower(generators, precision_budget)
    for sequence in sequences:
        for name in sequence:
            hat = "{}_hat".format(name)
            points.append((name, tower.gen(name)))
            points.append((hat, tower.gen(name) + q))
            colours.add(hat)
            companions[name] = hat
    for c in pivot_closure:
        points.append((c, tower.gen(c)))
        colours.add(c)
    pivot_value = tower.zero
    for c in pivot_closure:
        pivot_value = pivot_value + tower.gen(c)
    points.append(("pivot", pivot_value))
    M = _structure.ColouredStructure(tower, points, colours, size_bound)

    for sequence, c in zip(sequences, pivot_closure):
        hats = [companions[n] for n in sequence]
        wanted = sequence + [hats[0], c] + hats[1:]
        positions = [M.position(n) for n in wanted]
        if positions != sorted(positions):
            raise ConstructionInfeasible("Order of {} is not {}".format(order_display(M, wanted), " < ".join(wanted)))

    membership = _structure.check_class_membership(M)
    closure = _structure.closure(M, ["pivot"])
    verdicts = {"class_membership": _verdict(membership.ok, **membership.to_dict())}
    verdicts["pivot_closure"] = _verdict(closure.members == set(pivot_closure) | {"pivot"},
        closure=closure.in_order(), delta=M.delta(closure))
    verdicts["companion_closures"] = _verdict(all(
        _structure.closure(M, [n]).members == {n, companions[n]} and M.delta([n, companions[n]]) == 0
        for n in companions))
    parameters = {"k": k, "L": L, "window": window, "seed": seed}
    notes = [
        "The pivot's closure is the pivot together with one coloured point per sequence; the pivot "
        "is their sum, so it is interalgebraic with the set of them.",
        "Companions are x + {} for every sequence point x.".format(q),
        "Indiscernibility is checked for increasing tuples of length at most {}.".format(window),
    ]

    if window == 1:
        profiles = {}
        for j, sequence in enumerate(sequences):
            profiles[j] = sorted({(len(_structure.closure(M, [n])), M.is_coloured(n)) for n in sequence})
        verdicts["degenerate_profile"] = _verdict(all(len(p) == 1 for p in profiles.values()),
            profiles={str(j): [list(p) for p in v] for j, v in profiles.items()})
        notes.append("With window 1 only the closure size and colour of single points are compared.")
    else:
        for j, sequence in enumerate(sequences):
            others = [n for i, s in enumerate(sequences) if i != j for n in s]
            verdict = window_indiscernible(M, sequence, others, window)
            verdicts["indiscernible_over_others_{}".format(j)] = _verdict(verdict.ok, **verdict.to_dict())
        for j, sequence in enumerate(sequences):
            comparison = _isomorphism.types_equal(M, [sequence[0]], [sequence[1]], over=["pivot"])
            verdicts["split_by_pivot_{}".format(j)] = _verdict(not comparison.equal,
                pair=[sequence[0], sequence[1]], obstruction=comparison.obstruction)
        reduced = M.restrict([n for n in M.names if n not in closure.members])
        for j, sequence in enumerate(sequences):
            others = [n for i, s in enumerate(sequences) if i != j for n in s]
            verdict = window_indiscernible(reduced, sequence, others, window)
            verdicts["indiscernible_without_pivot_{}".format(j)] = _verdict(verdict.ok, **verdict.to_dict())

    _logger.info("dp-rank scenario k=%s L=%s: %s", k, L, order_display(M))
    return DpRankScenario(M, sequences, companions, "pivot", pivot_closure, window, parameters, verdicts, notes)


class NonDistalScenario(ScenarioReport):
    """The non-distality configuration.

    :param I: Point names below the pivot.
    :param J: Point names above the pivot.
    :param pivot: The point `b` between them.
    :param alpha: The point below everything.
    :param coloured_sum: The coloured point `alpha + a0 + b`.
    :param uncoloured_sum: The uncoloured point `alpha + b + b0`.
    """
    def __init__(self, structure, I, J, pivot, alpha, coloured_sum, uncoloured_sum, window, parameters, verdicts, notes):
        super().__init__("non-distal", structure, parameters, verdicts, notes)
        self.I = I
        self.J = J
        self.pivot = pivot
        self.alpha = alpha
        self.coloured_sum = coloured_sum
        self.uncoloured_sum = uncoloured_sum
        self.window = window


def build_nondistal_witness(lenI=2, lenJ=2, window=DEFAULT_WINDOW, seed=0, size_bound=_structure.DEFAULT_SIZE_BOUND,
        precision_budget=_field.DEFAULT_PRECISION_BUDGET):
    """Build and check `alpha < I < b < J` with the sums `s1 = alpha + a0 + b`
    (coloured) and `s2 = alpha + b + b0` (uncoloured).

    All other points are uncoloured: colouring them too would give
    `{alpha, a0, b, s1}` predimension `3 - 4 = -1`.  This is checked and
    recorded in the notes.

    :raises SizeGuard: if the points exceed `size_bound`.
    :raises ConstructionInfeasible: if the intended order is not realised.
    """
    lenI, lenJ, window = int(lenI), int(lenJ), int(window)
    if lenI < 2 or lenJ < 2 or window < 1:
        raise ValueError("Need lenI >= 2, lenJ >= 2 and window >= 1")
    _guard(lenI + lenJ + 4, size_bound)
    I = ["a{}".format(i) for i in range(lenI)]
    J = ["b{}".format(i) for i in range(lenJ)]
    base = ["alpha"] + I + ["b"] + J
    generators = [_field.Transcendental(name, (i + _Fraction(1, 4), i + _Fraction(3, 4)), "{}:{}".format(seed, name))
        for i, name in enumerate(base)]
    tower = _field.FieldTower(generators, precision_budget)
    g = tower.gen
    points = [(name, g(name)) for name in base]
    points.append(("s1", g("alpha") + g(I[0]) + g("b")))
    points.append(("s2", g("alpha") + g("b") + g(J[0])))
    M = _structure.ColouredStructure(tower, points, {"s1"}, size_bound)
    positions = [M.position(n) for n in base]
    if positions != sorted(positions):
        raise ConstructionInfeasible("Order is {}".format(order_display(M, base)))

    exhaustive = len(M) <= size_bound
    membership = _structure.check_class_membership(M, exhaustive=exhaustive)
    literal = M.with_colours(set(base) | {"s1"})
    literal_membership = _structure.check_class_membership(literal)
    IbJ = I + ["b"] + J
    verdicts = {
        "class_membership": _verdict(membership.ok, **membership.to_dict()),
        "literal_colouring_violates": _verdict(not literal_membership.ok, **literal_membership.to_dict()),
    }
    if window == 1:
        profile = sorted({(len(_structure.closure(M, [n])), M.is_coloured(n)) for n in IbJ})
        verdicts["degenerate_profile"] = _verdict(len(profile) == 1, profile=[list(p) for p in profile])
    else:
        verdict = window_indiscernible(M, IbJ, (), window)
        verdicts["IbJ_over_nothing"] = _verdict(verdict.ok, **verdict.to_dict())
        verdict = window_indiscernible(M, I + J, ["alpha"], window)
        verdicts["IJ_over_alpha"] = _verdict(verdict.ok, **verdict.to_dict())
        verdict = window_indiscernible(M, IbJ, ["alpha"], window)
        verdicts["IbJ_over_alpha"] = _verdict(verdict.ok, expected=False, **verdict.to_dict())
        comparison = _isomorphism.types_equal(M, [I[0], "b"], ["b", J[0]], over=["alpha"])
        verdicts["sum_colour_pair"] = _verdict(not comparison.equal,
            pair=[[I[0], "b"], ["b", J[0]]], obstruction=comparison.obstruction)
        reduced = M.restrict(base)
        verdict = window_indiscernible(reduced, IbJ, ["alpha"], window)
        verdicts["IbJ_over_alpha_without_sums"] = _verdict(verdict.ok, **verdict.to_dict())

    parameters = {"lenI": lenI, "lenJ": lenJ, "window": window, "seed": seed}
    notes = [
        "alpha, I, b and J are uncoloured: with them coloured, {} has predimension {}.".format(
            literal_membership.violation.names if literal_membership.violation is not None else [],
            literal_membership.delta),
        "Only s1 = alpha + {} + b is coloured; s2 = alpha + b + {} is not.".format(I[0], J[0]),
        "Indiscernibility is checked for increasing tuples of length at most {}.".format(window),
    ]
    _logger.info("Non-distal scenario: %s", order_display(M))
    return NonDistalScenario(M, I, J, "b", "alpha", "s1", "s2", window, parameters, verdicts, notes)

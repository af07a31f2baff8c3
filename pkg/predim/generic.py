"""
generic
~~~~~~~

Bounded approximations to the generic (rich) structure.

A :class:`GenericModelState` is one stage of a chain of structures, each
closed in the next.  Stages grow by tasks:

- :func:`realize_extension` realises a closed extension of a closed subset
  (homogeneity), by a free amalgam over that subset;
- :func:`insert_density_witnesses` adds independent points, coloured or not,
  inside an interval (the density axioms);
- :func:`embed_structure` adds a copy of a whole finite structure
  (universality).

:func:`check_axioms` reports how far a stage satisfies the axioms, and
:func:`back_and_forth_audit` plays the back-and-forth game between two
stages, realising points on demand and certifying each round with
:func:`predim.isomorphism.types_equal`.
"""

import logging as _logging
from dataclasses import dataclass as _dataclass, field as _dfield

import sympy as _sympy

from . import field as _field
from . import structure as _structure
from . import extension as _extension
from . import isomorphism as _isomorphism
from . import utils as _utils

_logger = _logging.getLogger(__name__)


@_dataclass(frozen=True)
class TaskRecord():
    """One task applied to a stage.

    :param kind: "realize", "densify" or "embed".
    :param params: Parameters as given.
    :param new_points: Names, in the new stage, of the points added.
    :param embedding: Map from point names of the realised structure to
      the new stage.
    :param certificates: Checks made.
    :param cases: Kinds of the minimal steps the extension decomposes into.
    """
    kind: str
    params: dict
    new_points: tuple = ()
    embedding: dict = _dfield(default_factory=dict)
    certificates: dict = _dfield(default_factory=dict)
    cases: tuple = ()

    def to_dict(self):
        return {"kind": self.kind, "params": self.params, "new_points": list(self.new_points),
            "embedding": dict(self.embedding), "certificates": self.certificates,
            "cases": list(self.cases)}


@_dataclass(frozen=True)
class GenericModelState():
    """A stage of the construction.  Immutable; tasks return new states."""
    stage_index: int
    current: _structure.ColouredStructure
    history: tuple = ()
    rng_seed: int = 0

    def advanced(self, current, record):
        return GenericModelState(self.stage_index + 1, current, self.history + (record,), self.rng_seed)

    def to_dict(self):
        return {"stage_index": self.stage_index, "rng_seed": self.rng_seed,
            "structure": self.current.to_dict(), "history": [r.to_dict() for r in self.history]}


def new_state(seed=0, structure=None, precision_budget=_field.DEFAULT_PRECISION_BUDGET,
        size_bound=_structure.DEFAULT_SIZE_BOUND):
    """A stage 0 state, empty unless `structure` is given.

    :raises InvariantViolation: if `structure` is not in the class.
    """
    if structure is None:
        structure = _structure.ColouredStructure(_field.FieldTower((), precision_budget), [],
            size_bound=size_bound)
    membership = _structure.check_class_membership(structure)
    if not membership.ok:
        raise _structure.InvariantViolation("class-membership",
            "Initial structure has {} of predimension {}".format(membership.violation, membership.delta))
    return GenericModelState(0, structure, (), int(seed))


class NewPoint():
    """A point to add with :func:`extension_over`.

    :param name: Point name; should be an identifier.
    :param kind: "transcendental", "algebraic" or "expr".
    :param coloured: Colour of the new point.
    :param cut: For transcendentals, pair `(below, above)` of point names (either
      may be `None`) between which to place the point.
    :param witness: For transcendentals, an explicit witness interval instead of
      a cut.
    :param poly: For algebraic points, polynomial text in `x` whose
      coefficients are expressions in point names.
    :param root: Index (from the smallest, starting at 0) of the real root.
    :param isolating: Explicit isolating interval instead of `root`.
    :param expr: For "expr" points, an expression in point names.
    :param seed: Seed for a transcendental's witness refinement.
    """
    KINDS = ("transcendental", "algebraic", "expr")

    def __init__(self, name, kind="transcendental", coloured=False, cut=None, witness=None,
            poly=None, root=None, isolating=None, expr=None, seed=None):
        if kind not in self.KINDS:
            raise ValueError("Unknown point kind '{}'".format(kind))
        self.name = name
        self.kind = kind
        self.coloured = bool(coloured)
        self.cut = (None, None) if cut is None else tuple(cut)
        self.witness = witness
        self.poly = poly
        self.root = root
        self.isolating = isolating
        self.expr = expr
        self.seed = seed

    def to_dict(self):
        out = {"name": self.name, "kind": self.kind, "coloured": self.coloured}
        for key in ("cut", "poly", "root", "expr", "seed"):
            value = getattr(self, key)
            if value is not None and value != (None, None):
                out[key] = list(value) if key == "cut" else value
        if self.witness is not None:
            out["witness"] = _field.Interval(*self.witness).to_list() if not isinstance(
                self.witness, _field.Interval) else self.witness.to_list()
        return out

    def __repr__(self):
        return "NewPoint({!r}, {!r})".format(self.name, self.kind)


def cut_interval(values, below, above, budget):
    """Rational interval strictly between the values of `below` and `above`
    (either may be `None`), the middle third of the gap between enclosures.

    :param values: Map from point name to :class:`FieldElement`.
    :raises WitnessCutUnsatisfiable: if the enclosures never separate.
    """
    if below is None and above is None:
        return _field.Interval(0, 1)
    if above is None:
        e = values[below].enclosure(max_width=1)
        return _field.Interval(e.hi + 1, e.hi + 2)
    if below is None:
        e = values[above].enclosure(max_width=1)
        return _field.Interval(e.lo - 2, e.lo - 1)
    for level in range(budget + 1):
        lo, hi = values[below].interval(level), values[above].interval(level)
        if lo is not None and hi is not None and lo.hi < hi.lo:
            third = (hi.lo - lo.hi) / 3
            return _field.Interval(lo.hi + third, hi.lo - third)
    raise _extension.WitnessCutUnsatisfiable("Cannot separate '{}' from '{}'".format(below, above))


def _point_expression(text, values):
    symbols = {n: _sympy.Symbol(n) for n in values}
    if "x" in symbols:
        raise ValueError("A point named 'x' shadows the polynomial variable")
    symbols["x"] = _sympy.Symbol("x")
    expr = _field.parse_rational_expression(text, symbols)
    return expr.xreplace({_sympy.Symbol(n): v.as_expr() for n, v in values.items()})


def _adjoin_algebraic(tower, add, values):
    x = _sympy.Symbol("x")
    expr = _point_expression(add.poly, values)
    num, _ = _sympy.fraction(_sympy.together(expr))
    num = _sympy.expand(num)
    degree = _sympy.degree(num, x)
    if degree < 1:
        raise ValueError("Polynomial for '{}' does not involve x".format(add.name))
    if degree == 1:
        if add.root not in (None, 0):
            raise ValueError("A linear polynomial has only root 0")
        c1, c0 = _sympy.Poly(num, x).all_coeffs()
        return tower, tower.element(-c0 / c1)
    if add.isolating is not None:
        isolating = add.isolating
    elif add.root is not None:
        try:
            isolating = _field.isolate_root(tower, num, x, int(add.root))
        except _sympy.PolynomialError as ex:
            raise ValueError("Give an isolating interval for '{}': {}".format(add.name, ex)) from ex
    else:
        raise ValueError("Algebraic point '{}' needs a root index or an isolating interval".format(add.name))
    name = _utils.fresh_name(add.name if add.name.isidentifier() else "r", set(tower.names))
    try:
        tower = tower.extend(_field.Algebraic(name, num.xreplace({x: _sympy.Symbol(name)}), isolating))
    except _field.RootAlreadyPresent as ex:
        return tower, tower.gen(ex.existing)
    return tower, tower.gen(name)


def extension_over(M, A, additions, seed=None):
    """Build a structure extending the points `A` of `M` by `additions`.

    The new tower extends the tower of `M`, so the result can be passed to
    :func:`realize_extension`.

    :param additions: Sequence of :class:`NewPoint`; cuts and expressions may
      refer to points of `A` and to earlier additions.
    :param seed: Prefix for the seeds of new transcendentals.
    """
    A = M.subset(A)
    tower = M.tower
    values = {n: M.value(n) for n in A.names}
    colours = set(A.members & M.colours)
    for add in additions:
        if add.name in values:
            raise ValueError("Point '{}' is already present".format(add.name))
        if add.kind == "transcendental":
            if add.witness is not None:
                witness = add.witness
            else:
                for n in add.cut:
                    if n is not None and n not in values:
                        raise ValueError("Cut refers to unknown point '{}'".format(n))
                witness = cut_interval(values, add.cut[0], add.cut[1], tower.precision_budget)
            name = _utils.fresh_name(add.name if add.name.isidentifier() else "t", set(tower.names))
            point_seed = add.seed
            if point_seed is None and seed is not None:
                point_seed = "{}:{}".format(seed, add.name)
            tower = tower.extend(_field.Transcendental(name, witness, point_seed))
            value = tower.gen(name)
        elif add.kind == "algebraic":
            tower, value = _adjoin_algebraic(tower, add, values)
        else:
            value = tower.element(_point_expression(add.expr, values))
        values[add.name] = value
        if add.coloured:
            colours.add(add.name)
    return _structure.ColouredStructure(tower, list(values.items()), colours, M.size_bound)


def realize_extension(state, A, B, base_map=None):
    """Realise the extension `B` of the closed subset `A` of the current stage.

    :param A: Points of the current stage, closed in it.
    :param B: A :class:`ColouredStructure` whose tower extends the current
      tower, containing `A` (by the same names, unless `base_map` maps names
      of `A` to names of `B`) closed in it.
    :return: The next state; its last history record maps `B` into it.
    :raises NotClosed: if `A` is not closed in the current stage or in `B`.
    """
    M = state.current
    A = M.subset(A)
    witness = _structure.closedness_witness(M, A)
    if witness is not None:
        raise _extension.NotClosed("{} is not closed in the current stage".format(A), witness)
    base = M.restrict(A)
    base_map = {n: n for n in A.names} if base_map is None else dict(base_map)
    try:
        result = _extension.free_amalgam(base, M, B, ({n: n for n in A.names}, base_map))
    except _extension.NotClosedInFactor as ex:
        raise _extension.NotClosed("{} is not closed in the extension".format(A), ex.witness)
    image = B.subset(base_map.values())
    chain = _extension.decompose(B, image, B.subset())
    new_points = tuple(result.right_embedding[p] for p in chain.points)
    product = result.product
    certificates = dict(result.certificates)
    certificates["previous_stage_closed"] = _structure.is_closed(product, M.names)
    certificates["image_closed"] = _extension.embedding_is_closed(product, result.right_embedding)
    if not certificates["previous_stage_closed"]:
        raise AssertionError("Stage {} is not closed in the next".format(state.stage_index))
    record = TaskRecord("realize", {"over": A.names, "points": B.names}, new_points,
        dict(result.right_embedding), certificates, tuple(k.name for k in chain.kinds))
    _logger.info("Stage %s: realised %s new points over %s", state.stage_index + 1, len(new_points), A)
    return state.advanced(product, record)


def insert_density_witnesses(state, alpha, beta, n, coloured):
    """Add `n` new independent points between the points `alpha < beta`.

    The points are placed in the first gap above `alpha` of the closure of
    `{alpha, beta}`, with distinct seeds derived from the state's seed, and are
    named `w<stage>_<i>` (renamed if taken).

    :raises ValueError: unless `alpha < beta`.
    """
    n = int(n)
    if n < 0:
        raise ValueError("Need a non-negative count, not {}".format(n))
    if n == 0:
        return state
    M = state.current
    if not M.value(alpha) < M.value(beta):
        raise ValueError("Need '{}' < '{}'".format(alpha, beta))
    A = _structure.closure(M, [alpha, beta])
    in_order = A.in_order()
    above = in_order[in_order.index(alpha) + 1]
    values = {p: M.value(p) for p in A.names}
    gap = cut_interval(values, alpha, above, M.tower.precision_budget)
    step = gap.width / n
    additions = []
    for i in range(n):
        piece = _field.Interval(gap.lo + i * step, gap.lo + (i + 1) * step)
        third = piece.width / 3
        additions.append(NewPoint("w{}_{}".format(state.stage_index, i), "transcendental", coloured,
            witness=_field.Interval(piece.lo + third, piece.hi - third),
            seed="{}:{}:{}".format(state.rng_seed, state.stage_index, i)))
    B = extension_over(M, A, additions)
    new_state = realize_extension(state, A, B)
    last = new_state.history[-1]
    witnesses = [last.embedding[a.name] for a in additions]
    product = new_state.current
    certificates = dict(last.certificates)
    certificates["witnesses_closed"] = _structure.is_closed(product, witnesses)
    certificates["witnesses_delta"] = product.delta(witnesses)
    record = TaskRecord("densify", {"lo": alpha, "hi": beta, "n": n, "coloured": bool(coloured)},
        tuple(witnesses), last.embedding, certificates, last.cases)
    _logger.info("Stage %s: %s %s witnesses in (%s, %s)", new_state.stage_index, n,
        "coloured" if coloured else "uncoloured", alpha, beta)
    return GenericModelState(new_state.stage_index, product, state.history + (record,), state.rng_seed)


def embed_structure(state, S):
    """Add a copy of the finite structure `S` (in the class), amalgamated
    freely over the rationals with the current stage."""
    M = state.current
    empty = _structure.ColouredStructure(_field.FieldTower((), M.tower.precision_budget), [])
    result = _extension.free_amalgam(empty, M, S, ({}, {}))
    certificates = dict(result.certificates)
    certificates["previous_stage_closed"] = _structure.is_closed(result.product, M.names)
    record = TaskRecord("embed", {"points": S.names},
        tuple(result.right_embedding[n] for n in S.names), dict(result.right_embedding), certificates)
    return state.advanced(result.product, record)


def check_cx_closed(M, A, x):
    """For closed `A` and `x` not in the geometric closure of `A`, check that
    `A u {x}` is closed.

    :return: `None` if the hypotheses fail, else `True`.
    :raises AssertionError: if the conclusion fails.
    """
    A = M.subset(A)
    if not _structure.is_closed(M, A) or _structure.in_CL(M, x, A):
        return None
    if not _structure.is_closed(M, A | {x}):
        raise AssertionError("{} u {{{}}} is not closed".format(A, x))
    return True


class AxiomReport():
    """Outcome of :func:`check_axioms`.

    :param ok: Whether every checked set has non-negative predimension.
    :param membership: The :class:`ClassMembership` found.
    :param intervals: One dictionary per sampled interval and colour, giving
      the depth to which density witnesses were inserted and whether they are
      "present" or "pending".
    :param notes: Interpretation notes.
    """
    def __init__(self, ok, membership, intervals, notes):
        self.ok = ok
        self.membership = membership
        self.intervals = intervals
        self.notes = notes

    def depth(self, lo, hi, coloured):
        for entry in self.intervals:
            if entry["interval"] == [lo, hi] and entry["coloured"] == coloured:
                return entry["depth"]
        return 0

    def to_dict(self):
        return {"ok": self.ok, "membership": self.membership.to_dict(),
            "intervals": self.intervals, "notes": list(self.notes)}


AXIOM_NOTES = (
    "Density witnesses are counted from the stage history; a finite stage only "
    "approximates the axioms, so missing witnesses are reported as pending.",
    "Witnesses asked for in an elementary extension are inserted into a later stage.",
    "The witness set is required to be closed in the stage.",
)


def check_axioms(state, subset_bound=None, interval_samples=None):
    """Report on the axioms at the current stage.

    :param subset_bound: Largest violating set searched for minimality (and,
      if the stage is no larger, enumerate all subsets instead).
    :param interval_samples: Pairs `(lo, hi)` of point names; defaults to each
      pair of neighbouring points.
    :raises SizeGuard: if enumeration is asked for beyond the size bound.
    """
    M = state.current
    exhaustive = subset_bound is not None and len(M) <= subset_bound
    membership = _structure.check_class_membership(M, exhaustive=exhaustive, max_size=subset_bound)
    if interval_samples is None:
        interval_samples = list(zip(M.order, M.order[1:]))
    intervals = []
    for lo, hi in interval_samples:
        for coloured in (True, False):
            depth = 0
            for record in state.history:
                if record.kind == "densify" and record.params["lo"] == lo and record.params["hi"] == hi \
                        and record.params["coloured"] == coloured:
                    depth = max(depth, record.params["n"])
            low, high = M.value(lo), M.value(hi)
            inside = [n for n in M.names if M.is_coloured(n) == coloured and low < M.value(n) < high]
            intervals.append({"interval": [lo, hi], "coloured": coloured, "depth": depth,
                "points_inside": len(inside), "status": "present" if depth > 0 else "pending"})
    notes = list(AXIOM_NOTES)
    if not membership.ok:
        notes.append("Violation {} has predimension {}".format(membership.violation.names, membership.delta))
    return AxiomReport(membership.ok, membership, intervals, notes)


class AuditReport():
    """Outcome of :func:`back_and_forth_audit`.

    :param ok: Whether every round certified a partial isomorphism.
    :param rounds: One dictionary per round played.
    :param failed_round: Index of the failing round, or `None`.
    :param left: Final left state.
    :param right: Final right state.
    """
    def __init__(self, ok, rounds, failed_round, left, right):
        self.ok = ok
        self.rounds = rounds
        self.failed_round = failed_round
        self.left = left
        self.right = right

    def to_dict(self):
        return {"ok": self.ok, "rounds": self.rounds, "failed_round": self.failed_round,
            "left_points": len(self.left.current), "right_points": len(self.right.current)}


def _greedy_basis(M, names):
    basis, rank = [], 0
    for n in names:
        r = M.trdeg(basis + [n])
        if r > rank:
            basis.append(n)
            rank = r
    return basis


def _counterpart_additions(source, chain, name_map, used):
    additions = []
    for step in chain:
        u = step.point
        new = _utils.fresh_name(u, used)
        used.add(new)
        domain = [n for n in source.order if n in name_map]
        if step.kind.algebraic:
            basis = _greedy_basis(source, domain)
            relation, root = _isomorphism.minimal_relation(source, basis, u)
            relation = relation.xreplace({_sympy.Symbol("y{}".format(i)): _sympy.Symbol(name_map[b])
                for i, b in enumerate(basis)})
            additions.append(NewPoint(new, "algebraic", poly=_sympy.sstr(relation), root=root))
        else:
            position = source.position(u)
            below = [n for n in domain if source.position(n) < position]
            above = [n for n in domain if source.position(n) > position]
            cut = (name_map[below[-1]] if below else None, name_map[above[0]] if above else None)
            additions.append(NewPoint(new, "transcendental", step.kind.coloured, cut=cut))
        name_map[u] = new
    return additions


def _realize_counterpart(source, s_tuple, x, target_state, t_tuple):
    target = target_state.current
    comparison = _isomorphism.types_equal(source, s_tuple, t_tuple, N=target)
    if not comparison.equal:
        raise AssertionError("Audit lost the partial isomorphism: {}".format(comparison.obstruction))
    name_map = dict(comparison.bijection)
    base = _structure.closure(source, s_tuple)
    chain = _extension.decompose(source, base, _structure.closure(source, list(s_tuple) + [x]))
    A = target.subset(name_map.values())
    additions = _counterpart_additions(source, chain, name_map, set(target.names))
    B = extension_over(target, A, additions,
        seed="{}:{}".format(target_state.rng_seed, target_state.stage_index))
    new_state = realize_extension(target_state, A, B)
    return new_state, new_state.history[-1].embedding[name_map[x]]


def back_and_forth_audit(M_state, N_state, rounds, profile_cap=_isomorphism.DEFAULT_PROFILE_CAP):
    """Play the back-and-forth game for `rounds` rounds, alternately extending
    the partial map from the left and from the right.

    Each round takes the first point (in declaration order) not yet matched on
    the moving side.  An unmatched point of the same name on the other side is
    its counterpart, and the round fails if their types differ; otherwise the
    closure extension is transported and realised there.  The round is
    certified by comparing the types of the extended tuples.
    """
    states = [M_state, N_state]
    tuples = [[], []]
    played = []
    for index in range(int(rounds)):
        s, t = index % 2, 1 - index % 2
        direction = "forth" if s == 0 else "back"
        source = states[s].current
        x = next((n for n in source.names if n not in tuples[s]), None)
        if x is None:
            played.append({"round": index, "direction": direction, "point": None, "status": "exhausted"})
            continue
        target = states[t].current
        y, comparison, realized = None, None, False
        if x in target and x not in tuples[t]:
            comparison = _isomorphism.types_equal(source, tuples[s] + [x], tuples[t] + [x], N=target,
                profile_cap=profile_cap)
            y = x
        else:
            states[t], y = _realize_counterpart(source, tuples[s], x, states[t], tuples[t])
            target = states[t].current
            realized = True
            comparison = _isomorphism.types_equal(source, tuples[s] + [x], tuples[t] + [y], N=target,
                profile_cap=profile_cap)
        played.append({"round": index, "direction": direction, "point": x, "image": y,
            "realized": realized, "status": "ok" if comparison.equal else "failed",
            "comparison": comparison.to_dict()})
        _logger.debug("Audit round %s (%s): %s -> %s %s", index, direction, x, y,
            "ok" if comparison.equal else comparison.obstruction)
        if not comparison.equal:
            return AuditReport(False, played, index, states[0], states[1])
        tuples[s].append(x)
        tuples[t].append(y)
    return AuditReport(True, played, None, states[0], states[1])

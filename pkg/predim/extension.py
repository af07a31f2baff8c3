"""
extension
~~~~~~~~~

Closed extensions: decomposition into one-point minimal steps, classification
of minimal extensions, and the free amalgam of two closed extensions of a
common base.

A minimal closed extension `A < B` always adds exactly one point `x`, of one
of three kinds:

- `x` algebraic over `A` and uncoloured (relative predimension 0);
- `x` transcendental over `A` and coloured (relative predimension 0);
- `x` transcendental over `A` and uncoloured (relative predimension 1).

The free amalgam of `left` and `right` over `base` joins them in one tower in
which the new transcendentals of `right` are fresh generators, so the two
sides are algebraically independent over the base, and colours are unioned.
"""

import enum as _enum
import itertools as _itertools
import logging as _logging

import sympy as _sympy

from . import field as _field
from . import structure as _structure
from . import utils as _utils

_logger = _logging.getLogger(__name__)

# Refinement levels added to fresh witnesses on each failed placement.
REFINEMENT_STEP = 4


class NotClosed(ValueError):
    """`A` is not closed in `B`; `witness` is a set of points with negative
    relative predimension over `A`."""
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness

class NotMinimal(ValueError):
    """The extension has a proper intermediate closed set, `intermediate`."""
    def __init__(self, message, intermediate):
        super().__init__(message)
        self.intermediate = intermediate

class NotClosedInFactor(ValueError):
    """The image of the base is not closed in the `side` factor."""
    def __init__(self, side, witness):
        super().__init__("Image of the base is not closed in the {} factor: {} has negative "
            "relative predimension".format(side, witness))
        self.side = side
        self.witness = witness

class WitnessCutUnsatisfiable(ValueError):
    """Fresh witness intervals could not be placed to realise the required
    order within the precision budget."""
    pass

class BadEmbedding(ValueError):
    pass

class DependentFactors(ValueError):
    """The factors share a generator which occurs in a base point value but is
    not algebraic over the base points, so cannot be separated."""
    pass


class MinimalStepKind(_enum.Enum):
    """The three kinds of minimal closed extension, with their relative
    predimension."""
    AlgebraicUncoloured = 0
    IndependentColoured = 1
    IndependentUncoloured = 2

    @property
    def delta(self):
        return 1 if self is MinimalStepKind.IndependentUncoloured else 0

    @property
    def coloured(self):
        return self is MinimalStepKind.IndependentColoured

    @property
    def algebraic(self):
        return self is MinimalStepKind.AlgebraicUncoloured


def step_kind(M, A, x):
    """Kind of the one-point extension `A < A u {x}`, checked against its
    relative predimension.

    :raises NotClosed: if `x` is coloured and algebraic over `A`.
    """
    A = M.subset(A)
    algebraic = M.trdeg(A | {x}) == M.trdeg(A)
    coloured = M.is_coloured(x)
    if algebraic and coloured:
        raise NotClosed("Coloured point '{}' is algebraic over {}".format(x, A), M.subset([x]))
    if algebraic:
        kind = MinimalStepKind.AlgebraicUncoloured
    elif coloured:
        kind = MinimalStepKind.IndependentColoured
    else:
        kind = MinimalStepKind.IndependentUncoloured
    if M.delta_rel([x], A) != kind.delta:
        raise AssertionError("Step '{}' of kind {} has relative predimension {}".format(
            x, kind.name, M.delta_rel([x], A)))
    return kind


class ExtensionStep():
    """One point added by a minimal closed extension."""
    def __init__(self, point, kind):
        self.point = point
        self.kind = kind

    @property
    def delta(self):
        return self.kind.delta

    def __eq__(self, other):
        return isinstance(other, ExtensionStep) and (self.point, self.kind) == (other.point, other.kind)

    def __repr__(self):
        return "ExtensionStep({!r}, {})".format(self.point, self.kind.name)

    def to_dict(self):
        return {"point": self.point, "kind": self.kind.name, "delta": self.delta}


class ExtensionChain():
    """A chain `base = B_0 < B_1 < ... < B_n = target` of one-point minimal
    closed extensions."""
    def __init__(self, base, steps, target):
        self.base = base
        self.steps = list(steps)
        self.target = target

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    @property
    def points(self):
        return [s.point for s in self.steps]

    @property
    def kinds(self):
        return [s.kind for s in self.steps]

    def prefixes(self):
        """The sets `B_0, ..., B_n`."""
        current = self.base
        out = [current]
        for step in self.steps:
            current = current | {step.point}
            out.append(current)
        return out

    def to_dict(self):
        return {"base": self.base.names, "target": self.target.names,
            "steps": [s.to_dict() for s in self.steps]}

    def __repr__(self):
        return "ExtensionChain({} -> {}: {})".format(self.base, self.target, self.steps)


def decompose(M, A, B):
    """Decompose the closed extension `A < B` into one-point minimal steps.

    At each stage the next point is one whose adjunction stays closed in `B`;
    steps of relative predimension 0 are taken before independent uncoloured
    points, and ties go to the point declared first.

    :raises NotClosed: if `A` is not closed in `B`.
    """
    A, B = M.subset(A), M.subset(B)
    if not A.issubset(B):
        raise ValueError("{} is not a subset of {}".format(A, B))
    witness = _structure.closedness_witness(M, A, B)
    if witness is not None:
        raise NotClosed("{} is not closed in {}".format(A, B), witness)
    current = A
    steps = []
    while current != B:
        best = None
        for x in M.sorted_names(B.members - current.members):
            candidate = current | {x}
            if not _structure.is_closed(M, candidate, B):
                continue
            kind = step_kind(M, current, x)
            key = (kind.delta, M.declared_index(x))
            if best is None or key < best[0]:
                best = (key, x, kind)
        if best is None:
            raise AssertionError("No one-point closed step from {} inside {}".format(current, B))
        _, x, kind = best
        steps.append(ExtensionStep(x, kind))
        current = current | {x}
    _logger.debug("Decomposed %s < %s as %s", A, B, steps)
    return ExtensionChain(A, steps, B)


def classify_minimal(M, A, B):
    """Kind of the minimal closed extension `A < B`.

    Minimality is checked by enumerating every intermediate set, so is
    guarded by the structure's size bound.

    :raises NotClosed: if `A` is not closed in `B`.
    :raises NotMinimal: with the first intermediate closed set (smallest, then
      by declaration order).
    :raises SizeGuard: if `|B - A|` exceeds the size bound.
    """
    A, B = M.subset(A), M.subset(B)
    if not A.issubset(B) or A == B:
        raise ValueError("{} is not a proper subset of {}".format(A, B))
    if not _structure.is_closed(M, A, B):
        raise NotClosed("{} is not closed in {}".format(A, B), _structure.closedness_witness(M, A, B))
    extra = M.sorted_names(B.members - A.members)
    if len(extra) > M.size_bound:
        raise _structure.SizeGuard("Cannot enumerate {} points (bound {})".format(len(extra), M.size_bound))
    for size in range(1, len(extra)):
        for combo in _itertools.combinations(extra, size):
            middle = A | combo
            if _structure.is_closed(M, A, middle) and _structure.is_closed(M, middle, B):
                raise NotMinimal("{} < {} < {}".format(A, middle, B), middle)
    if len(extra) != 1:
        raise AssertionError("Minimal extension {} < {} adds {} points".format(A, B, len(extra)))
    return step_kind(M, A, extra[0])


def check_embedding(source, target, mapping, profile_size=2):
    """Check that `mapping` (point names of `source` to point names of
    `target`) is injective and preserves colours, order and the transcendence
    degree of every set of at most `profile_size` points.

    :return: Dictionary describing what was checked.
    :raises BadEmbedding: naming the first failure.
    """
    names = source.names
    if set(mapping) != set(names):
        raise BadEmbedding("Mapping must cover exactly the source points")
    images = [mapping[n] for n in names]
    if len(set(images)) != len(images):
        raise BadEmbedding("Mapping is not injective")
    for n in names:
        if mapping[n] not in target:
            raise BadEmbedding("Image '{}' of '{}' is not a target point".format(mapping[n], n))
        if source.is_coloured(n) != target.is_coloured(mapping[n]):
            raise BadEmbedding("Colour of '{}' not preserved".format(n))
    for a, b in zip(source.order, source.order[1:]):
        if target.position(mapping[a]) >= target.position(mapping[b]):
            raise BadEmbedding("Order of '{}' < '{}' not preserved".format(a, b))
    for size in range(1, profile_size + 1):
        for combo in _itertools.combinations(names, size):
            if source.trdeg(combo) != target.trdeg([mapping[n] for n in combo]):
                raise BadEmbedding("Transcendence degree of {} not preserved".format(list(combo)))
    return {"points": len(names), "order": True, "colours": True, "trdeg_profile": profile_size}


def embedding_is_closed(target, mapping):
    """Whether the image of an embedding is closed in `target`."""
    return _structure.is_closed(target, list(mapping.values()))


class AmalgamResult():
    """Outcome of :func:`free_amalgam`.

    :param product: The amalgamated :class:`ColouredStructure`.
    :param left_embedding: Map from point names of `left` to the product.
    :param right_embedding: Map from point names of `right` to the product.
    :param base_image: Map from point names of `base` to the product.
    :param certificates: Dictionary of the checks made.
    """
    def __init__(self, product, left_embedding, right_embedding, base_image, certificates):
        self.product = product
        self.left_embedding = left_embedding
        self.right_embedding = right_embedding
        self.base_image = base_image
        self.certificates = certificates

    def to_dict(self):
        return {"product": self.product.to_dict(), "left_embedding": dict(self.left_embedding),
            "right_embedding": dict(self.right_embedding), "base_image": dict(self.base_image),
            "certificates": self.certificates}


class _PlacementFailed(Exception):
    pass


def _check_base_map(base, factor, mapping, side):
    if mapping is None:
        mapping = {n: n for n in base.names}
    mapping = dict(mapping)
    if not factor.tower.is_extension_of(base.tower):
        raise BadEmbedding("The {} tower does not begin with the base tower".format(side))
    if set(mapping) != set(base.names):
        raise BadEmbedding("The {} base map must cover exactly the base points".format(side))
    if len(set(mapping.values())) != len(mapping):
        raise BadEmbedding("The {} base map is not injective".format(side))
    for b, image in mapping.items():
        if image not in factor:
            raise BadEmbedding("The {} factor has no point '{}'".format(side, image))
        if not (factor.value(image) - base.value(b)).is_zero:
            raise BadEmbedding("Point '{}' maps to '{}' of different value in the {} factor".format(b, image, side))
        if factor.is_coloured(image) != base.is_coloured(b):
            raise BadEmbedding("Point '{}' maps to '{}' of different colour in the {} factor".format(b, image, side))
    return mapping


def free_amalgam(base, left, right, base_maps=None, refinement=0):
    """The free amalgam of `left` and `right` over `base`.

    The product tower is the tower of `left` followed by the generators of
    `right` beyond the base tower, and by fresh copies of the base tower
    generators which the new points of `right` use but which are not algebraic
    over the base points.  These are renamed if the name is taken.  A
    transcendental keeps its witness and seed, and so its value, unless
    `left` already has a generator with the same value; it is then given a
    fresh seed inside a refined enclosure of the old value, refining further
    until the order of `right` is reproduced.  An algebraic generator whose
    root is already in the tower is identified with the existing generator,
    as are points of the two sides with equal values.

    :param base: The common substructure.
    :param left: First factor; its tower must begin with the base tower.
    :param right: Second factor; its tower must begin with the base tower.
    :param base_maps: Pair of maps from base point names to point names of
      `left` and `right`; identity on names if `None`.
    :param refinement: Starting refinement level for fresh witnesses.

    :raises BadEmbedding: if a base map does not preserve values or colours.
    :raises NotClosedInFactor: if a base image is not closed in its factor.
    :raises WitnessCutUnsatisfiable: if no placement is found.
    :raises DependentFactors: if a generator shared by both sides cannot be
      separated.
    """
    left_map, right_map = (None, None) if base_maps is None else base_maps
    left_map = _check_base_map(base, left, left_map, "left")
    right_map = _check_base_map(base, right, right_map, "right")
    for side, factor, mapping in (("left", left, left_map), ("right", right, right_map)):
        witness = _structure.closedness_witness(factor, list(mapping.values()))
        if witness is not None:
            raise NotClosedInFactor(side, witness)
        membership = _structure.check_class_membership(factor)
        if not membership.ok:
            raise _structure.InvariantViolation("class-membership",
                "The {} factor has {} of predimension {}".format(side, membership.violation, membership.delta))

    level = int(refinement)
    budget = left.tower.precision_budget
    while level <= budget:
        try:
            return _amalgamate(base, left, right, left_map, right_map, level)
        except _PlacementFailed as ex:
            _logger.debug("Amalgam placement failed at refinement %s: %s", level, ex)
            level += REFINEMENT_STEP
    raise WitnessCutUnsatisfiable("Could not place fresh witnesses within refinement {}".format(budget))


def _support(tower, exprs):
    """Names of the generators an expression depends on, through the
    polynomials of algebraic generators."""
    names = set()
    for e in exprs:
        names |= {s.name for s in _sympy.sympify(e).free_symbols}
    pending = list(names)
    while pending:
        g = tower.generator(pending.pop())
        if isinstance(g, _field.Algebraic):
            for s in _sympy.sympify(g.poly).free_symbols:
                if s.name not in names:
                    names.add(s.name)
                    pending.append(s.name)
    return names

def _separated_generators(base, right, right_map):
    """Generators of the base tower which the new points of `right` use and
    which are not algebraic over the base points.  The right side gets fresh
    copies of these.  A transcendental occurring in a base point value stays
    shared."""
    tower = base.tower
    values = [base.value(n) for n in base.names]
    rank = tower.trdeg(values)
    images = set(right_map.values())
    needed = _support(right.tower, [right.value(x).as_expr() for x in right.names if x not in images])
    held = _support(tower, [v.as_expr() for v in values])
    out = set()
    for g in tower.generators:
        if g.name not in needed:
            continue
        if isinstance(g, _field.Transcendental):
            if g.name not in held and tower.trdeg(values + [tower.gen(g.name)]) > rank:
                out.add(g.name)
        elif _support(tower, [g.poly]) & out:
            out.add(g.name)
    return out

def _product_tower(base, left, right, right_map, level):
    tower = left.tower
    used = set(tower.names)
    left_values = {(g.witness, g.seed_key) for g in tower.generators
        if isinstance(g, _field.Transcendental)}
    separate = _separated_generators(base, right, right_map)
    shared = len(base.tower)
    rename = {}
    refreshed = []
    for index, spec in enumerate(right.tower.generators):
        if index < shared and spec.name not in separate:
            continue
        original = spec.name
        new = _utils.fresh_name(original, used)
        if isinstance(spec, _field.Transcendental):
            if (spec.witness, spec.seed_key) in left_values:
                spec = _field.Transcendental(new, _field.refine_witness(spec, level),
                    "{}/{}".format(spec.seed_key, new))
                refreshed.append(new)
            elif new != original:
                spec = spec.renamed(new, seed=spec.seed_key)
            tower = tower.extend(spec)
        else:
            subs = {_sympy.Symbol(o): _sympy.Symbol(n) for o, n in rename.items()}
            subs[_sympy.Symbol(original)] = _sympy.Symbol(new)
            poly = _sympy.sympify(spec.poly).xreplace(subs)
            try:
                tower = tower.extend(_field.Algebraic(new, poly, spec.isolating))
            except _field.RootAlreadyPresent as ex:
                rename[original] = ex.existing
                continue
            except _field.BadIsolation as ex:
                raise _PlacementFailed(str(ex))
        rename[original] = new
        used.add(new)
    return tower, rename, refreshed


def _fresh_cuts(product, right, right_embedding, left_embedding, refreshed):
    """Neighbours `[below, above]` in `product` of each new right point whose
    value involves a refreshed generator."""
    fresh = {_sympy.Symbol(g) for g in refreshed}
    order = product.order
    cuts = {}
    for x in right.names:
        name = right_embedding[x]
        if name in left_embedding or not (product.value(name).as_expr().free_symbols & fresh):
            continue
        i = product.position(name)
        cuts[name] = [order[i - 1] if i > 0 else None, order[i + 1] if i + 1 < len(order) else None]
    return cuts

def _amalgamate(base, left, right, left_map, right_map, level):
    tower, rename, refreshed = _product_tower(base, left, right, right_map, level)
    subs = {_sympy.Symbol(o): _sympy.Symbol(n) for o, n in rename.items() if o != n}

    points = [(n, tower.element(left.value(n))) for n in left.names]
    colours = set(left.colours)
    right_embedding = {right_map[b]: left_map[b] for b in base.names}
    used = set(left.names)
    merged = []
    for x in right.names:
        if x in right_embedding:
            continue
        value = tower.element(right.value(x).as_expr().xreplace(subs))
        match = next((n for n, v in points if (v - value).is_zero), None)
        if match is not None:
            if right.is_coloured(x) != (match in colours):
                raise BadEmbedding("Point '{}' of the right factor equals '{}' of the left "
                    "factor but differs in colour".format(x, match))
            right_embedding[x] = match
            merged.append([x, match])
            continue
        name = _utils.fresh_name(x, used)
        used.add(name)
        points.append((name, value))
        right_embedding[x] = name
        if right.is_coloured(x):
            colours.add(name)

    try:
        product = _structure.ColouredStructure(tower, points, colours,
            max(left.size_bound, right.size_bound))
    except _structure.InvariantViolation as ex:
        if ex.rule != "distinct-values":
            raise
        raise _PlacementFailed(str(ex))
    except _field.PrecisionExhausted as ex:
        if not refreshed:
            raise
        raise _PlacementFailed(str(ex))
    left_embedding = {n: n for n in left.names}
    try:
        check_embedding(right, product, right_embedding)
    except BadEmbedding as ex:
        raise _PlacementFailed(str(ex))
    check_embedding(left, product, left_embedding)

    joint = product.trdeg(product.names)
    expected = left.trdeg(left.names) + right.trdeg(right.names) - base.trdeg(base.names)
    if joint != expected:
        raise DependentFactors("The factors are not independent over the base: transcendence "
            "degree {} instead of {}".format(joint, expected))
    if not embedding_is_closed(product, left_embedding):
        raise AssertionError("Left factor is not closed in the amalgam")
    if not embedding_is_closed(product, right_embedding):
        raise AssertionError("Right factor is not closed in the amalgam")
    membership = _structure.check_class_membership(product)
    if not membership.ok:
        raise AssertionError("Amalgam leaves the class: {}".format(membership.violation))

    certificates = {
        "left_closed": True,
        "right_closed": True,
        "class_membership": True,
        "refinement_level": level,
        "refreshed_generators": refreshed,
        "renamed_generators": {o: n for o, n in rename.items() if o != n},
        "renamed_points": {x: n for x, n in right_embedding.items()
            if x != n and x not in right_map.values() and [x, n] not in merged},
        "merged_points": merged,
        "cuts": _fresh_cuts(product, right, right_embedding, left_embedding, refreshed),
    }
    _logger.debug("Amalgam of %s points: %s", len(product), certificates)
    base_image = {b: left_map[b] for b in base.names}
    return AmalgamResult(product, left_embedding, right_embedding, base_image, certificates)

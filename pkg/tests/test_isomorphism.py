import pytest
import random

import sympy

import predim.field as field
import predim.structure as structure
import predim.isomorphism as isomorphism

@pytest.fixture
def tower():
    gens = [field.Transcendental("t", (2, 3)), field.Transcendental("u", (5, 6)),
        field.Transcendental("v", (10, 11))]
    return field.FieldTower(gens)

@pytest.fixture
def plain(tower):
    return structure.ColouredStructure(tower, [("a", "t"), ("b", "u")])

@pytest.fixture
def coloured(tower):
    return structure.ColouredStructure(tower, [("c1", "t"), ("c2", "u"), ("c3", "v")], {"c1", "c2", "c3"})

@pytest.fixture
def sqrt_tower():
    t = field.Transcendental("t", (field.Fraction(1, 5), field.Fraction(1, 3)))
    return field.FieldTower([t]).extend(field.Algebraic("r", "x^2 - t",
        (field.Fraction(2, 5), field.Fraction(3, 5))))


def test_fingerprint(plain):
    fp = isomorphism.fingerprint(plain, ["a"])
    assert fp.size == 1
    assert fp.positions == (0,)
    assert fp.colours == (False,)
    assert fp.independent == (True,)
    assert fp.relations == ()
    assert fp == isomorphism.fingerprint(plain, ["b"])
    assert fp.to_dict()["profile"] == [[[0], 1]]

def test_fingerprint_unknown_point(plain):
    with pytest.raises(structure.InvariantViolation):
        isomorphism.fingerprint(plain, ["zz"])

def test_types_equal_single_points(plain):
    comparison = isomorphism.types_equal(plain, ["a"], ["b"])
    assert comparison
    assert comparison.bijection == {"a": "b"}
    assert not comparison.fast_path
    assert comparison.to_dict()["obstruction"] is None

def test_length_and_equality_obstructions(plain):
    comparison = isomorphism.types_equal(plain, ["a"], ["a", "b"])
    assert comparison.obstruction["kind"] == "length"
    comparison = isomorphism.types_equal(plain, ["a", "a"], ["a", "b"])
    assert comparison.obstruction["kind"] == "equality"

def test_closure_size_obstruction(tower):
    M = structure.ColouredStructure(tower, [("a", "t"), ("b", "u"), ("c", "t + 1")], {"c"})
    comparison = isomorphism.types_equal(M, ["a"], ["b"])
    assert not comparison
    assert comparison.obstruction["kind"] == "closure-size"
    assert set(comparison.obstruction["points"]) == {"a", "b", "c"}

def test_order_obstruction_found_by_transport(plain):
    comparison = isomorphism.types_equal(plain, ["a", "b"], ["b", "a"])
    assert not comparison
    assert comparison.obstruction["kind"] == "order"
    assert comparison.obstruction["transport"]

def test_colour_obstruction_found_by_transport(tower):
    M = structure.ColouredStructure(tower, [("a", "t"), ("b", "u"), ("c", "t + 1"), ("d", "u + 1")], {"c"})
    comparison = isomorphism.types_equal(M, ["a"], ["b"])
    assert not comparison
    assert comparison.obstruction["kind"] == "colour"
    assert comparison.obstruction["points"] == ["c", "d"]
    assert comparison.obstruction["transport"]

def test_fast_path_agrees_with_fingerprints(coloured):
    for a, b in [(["c1", "c2"], ["c2", "c3"]), (["c1", "c2"], ["c2", "c1"]), (["c3"], ["c1"])]:
        fast = isomorphism.types_equal(coloured, a, b)
        slow = isomorphism.types_equal(coloured, a, b, fast=False)
        assert fast.fast_path
        assert not slow.fast_path
        assert fast.equal == slow.equal

def test_fast_path_order(coloured):
    comparison = isomorphism.types_equal(coloured, ["c1", "c2"], ["c2", "c1"])
    assert comparison.obstruction["kind"] == "order"
    assert comparison.fast_path

def test_types_equal_over_parameters(plain):
    assert isomorphism.types_equal(plain, ["a"], ["a"], over=["b"])
    assert not isomorphism.types_equal(plain, ["a"], ["b"], over=["b"])

def test_minimal_relation_root_indices(sqrt_tower):
    M = structure.ColouredStructure(sqrt_tower, [("a", "t"), ("p", "r"), ("n", "-r")])
    x, y0 = sympy.symbols("x y0")
    relation, root = isomorphism.minimal_relation(M, ["a"], "p")
    assert sympy.expand(relation - (x ** 2 - y0)) == 0
    assert root == 1
    relation, root = isomorphism.minimal_relation(M, ["a"], "n")
    assert sympy.expand(relation - (x ** 2 - y0)) == 0
    assert root == 0

def test_minimal_relation_rational_shortcut(tower):
    M = structure.ColouredStructure(tower, [("a", "t"), ("b", "u"), ("c", "t/u + 1")])
    x, y0, y1 = sympy.symbols("x y0 y1")
    relation, root = isomorphism.minimal_relation(M, ["a", "b"], "c")
    assert root == 0
    assert sympy.expand(relation - (y1 * x - y0 - y1)) == 0

def test_minimal_relation_by_elimination(sqrt_tower):
    M = structure.ColouredStructure(sqrt_tower, [("a", "t + 1"), ("p", "r^3")])
    x, y0 = sympy.symbols("x y0")
    relation, root = isomorphism.minimal_relation(M, ["a"], "p")
    assert sympy.expand(relation - (x ** 2 - (y0 - 1) ** 3)) == 0
    assert root == 1

def test_relation_obstruction(sqrt_tower):
    M = structure.ColouredStructure(sqrt_tower, [("a", "t"), ("p", "r")], {"p"})
    N = structure.ColouredStructure(sqrt_tower, [("a", "t"), ("p", "r + 1")], {"p"})
    comparison = isomorphism.types_equal(M, ["a"], ["a"], N=N)
    assert not comparison
    assert comparison.obstruction["kind"] == "relation"
    assert comparison.obstruction["points"] == ["p", "p"]
    assert isomorphism.types_equal(M, ["a"], ["a"], N=M)

def test_types_equal_across_structures(tower, plain):
    other = field.FieldTower([field.Transcendental("s", (7, 8))])
    N = structure.ColouredStructure(other, [("z", "s")])
    comparison = isomorphism.types_equal(plain, ["b"], ["z"], N=N)
    assert comparison
    assert comparison.bijection == {"b": "z"}

def test_types_equal_is_symmetric(tower):
    M = structure.ColouredStructure(tower, [("a", "t"), ("b", "u"), ("c", "t + 1"), ("d", "u*v"), ("e", "v")], {"c", "d"})
    pairs = [["a"], ["b"], ["e"], ["a", "b"], ["b", "e"], ["a", "e"]]
    for p in pairs:
        for q in pairs:
            assert isomorphism.types_equal(M, p, q).equal == isomorphism.types_equal(M, q, p).equal

def test_size_guard_on_closure(tower):
    M = structure.ColouredStructure(tower, [("a", "t"), ("c", "t + 1"), ("d", "t + 2")], {"c"}, size_bound=1)
    with pytest.raises(structure.SizeGuard):
        isomorphism.fingerprint(M, ["a"])

def test_random_fast_path_agreement(tower):
    points = [("c1", "t"), ("c2", "u"), ("c3", "v"), ("d", "t + u"), ("e", "t*v"), ("f", "u - v")]
    M = structure.ColouredStructure(tower, points, {"c1", "c2", "c3"})
    rnd = random.Random(11)
    coloured = ["c1", "c2", "c3"]
    for _ in range(20):
        size = rnd.randrange(1, 3)
        a, b = rnd.sample(coloured, size), rnd.sample(coloured, size)
        fast = isomorphism.types_equal(M, a, b)
        slow = isomorphism.types_equal(M, a, b, fast=False)
        assert fast.fast_path
        assert fast.equal == slow.equal

def test_fingerprint_is_frozen(plain):
    fp = isomorphism.fingerprint(plain, ["a", "b"])
    with pytest.raises(AttributeError):
        fp.size = 5
    assert fp != isomorphism.fingerprint(plain, ["b", "a"])
    assert {fp: 1}[isomorphism.fingerprint(plain, ["a", "b"])] == 1

def test_types_equal_is_transitive(tower):
    points = [("a", "t"), ("b", "u"), ("c", "t + 1"), ("d", "u*v"), ("e", "v"), ("f", "t*u"), ("g", "2*v")]
    M = structure.ColouredStructure(tower, points, {"c", "d", "g"})
    rnd = random.Random(17)
    tuples = [rnd.sample(M.names, rnd.randrange(1, 3)) for _ in range(14)]
    tuples += [[n] for n in M.names]
    equal = {}
    for i, p in enumerate(tuples):
        for j, q in enumerate(tuples):
            if len(p) == len(q):
                equal[i, j] = isomorphism.types_equal(M, p, q).equal
    for i in range(len(tuples)):
        assert equal[i, i]
    checked = 0
    for (i, j), ij in equal.items():
        for k in range(len(tuples)):
            if ij and equal.get((j, k)):
                assert equal[i, k]
                checked += 1
    assert checked > len(tuples)

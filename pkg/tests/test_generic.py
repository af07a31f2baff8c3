import pytest
import random

import predim.field as field
import predim.structure as structure
import predim.extension as extension
import predim.generic as generic
import predim.isomorphism as isomorphism

@pytest.fixture
def tower():
    return field.FieldTower([field.Transcendental("t", (2, 3))])

@pytest.fixture
def M(tower):
    return structure.ColouredStructure(tower, [("a", "t")])

@pytest.fixture
def state(M):
    return generic.new_state(seed=1, structure=M)

@pytest.fixture
def realized(state):
    M = state.current
    B = generic.extension_over(M, ["a"],
        [generic.NewPoint("u", "transcendental", coloured=True, cut=("a", None))], seed="s")
    return generic.realize_extension(state, ["a"], B)

@pytest.fixture
def densified(realized):
    return generic.insert_density_witnesses(realized, "a", "u", 2, True)


def test_new_state():
    state = generic.new_state(seed=5)
    assert state.stage_index == 0
    assert len(state.current) == 0
    assert state.rng_seed == 5
    assert state.history == ()

def test_new_state_outside_class(tower):
    sqrt = tower.extend(field.Algebraic("r", "x^2 - t", (1, 2)))
    M = structure.ColouredStructure(sqrt, [("a", "t"), ("b", "r")], {"a", "b"})
    with pytest.raises(structure.InvariantViolation) as info:
        generic.new_state(structure=M)
    assert info.value.rule == "class-membership"

def test_cut_interval(tower):
    u = tower.extend(field.Transcendental("u", (5, 6)))
    values = {"a": u.gen("t"), "b": u.gen("u")}
    assert generic.cut_interval(values, None, None, 64) == field.Interval(0, 1)
    assert generic.cut_interval(values, "a", None, 64) == field.Interval(4, 5)
    assert generic.cut_interval(values, None, "a", 64) == field.Interval(0, 1)
    assert generic.cut_interval(values, "a", "b", 64) == field.Interval(field.Fraction(11, 3), field.Fraction(13, 3))

def test_cut_interval_unsatisfiable():
    tower = field.FieldTower([field.Transcendental("t", (0, 1)), field.Transcendental("u", (0, 1))],
        precision_budget=1)
    values = {"a": tower.gen("t"), "b": tower.gen("u")}
    with pytest.raises(extension.WitnessCutUnsatisfiable):
        generic.cut_interval(values, "b", "a", 1)

def test_extension_over(M):
    additions = [generic.NewPoint("u", cut=("a", None)),
        generic.NewPoint("r", "algebraic", poly="x^2 - a", root=1),
        generic.NewPoint("s", "expr", coloured=True, expr="a + u")]
    B = generic.extension_over(M, ["a"], additions, seed="x")
    assert B.names == ["a", "u", "r", "s"]
    assert B.tower.is_extension_of(M.tower)
    assert B.value("r") ** 2 == B.value("a")
    assert B.value("r").sign() == 1
    assert B.colours == {"s"}
    assert B.order == ("r", "a", "u", "s")

def test_extension_over_errors(M):
    with pytest.raises(ValueError):
        generic.extension_over(M, ["a"], [generic.NewPoint("a")])
    with pytest.raises(ValueError):
        generic.extension_over(M, ["a"], [generic.NewPoint("u", cut=("zz", None))])
    with pytest.raises(ValueError):
        generic.extension_over(M, ["a"], [generic.NewPoint("r", "algebraic", poly="x^2 - a")])
    with pytest.raises(ValueError):
        generic.NewPoint("u", "imaginary")

def test_realize_extension(state, realized):
    assert realized.stage_index == 1
    record = realized.history[-1]
    assert record.kind == "realize"
    assert record.new_points == ("u",)
    assert record.cases == ("IndependentColoured",)
    assert record.certificates["previous_stage_closed"]
    assert record.certificates["image_closed"]
    assert realized.current.colours == {"u"}
    assert structure.is_closed(realized.current, state.current.names)
    assert state.stage_index == 0

def test_realize_extension_not_closed(tower):
    sqrt = tower.extend(field.Algebraic("r", "x^2 - t", (1, 2)))
    M = structure.ColouredStructure(sqrt, [("a", "t"), ("c", "r")], {"c"})
    state = generic.new_state(structure=M)
    B = generic.extension_over(M, ["a"], [generic.NewPoint("u", cut=("a", None))])
    with pytest.raises(extension.NotClosed):
        generic.realize_extension(state, ["a"], B)

def test_realize_extension_twice_gives_distinct_points(realized):
    M = realized.current
    B = generic.extension_over(M, ["a", "u"], [generic.NewPoint("w", cut=("a", "u"))], seed="again")
    after = generic.realize_extension(realized, ["a", "u"], B)
    assert after.stage_index == 2
    w = after.history[-1].new_points[0]
    assert after.current.value("a") < after.current.value(w) < after.current.value("u")

def test_insert_density_witnesses(densified):
    record = densified.history[-1]
    assert record.kind == "densify"
    assert record.new_points == ("w1_0", "w1_1")
    assert record.certificates["witnesses_closed"]
    assert record.certificates["witnesses_delta"] == 0
    M = densified.current
    for w in record.new_points:
        assert M.is_coloured(w)
        assert M.value("a") < M.value(w) < M.value("u")
    assert structure.check_class_membership(M).ok
    assert densified.stage_index == 2

def test_insert_density_witnesses_uncoloured(realized):
    state = generic.insert_density_witnesses(realized, "a", "u", 1, False)
    record = state.history[-1]
    assert record.certificates["witnesses_delta"] == 1
    assert not state.current.is_coloured(record.new_points[0])

def test_insert_density_witnesses_errors(realized):
    with pytest.raises(ValueError):
        generic.insert_density_witnesses(realized, "u", "a", 1, True)
    with pytest.raises(ValueError):
        generic.insert_density_witnesses(realized, "a", "u", -1, True)
    assert generic.insert_density_witnesses(realized, "a", "u", 0, True) is realized

def test_embed_structure(state, tower):
    S = structure.ColouredStructure(tower, [("a", "t")], {"a"})
    after = generic.embed_structure(state, S)
    record = after.history[-1]
    assert record.kind == "embed"
    assert record.new_points == ("a_1",)
    assert after.current.is_coloured("a_1")
    assert record.certificates["refreshed_generators"] == ["t_1"]
    assert record.certificates["previous_stage_closed"]

def test_check_cx_closed(tower):
    sqrt = tower.extend(field.Transcendental("u", (5, 6))).extend(field.Algebraic("r", "x^2 - t", (1, 2)))
    M = structure.ColouredStructure(sqrt, [("a", "t"), ("b", "u"), ("c", "r")], {"c"})
    assert generic.check_cx_closed(M, ["a", "c"], "b") is True
    assert generic.check_cx_closed(M, ["a"], "b") is None

def test_check_axioms(densified):
    report = generic.check_axioms(densified, interval_samples=[("a", "u")])
    assert report.ok
    assert report.depth("a", "u", True) == 2
    assert report.depth("a", "u", False) == 0
    statuses = {entry["coloured"]: entry["status"] for entry in report.intervals}
    assert statuses == {True: "present", False: "pending"}
    assert report.intervals[0]["points_inside"] == 2
    assert report.to_dict()["membership"]["ok"]

def test_check_axioms_enumerates_small_stages(densified):
    report = generic.check_axioms(densified, subset_bound=10)
    assert report.membership.method == "enumeration"
    assert len(report.intervals) == 2 * (len(densified.current) - 1)

def test_back_and_forth_audit(state):
    other = field.FieldTower([field.Transcendental("s", (2, 3)), field.Transcendental("v", (7, 8))])
    N = structure.ColouredStructure(other, [("a", "s"), ("b", "v")], {"b"})
    report = generic.back_and_forth_audit(state, generic.new_state(structure=N), 3)
    assert report.ok
    assert report.failed_round is None
    assert [r["status"] for r in report.rounds] == ["ok", "ok", "exhausted"]
    assert not report.rounds[0]["realized"]
    assert report.rounds[1]["realized"]
    assert report.rounds[1]["direction"] == "back"
    image = report.rounds[1]["image"]
    assert report.left.current.is_coloured(image)
    assert report.left.current.value("a") < report.left.current.value(image)
    assert report.to_dict()["left_points"] == 2

def test_back_and_forth_audit_fails_on_colour(tower):
    left = tower.extend(field.Transcendental("u", (5, 6)))
    M = structure.ColouredStructure(left, [("a", "t"), ("b", "u")], {"b"})
    other = field.FieldTower([field.Transcendental("s", (2, 3)), field.Transcendental("v", (7, 8))])
    N = structure.ColouredStructure(other, [("a", "s"), ("b", "v")])
    report = generic.back_and_forth_audit(generic.new_state(structure=M), generic.new_state(structure=N), 4)
    assert not report.ok
    assert report.failed_round == 1
    assert [r["status"] for r in report.rounds] == ["ok", "failed"]
    assert report.rounds[1]["point"] == "b"
    assert report.rounds[1]["image"] == "b"
    assert not report.rounds[1]["realized"]
    assert len(report.left.current) == 2
    assert len(report.right.current) == 2

def test_back_and_forth_audit_fails_on_first_point(tower):
    M = structure.ColouredStructure(tower, [("a", "t")], {"a"})
    other = field.FieldTower([field.Transcendental("s", (2, 3))])
    N = structure.ColouredStructure(other, [("a", "s")])
    report = generic.back_and_forth_audit(generic.new_state(structure=M), generic.new_state(structure=N), 2)
    assert not report.ok
    assert report.failed_round == 0
    assert report.to_dict()["failed_round"] == 0

def test_state_to_dict(densified):
    out = densified.to_dict()
    assert out["stage_index"] == 2
    assert [r["kind"] for r in out["history"]] == ["realize", "densify"]

@pytest.fixture
def stages(state, realized, densified, tower):
    S = structure.ColouredStructure(tower, [("a", "t")], {"a"})
    embedded = generic.embed_structure(densified, S)
    B = generic.extension_over(embedded.current, ["a", "u"],
        [generic.NewPoint("z", "algebraic", poly="x^2 - a", root=1)], seed="z")
    return [state, realized, densified, embedded, generic.realize_extension(embedded, ["a", "u"], B)]

def test_stages_are_closed_in_their_successors(stages):
    for earlier, later in zip(stages, stages[1:]):
        assert set(earlier.current.names) <= set(later.current.names)
        assert structure.is_closed(later.current, earlier.current.names)
        assert later.history[-1].certificates["previous_stage_closed"]
        assert structure.in_class(later.current)

def test_random_cx_closed(stages):
    rnd = random.Random(21)
    certified = 0
    for stage in stages[1:]:
        M = stage.current
        for _ in range(30):
            A = rnd.sample(M.names, rnd.randrange(0, min(3, len(M))))
            x = rnd.choice([n for n in M.names if n not in A])
            outcome = generic.check_cx_closed(M, A, x)
            assert outcome in (None, True)
            if outcome:
                assert structure.is_closed(M, set(A) | {x})
                certified += 1
    assert certified > 0

def test_realizing_twice_gives_equal_fingerprints(realized):
    first = realized.history[-1].new_points[0]
    B = generic.extension_over(realized.current, ["a"],
        [generic.NewPoint("v", "transcendental", coloured=True, cut=("a", None))], seed="s")
    after = generic.realize_extension(realized, ["a"], B)
    second = after.history[-1].new_points[0]
    assert second != first
    M = after.current
    assert isomorphism.fingerprint(M, [first], over=["a"]) == isomorphism.fingerprint(M, [second], over=["a"])
    assert isomorphism.types_equal(M, [first], [second], over=["a"])

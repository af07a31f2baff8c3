import pytest
from fractions import Fraction
import random
import itertools

import sympy

import predim.field as field

x = sympy.Symbol("x")


@pytest.fixture
def tower():
    return field.FieldTower([field.Transcendental("t", (2, 3)), field.Transcendental("u", (5, 6))])

@pytest.fixture
def sqrt_tower(tower):
    return tower.extend(field.Algebraic("r", "x^2 - t", (1, 2)))

@pytest.fixture
def sqrt2():
    return field.FieldTower([field.Algebraic("s", "x^2 - 2", (1, 2))])


def test_to_fraction():
    assert field.to_fraction("3/4") == Fraction(3, 4)
    assert field.to_fraction("0.25") == Fraction(1, 4)
    assert field.to_fraction(sympy.Rational(5, 7)) == Fraction(5, 7)
    with pytest.raises(TypeError):
        field.to_fraction(0.5)
    with pytest.raises(TypeError):
        field.to_fraction(True)
    with pytest.raises(ValueError):
        field.to_fraction("spam")

def test_Interval():
    a = field.Interval(1, 2)
    b = field.Interval(-1, 3)
    assert a + b == field.Interval(0, 5)
    assert a - b == field.Interval(-2, 3)
    assert a * b == field.Interval(-2, 6)
    assert b ** 2 == field.Interval(0, 9)
    assert (a / field.Interval(2, 4)) == field.Interval(Fraction(1, 4), 1)
    assert a.sign() == 1
    assert b.sign() is None
    assert field.Interval(0).sign() == 0
    with pytest.raises(field.DivisionByZero):
        a / b
    with pytest.raises(ValueError):
        field.Interval(2, 1)

def test_witness_refinement_is_deterministic_and_nested():
    spec = field.Transcendental("t", (0, 1), "spam")
    assert field.refine_witness(spec, 10) == field.refine_witness(spec, 10)
    outer, inner = field.refine_witness(spec, 5), field.refine_witness(spec, 12)
    assert outer.lo <= inner.lo and inner.hi <= outer.hi
    assert inner.width == Fraction(1, 2 ** 12)

def test_seeds_choose_the_point():
    a = field.Transcendental("a", (0, 1), "one")
    b = field.Transcendental("b", (0, 1), "two")
    tower = field.FieldTower([a, b])
    assert (tower.gen("a") - tower.gen("b")).sign() in (-1, 1)

def test_generators_and_names(sqrt_tower):
    assert sqrt_tower.names == ["t", "u", "r"]
    assert sqrt_tower.transcendental_names == ["t", "u"]
    assert sqrt_tower.algebraic_names == ["r"]
    assert sqrt_tower.degree == 2
    assert sqrt_tower.prefix(2).names == ["t", "u"]
    assert sqrt_tower.is_extension_of(sqrt_tower.prefix(1))

def test_arithmetic_normal_forms(sqrt_tower):
    t, r = sqrt_tower.gen("t"), sqrt_tower.gen("r")
    assert r * r == t
    assert (r + 1) * (r - 1) == t - 1
    assert (1 / (r - 1)) * (r - 1) == sqrt_tower.one
    assert r ** -2 == 1 / t
    assert sqrt_tower.element("r^3") == t * r
    assert (t - t).is_zero

def test_element_from_text(tower):
    assert tower.element("t^2 + 1/2") == tower.gen("t") ** 2 + Fraction(1, 2)
    assert tower.element("3/4").is_rational()
    assert tower.element("3/4").rational_value() == Fraction(3, 4)
    assert not tower.element("t").is_rational()
    with pytest.raises(ValueError):
        tower.element("q + 1")

def test_division_by_zero(tower):
    assert issubclass(field.DivisionByZero, ZeroDivisionError)
    assert issubclass(field.DivisionByZero, ArithmeticError)
    with pytest.raises(field.DivisionByZero):
        tower.gen("t") / (tower.gen("t") - tower.gen("t"))
    with pytest.raises(field.DivisionByZero):
        field.arith("div", tower.one, tower.zero)
    with pytest.raises(field.DivisionByZero):
        tower.element("1/(t - t)")

def test_signs_and_order(sqrt_tower, sqrt2):
    t, u, r = (sqrt_tower.gen(n) for n in ("t", "u", "r"))
    assert r < t < u
    assert (u - t).sign() == 1
    assert (t - u).sign() == -1
    assert sqrt_tower.zero.sign() == 0
    s = sqrt2.gen("s")
    assert s.sign() == 1
    assert (s - Fraction(3, 2)).sign() == -1
    assert (s - Fraction(7, 5)).sign() == 1

def test_enclosures_shrink(sqrt2):
    s = sqrt2.gen("s")
    iv = s.enclosure(max_width=Fraction(1, 1000))
    assert iv.width <= Fraction(1, 1000)
    assert iv.lo < Fraction(14143, 10000) and iv.hi > Fraction(14142, 10000)

def test_precision_exhausted():
    tower = field.FieldTower([field.Transcendental("t", (0, 1))], precision_budget=1)
    with pytest.raises(field.PrecisionExhausted):
        (tower.gen("t") - Fraction(1, 2)).sign()

def test_duplicate_names(tower):
    with pytest.raises(field.DuplicateName):
        tower.extend(field.Transcendental("t", (7, 8)))

def test_bad_isolation(sqrt2):
    tower = field.FieldTower()
    with pytest.raises(field.BadIsolation):
        tower.extend(field.Algebraic("s", "x^2 - 2", (2, 3)))
    with pytest.raises(field.BadIsolation):
        tower.extend(field.Algebraic("s", "x^3 - x", (-2, 2)))
    with pytest.raises(field.BadIsolation):
        tower.extend(field.Algebraic("s", "x^2 - 2", (1, 1)))

def test_root_already_present(sqrt2):
    with pytest.raises(field.RootAlreadyPresent) as info:
        sqrt2.extend(field.Algebraic("s2", "x^2 - 2", (1, 2)))
    assert info.value.existing == "s"
    assert info.value.name == "s2"

def test_reducible_polynomial_keeps_the_right_factor():
    tower = field.FieldTower([field.Transcendental("t", (2, 3))])
    tower = tower.extend(field.Algebraic("r", "(x^2 - t) * (x - 10)", (1, 2)))
    r = tower.gen("r")
    assert r * r == tower.gen("t")
    assert tower.degree == 2

def test_tower_mismatch():
    one = field.FieldTower([field.Transcendental("t", (2, 3))])
    two = field.FieldTower([field.Transcendental("u", (2, 3))])
    with pytest.raises(field.TowerMismatch):
        one.gen("t") + two.gen("u")
    with pytest.raises(field.TowerMismatch):
        field.arith("add", one.gen("t"), two.gen("u"))

def test_coerce_into_extension(tower, sqrt_tower):
    t = tower.gen("t")
    lifted = field.coerce(t, sqrt_tower)
    assert lifted.tower is sqrt_tower
    assert lifted == sqrt_tower.gen("r") ** 2
    assert t + sqrt_tower.gen("r") == sqrt_tower.element("t + r")
    with pytest.raises(field.TowerMismatch):
        field.coerce(sqrt_tower.gen("r"), tower)

def test_trdeg(sqrt_tower, sqrt2):
    t, u, r = (sqrt_tower.gen(n) for n in ("t", "u", "r"))
    assert field.trdeg([]) == 0
    assert field.trdeg([t]) == 1
    assert field.trdeg([t, r]) == 1
    assert field.trdeg([r, u]) == 2
    assert field.trdeg([t + u, t * u]) == 2
    assert field.trdeg([t + u, 2 * t + 2 * u]) == 1
    assert field.trdeg([r * u, t * u * u]) == 1
    assert field.trdeg([sqrt2.gen("s")]) == 0
    assert field.trdeg([sqrt_tower.rational(5)]) == 0

def _dependent_by_linear_algebra(elements, degree):
    """Brute force: is there a non-zero polynomial of total degree at most
    `degree` over the rationals vanishing at the elements?"""
    n = len(elements)
    monomials = [m for m in itertools.product(range(degree + 1), repeat=n) if sum(m) <= degree]
    values = []
    for m in monomials:
        value = elements[0].tower.one
        for e, k in zip(elements, m):
            value = value * e ** k
        values.append(value)
    symbols = sympy.symbols("z0:{}".format(len(values)))
    total = sum((s * v.as_expr() for s, v in zip(symbols, values)), sympy.Integer(0))
    num, _ = sympy.fraction(sympy.together(total))
    gens = [sympy.Symbol(n) for n in elements[0].tower.names]
    equations = sympy.Poly(sympy.expand(num), *gens).coeffs()
    solution = sympy.linsolve(equations, *symbols)
    return any(any(v != 0 for v in sol) for sol in solution)

def test_trdeg_against_brute_force(tower):
    random.seed(3)
    t, u = tower.gen("t"), tower.gen("u")
    for _ in range(10):
        elements = []
        for _ in range(random.randint(1, 2)):
            a, b = random.randint(0, 2), random.randint(0, 2)
            c = random.randint(-2, 2)
            elements.append(t ** a * u ** b + c)
        elements = [e for e in elements if not e.is_rational()]
        if not elements:
            continue
        rank = field.trdeg(elements)
        if rank == len(elements):
            assert not _dependent_by_linear_algebra(elements, 2)
        else:
            assert _dependent_by_linear_algebra(elements, 2)

def test_count_and_isolate_roots(sqrt2):
    rationals = field.FieldTower()
    expr = x ** 3 - 2 * x
    assert field.count_real_roots(rationals, expr, x, -2, 2) == 3
    assert field.count_real_roots(rationals, expr, x, Fraction(1, 2), 2) == 1
    iv = field.isolate_root(rationals, expr, x, 2)
    assert iv.lo < Fraction(14142, 10000) and iv.hi > Fraction(14143, 10000)
    assert field.count_real_roots(rationals, expr, x, iv.lo, iv.hi) == 1
    with pytest.raises(ValueError):
        field.isolate_root(rationals, expr, x, 3)

def test_isolate_root_over_transcendentals(tower):
    t = sympy.Symbol("t")
    iv = field.isolate_root(tower, x ** 2 - t, x, 1)
    extended = tower.extend(field.Algebraic("r", x ** 2 - t, iv))
    assert extended.gen("r").sign() == 1
    iv = field.isolate_root(tower, x ** 2 - t, x, 0)
    extended = tower.extend(field.Algebraic("r", x ** 2 - t, iv))
    assert extended.gen("r").sign() == -1

def test_tower_to_dict_round_trip(sqrt_tower):
    copy = field.FieldTower.from_dict(sqrt_tower.to_dict())
    assert copy == sqrt_tower
    assert copy.names == sqrt_tower.names
    seeded = field.FieldTower([field.Transcendental("t", (2, 3), "spam")])
    assert field.FieldTower.from_dict(seeded.to_dict()) == seeded

def test_conjugate_root_is_reduced_to_its_factor(sqrt2):
    tower = sqrt2.extend(field.Algebraic("s2", "x^2 - 2", (Fraction(-3, 2), Fraction(-7, 5))))
    s, s2 = tower.gen("s"), tower.gen("s2")
    assert tower.degree == 2
    assert s2 == -s
    assert (s + s2).is_zero
    assert s2.sign() == -1
    assert s2.inverse() * s2 == tower.one
    assert field.FieldTower.from_dict(tower.to_dict()) == tower

def test_irreducible_over_the_tower_is_kept(sqrt2):
    tower = sqrt2.extend(field.Algebraic("q", "x^2 - 3", (1, 2)))
    s, q = tower.gen("s"), tower.gen("q")
    assert tower.degree == 4
    assert q * q == 3
    assert not (q - s).is_zero
    assert ((q - s) * (q + s)) == 1
    assert (1 / (q + s)) == q - s

def test_polynomial_as_sympy_expression_in_x(sqrt2):
    tower = sqrt2.extend(field.Algebraic("q", x ** 2 - 3, (1, 2)))
    assert tower.gen("q") ** 2 == 3


@pytest.fixture(scope="module")
def pool_tower():
    gens = [field.Transcendental("t{}".format(i), (10 * i + 2, 10 * i + 3)) for i in range(3)]
    return field.FieldTower(gens).extend(field.Algebraic("r", "x^2 - t0", (1, 2)))

def _random_element(rnd, tower, depth=2):
    if depth == 0 or rnd.random() < 0.3:
        choice = rnd.choice(tower.names + ["1/2", "3", "-2"])
        return tower.element(choice)
    a = _random_element(rnd, tower, depth - 1)
    b = _random_element(rnd, tower, depth - 1)
    return rnd.choice([a + b, a - b, a * b])

def test_ring_laws_on_normal_forms(pool_tower):
    rnd = random.Random(11)
    for _ in range(40):
        a, b, c = (_random_element(rnd, pool_tower) for _ in range(3))
        assert ((a + b) + c).poly == (a + (b + c)).poly
        assert ((a * b) * c).poly == (a * (b * c)).poly
        assert (a * (b + c)).poly == (a * b + a * c).poly
        assert (a * b).poly == (b * a).poly
        if not a.is_zero:
            assert (a * a.inverse()).poly == pool_tower.one.poly

def test_order_is_total(pool_tower):
    rnd = random.Random(12)
    elements = [_random_element(rnd, pool_tower) for _ in range(8)]
    less = {}
    for (i, a), (j, b) in itertools.product(enumerate(elements), repeat=2):
        assert [a < b, a == b, a > b].count(True) == 1
        less[i, j] = a < b
    for i, j, k in itertools.product(range(len(elements)), repeat=3):
        if less[i, j] and less[j, k]:
            assert less[i, k]

def test_sign_is_stable_under_refinement(pool_tower):
    rnd = random.Random(13)
    for _ in range(20):
        e = _random_element(rnd, pool_tower)
        if e.is_zero:
            continue
        s = e.sign()
        for level in range(e.sign_level, e.sign_level + 6):
            iv = e.interval(level)
            assert iv is not None
            assert iv.sign() == s

def test_trdeg_of_transcendental_generators(pool_tower):
    gens = [pool_tower.gen(n) for n in pool_tower.transcendental_names]
    assert field.trdeg(gens) == 3
    assert field.trdeg(gens + [pool_tower.gen("r")]) == 3
    assert field.trdeg([pool_tower.gen("r")]) == 1

def test_trdeg_is_a_matroid_rank(pool_tower):
    elements = [pool_tower.element(e) for e in ("t0", "r", "t1 + t2", "t1*t2", "r*t1", "t0 + t1 + t2")]
    ground = range(len(elements))
    rank = {}
    for size in range(len(elements) + 1):
        for combo in itertools.combinations(ground, size):
            rank[frozenset(combo)] = field.trdeg([elements[i] for i in combo])
    for X, rX in rank.items():
        assert 0 <= rX <= len(X)
    for X, Y in itertools.product(rank, repeat=2):
        if len(X) > 5 or len(Y) > 5:
            continue
        if X <= Y:
            assert rank[X] <= rank[Y]
        assert rank[X | Y] + rank[X & Y] <= rank[X] + rank[Y]

def test_uncertified_root_over_algebraic_coefficients(sqrt2):
    with pytest.raises(field.BadIsolation, match="certify a single root"):
        sqrt2.extend(field.Algebraic("q", "x^2 + x - s", (-1, 1)))
    tower = sqrt2.extend(field.Algebraic("q", "x^2 + x - s", (0, 1)))
    q = tower.gen("q")
    assert q * q + q == tower.gen("s")
    assert tower.degree == 4

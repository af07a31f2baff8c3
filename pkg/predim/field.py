"""
field
~~~~~

Exact arithmetic in finitely generated real fields.

A :class:`FieldTower` is a presentation of a subfield of the reals: a list of
transcendental generators, each carrying a rational "witness" interval, followed
or interleaved with algebraic generators, each given by a minimal polynomial
over the earlier generators and an isolating interval.  Elements
(:class:`FieldElement`) are polynomials in the algebraic generators with
coefficients rational functions in the transcendental generators, reduced
modulo the (monic) minimal polynomials.  Because each reduction rule has a pure
power of its own generator as leading monomial, the rules form a Gröbner basis
and normal forms are canonical: equal values have identical normal forms.

Signs are found by interval evaluation.  Each transcendental generator names
the single real number lying in a nested sequence of halvings of its witness
interval, the half at each step chosen by bits of a SHA-256 stream derived from
the generator's seed.  Each algebraic generator is the unique root of its
minimal polynomial inside its isolating interval, located by bisection.

Transcendence degree is the rank of the Jacobian with respect to the
transcendental generators, computed exactly over the rational function field.
"""

import fractions as _fractions
import logging as _logging

import sympy as _sympy
from sympy.polys.rings import PolyRing as _PolyRing
from sympy.polys.orderings import lex as _lex
from sympy.polys.matrices import DomainMatrix as _DomainMatrix
from sympy.parsing import sympy_parser as _sympy_parser

from . import utils as _utils

_logger = _logging.getLogger(__name__)

Fraction = _fractions.Fraction

DEFAULT_PRECISION_BUDGET = 64

# Shifts tried to make a norm squarefree before giving up.
NORM_SHIFTS = 8


class DivisionByZero(ZeroDivisionError):
    pass

class TowerMismatch(ValueError):
    pass

class PrecisionExhausted(ArithmeticError):
    """The refinement budget ran out before an interval excluded zero.  Means
    the witness intervals are badly chosen, not that the element is zero."""
    pass

class DuplicateName(ValueError):
    pass

class BadIsolation(ValueError):
    pass

class RootAlreadyPresent(ValueError):
    """The root isolated by an algebraic specification is already the value of
    the generator named `existing`."""
    def __init__(self, name, existing):
        super().__init__("Root of '{}' is already the generator '{}'".format(name, existing))
        self.name = name
        self.existing = existing


def to_fraction(value):
    """Convert to an exact :class:`Fraction`.  Accepts integers, fractions,
    strings such as `"3/4"` or `"3.1415"`, and sympy rationals.  Floating point
    numbers are refused.
    """
    if isinstance(value, bool):
        raise TypeError("Not a rational number: {!r}".format(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as ex:
            raise ValueError("Not a rational literal: {!r}".format(value)) from ex
    if isinstance(value, _sympy.Basic):
        if value.is_Rational:
            return Fraction(int(value.p), int(value.q))
        raise ValueError("Not a rational number: {}".format(value))
    if hasattr(value, "numerator") and hasattr(value, "denominator") and not isinstance(value, float):
        return Fraction(int(value.numerator), int(value.denominator))
    raise TypeError("Not a rational number: {!r}".format(value))


class Interval():
    """Closed interval with exact rational endpoints.

    :param lo: Lower endpoint.
    :param hi: Upper endpoint; defaults to `lo` (a point interval).
    """
    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = to_fraction(lo)
        hi = lo if hi is None else to_fraction(hi)
        if lo > hi:
            raise ValueError("Empty interval [{}, {}]".format(lo, hi))
        self.lo = lo
        self.hi = hi

    @staticmethod
    def _coerce(other):
        if isinstance(other, Interval):
            return other
        return Interval(other)

    @property
    def width(self):
        return self.hi - self.lo

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2

    def contains(self, value):
        value = to_fraction(value)
        return self.lo <= value <= self.hi

    def contains_zero(self):
        return self.lo <= 0 <= self.hi

    def sign(self):
        """+1 or -1 if the interval excludes zero, 0 for the point interval
        `[0, 0]`, and `None` if undecided."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == 0 and self.hi == 0:
            return 0
        return None

    def intersect(self, other):
        """Intersection, or `None` if empty."""
        lo, hi = max(self.lo, other.lo), min(self.hi, other.hi)
        if lo > hi:
            return None
        return Interval(lo, hi)

    def bisect(self):
        m = self.midpoint
        return Interval(self.lo, m), Interval(m, self.hi)

    def strictly_below(self, other):
        return self.hi < other.lo

    def __add__(self, other):
        other = self._coerce(other)
        return Interval(self.lo + other.lo, self.hi + other.hi)

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        products = (self.lo * other.lo, self.lo * other.hi, self.hi * other.lo, self.hi * other.hi)
        return Interval(min(products), max(products))

    __rmul__ = __mul__

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("Only non-negative integer powers, not {!r}".format(n))
        if n == 0:
            return Interval(1)
        a, b = self.lo ** n, self.hi ** n
        if n % 2 == 1:
            return Interval(a, b)
        if self.lo >= 0:
            return Interval(a, b)
        if self.hi <= 0:
            return Interval(b, a)
        return Interval(0, max(a, b))

    def reciprocal(self):
        if self.contains_zero():
            raise DivisionByZero("Interval {} contains zero".format(self))
        return Interval(1 / self.hi, 1 / self.lo)

    def __truediv__(self, other):
        return self * self._coerce(other).reciprocal()

    def __eq__(self, other):
        if not isinstance(other, Interval):
            return NotImplemented
        return self.lo == other.lo and self.hi == other.hi

    def __hash__(self):
        return hash((self.lo, self.hi))

    def to_list(self):
        return [str(self.lo), str(self.hi)]

    def __repr__(self):
        return "Interval({}, {})".format(self.lo, self.hi)


def _evaluate_terms(terms, box):
    """Evaluate a polynomial given as `[(exponents, Fraction), ...]` over a box
    (a list of intervals, one per variable)."""
    total = Interval(0)
    powers = {}
    for exponents, coeff in terms:
        value = Interval(coeff)
        for index, e in enumerate(exponents):
            if e == 0:
                continue
            key = (index, e)
            if key not in powers:
                powers[key] = box[index] ** e
            value = value * powers[key]
        total = total + value
    return total


def _check_name(name):
    if not isinstance(name, str) or not name.isidentifier():
        raise ValueError("Generator names must be identifiers, not {!r}".format(name))
    return name


class Transcendental():
    """A transcendental generator.

    :param name: Identifier naming the generator.
    :param witness: Pair `(lo, hi)` (or an :class:`Interval`) with `lo < hi`.
    :param seed: Optional seed selecting the point inside the witness; defaults
      to the name.
    """
    kind = "transcendental"

    def __init__(self, name, witness, seed=None):
        self.name = _check_name(name)
        if not isinstance(witness, Interval):
            witness = Interval(*witness)
        if witness.width <= 0:
            raise ValueError("Witness interval for '{}' must have positive width".format(name))
        self.witness = witness
        self.seed = None if seed is None else str(seed)

    @property
    def seed_key(self):
        return self.name if self.seed is None else self.seed

    def renamed(self, name, seed=None, witness=None):
        return Transcendental(name, self.witness if witness is None else witness,
            self.seed if seed is None else seed)

    def _key(self):
        return ("T", self.name, self.witness, self.seed)

    def __eq__(self, other):
        return isinstance(other, Transcendental) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def to_dict(self):
        out = {"kind": self.kind, "name": self.name, "witness": self.witness.to_list()}
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    def __repr__(self):
        return "Transcendental({!r}, [{}, {}])".format(self.name, self.witness.lo, self.witness.hi)


class Algebraic():
    """An algebraic generator: the unique root of `poly` in `isolating`.

    :param name: Identifier naming the generator.
    :param poly: Polynomial (text or sympy expression) in the generator's own
      name, or in `x`, with coefficients in the earlier generators.
    :param isolating: Pair `(lo, hi)` or :class:`Interval` containing exactly
      one root.
    """
    kind = "algebraic"

    def __init__(self, name, poly, isolating):
        self.name = _check_name(name)
        self.poly = poly
        if not isinstance(isolating, Interval):
            isolating = Interval(*isolating)
        self.isolating = isolating

    @property
    def poly_text(self):
        return self.poly if isinstance(self.poly, str) else _sympy.sstr(self.poly)

    def _key(self):
        return ("A", self.name, self.poly_text, self.isolating)

    def __eq__(self, other):
        return isinstance(other, Algebraic) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def to_dict(self):
        return {"kind": self.kind, "name": self.name, "poly": self.poly_text,
            "isolating": self.isolating.to_list()}

    def __repr__(self):
        return "Algebraic({!r}, {!r}, [{}, {}])".format(self.name, self.poly_text,
            self.isolating.lo, self.isolating.hi)


def generator_from_dict(data):
    if data["kind"] == Transcendental.kind:
        return Transcendental(data["name"], data["witness"], data.get("seed"))
    if data["kind"] == Algebraic.kind:
        return Algebraic(data["name"], data["poly"], data["isolating"])
    raise ValueError("Unknown generator kind {!r}".format(data["kind"]))


_TRANSFORMATIONS = _sympy_parser.standard_transformations + (_sympy_parser.convert_xor,)

def _is_rational_function(expr):
    for node in _sympy.preorder_traversal(expr):
        if node.is_Symbol or node.is_Rational or node.is_Add or node.is_Mul:
            continue
        if node.is_Pow and node.exp.is_Integer:
            continue
        return False
    return True

def parse_rational_expression(text, symbols):
    """Parse `text` into a sympy expression which is a rational function over
    the rationals in the given symbols.

    :param symbols: Dictionary from name to :class:`sympy.Symbol`.
    :return: sympy expression.
    """
    if isinstance(text, _sympy.Basic):
        expr = text
    else:
        try:
            expr = _sympy_parser.parse_expr(str(text), local_dict=dict(symbols),
                transformations=_TRANSFORMATIONS)
        except Exception as ex:
            raise ValueError("Cannot parse expression {!r}: {}".format(text, ex)) from ex
    if isinstance(expr, _sympy.Expr) and expr.has(_sympy.zoo, _sympy.nan):
        raise DivisionByZero("Division by zero in {!r}".format(text))
    if not isinstance(expr, _sympy.Expr) or not _is_rational_function(expr):
        raise ValueError("Not a rational function of the generators: {!r}".format(text))
    unknown = {s.name for s in expr.free_symbols} - set(symbols)
    if unknown:
        raise ValueError("Unknown generators {} in {!r}".format(sorted(unknown), text))
    return expr


# Enclosures of generators, shared between towers with a common prefix.
_INTERVAL_CACHE = _utils.Cache(maxcount=8192)
# Factors of algebraic generator polynomials over the tower below them.
_FACTOR_CACHE = _utils.Cache(maxcount=1024)

def refine_witness(spec, level):
    """The enclosure of a transcendental generator after `level` halvings of
    its witness interval."""
    key = ("T", spec, level)
    def compute():
        interval = spec.witness
        for bit in _utils.seed_bits(spec.seed_key, level):
            left, right = interval.bisect()
            interval = right if bit else left
        return interval
    return _INTERVAL_CACHE.get_or_compute(key, compute)


class FieldTower():
    """A finitely generated real field, presented by generators.

    :param generators: Sequence of :class:`Transcendental` and
      :class:`Algebraic`.  Each is validated against the tower of the
      generators before it.
    :param precision_budget: Maximum number of refinement levels used when
      deciding signs.
    :param parent: Optional tower whose generators are all but the last of
      `generators`; saves rebuilding it.
    """
    def __init__(self, generators=(), precision_budget=DEFAULT_PRECISION_BUDGET, parent=None):
        generators = tuple(generators)
        precision_budget = int(precision_budget)
        if precision_budget < 1:
            raise ValueError("precision_budget must be positive")
        self._budget = precision_budget
        if generators:
            if parent is None or parent.generators != generators[:-1]:
                parent = FieldTower(generators[:-1], precision_budget)
            last = parent._validate(generators[-1])
            generators = parent.generators + (last,)
        else:
            parent = None
        self._parent = parent
        self._generators = generators
        self._setup()

    def _setup(self):
        self._symbols = {g.name: _sympy.Symbol(g.name) for g in self._generators}
        self._trans = [g for g in self._generators if isinstance(g, Transcendental)]
        self._alg = [g for g in self._generators if isinstance(g, Algebraic)]
        trans_syms = [self._symbols[g.name] for g in self._trans]
        if trans_syms:
            self._K = _sympy.QQ.frac_field(*trans_syms)
        else:
            self._K = _sympy.QQ
        alg_syms = [self._symbols[g.name] for g in self._alg]
        self._ring = _PolyRing(tuple(reversed(alg_syms)), self._K, _lex)
        self._degrees = []
        self._rules = []
        self._basis = [self._ring.zero_monom]
        for index, spec in enumerate(self._alg):
            self._adjoin_rule(index, spec)
        self._derivations = None
        self._eval_symbols = [self._symbols[g.name] for g in self._generators]
        self._coefficient_cache = {}

    def _slot(self, alg_index):
        return len(self._alg) - 1 - alg_index

    def _adjoin_rule(self, index, spec):
        sym = self._symbols[spec.name]
        poly = self._ring.from_expr(_sympy.expand(spec.poly))
        slot = self._slot(index)
        degree = max(m[slot] for m in poly.keys())
        lead = self._ring.from_dict({m[:slot] + (0,) + m[slot+1:]: c
            for m, c in poly.items() if m[slot] == degree})
        inverse = self._inverse_poly(lead)
        rule = (poly * inverse).rem(self._rules) if self._rules else poly * inverse
        self._rules.append(rule)
        self._degrees.append(degree)
        basis = []
        for monom in self._basis:
            for e in range(degree):
                basis.append(monom[:slot] + (e,) + monom[slot+1:])
        self._basis = basis

    @property
    def generators(self):
        """Tuple of generator specifications, in order."""
        return self._generators

    @property
    def precision_budget(self):
        return self._budget

    @property
    def parent(self):
        """The tower of all but the last generator, or `None`."""
        return self._parent

    @property
    def names(self):
        return [g.name for g in self._generators]

    @property
    def transcendental_names(self):
        return [g.name for g in self._trans]

    @property
    def algebraic_names(self):
        return [g.name for g in self._alg]

    @property
    def degree(self):
        """Degree of the field over the rational function field in the
        transcendental generators."""
        return len(self._basis)

    def symbol(self, name):
        return self._symbols[name]

    @property
    def symbols(self):
        return dict(self._symbols)

    def generator(self, name):
        for g in self._generators:
            if g.name == name:
                return g
        raise KeyError(name)

    def prefix(self, count):
        """The tower of the first `count` generators."""
        tower = self
        while len(tower._generators) > count:
            tower = tower._parent
        return tower if tower is not None else FieldTower((), self._budget)

    def is_extension_of(self, other):
        n = len(other._generators)
        return self._generators[:n] == other._generators

    def __eq__(self, other):
        if not isinstance(other, FieldTower):
            return NotImplemented
        return self is other or self._generators == other._generators

    def __hash__(self):
        return hash(self._generators)

    def __len__(self):
        return len(self._generators)

    def __repr__(self):
        return "FieldTower({!r})".format(list(self._generators))

    def to_dict(self):
        return {"generators": [g.to_dict() for g in self._generators],
            "precision_budget": self._budget}

    @staticmethod
    def from_dict(data):
        gens = [generator_from_dict(d) for d in data["generators"]]
        return FieldTower(gens, data.get("precision_budget", DEFAULT_PRECISION_BUDGET))

    def extend(self, spec):
        """Return a new tower with `spec` adjoined.  See :func:`extend_tower`."""
        return FieldTower(self._generators + (spec,), self._budget, parent=self)

    #####
    # Validation of a new generator (against this tower as the base field)
    #####

    def _validate(self, spec):
        if spec.name in self._symbols:
            raise DuplicateName("Generator '{}' already exists".format(spec.name))
        if isinstance(spec, Transcendental):
            _logger.debug("Adjoining transcendental %s with witness %s", spec.name, spec.witness)
            return spec
        if not isinstance(spec, Algebraic):
            raise TypeError("Expected Transcendental or Algebraic, not {!r}".format(spec))
        return self._validate_algebraic(spec)

    def _min_poly_expr(self, spec):
        own = _sympy.Symbol(spec.name)
        symbols = dict(self._symbols)
        symbols[spec.name] = own
        text = spec.poly
        if "x" not in self._symbols and spec.name != "x":
            symbols["x"] = _sympy.Symbol("x")
        expr = parse_rational_expression(text, symbols)
        if own not in expr.free_symbols and _sympy.Symbol("x") in expr.free_symbols \
                and "x" not in self._symbols:
            expr = expr.subs(_sympy.Symbol("x"), own)
        num, _ = _sympy.fraction(_sympy.together(expr))
        num = _sympy.expand(num)
        if own not in num.free_symbols:
            raise BadIsolation("Polynomial for '{}' does not involve it".format(spec.name))
        try:
            _sympy.Poly(num, own)
        except _sympy.PolynomialError as ex:
            raise BadIsolation("Not a polynomial in '{}': {}".format(spec.name, ex)) from ex
        return own, num

    def _poly_coefficients(self, own, num):
        """Coefficients (highest degree first) as elements of this tower."""
        return [self.element(c) for c in _sympy.Poly(num, own).all_coeffs()]

    def _evaluate_univariate(self, coeffs, point):
        point = to_fraction(point)
        value = self.zero
        for c in coeffs:
            value = value * point + c
        return value

    def _validate_algebraic(self, spec):
        own, num = self._min_poly_expr(spec)
        lo, hi = spec.isolating.lo, spec.isolating.hi
        if lo >= hi:
            raise BadIsolation("Isolating interval for '{}' must have positive width".format(spec.name))
        involved = {s.name for s in num.free_symbols} - {spec.name}
        over_transcendentals = involved <= set(self.transcendental_names)

        if over_transcendentals:
            num = self._choose_factor(spec.name, own, num, lo, hi)

        coeffs = self._poly_coefficients(own, num)
        s_lo = self._evaluate_univariate(coeffs, lo).sign()
        s_hi = self._evaluate_univariate(coeffs, hi).sign()
        if s_lo == 0 or s_hi == 0:
            raise BadIsolation("An endpoint of the interval for '{}' is a root".format(spec.name))
        if s_lo == s_hi:
            raise BadIsolation("No sign change of the polynomial for '{}' on [{}, {}]".format(spec.name, lo, hi))

        if over_transcendentals:
            count = count_real_roots(self, num, own, lo, hi)
            if count != 1:
                raise BadIsolation("Interval for '{}' holds {} roots, need exactly one".format(spec.name, count))
        else:
            disc = _sympy.discriminant(num, own) if _sympy.degree(num, own) > 1 else _sympy.Integer(1)
            if self.element(disc).is_zero:
                raise BadIsolation("Polynomial for '{}' is not squarefree".format(spec.name))
            if not self._derivative_excludes_zero(coeffs, spec.isolating):
                raise BadIsolation("Could not certify a single root of the polynomial for '{}' on [{}, {}]".format(
                    spec.name, lo, hi))

        if self._alg:
            num = _FACTOR_CACHE.get_or_compute((self._generators, spec.name, _sympy.srepr(num), lo, hi),
                lambda: self._factor_over_tower(spec.name, own, num, lo, hi))
            coeffs = self._poly_coefficients(own, num)

        for existing in self._alg:
            g = self.gen(existing.name)
            if self._evaluate_at(coeffs, g).is_zero and (g - lo).sign() > 0 and (hi - g).sign() > 0:
                raise RootAlreadyPresent(spec.name, existing.name)

        _logger.debug("Adjoining algebraic %s as root of %s in %s", spec.name, num, spec.isolating)
        return Algebraic(spec.name, num, spec.isolating)

    def _evaluate_at(self, coeffs, element):
        value = self.zero
        for c in coeffs:
            value = value * element + c
        return value

    def _choose_factor(self, name, own, num, lo, hi):
        trans_syms = [self._symbols[n] for n in self.transcendental_names
            if self._symbols[n] in num.free_symbols]
        _, factors = _sympy.factor_list(num, own, *trans_syms)
        candidates = []
        for factor, _ in factors:
            if own not in factor.free_symbols:
                continue
            coeffs = self._poly_coefficients(own, factor)
            a = self._evaluate_univariate(coeffs, lo).sign()
            b = self._evaluate_univariate(coeffs, hi).sign()
            if a * b < 0:
                candidates.append(_sympy.expand(factor))
        if len(candidates) > 1:
            raise BadIsolation("Several factors of the polynomial for '{}' change sign on the interval".format(name))
        if not candidates:
            raise BadIsolation("No sign change of the polynomial for '{}' on [{}, {}]".format(name, lo, hi))
        return candidates[0]

    def _factor_over_tower(self, name, own, num, lo, hi):
        """The factor of `num`, irreducible over this tower, with the root in
        `[lo, hi]`.

        The norm of `num(X - beta)` down to the transcendental generators is
        factored over the rationals; once the norm is squarefree, the gcd over
        the tower of `num` with each factor (shifted back by `beta`) is an
        irreducible factor of `num`.
        """
        if _sympy.degree(num, own) == 1:
            return num
        gens = [self._symbols[g.name] for g in self._alg]
        for s in range(NORM_SHIFTS):
            shift = _sympy.Add(*[s ** (i + 1) * g for i, g in enumerate(gens)])
            norm = _sympy.expand(num.subs(own, own - shift))
            for spec in reversed(self._alg):
                sym = self._symbols[spec.name]
                if sym in norm.free_symbols:
                    norm = _sympy.resultant(norm, spec.poly, sym)
                else:
                    norm = norm ** _sympy.degree(spec.poly, sym)
            norm = _sympy.expand(norm)
            if _sympy.degree(_sympy.gcd(norm, _sympy.diff(norm, own)), own) == 0:
                break
        else:
            raise BadIsolation("Could not factor the polynomial for '{}' over the tower".format(name))

        beta = self.element(shift)
        coeffs = self._poly_coefficients(own, num)
        others = sorted(norm.free_symbols - {own}, key=str)
        _, factors = _sympy.factor_list(norm, own, *others)
        candidates = []
        for factor, _ in factors:
            if own not in factor.free_symbols:
                continue
            shifted = _poly_shift(self, self._poly_coefficients(own, factor), beta)
            common = _poly_gcd(coeffs, shifted)
            if len(common) < 2:
                continue
            a = self._evaluate_univariate(common, lo).sign()
            b = self._evaluate_univariate(common, hi).sign()
            if a * b < 0:
                candidates.append(common)
        if len(candidates) != 1:
            raise BadIsolation("Could not single out the factor of the polynomial for '{}' "
                "with a root on [{}, {}]".format(name, lo, hi))
        lead = candidates[0][0]
        degree = len(candidates[0]) - 1
        expr = _sympy.Add(*[(c / lead).as_expr() * own ** (degree - i) for i, c in enumerate(candidates[0])])
        factor, _ = _sympy.fraction(_sympy.together(expr))
        if degree < _sympy.degree(num, own):
            _logger.debug("Polynomial for %s factors over the tower; keeping %s", name, factor)
        return _sympy.expand(factor)

    def _derivative_excludes_zero(self, coeffs, interval):
        """Certify that the derivative of the polynomial has no root in
        `interval`, by interval evaluation on ever finer subdivisions."""
        n = len(coeffs) - 1
        dcoeffs = [c * (n - i) for i, c in enumerate(coeffs[:-1])]
        for level in range(self._budget + 1):
            enclosures = [c.interval(level) for c in dcoeffs]
            if any(e is None for e in enclosures):
                continue
            pieces = 2 ** min(level, 8)
            step = interval.width / pieces
            ok = True
            for k in range(pieces):
                x = Interval(interval.lo + k * step, interval.lo + (k + 1) * step)
                value = Interval(0)
                for e in enclosures:
                    value = value * x + e
                if value.contains_zero():
                    ok = False
                    break
            if ok:
                return True
        return False

    #####
    # Linear algebra over the rational function field
    #####

    def _monomial(self, monom):
        return self._ring.from_dict({monom: self._K.one})

    def _reduce(self, poly):
        return poly.rem(self._rules) if self._rules else poly

    def _multiplication_matrix(self, poly):
        K = self._K
        index = {m: i for i, m in enumerate(self._basis)}
        size = len(self._basis)
        rows = [[K.zero] * size for _ in range(size)]
        for col, monom in enumerate(self._basis):
            product = self._reduce(poly * self._monomial(monom))
            for m, c in product.items():
                rows[index[m]][col] = c
        return _DomainMatrix(rows, (size, size), K)

    def _inverse_poly(self, poly):
        if not poly:
            raise DivisionByZero("Division by zero")
        if poly.is_ground:
            return self._ring.ground_new(self._K.one / poly.LC)
        matrix = self._multiplication_matrix(poly)
        size = len(self._basis)
        if matrix.rank() < size:
            raise DivisionByZero("Element is a zero divisor; a minimal polynomial is reducible")
        K = self._K
        rhs = _DomainMatrix([[K.one]] + [[K.zero] for _ in range(size - 1)], (size, 1), K)
        solution = matrix.lu_solve(rhs).to_list()
        return self._ring.from_dict({m: solution[i][0] for i, m in enumerate(self._basis)})

    #####
    # Elements
    #####

    def _wrap(self, poly):
        return FieldElement(self, poly)

    @property
    def zero(self):
        return self._wrap(self._ring.zero)

    @property
    def one(self):
        return self._wrap(self._ring.one)

    def rational(self, value):
        """The element for a rational number."""
        q = to_fraction(value)
        return self._wrap(self._ring.ground_new(self._K.convert(_sympy.Rational(q.numerator, q.denominator))))

    def gen(self, name):
        """The element for the generator `name`."""
        if name not in self._symbols:
            raise KeyError("No generator '{}'".format(name))
        return self.element(self._symbols[name])

    def element(self, value):
        """Build an element from a :class:`FieldElement` of this tower or one it
        extends, a rational number, text, or a sympy expression in the
        generator names.
        """
        if isinstance(value, FieldElement):
            return coerce(value, self)
        if isinstance(value, (int, Fraction)) and not isinstance(value, bool):
            return self.rational(value)
        if isinstance(value, str):
            try:
                return self.rational(to_fraction(value))
            except (ValueError, TypeError):
                pass
        expr = parse_rational_expression(value, self._symbols)
        if expr.is_Rational:
            return self.rational(expr)
        num, den = _sympy.fraction(_sympy.together(expr))
        try:
            num = self._reduce(self._ring.from_expr(_sympy.expand(num)))
            den = self._reduce(self._ring.from_expr(_sympy.expand(den)))
        except ValueError as ex:
            raise ValueError("Cannot build an element from {!r}: {}".format(value, ex)) from ex
        if not den:
            raise DivisionByZero("Denominator of {!r} is zero".format(value))
        return self._wrap(self._reduce(num * self._inverse_poly(den)))

    #####
    # Interval evaluation
    #####

    def _algebraic_interval(self, index, level):
        spec = self._alg[index]
        position = self._generators.index(spec)
        key = ("A", self._generators[:position + 1], level)
        if key in _INTERVAL_CACHE:
            return _INTERVAL_CACHE[key]
        if level == 0:
            interval = spec.isolating
        else:
            previous = self._algebraic_interval(index, level - 1)
            if previous.width == 0:
                interval = previous
            else:
                base = self.prefix(position)
                own = _sympy.Symbol(spec.name)
                coeffs = base._coefficients_for(spec, own)
                s_lo = base._evaluate_univariate(coeffs, spec.isolating.lo).sign()
                m = previous.midpoint
                s_mid = base._evaluate_univariate(coeffs, m).sign()
                if s_mid == 0:
                    interval = Interval(m)
                elif s_mid == s_lo:
                    interval = Interval(m, previous.hi)
                else:
                    interval = Interval(previous.lo, m)
        _INTERVAL_CACHE[key] = interval
        return interval

    def _coefficients_for(self, spec, own):
        if spec.name not in self._coefficient_cache:
            self._coefficient_cache[spec.name] = self._poly_coefficients(own, spec.poly)
        return self._coefficient_cache[spec.name]

    def box(self, level):
        """Enclosures of every generator at refinement `level`, in generator
        order."""
        out = []
        alg_index = 0
        for g in self._generators:
            if isinstance(g, Transcendental):
                out.append(refine_witness(g, level))
            else:
                out.append(self._algebraic_interval(alg_index, level))
                alg_index += 1
        return out

    #####
    # Transcendence degree
    #####

    def _coefficient_derivative(self, poly, t_index):
        tgen = self._K.gens[t_index]
        return self._ring.from_dict({m: c.diff(tgen) for m, c in poly.items()})

    def _alg_derivations(self):
        """For each transcendental t, the derivatives d(r)/dt of the algebraic
        generators, by implicit differentiation of the minimal polynomials."""
        if self._derivations is not None:
            return self._derivations
        derivations = []
        for t_index in range(len(self._trans)):
            values = []
            for index, rule in enumerate(self._rules):
                gen = self._ring.gens[self._slot(index)]
                total = self._coefficient_derivative(rule, t_index)
                for earlier in range(index):
                    egen = self._ring.gens[self._slot(earlier)]
                    total = total + rule.diff(egen) * values[earlier]
                total = self._reduce(total)
                partial = self._reduce(rule.diff(gen))
                values.append(self._reduce(-total * self._inverse_poly(partial)))
            derivations.append(values)
        self._derivations = derivations
        return derivations

    def derivative(self, element, t_name):
        """Partial derivative of an element with respect to a transcendental
        generator."""
        element = coerce(element, self)
        t_index = self.transcendental_names.index(t_name)
        return self._wrap(self._derivative_poly(element.poly, t_index))

    def _derivative_poly(self, poly, t_index):
        out = self._coefficient_derivative(poly, t_index)
        derivations = self._alg_derivations()[t_index]
        for index in range(len(self._alg)):
            gen = self._ring.gens[self._slot(index)]
            out = out + poly.diff(gen) * derivations[index]
        return self._reduce(out)

    def trdeg(self, elements):
        """Transcendence degree over the rationals of the field generated by
        `elements`.  See :func:`trdeg`."""
        elements = [coerce(e, self) for e in elements]
        if not elements or not self._trans:
            return 0
        m, n, size = len(elements), len(self._trans), len(self._basis)
        K = self._K
        if size == 1:
            rows = []
            for e in elements:
                row = []
                for t_index in range(n):
                    d = self._derivative_poly(e.poly, t_index)
                    row.append(d.LC if d else K.zero)
                rows.append(row)
            return _DomainMatrix(rows, (m, n), K).rank()
        rows = [[K.zero] * (n * size) for _ in range(m * size)]
        for i, e in enumerate(elements):
            for t_index in range(n):
                d = self._derivative_poly(e.poly, t_index)
                block = self._multiplication_matrix(d).to_list()
                for r in range(size):
                    for c in range(size):
                        rows[i * size + r][t_index * size + c] = block[r][c]
        rank = _DomainMatrix(rows, (m * size, n * size), K).rank()
        if rank % size != 0:
            raise AssertionError("Jacobian block rank {} not a multiple of the degree {}".format(rank, size))
        return rank // size


def extend_tower(tower, spec):
    """Return a new tower extending `tower` by the generator `spec`.  Elements
    of the old tower remain valid, and mix freely with elements of the new one.

    :raises DuplicateName: if the name is in use.
    :raises BadIsolation: if the isolating interval does not certify exactly
      one simple root.
    :raises RootAlreadyPresent: if the root is already an algebraic generator.
    """
    return tower.extend(spec)


def coerce(element, tower):
    """Lift `element` into `tower`, which must be (an extension of) the
    element's own tower."""
    if element.tower is tower or element.tower == tower:
        if element.tower is tower:
            return element
        return FieldElement(tower, element.poly.set_ring(tower._ring))
    if not tower.is_extension_of(element.tower):
        raise TowerMismatch("Element of {!r} is not in {!r}".format(element.tower, tower))
    return tower.element(element.as_expr())


def trdeg(elements):
    """Transcendence degree of a collection of elements over the rationals;
    the rank of their Jacobian with respect to the transcendental generators.

    :raises TowerMismatch: if the elements do not share a tower (or a chain
      of extensions).
    """
    elements = list(elements)
    if not elements:
        return 0
    tower = elements[0].tower
    for e in elements[1:]:
        if e.tower.is_extension_of(tower):
            tower = e.tower
        elif not tower.is_extension_of(e.tower):
            raise TowerMismatch("Elements from unrelated towers")
    return tower.trdeg(elements)


class FieldElement():
    """An element of a :class:`FieldTower`.  Immutable; supports `+`, `-`,
    `*`, `/`, integer powers and comparisons.  Rational numbers mix freely.
    """
    __slots__ = ("_tower", "_poly", "_terms", "_sign", "_hash")

    def __init__(self, tower, poly):
        self._tower = tower
        self._poly = poly
        self._terms = None
        self._sign = None
        self._hash = None

    @property
    def tower(self):
        return self._tower

    @property
    def poly(self):
        """The normal form, a polynomial in the algebraic generators over the
        rational function field."""
        return self._poly

    def _unify(self, other):
        if isinstance(other, FieldElement):
            if other._tower is self._tower:
                return self, other
            if self._tower.is_extension_of(other._tower):
                return self, coerce(other, self._tower)
            if other._tower.is_extension_of(self._tower):
                return coerce(self, other._tower), other
            raise TowerMismatch("Elements belong to different towers")
        try:
            return self, self._tower.rational(other)
        except (TypeError, ValueError):
            return None, None

    def __add__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return FieldElement(a._tower, a._poly + b._poly)

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self._tower, -self._poly)

    def __sub__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return FieldElement(a._tower, a._poly - b._poly)

    def __rsub__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return FieldElement(a._tower, b._poly - a._poly)

    def __mul__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return FieldElement(a._tower, a._tower._reduce(a._poly * b._poly))

    __rmul__ = __mul__

    def inverse(self):
        if not self._poly:
            raise DivisionByZero("Division by zero")
        return FieldElement(self._tower, self._tower._inverse_poly(self._poly))

    def __truediv__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return a * b.inverse()

    def __rtruediv__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return b * a.inverse()

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result, base = self._tower.one, self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    @property
    def is_zero(self):
        return not self._poly

    def is_rational(self):
        if not self._poly:
            return True
        if not self._poly.is_ground:
            return False
        c = self._poly.LC
        if self._tower._K == _sympy.QQ:
            return True
        return c.numer.is_ground and c.denom.is_ground

    def rational_value(self):
        """The value as a :class:`Fraction`; `ValueError` if not rational."""
        if not self.is_rational():
            raise ValueError("{} is not rational".format(self))
        if not self._poly:
            return Fraction(0)
        return to_fraction(self.as_expr())

    def as_expr(self):
        """The value as a sympy expression in the generator names."""
        return self._poly.as_expr()

    def __str__(self):
        return _sympy.sstr(self.as_expr())

    def __repr__(self):
        return "FieldElement({})".format(self)

    def __eq__(self, other):
        a, b = self._unify(other)
        if a is None:
            return NotImplemented
        return a._poly == b._poly

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.as_expr())
        return self._hash

    def _polynomial_terms(self):
        if self._terms is None:
            num, den = _sympy.fraction(_sympy.together(self.as_expr()))
            gens = self._tower._eval_symbols
            def terms(expr):
                if not gens:
                    return [((), to_fraction(expr))]
                poly = _sympy.Poly(_sympy.expand(expr), *gens, domain=_sympy.QQ)
                return [(m, to_fraction(c)) for m, c in poly.terms()]
            self._terms = (terms(num), terms(den))
        return self._terms

    def interval(self, level):
        """An enclosure of the value at refinement `level`, or `None` if the
        enclosure of the denominator still contains zero."""
        num, den = self._polynomial_terms()
        box = self._tower.box(level)
        d = _evaluate_terms(den, box)
        if d.contains_zero():
            return None
        return _evaluate_terms(num, box) / d

    def enclosure(self, max_width=None):
        """The first enclosure (by refinement level) which is defined and, if
        given, no wider than `max_width`."""
        for level in range(self._tower.precision_budget + 1):
            iv = self.interval(level)
            if iv is not None and (max_width is None or iv.width <= max_width):
                return iv
        raise PrecisionExhausted("No enclosure of {} within the precision budget".format(self))

    def sign(self):
        """-1, 0 or +1.  Zero is decided symbolically; otherwise the value is
        enclosed at increasing refinement levels until zero is excluded.

        :raises PrecisionExhausted: if the budget runs out.
        """
        if self._sign is not None:
            return self._sign[0]
        if not self._poly:
            self._sign = (0, None)
            return 0
        num, den = self._polynomial_terms()
        for level in range(self._tower.precision_budget + 1):
            box = self._tower.box(level)
            d = _evaluate_terms(den, box).sign()
            if not d:
                continue
            n = _evaluate_terms(num, box).sign()
            if not n:
                continue
            self._sign = (n * d, level)
            if level > 8:
                _logger.debug("Sign of %s decided at refinement level %s", self, level)
            return n * d
        raise PrecisionExhausted("Could not decide the sign of {} within {} refinements".format(
            self, self._tower.precision_budget))

    @property
    def sign_level(self):
        """The refinement level at which the sign was certified (after
        :meth:`sign` has been called); `None` for zero."""
        if self._sign is None:
            self.sign()
        return self._sign[1]

    def _compare(self, other):
        return (self - other).sign()

    def __lt__(self, other):
        return self._compare(other) < 0

    def __le__(self, other):
        return self._compare(other) <= 0

    def __gt__(self, other):
        return self._compare(other) > 0

    def __ge__(self, other):
        return self._compare(other) >= 0


def arith(op, a, b=None):
    """Apply `op` (one of "add", "sub", "mul", "div", "neg") to elements.

    :raises DivisionByZero: for division by zero.
    :raises TowerMismatch: if the elements come from unrelated towers.
    """
    if op == "neg":
        return -a
    if b is None:
        raise ValueError("Operation '{}' needs two operands".format(op))
    if isinstance(a, FieldElement) and isinstance(b, FieldElement):
        if not (a.tower.is_extension_of(b.tower) or b.tower.is_extension_of(a.tower)):
            raise TowerMismatch("Elements belong to different towers")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError("Unknown operation '{}'".format(op))


#####
# Univariate polynomials over a tower, as coefficient lists (highest first)
#####

def _trim(coeffs):
    for i, c in enumerate(coeffs):
        if not c.is_zero:
            return list(coeffs[i:])
    return []

def _poly_rem(a, b):
    a, b = _trim(a), _trim(b)
    inverse = b[0].inverse()
    while len(a) >= len(b):
        q = a[0] * inverse
        a = _trim([c - q * b[i] if i < len(b) else c for i, c in enumerate(a)][1:])
    return a

def _poly_gcd(a, b):
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _poly_rem(a, b)
    return a

def _poly_shift(tower, coeffs, beta):
    """Coefficients of `p(X + beta)` from those of `p(X)`."""
    zero = tower.zero
    out = []
    for c in coeffs:
        if out:
            out = [x + beta * y for x, y in zip(out + [zero], [zero] + out)]
            out[-1] = out[-1] + c
        else:
            out = [c]
    return out


#####
# Real roots of polynomials with coefficients in the rational function field
#####

def _sturm_sequence(tower, expr, sym):
    poly = _sympy.Poly(_sympy.expand(expr), sym, domain=tower._K)
    return [tower._poly_coefficients(sym, p.as_expr()) if p.degree() > 0
        else [tower.element(p.as_expr())] for p in poly.sturm()]

def _variations(tower, sequence, point):
    signs = []
    for coeffs in sequence:
        if point is None or point == "inf" or point == "-inf":
            lead = coeffs[0].sign()
            degree = len(coeffs) - 1
            s = lead if (point != "-inf" or degree % 2 == 0) else -lead
        else:
            s = tower._evaluate_univariate(coeffs, point).sign()
        if s != 0:
            signs.append(s)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)

def count_real_roots(tower, expr, sym, lo, hi):
    """Number of distinct real roots in `(lo, hi]` of a polynomial in `sym`
    whose coefficients are rational functions of the tower's transcendental
    generators, by Sturm's theorem."""
    sequence = _sturm_sequence(tower, expr, sym)
    return _variations(tower, sequence, to_fraction(lo)) - _variations(tower, sequence, to_fraction(hi))

def root_bound(tower, expr, sym):
    """A rational bound B with every real root inside (-B, B)."""
    coeffs = tower._poly_coefficients(sym, _sympy.expand(expr))
    lead = coeffs[0]
    bound = Fraction(1)
    for c in coeffs[1:]:
        iv = (c / lead).enclosure()
        bound = max(bound, abs(iv.lo), abs(iv.hi))
    return bound + 1

def isolate_root(tower, expr, sym, index):
    """Isolating interval of the `index`-th real root (counting from the
    smallest, starting at 0) of a polynomial in `sym` with coefficients in the
    tower's rational function field.

    :return: :class:`Interval` whose endpoints are not roots.
    """
    sequence = _sturm_sequence(tower, expr, sym)
    coeffs = sequence[0]
    bound = root_bound(tower, expr, sym)
    lo, hi = -bound, bound
    total = _variations(tower, sequence, lo) - _variations(tower, sequence, hi)
    if not 0 <= index < total:
        raise ValueError("Root index {} out of range; polynomial has {} real roots".format(index, total))
    for _ in range(4 * tower.precision_budget):
        count = _variations(tower, sequence, lo) - _variations(tower, sequence, hi)
        if count == 1:
            return Interval(lo, hi)
        mid = (lo + hi) / 2
        shift = (hi - lo) / 7
        while tower._evaluate_univariate(coeffs, mid).is_zero:
            mid += shift
            shift /= 3
        left = _variations(tower, sequence, lo) - _variations(tower, sequence, mid)
        if index < left:
            hi = mid
        else:
            lo = mid
            index -= left
    raise PrecisionExhausted("Could not isolate root {} of {}".format(index, expr))

"""
manifest
~~~~~~~~

A small declaration language for towers, structures and builder tasks.

Statements end with `;` and `#` starts a comment running to the end of the
line::

    option precision = 64;
    trans t1 witness [3, 4];
    trans t2 witness [1/2, 3/4] seed "left";
    alg r poly "x^2 - t1" in [1, 2];
    point a = "t1 + 1" colour p;
    point b = "r";
    task realize over=a,b new=u cut=a,b colour=p;
    task densify lo=a hi=b n=2 colour=p;
    task scenario kind="dp-rank" k=2 len=2 window=2;

Rationals are exact: integers, decimals, or `n/d`.  Expressions (in quotes)
use `+ - * /`, integer powers (`^` or `**`), parentheses, rationals and
generator names; an algebraic generator's polynomial may also use its own
name or `x`.  Parsing never raises anything but :class:`ManifestError`, and
every error carries a line and column.
"""

import fractions as _fractions
import re as _re
from dataclasses import dataclass as _dataclass, field as _dfield
from typing import Optional as _Optional

from . import field as _field
from . import structure as _structure

_Fraction = _fractions.Fraction

MAX_EXPONENT = 64
MAX_NESTING = 100


class ManifestError(ValueError):
    """Base of manifest errors, positioned at `line` and `column` (from 1)."""
    def __init__(self, message, line, column):
        super().__init__("line {}, column {}: {}".format(line, column, message))
        self.message = message
        self.line = line
        self.column = column

    def to_dict(self):
        return {"error": type(self).__name__, "message": self.message,
            "line": self.line, "column": self.column}

class ManifestSyntaxError(ManifestError):
    pass

class UnknownIdentifier(ManifestError):
    def __init__(self, name, line, column):
        super().__init__("Unknown identifier '{}'".format(name), line, column)
        self.name = name

class ManifestInvariantViolation(ManifestError):
    """A declaration breaks the rule named `rule`."""
    def __init__(self, rule, message, line, column):
        super().__init__("{} ({})".format(message, rule), line, column)
        self.rule = rule

    def to_dict(self):
        out = super().to_dict()
        out["rule"] = self.rule
        return out


@_dataclass
class GeneratorDecl():
    kind: str
    name: str
    interval: tuple
    poly: _Optional[str] = None
    seed: _Optional[str] = None
    line: int = _dfield(default=0, compare=False)
    column: int = _dfield(default=0, compare=False)

@_dataclass
class PointDecl():
    name: str
    expr: str
    coloured: bool = False
    line: int = _dfield(default=0, compare=False)
    column: int = _dfield(default=0, compare=False)

@_dataclass
class TaskDecl():
    """A task; `params` is a tuple of `(key, values)`, each value a pair
    `(kind, text)` with kind "ident", "number" or "string"."""
    kind: str
    params: tuple
    line: int = _dfield(default=0, compare=False)
    column: int = _dfield(default=0, compare=False)

    def get(self, key, default=None):
        for k, values in self.params:
            if k == key:
                return values
        return default

    def text(self, key, default=None):
        values = self.get(key)
        if values is None:
            return default
        if len(values) != 1:
            raise ManifestInvariantViolation("task-parameter",
                "Parameter '{}' takes one value".format(key), self.line, self.column)
        return values[0][1]

    def texts(self, key):
        return [v[1] for v in self.get(key, ())]

    def number(self, key, default=None):
        text = self.text(key)
        if text is None:
            return default
        try:
            return _parse_rational(text)
        except (ValueError, ZeroDivisionError):
            raise ManifestInvariantViolation("task-parameter",
                "Parameter '{}' must be a number, not '{}'".format(key, text), self.line, self.column)

@_dataclass
class OptionDecl():
    key: str
    value: tuple
    line: int = _dfield(default=0, compare=False)
    column: int = _dfield(default=0, compare=False)


@_dataclass
class Manifest():
    generators: list = _dfield(default_factory=list)
    points: list = _dfield(default_factory=list)
    tasks: list = _dfield(default_factory=list)
    options: list = _dfield(default_factory=list)

    def option(self, key, default=None):
        """Value of the last `option key = ...;`, numbers converted to `int`
        (or `Fraction`)."""
        found = default
        for opt in self.options:
            if opt.key == key:
                kind, text = opt.value
                if kind == "number":
                    q = _parse_rational(text)
                    found = int(q) if q.denominator == 1 else q
                else:
                    found = text
        return found

    def tower(self, precision_budget=None):
        """Build the declared :class:`FieldTower`."""
        if precision_budget is None:
            precision_budget = self.option("precision", _field.DEFAULT_PRECISION_BUDGET)
        tower = _field.FieldTower((), precision_budget)
        for decl in self.generators:
            if decl.kind == "trans":
                spec = _field.Transcendental(decl.name, decl.interval, decl.seed)
            else:
                spec = _field.Algebraic(decl.name, decl.poly, decl.interval)
            try:
                tower = tower.extend(spec)
            except (ValueError, _field.PrecisionExhausted) as ex:
                raise ManifestInvariantViolation("generator", str(ex), decl.line, decl.column) from ex
        return tower

    def structure(self, tower=None, size_bound=None):
        """Build the declared :class:`ColouredStructure`."""
        if tower is None:
            tower = self.tower()
        if size_bound is None:
            size_bound = self.option("size_bound", _structure.DEFAULT_SIZE_BOUND)
        values = []
        for p in self.points:
            try:
                values.append((p.name, tower.element(p.expr)))
            except (ArithmeticError, ValueError) as ex:
                raise ManifestInvariantViolation("point-value", str(ex), p.line, p.column) from ex
        try:
            return _structure.ColouredStructure(tower, values,
                [p.name for p in self.points if p.coloured], size_bound)
        except _structure.InvariantViolation as ex:
            decl = next((p for p in reversed(self.points) if p.name in ex.names), None)
            line, column = (decl.line, decl.column) if decl is not None else (1, 1)
            raise ManifestInvariantViolation(ex.rule, str(ex), line, column) from ex
        except _field.PrecisionExhausted as ex:
            raise ManifestInvariantViolation("distinct-values", str(ex), 1, 1) from ex


_TOKEN_SPEC = [
    ("newline", r"\n"),
    ("space", r"[ \t\r\f\v]+"),
    ("comment", r"#[^\n]*"),
    ("string", r'"(?:[^"\\\n]|\\.)*"'),
    ("number", r"-?\d+(?:\.\d+)?(?:/\d+)?"),
    ("ident", r"[A-Za-z_][A-Za-z0-9_]*"),
    ("punct", r"[\[\],;=]"),
    ("dash", r"-"),
]
_TOKEN_RE = _re.compile("|".join("(?P<{}>{})".format(n, p) for n, p in _TOKEN_SPEC))

_KEYWORDS = {"trans", "alg", "point", "task", "option", "witness", "seed", "poly", "in", "colour"}


class _Token():
    __slots__ = ("kind", "text", "line", "column")

    def __init__(self, kind, text, line, column):
        self.kind = kind
        self.text = text
        self.line = line
        self.column = column

    def __repr__(self):
        return "{}({!r})@{}:{}".format(self.kind, self.text, self.line, self.column)


def _tokenize(text):
    tokens = []
    line, line_start, pos = 1, 0, 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        column = pos - line_start + 1
        if match is None or match.lastgroup == "dash":
            raise ManifestSyntaxError("Unexpected character {!r}".format(text[pos]), line, column)
        kind = match.lastgroup
        if kind == "newline":
            line += 1
            line_start = match.end()
        elif kind not in ("space", "comment"):
            tokens.append(_Token(kind, match.group(), line, column))
        pos = match.end()
    tokens.append(_Token("end", "", line, pos - line_start + 1))
    return tokens


def _parse_rational(text):
    """Exact rational from `n`, `-n`, `n.m` or `n/d` text."""
    if "/" in text:
        num, den = text.split("/")
        return _Fraction(_parse_rational(num)) / int(den)
    return _Fraction(text)

def _unquote(text):
    return _re.sub(r"\\(.)", r"\1", text[1:-1])

def _quote(text):
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


_EXPR_TOKEN_RE = _re.compile(r"\s*(?:(?P<number>\d+(?:\.\d+)?)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>\*\*|[-+*/^()]))")


class _ExpressionChecker():
    """Recursive descent over an expression string, checking it is a
    rational function of known names with small integer exponents."""
    def __init__(self, text, known, line, column):
        self.text = text
        self.known = known
        self.line = line
        self.column = column
        self.tokens = []
        pos = 0
        while text[pos:].strip():
            match = _EXPR_TOKEN_RE.match(text, pos)
            if match is None:
                offset = len(text) - len(text[pos:].lstrip())
                raise self.error("Unexpected character {!r} in expression".format(text[offset]), offset)
            kind = match.lastgroup
            start = match.start(kind)
            self.tokens.append((kind, match.group(kind), start))
            pos = match.end()
        self.tokens.append(("end", "", len(text)))
        self.index = 0
        self.depth = 0
        self.names = set()

    def error(self, message, offset):
        # +1 for the opening quote
        return ManifestSyntaxError(message, self.line, self.column + 1 + offset)

    def peek(self):
        return self.tokens[self.index]

    def take(self):
        token = self.tokens[self.index]
        self.index += 1
        return token

    def check(self):
        if self.peek()[0] == "end":
            raise self.error("Empty expression", 0)
        self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise self.error("Unexpected {!r} in expression".format(text), offset)
        return self.names

    def expr(self):
        self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            self.take()
            self.term()

    def term(self):
        self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            self.take()
            self.unary()

    def unary(self):
        if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
            self.take()
            self.depth += 1
            if self.depth > MAX_NESTING:
                raise self.error("Expression nested too deeply", self.peek()[2])
            self.unary()
            self.depth -= 1
            return
        self.power()

    def power(self):
        self.atom()
        if self.peek()[0] == "op" and self.peek()[1] in ("^", "**"):
            self.take()
            sign = 1
            if self.peek()[0] == "op" and self.peek()[1] in ("+", "-"):
                sign = -1 if self.take()[1] == "-" else 1
            kind, text, offset = self.take()
            if kind != "number" or not text.isdigit():
                raise self.error("Exponents must be integers", offset)
            if int(text) > MAX_EXPONENT:
                raise self.error("Exponent {} exceeds {}".format(sign * int(text), MAX_EXPONENT), offset)

    def atom(self):
        kind, text, offset = self.take()
        if kind == "number":
            return
        if kind == "ident":
            if text not in self.known:
                raise UnknownIdentifier(text, self.line, self.column + 1 + offset)
            self.names.add(text)
            return
        if kind == "op" and text == "(":
            self.depth += 1
            if self.depth > MAX_NESTING:
                raise self.error("Expression nested too deeply", offset)
            self.expr()
            self.depth -= 1
            kind, text, offset = self.take()
            if text != ")":
                raise self.error("Expected ')'", offset)
            return
        raise self.error("Unexpected {!r} in expression".format(text or "end of expression"), offset)


def check_expression(text, known, line=1, column=1):
    """Check an expression; return the set of names it uses.

    :param known: Set of names which may appear.
    :raises ManifestSyntaxError: on a malformed expression.
    :raises UnknownIdentifier: on an unknown name.
    """
    return _ExpressionChecker(text, known, line, column).check()


class _Parser():
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.index = 0
        self.manifest = Manifest()
        self.generator_names = set()
        self.point_names = set()

    def peek(self):
        return self.tokens[self.index]

    def take(self):
        token = self.tokens[self.index]
        if token.kind != "end":
            self.index += 1
        return token

    def fail(self, token, expected):
        found = "end of input" if token.kind == "end" else repr(token.text)
        return ManifestSyntaxError("Expected {}, found {}".format(expected, found), token.line, token.column)

    def expect(self, kind, text=None):
        token = self.take()
        if token.kind != kind or (text is not None and token.text != text):
            raise self.fail(token, repr(text) if text is not None else kind)
        return token

    def identifier(self):
        token = self.take()
        if token.kind != "ident" or token.text in _KEYWORDS:
            raise self.fail(token, "an identifier")
        return token

    def rational(self):
        token = self.expect("number")
        try:
            return _parse_rational(token.text)
        except ZeroDivisionError:
            raise ManifestSyntaxError("Zero denominator", token.line, token.column)

    def interval(self):
        start = self.expect("punct", "[")
        lo = self.rational()
        self.expect("punct", ",")
        hi = self.rational()
        self.expect("punct", "]")
        if not lo < hi:
            raise ManifestInvariantViolation("interval-order",
                "Interval [{}, {}] must have lo < hi".format(lo, hi), start.line, start.column)
        return (lo, hi)

    def parse(self):
        while self.peek().kind != "end":
            token = self.peek()
            if token.kind != "ident":
                raise self.fail(token, "a statement")
            handler = getattr(self, "statement_" + token.text, None)
            if token.text not in ("trans", "alg", "point", "task", "option") or handler is None:
                raise self.fail(token, "a statement")
            self.take()
            handler(token)
            self.expect("punct", ";")
        return self.manifest

    def new_generator(self, token, name):
        if name.text in self.generator_names:
            raise ManifestInvariantViolation("unique-names",
                "Generator '{}' declared twice".format(name.text), name.line, name.column)
        self.generator_names.add(name.text)

    def statement_trans(self, token):
        name = self.identifier()
        self.expect("ident", "witness")
        interval = self.interval()
        seed = None
        if self.peek().kind == "ident" and self.peek().text == "seed":
            self.take()
            seed = _unquote(self.expect("string").text)
        self.new_generator(token, name)
        self.manifest.generators.append(GeneratorDecl("trans", name.text, interval, None, seed,
            token.line, token.column))

    def statement_alg(self, token):
        name = self.identifier()
        self.expect("ident", "poly")
        poly = self.expect("string")
        text = _unquote(poly.text)
        known = self.generator_names | {name.text, "x"}
        used = check_expression(text, known, poly.line, poly.column)
        if name.text not in used and ("x" not in used or "x" in self.generator_names):
            raise ManifestInvariantViolation("algebraic-poly",
                "Polynomial for '{}' must involve it (or x)".format(name.text), poly.line, poly.column)
        self.expect("ident", "in")
        interval = self.interval()
        self.new_generator(token, name)
        self.manifest.generators.append(GeneratorDecl("alg", name.text, interval, text, None,
            token.line, token.column))

    def statement_point(self, token):
        name = self.identifier()
        self.expect("punct", "=")
        expr = self.expect("string")
        text = _unquote(expr.text)
        used = check_expression(text, self.generator_names, expr.line, expr.column)
        coloured = False
        if self.peek().kind == "ident" and self.peek().text == "colour":
            self.take()
            self.expect("ident", "p")
            coloured = True
        if name.text in self.point_names:
            raise ManifestInvariantViolation("unique-names",
                "Point '{}' declared twice".format(name.text), name.line, name.column)
        if coloured and not used:
            raise ManifestInvariantViolation("rational-uncoloured",
                "Point '{}' is a rational constant and cannot be coloured".format(name.text), name.line, name.column)
        self.point_names.add(name.text)
        self.manifest.points.append(PointDecl(name.text, text, coloured, token.line, token.column))

    def value(self):
        token = self.take()
        if token.kind == "ident":
            return ("ident", token.text)
        if token.kind == "number":
            try:
                _parse_rational(token.text)
            except ZeroDivisionError:
                raise ManifestSyntaxError("Zero denominator", token.line, token.column)
            return ("number", token.text)
        if token.kind == "string":
            return ("string", _unquote(token.text))
        raise self.fail(token, "a value")

    def values(self):
        out = [self.value()]
        while self.peek().kind == "punct" and self.peek().text == ",":
            self.take()
            out.append(self.value())
        return tuple(out)

    def statement_task(self, token):
        kind = self.identifier()
        params = []
        keys = set()
        while self.peek().kind == "ident":
            key = self.take()
            if key.text in keys:
                raise ManifestInvariantViolation("task-parameter",
                    "Parameter '{}' given twice".format(key.text), key.line, key.column)
            keys.add(key.text)
            self.expect("punct", "=")
            params.append((key.text, self.values()))
        self.manifest.tasks.append(TaskDecl(kind.text, tuple(params), token.line, token.column))

    def statement_option(self, token):
        key = self.expect("ident")
        self.expect("punct", "=")
        value = self.value()
        self.manifest.options.append(OptionDecl(key.text, value, token.line, token.column))


def parse_manifest(text):
    """Parse manifest text (or UTF-8 bytes) into a :class:`Manifest`.

    :raises ManifestError: with line and column, on any invalid input.
    """
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as ex:
            raise ManifestSyntaxError("Input is not UTF-8", 1, ex.start + 1)
    if not isinstance(text, str):
        raise TypeError("Expected text, not {!r}".format(type(text)))
    return _Parser(text).parse()


def _format_value(value):
    kind, text = value
    return _quote(text) if kind == "string" else text

def _format_rational(q):
    return str(q)

def pretty_print(manifest):
    """Canonical text for a manifest; parsing it gives an equal manifest."""
    lines = []
    for opt in manifest.options:
        lines.append("option {} = {};".format(opt.key, _format_value(opt.value)))
    for g in manifest.generators:
        lo, hi = (_format_rational(q) for q in g.interval)
        if g.kind == "trans":
            seed = "" if g.seed is None else " seed {}".format(_quote(g.seed))
            lines.append("trans {} witness [{}, {}]{};".format(g.name, lo, hi, seed))
        else:
            lines.append("alg {} poly {} in [{}, {}];".format(g.name, _quote(g.poly), lo, hi))
    for p in manifest.points:
        lines.append("point {} = {}{};".format(p.name, _quote(p.expr), " colour p" if p.coloured else ""))
    for t in manifest.tasks:
        params = " ".join("{}={}".format(k, ",".join(_format_value(v) for v in values)) for k, values in t.params)
        lines.append("task {}{};".format(t.kind, " " + params if params else ""))
    return "\n".join(lines) + ("\n" if lines else "")

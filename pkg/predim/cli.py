"""
cli
~~~

Command line driver::

    predim <command> [manifest ...] [options]

Each run prints (or writes, with `--json`) a report: a JSON object with keys
`command`, `inputs`, `options`, `result`, `certificates`, `notes`, `seed`,
`version`, `exit_status` and `timestamp`.  Reports for the same manifests,
command, options and seed are identical apart from `timestamp`.

Exit status is 0 on a verified positive answer, 1 on a verified negative one
(a class violation, a non-closed set, unequal types, a failed audit round...)
and 2 on any error.
"""

import argparse as _argparse
import concurrent.futures as _futures
import datetime as _datetime
import hashlib as _hashlib
import logging as _logging

from . import cache as _cache
from . import extension as _extension
from . import field as _field
from . import generic as _generic
from . import isomorphism as _isomorphism
from . import manifest as _manifest
from . import scenarios as _scenarios
from . import structure as _structure
from . import utils as _utils

_logger = _logging.getLogger(__name__)

COMMANDS = ("delta", "closure", "dim", "check-class", "decompose", "classify", "amalgamate", "build",
    "check-axioms", "type-eq", "audit", "scenario")

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_ERROR = 2

# Commands on one manifest; several inputs may be run side by side with --jobs
SINGLE_INPUT = frozenset(("delta", "closure", "dim", "check-class", "decompose", "classify", "build",
    "check-axioms"))

SCENARIO_KINDS = {"dp-rank": "dp-rank", "dprank": "dp-rank", "non-distal": "non-distal",
    "nondistal": "non-distal"}

# Options which change the outcome of a run, and so enter the report and the cache key
REPORTED_OPTIONS = ("set", "base", "target", "other", "params", "seed", "window", "subset_bound", "intervals",
    "rounds", "k", "len", "len_i", "len_j", "exhaustive", "kind", "no_fast")


def _version():
    from . import __version__
    return __version__


class CommandError(ValueError):
    """The command was given the wrong inputs or options."""
    pass


class TaskError(ValueError):
    """A manifest task could not be carried out."""
    def __init__(self, task, cause):
        super().__init__("Task '{}' at line {}, column {} failed: {}".format(task.kind, task.line,
            task.column, cause))
        self.task = task
        self.cause = cause

    def to_dict(self):
        out = _diagnostic(self.cause)
        out.update({"task": self.task.kind, "line": self.task.line, "column": self.task.column})
        return out


def _diagnostic(ex):
    if hasattr(ex, "to_dict"):
        return ex.to_dict()
    out = {"error": type(ex).__name__, "message": str(ex)}
    for key in ("rule", "side"):
        if hasattr(ex, key):
            out[key] = getattr(ex, key)
    for key in ("witness", "intermediate"):
        value = getattr(ex, key, None)
        if value is not None:
            out[key] = value.names if hasattr(value, "names") else value
    return out


class Outcome():
    """What a command found; turned into a report by :func:`run_command`."""
    def __init__(self, result, certificates=None, notes=(), status=EXIT_OK):
        self.result = result
        self.certificates = {} if certificates is None else certificates
        self.notes = list(notes)
        self.status = status


def _names(text):
    """Comma separated names; `None` stays `None`."""
    if text is None:
        return None
    if isinstance(text, (list, tuple)):
        return list(text)
    return [n.strip() for n in text.split(",") if n.strip()]

def _exactly(manifests, count, command):
    if len(manifests) != count:
        raise CommandError("'{}' needs {} manifest(s), given {}".format(command, count, len(manifests)))
    return manifests if count > 1 else manifests[0]

def _option(options, manifest, key, default):
    value = options.get(key)
    if value is None and manifest is not None:
        value = manifest.option(key)
    return default if value is None else value

def _seed(options, manifests):
    return int(_option(options, manifests[0] if manifests else None, "seed", 0))

def _window(options, manifest):
    return int(_option(options, manifest, "window", _scenarios.DEFAULT_WINDOW))


#####
# One function per command
#####

def _run_delta(manifests, options):
    M = _exactly(manifests, 1, "delta").structure()
    A = M.subset(_names(options.get("set")))
    result = {"set": A.names, "trdeg": M.trdeg(A), "coloured": len(A.members & M.colours)}
    base = _names(options.get("base"))
    if base is None:
        result["delta"] = M.delta(A)
    else:
        result["over"] = M.subset(base).names
        result["delta"] = M.delta_rel(A, base)
    return Outcome(result)

def _run_closure(manifests, options):
    M = _exactly(manifests, 1, "closure").structure()
    A = M.subset(_names(options.get("set")) or [])
    closed, steps = _structure.closure_tower(M, A)
    result = {"set": A.names, "closure": closed.names, "steps": [s.names for s in steps],
        "delta": M.delta(closed)}
    return Outcome(result, {"closure_closed": _structure.is_closed(M, closed)})

def _run_dim(manifests, options):
    M = _exactly(manifests, 1, "dim").structure()
    A = M.subset(_names(options.get("set")) or [])
    result = {"set": A.names, "dim": _structure.dim(M, A),
        "geometric_closure": _structure.geometric_closure(M, A).names}
    notes = []
    if _structure.in_class(M):
        basis, core = _structure.basis_and_core(M)
        result["basis"] = basis.names
        result["core"] = core.names
    else:
        notes.append("Structure is not in the class; no basis reported")
    return Outcome(result, notes=notes)

def _run_check_class(manifests, options):
    M = _exactly(manifests, 1, "check-class").structure()
    membership = _structure.check_class_membership(M, exhaustive=bool(options.get("exhaustive")),
        max_size=options.get("subset_bound"))
    result = membership.to_dict()
    result["delta_total"] = M.delta(M.names)
    return Outcome(result, status=EXIT_OK if membership.ok else EXIT_NEGATIVE)

def _run_decompose(manifests, options):
    M = _exactly(manifests, 1, "decompose").structure()
    A = _names(options.get("base")) or []
    B = _names(options.get("target"))
    try:
        chain = _extension.decompose(M, A, B)
    except _extension.NotClosed as ex:
        return Outcome({"closed": False, "witness": ex.witness.names}, status=EXIT_NEGATIVE)
    result = chain.to_dict()
    result["closed"] = True
    certificates = {"prefixes_closed": all(_structure.is_closed(M, p, chain.target) for p in chain.prefixes())}
    return Outcome(result, certificates)

def _run_classify(manifests, options):
    M = _exactly(manifests, 1, "classify").structure()
    A = _names(options.get("base")) or []
    B = _names(options.get("target"))
    try:
        kind = _extension.classify_minimal(M, A, B)
    except _extension.NotClosed as ex:
        witness = None if ex.witness is None else ex.witness.names
        return Outcome({"closed": False, "witness": witness}, status=EXIT_NEGATIVE)
    except _extension.NotMinimal as ex:
        return Outcome({"closed": True, "minimal": False, "intermediate": ex.intermediate.names},
            status=EXIT_NEGATIVE)
    return Outcome({"closed": True, "minimal": True, "kind": kind.name, "delta": kind.delta,
        "coloured": kind.coloured, "algebraic": kind.algebraic})

def _run_amalgamate(manifests, options):
    left_m, right_m = _exactly(manifests, 2, "amalgamate")
    left, right = left_m.structure(), right_m.structure()
    over = options.get("over_manifest")
    if over is None:
        base = _structure.ColouredStructure(_field.FieldTower((), left.tower.precision_budget), [])
    else:
        base = over.structure()
    try:
        amalgam = _extension.free_amalgam(base, left, right)
    except _extension.NotClosedInFactor as ex:
        return Outcome({"side": ex.side, "witness": ex.witness.names if hasattr(ex.witness, "names")
            else ex.witness}, status=EXIT_NEGATIVE)
    except _structure.InvariantViolation as ex:
        if ex.rule != "class-membership":
            raise
        return Outcome({"rule": ex.rule, "message": str(ex)}, status=EXIT_NEGATIVE)
    result = amalgam.to_dict()
    certificates = result.pop("certificates")
    return Outcome(result, certificates)


def _new_point(task, colour):
    name = task.text("new")
    if name is None:
        raise CommandError("Task 'realize' needs new=<name>")
    seed = task.text("seed")
    if task.get("poly") is not None:
        isolating = task.texts("isolating") or None
        if isolating is not None:
            isolating = tuple(_manifest._parse_rational(q) for q in isolating)
        root = task.number("root")
        return _generic.NewPoint(name, "algebraic", colour, poly=task.text("poly"),
            root=None if root is None else int(root), isolating=isolating)
    if task.get("expr") is not None:
        return _generic.NewPoint(name, "expr", colour, expr=task.text("expr"))
    witness = task.texts("witness") or None
    if witness is not None:
        witness = tuple(_manifest._parse_rational(q) for q in witness)
    cut = [None if c == "none" else c for c in task.texts("cut")] or [None, None]
    if len(cut) != 2:
        raise CommandError("Task 'realize' needs cut=<below>,<above>")
    return _generic.NewPoint(name, "transcendental", colour, cut=cut, witness=witness, seed=seed)

def _apply_task(state, task, options, scenario_reports):
    colour = task.text("colour", "none") == "p"
    if task.kind == "realize":
        over = task.texts("over")
        point = _new_point(task, colour)
        B = _generic.extension_over(state.current, over, [point],
            seed="{}:{}".format(state.rng_seed, state.stage_index))
        return _generic.realize_extension(state, over, B)
    if task.kind == "densify":
        lo, hi = task.text("lo"), task.text("hi")
        return _generic.insert_density_witnesses(state, lo, hi, int(task.number("n", 1)), colour)
    if task.kind == "scenario":
        scenario_reports.append(_scenario_from_task(task, options))
        return state
    raise CommandError("Unknown task '{}'".format(task.kind))

def build_state(manifest, options):
    """Stage 0 is the declared structure; each task then moves to the next
    stage.

    :return: Pair `(state, scenario_reports)`.
    """
    M = manifest.structure()
    state = _generic.new_state(_seed(options, [manifest]), M)
    reports = []
    for task in manifest.tasks:
        try:
            state = _apply_task(state, task, options, reports)
        except (ValueError, ArithmeticError) as ex:
            raise TaskError(task, ex) from ex
        _logger.debug("After task '%s': stage %s with %s points", task.kind, state.stage_index, len(state.current))
    return state, reports

def _run_build(manifests, options):
    state, reports = build_state(_exactly(manifests, 1, "build"), options)
    certificates = {"task_{}_{}".format(i, record.kind): record.certificates
        for i, record in enumerate(state.history)}
    certificates["class_membership"] = _structure.in_class(state.current)
    result = {"stage": state.to_dict(), "scenarios": [r.to_dict() for r in reports]}
    ok = certificates["class_membership"] and all(r.ok for r in reports)
    notes = [n for r in reports for n in r.notes]
    return Outcome(result, certificates, notes, EXIT_OK if ok else EXIT_NEGATIVE)

def _run_check_axioms(manifests, options):
    state, _ = build_state(_exactly(manifests, 1, "check-axioms"), options)
    intervals = options.get("intervals")
    if intervals is not None:
        intervals = [tuple(_names(pair.replace(":", ","))) for pair in intervals]
        if any(len(pair) != 2 for pair in intervals):
            raise CommandError("Intervals are given as lo:hi")
    report = _generic.check_axioms(state, options.get("subset_bound"), intervals)
    return Outcome(report.to_dict(), {"membership": report.membership.ok}, report.notes,
        EXIT_OK if report.ok else EXIT_NEGATIVE)

def _run_type_eq(manifests, options):
    if len(manifests) not in (1, 2):
        raise CommandError("'type-eq' needs 1 or 2 manifests, given {}".format(len(manifests)))
    M = manifests[0].structure()
    N = manifests[1].structure() if len(manifests) == 2 else None
    a, b = _names(options.get("set")), _names(options.get("other"))
    if a is None or b is None:
        raise CommandError("'type-eq' needs --set and --other")
    comparison = _isomorphism.types_equal(M, a, b, N=N, over=_names(options.get("params")) or (),
        fast=not options.get("no_fast"))
    return Outcome(comparison.to_dict(), status=EXIT_OK if comparison.equal else EXIT_NEGATIVE)

def _run_audit(manifests, options):
    left_m, right_m = _exactly(manifests, 2, "audit")
    left, _ = build_state(left_m, options)
    right, _ = build_state(right_m, options)
    report = _generic.back_and_forth_audit(left, right, int(options.get("rounds") or 2))
    return Outcome(report.to_dict(), {"rounds_certified": len(report.rounds) if report.ok
        else report.failed_round}, status=EXIT_OK if report.ok else EXIT_NEGATIVE)


def _scenario(kind, params, seed):
    kind = SCENARIO_KINDS.get(kind)
    if kind == "dp-rank":
        return _scenarios.build_dprank_witness(k=int(params.get("k") or 2), L=int(params.get("len") or 2),
            window=params["window"], seed=seed)
    if kind == "non-distal":
        return _scenarios.build_nondistal_witness(lenI=int(params.get("len_i") or 2),
            lenJ=int(params.get("len_j") or 2), window=params["window"], seed=seed)
    raise CommandError("Unknown scenario kind; expected one of {}".format(sorted(SCENARIO_KINDS)))

def _scenario_from_task(task, options):
    params = {key: task.number(key) for key in ("k", "len", "len_i", "len_j")}
    window = task.number("window")
    params["window"] = int(window) if window is not None else int(options.get("window") or _scenarios.DEFAULT_WINDOW)
    seed = task.number("seed")
    return _scenario(task.text("kind"), params, int(seed) if seed is not None else int(options.get("seed") or 0))

def _run_scenario(manifests, options):
    kind = options.get("kind")
    if kind is None:
        tasks = [t for m in manifests for t in m.tasks if t.kind == "scenario"]
        if not tasks:
            raise CommandError("'scenario' needs a kind (dp-rank or non-distal)")
        report = _scenario_from_task(tasks[0], options)
    else:
        manifest = manifests[0] if manifests else None
        params = {key: options.get(key) for key in ("k", "len", "len_i", "len_j")}
        params["window"] = _window(options, manifest)
        report = _scenario(kind, params, _seed(options, manifests))
    certificates = {name: v["holds"] for name, v in report.verdicts.items() if isinstance(v, dict) and "holds" in v}
    return Outcome(report.to_dict(), certificates, report.notes, EXIT_OK if report.ok else EXIT_NEGATIVE)


_RUNNERS = {"delta": _run_delta, "closure": _run_closure, "dim": _run_dim, "check-class": _run_check_class,
    "decompose": _run_decompose, "classify": _run_classify, "amalgamate": _run_amalgamate,
    "build": _run_build, "check-axioms": _run_check_axioms, "type-eq": _run_type_eq, "audit": _run_audit,
    "scenario": _run_scenario}


def _input_record(label, data):
    if isinstance(data, str):
        data = data.encode("utf-8")
    return {"name": label, "sha256": _hashlib.sha256(data).hexdigest()}

def _reported_options(options):
    out = {key: options[key] for key in REPORTED_OPTIONS if options.get(key) not in (None, False)}
    over = options.get("over")
    if over is not None:
        out["over"] = _input_record(*over)
    return out

def _parse_input(label, data):
    try:
        return _manifest.parse_manifest(data)
    except _manifest.ManifestError as ex:
        ex.input = label
        raise

def run_command(command, inputs, options=None):
    """Run `command` on manifests, returning `(report, exit_status)`.

    :param command: One of :data:`COMMANDS`.
    :param inputs: List of pairs `(label, text)`; text may be `str` or UTF-8
      `bytes`.
    :param options: Dictionary of options, keyed as the command line's long
      flags (with `_` for `-`).  `over` is a pair `(label, text)`.
    """
    options = {} if options is None else dict(options)
    notes, certificates, result, seed = [], {}, None, options.get("seed")
    try:
        if command not in _RUNNERS:
            raise CommandError("Unknown command '{}'".format(command))
        manifests = [_parse_input(label, data) for label, data in inputs]
        if options.get("over") is not None:
            options["over_manifest"] = _parse_input(*options["over"])
        seed = _seed(options, manifests)
        _logger.debug("Running %s on %s", command, [label for label, _ in inputs])
        outcome = _RUNNERS[command](manifests, options)
        result, certificates, notes, status = outcome.result, outcome.certificates, outcome.notes, outcome.status
    except Exception as ex:
        _logger.debug("Command %s failed: %s", command, ex)
        result = _diagnostic(ex)
        if getattr(ex, "input", None) is not None:
            result["input"] = ex.input
        status = EXIT_ERROR
    report = {"command": command, "inputs": [_input_record(label, data) for label, data in inputs],
        "options": _reported_options(options), "result": result, "certificates": certificates,
        "notes": notes, "seed": seed, "version": _version(), "exit_status": status,
        "timestamp": _datetime.datetime.now().isoformat(timespec="seconds")}
    return report, status


class ReportExecutor(_cache.Executor):
    """Runs a command for :class:`predim.cache.Cache`.  Reports of runs which
    ended in error are kept in `report` but not offered for caching."""
    def __init__(self, command, inputs, options):
        self._args = (command, inputs, options)
        self.report = None

    def fetch(self, request):
        self.report, status = run_command(*self._args)
        return self.report if status != EXIT_ERROR else None


def cached_run(command, inputs, options, store):
    """As :func:`run_command`, consulting the :class:`ConcreteCache` `store`
    first."""
    request = {"command": command, "inputs": [_input_record(label, data) for label, data in inputs],
        "options": _reported_options(options), "version": _version()}
    executor = ReportExecutor(command, inputs, options)
    report = _cache.Cache(executor, store).fetch(request)
    if report is None:
        report = executor.report
    return report, report["exit_status"]


def _make_parser():
    parser = _argparse.ArgumentParser(prog="predim",
        description="Predimension, closure and generic model workbench")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("inputs", nargs="*", help="Manifest files (for 'scenario', optionally the kind first)")
    parser.add_argument("--input", action="append", default=[], help="A further manifest file")
    parser.add_argument("--set", help="Comma separated point names")
    parser.add_argument("--base", help="Comma separated names of the base set")
    parser.add_argument("--target", help="Comma separated names of the target set (default: all points)")
    parser.add_argument("--other", help="Second tuple, for 'type-eq'")
    parser.add_argument("--params", help="Parameter set, for 'type-eq'")
    parser.add_argument("--over", help="Manifest of the base structure, for 'amalgamate'")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--window", type=int)
    parser.add_argument("--subset-bound", type=int)
    parser.add_argument("--exhaustive", action="store_true", help="Enumerate subsets for 'check-class'")
    parser.add_argument("--no-fast", action="store_true", help="Skip the coloured-tuple fast path in 'type-eq'")
    parser.add_argument("--intervals", action="append", help="lo:hi pair of names, for 'check-axioms'")
    parser.add_argument("--rounds", type=int, default=2)
    parser.add_argument("--k", type=int)
    parser.add_argument("--len", type=int)
    parser.add_argument("--len-i", type=int)
    parser.add_argument("--len-j", type=int)
    parser.add_argument("--json", help="Write the report here rather than to stdout")
    parser.add_argument("--jobs", type=int, default=1, help="Threads for several inputs")
    parser.add_argument("--cache", help="SQLite database of earlier reports")
    parser.add_argument("--verbose", action="store_true")
    return parser

def _read(path):
    with open(path, "rb") as file:
        return (path, file.read())

def main(argv=None):
    """Entry point of the `predim` script; returns the exit status."""
    args = _make_parser().parse_args(argv)
    if args.verbose:
        _utils.start_logging()
    paths = list(args.inputs) + list(args.input)
    options = {key: getattr(args, key, None) for key in REPORTED_OPTIONS if key != "kind"}
    if args.command == "scenario" and paths and paths[0] in SCENARIO_KINDS:
        options["kind"] = paths.pop(0)
    try:
        inputs = [_read(p) for p in paths]
        if args.over is not None:
            options["over"] = _read(args.over)
    except OSError as ex:
        report = {"command": args.command, "result": {"error": type(ex).__name__, "message": str(ex)},
            "exit_status": EXIT_ERROR, "version": _version()}
        print(_utils.canonical_json(report))
        return EXIT_ERROR

    store = None if args.cache is None else _cache.SQLiteCache(args.cache)
    def run(batch):
        if store is None:
            return run_command(args.command, batch, options)
        return cached_run(args.command, batch, options, store)

    if args.jobs > 1 and args.command in SINGLE_INPUT and len(inputs) > 1:
        with _futures.ThreadPoolExecutor(max_workers=args.jobs) as executor:
            outcomes = list(executor.map(lambda inp: run([inp]), inputs))
        output = [report for report, _ in outcomes]
        status = max(status for _, status in outcomes)
    else:
        output, status = run(inputs)

    text = _utils.canonical_json(output)
    if args.json is None:
        print(text)
    else:
        with open(args.json, "w", encoding="utf-8") as file:
            file.write(text + "\n")
    return status

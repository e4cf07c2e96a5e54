"""
Command-line entry point: load surfaces, run brackets and verification suites,
build covers, flip, evaluate, and explore exchange graphs.

Every verb prints a plain-text report followed by a `#machine` section of
tab-separated records. Exit status: 0 success, 1 a check found a
counterexample, 2 bad usage or input.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from surfalg.algebra import build_reduction, parse_element
from surfalg.bracket import DoubleBracket, descent_check, lie_check, quasi_poisson_check
from surfalg.config import CONFIG
from surfalg.covering import (
    build_covering,
    disambiguate_theta_law,
    scaffold_counts,
    serialize_sidecar,
)
from surfalg.database import Run, RunCheck, get_db_context, init_db
from surfalg.mutation import (
    corrupt_move,
    equivariance_suite,
    exchange_explore,
    export_adjacency,
    flip_pushforward,
    round_trip_check,
)
from surfalg.repcheck import evaluate, random_rep, serialize_matrix
from surfalg.surface import (
    MarkedSurface,
    flip_triangulation,
    parse_surface,
    serialize_surface,
    validate,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

VERBS = (
    "validate",
    "bracket",
    "triple",
    "quasi",
    "lie",
    "cover",
    "flip",
    "equivariance",
    "evaluate",
    "explore",
)

PROBABILISTIC_VERBS = ("equivariance", "evaluate")


@dataclass
class Report:
    lines: list[str] = field(default_factory=list)
    records: list[tuple] = field(default_factory=list)
    exit_code: int = EXIT_OK
    attachments: dict[str, str] = field(default_factory=dict)

    def add(self, line: str, *record):
        self.lines.append(line)
        if record:
            self.records.append(record)

    def fail(self):
        self.exit_code = EXIT_FAILED

    def render(self) -> str:
        out = list(self.lines)
        out.append("#machine")
        for record in self.records:
            out.append("\t".join(str(v).replace("\t", " ") for v in record))
        return "\n".join(out) + "\n"


# -- inputs ------------------------------------------------------------------


def load_surface(name: str) -> MarkedSurface:
    """A .surf file path, or the name of a bundled fixture."""
    path = Path(name)
    if path.exists():
        return parse_surface(path.read_text())
    stem = path.name.removesuffix(".surf")
    bundled = resources.files("surfalg") / "fixtures" / f"{stem}.surf"
    if bundled.is_file():
        return parse_surface(bundled.read_text())
    raise FileNotFoundError(f"no such surface file or fixture: {name}")


def _sizes(text: str) -> list[int]:
    try:
        sizes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers, got '{text}'")
    if not sizes or any(n < 1 for n in sizes):
        raise argparse.ArgumentTypeError(f"sizes must be positive, got '{text}'")
    return sizes


def _non_negative(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--twist", choices=("on", "off"), default="on", help="δ = −1 (on) or δ = 1 (off)")
    common.add_argument("--n", type=int, default=2, help="number of sheets for covers")
    common.add_argument("--depth", type=_non_negative, default=3, help="flip depth for explore")
    common.add_argument("--sizes", type=_sizes, default=None, help="matrix sizes, e.g. 5,7")
    common.add_argument("--samples", type=_non_negative, default=None, help="samples per size")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--out", type=Path, default=None, help="write the main artifact here")
    common.add_argument("--record", action="store_true", help="store the run in the database")
    common.add_argument("--verbose", action="store_true", help="debug logging on stderr")

    parser = argparse.ArgumentParser(
        prog="surfalg",
        description="Exact computations in the twisted surface algebra.",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  surfalg quasi disk3.surf
  surfalg bracket disk3.surf "a1" "a2"
  surfalg cover --n 3 triangle.surf --out triangle3.surf
        """,
    )
    verbs = parser.add_subparsers(dest="verb", required=True)

    p = verbs.add_parser("validate", parents=[common], help="check surface data")
    p.add_argument("surface")
    p = verbs.add_parser("bracket", parents=[common], help="double bracket of two elements")
    p.add_argument("surface")
    p.add_argument("x")
    p.add_argument("y")
    p = verbs.add_parser("triple", parents=[common], help="both triple brackets of three elements")
    p.add_argument("surface")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("z")
    p = verbs.add_parser("quasi", parents=[common], help="quasi-Poisson suite")
    p.add_argument("surface")
    p = verbs.add_parser("lie", parents=[common], help="descent and cyclic Lie checks")
    p.add_argument("surface")
    p = verbs.add_parser("cover", parents=[common], help="build the n-sheeted cover")
    p.add_argument("surface")
    p = verbs.add_parser("flip", parents=[common], help="flip a diagonal")
    p.add_argument("surface")
    p.add_argument("diagonal")
    p = verbs.add_parser("equivariance", parents=[common], help="flip equivariance on the double cover")
    p.add_argument("surface")
    p.add_argument("diagonal")
    p.add_argument(
        "--corrupt",
        nargs="?",
        const="drop",
        choices=("drop", "shift"),
        help="negative control: drop a term of the new diagonal image, or shift it",
    )
    p = verbs.add_parser("evaluate", parents=[common], help="matrix of an element under a random representation")
    p.add_argument("surface")
    p.add_argument("expression")
    p = verbs.add_parser("explore", parents=[common], help="exchange graph by breadth-first flips")
    p.add_argument("surface")
    return parser


# -- verbs -------------------------------------------------------------------


def _twisted(args) -> bool:
    return args.twist == "on"


def run_validate(args, s: MarkedSurface) -> Report:
    report = Report()
    result = validate(s)
    for line in result.lines():
        report.lines.append(line)
    report.records.append(("status", "pass" if result.passed else "fail"))
    report.records.extend(("failure", line) for line in result.failures)
    report.records.extend(("warning", line) for line in result.warnings)
    if not result.passed:
        report.fail()
    return report


def run_bracket(args, s: MarkedSurface) -> Report:
    system = build_reduction(s, _twisted(args))
    x, y = parse_element(args.x, system), parse_element(args.y, system)
    value = DoubleBracket(system).double_bracket(x, y).serialize()
    report = Report()
    report.add(value, "bracket", args.x, args.y, value)
    return report


def run_triple(args, s: MarkedSurface) -> Report:
    system = build_reduction(s, _twisted(args))
    bracket = DoubleBracket(system)
    x, y, z = (parse_element(t, system) for t in (args.x, args.y, args.z))
    lhs = bracket.triple_bracket(x, y, z)
    rhs = bracket.triple_from_derivation(x, y, z)
    report = Report()
    report.add(f"triple bracket: {lhs.serialize()}", "triple", lhs.serialize())
    report.add(f"from derivation: {rhs.serialize()}", "derivation", rhs.serialize())
    equal = lhs == rhs
    report.add(f"equal: {'yes' if equal else 'no'}", "equal", "yes" if equal else "no")
    if not equal:
        report.fail()
    return report


def run_quasi(args, s: MarkedSurface) -> Report:
    bracket = DoubleBracket(build_reduction(s, _twisted(args)))
    result = quasi_poisson_check(bracket, seed=args.seed)
    report = Report()
    report.lines.extend(result.lines())
    report.records.append(("checked", result.checked))
    report.records.append(("failures", len(result.failures)))
    for label, lhs, rhs in result.failures[:10]:
        report.add(f"counterexample {label}: {lhs} != {rhs}", "failure", label, lhs, rhs)
    if not result.passed:
        report.fail()
    return report


def run_lie(args, s: MarkedSurface) -> Report:
    bracket = DoubleBracket(build_reduction(s, _twisted(args)))
    descent = descent_check(bracket)
    seed = args.seed if args.seed is not None else 0
    samples = args.samples if args.samples is not None else 50
    lie = lie_check(bracket, samples=samples, seed=seed)
    report = Report()
    report.add(f"descent: {descent.checked} brackets, {len(descent.failures)} failures", "descent", descent.checked, len(descent.failures))
    report.add(f"cyclic: {lie.triples} triples, {len(lie.failures)} failures", "cyclic", lie.triples, len(lie.failures))
    for face, label, value in descent.failures[:10]:
        report.add(f"descent counterexample {face} {label}: {value}", "failure", "descent", label)
    for kind, label in lie.failures[:10]:
        report.add(f"{kind} counterexample: {label}", "failure", kind, label)
    if not (descent.passed and lie.passed):
        report.fail()
    return report


def run_cover(args, s: MarkedSurface) -> Report:
    c = build_covering(s, args.n)
    chi, expected = c.riemann_hurwitz()
    report = Report()
    report.add(f"cover: {s.name}, n = {c.n}", "n", c.n)
    report.add(
        f"punctures {len(c.cover.punctures)}, edges {len(c.cover.edges)}, faces {len(c.cover.faces)}",
        "sizes",
        len(c.cover.punctures),
        len(c.cover.edges),
        len(c.cover.faces),
    )
    report.add(f"euler characteristic {chi} = {expected}", "chi", chi, expected)
    for face, (white, interior, edge, zigzags) in scaffold_counts(c).items():
        report.add(
            f"triangle {face}: {white}/{interior}/{zigzags} (white/interior black/zigzags), {edge} edge black",
            "scaffold",
            face,
            white,
            interior,
            edge,
            zigzags,
        )
    if c.n == 2:
        law = disambiguate_theta_law(c, DoubleBracket(build_reduction(c.cover, _twisted(args))))
        for sign, name in ((1, "theta+"), (-1, "theta-")):
            report.add(f"{name} law: {law.law(sign)}", "theta", name, law.law(sign))
    report.attachments["surface"] = serialize_surface(c.cover)
    report.attachments["sidecar"] = serialize_sidecar(c)
    return report


def _new_diagonal(before: MarkedSurface, after: MarkedSurface) -> str:
    return next(e for e in after.edge_ids if not before.has_edge(e))


def run_flip(args, s: MarkedSurface) -> Report:
    flipped = flip_triangulation(s, args.diagonal)
    report = Report()
    new = _new_diagonal(s, flipped)
    report.add(f"flip {args.diagonal} -> {new}", "flip", args.diagonal, new)
    if args.n == 2:
        move = flip_pushforward(build_covering(s, 2), args.diagonal)
        for line in move.substitution_lines():
            report.add(line, "substitution", *line.split(" -> ", 1))
    report.attachments["surface"] = serialize_surface(flipped)
    return report


def _verdict_rows(report: Report, kind: str, rows):
    for x, y, verdict in rows:
        if verdict.status != "pass":
            report.add(f"{kind} {x} {y}: {verdict.line()}", kind, x, y, verdict.status)


def run_equivariance(args, s: MarkedSurface) -> Report:
    move = flip_pushforward(build_covering(s, 2), args.diagonal)
    if args.corrupt:
        move = corrupt_move(move, args.corrupt)
    result = equivariance_suite(move, args.sizes, args.samples, args.seed)
    report = Report()
    symbolic = result.counts(result.symbolic)
    numeric = result.counts(result.numeric)
    report.add(
        f"symbolic: {symbolic['pass']} pass, {symbolic['fail']} fail, {symbolic['deferred']} deferred",
        "symbolic",
        symbolic["pass"],
        symbolic["fail"],
        symbolic["deferred"],
    )
    report.add(
        f"numeric: {numeric['pass']} pass, {numeric['fail']} fail (probabilistic evidence)",
        "numeric",
        numeric["pass"],
        numeric["fail"],
    )
    _verdict_rows(report, "symbolic", [r for r in result.symbolic if r[2].status == "fail"])
    _verdict_rows(report, "numeric", result.numeric)
    back = flip_pushforward(move.new, _new_diagonal(move.old.base, move.new.base))
    trip = round_trip_check(move, back, args.sizes, args.samples, args.seed)
    report.add(f"round trip: {trip.line()}", "round-trip", trip.status)
    if not (result.passed and trip.passed):
        report.fail()
    return report


def run_evaluate(args, s: MarkedSurface) -> Report:
    system = build_reduction(s, _twisted(args))
    x = parse_element(args.expression, system)
    sizes = args.sizes or list(CONFIG.get("oracle.sizes", [5, 7]))
    seed = args.seed if args.seed is not None else int(CONFIG.get("oracle.seed", 0))
    report = Report()
    for N in sizes:
        rep = random_rep(system, N, seed)
        text = serialize_matrix(evaluate(rep, x))
        report.add(f"N = {N}: {text}", "matrix", N, text)
    return report


def run_explore(args, s: MarkedSurface) -> Report:
    graph = exchange_explore(s, args.n, args.depth)
    report = Report()
    report.add(
        f"nodes {graph.graph.number_of_nodes()}, flips {graph.graph.number_of_edges()}",
        "graph",
        graph.graph.number_of_nodes(),
        graph.graph.number_of_edges(),
    )
    report.add(f"root {graph.root}", "root", graph.root)
    report.add(f"generators {len(graph.generators)}", "generators", len(graph.generators))
    report.add(f"face relations {len(graph.face_relations)}", "face-relations", len(graph.face_relations))
    report.add(f"mutation relations {len(graph.mutation_relations)}", "mutation-relations", len(graph.mutation_relations))
    for note in graph.notes:
        report.add(f"note: {note}", "note", note)
    adjacency = export_adjacency(graph)
    report.lines.extend(adjacency.rstrip("\n").splitlines())
    report.attachments["adjacency"] = adjacency
    return report


HANDLERS = {
    "validate": run_validate,
    "bracket": run_bracket,
    "triple": run_triple,
    "quasi": run_quasi,
    "lie": run_lie,
    "cover": run_cover,
    "flip": run_flip,
    "equivariance": run_equivariance,
    "evaluate": run_evaluate,
    "explore": run_explore,
}


# -- output ------------------------------------------------------------------


def write_outputs(args, report: Report):
    if args.out is None:
        return
    if "surface" in report.attachments:
        args.out.write_text(report.attachments["surface"])
        if "sidecar" in report.attachments:
            args.out.with_suffix(".sidecar").write_text(report.attachments["sidecar"])
    elif "adjacency" in report.attachments:
        args.out.write_text(report.attachments["adjacency"])
    else:
        args.out.write_text(report.render())


def record_run(args, report: Report | None, exit_code: int):
    init_db()
    options = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("verb", "surface")
    }
    status = {EXIT_OK: "passed", EXIT_FAILED: "failed"}.get(exit_code, "error")
    with get_db_context() as db:
        run = Run(verb=args.verb, surface=args.surface, options=json.dumps(options), status=status)
        run.exit_code = exit_code
        run.completed_at = datetime.now(timezone.utc)
        for record in report.records if report else []:
            run.checks.append(
                RunCheck(
                    name=str(record[0]),
                    status=status,
                    detail="\t".join(map(str, record[1:])),
                    probabilistic=args.verb in PROBABILISTIC_VERBS,
                )
            )
        db.add(run)
    logger.info(f"[Runs] recorded {args.verb} on {args.surface} with exit {exit_code}")


def configure_logging(verbose: bool):
    level = logging.DEBUG if verbose else getattr(logging, str(CONFIG.get("logging.level", "WARNING")).upper(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s %(message)s", stream=sys.stderr)


def run(args) -> tuple[int, Report | None]:
    """Execute one parsed command; returns (exit status, report)."""
    try:
        s = load_surface(args.surface)
        report = HANDLERS[args.verb](args, s)
        write_outputs(args, report)
    except (ValueError, OSError, StopIteration) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE, None
    return report.exit_code, report


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    exit_code, report = run(args)
    if report is not None:
        sys.stdout.write(report.render())
    if args.record or CONFIG.get("database.enabled", False):
        record_run(args, report, exit_code)
    return exit_code


__all__ = ["VERBS", "Report", "load_surface", "build_parser", "run", "main"]

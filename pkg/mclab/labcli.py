"""
Command-line harness for the completion lab.

Subcommands:
  complete    matrix + mask + L -> completed matrix
  cutnorm     matrix -> cut norm (exact or sandwiched)
  cutdist     two matrices -> cut distance
  discretize  step graphon + m n -> matrix
  verdict     step graphon -> recovery verdict
  probe       mask -> stable-recovery probe report
  experiment  config file -> JSON and CSV reports
  generate    pattern family + k -> mask

Exit codes: 0 on success, 1 on usage, format, validation, shape and
precondition errors, 2 on numerical failures.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from pydantic import ValidationError

import utils
from mclab.catalog import family_names, generate_mask, reference_graphon, reference_graphons
from mclab.cutmetric import cut_distance, cut_distance_exact, cut_norm, cut_norm_exact
from mclab.errors import (
    DimensionError,
    EnumerationLimitError,
    FormatError,
    InfeasibleError,
    LabError,
    PreconditionError,
    QuadratureError,
)
from mclab.experiment_graph import run_experiment_graph
from mclab.graphon import DEFAULT_ETAS, discretize, recovery_verdict
from mclab.models import ExperimentConfig, ExperimentReport, SolverConfig
from mclab.nucmin import complete_modified_cr, complete_plain_cr
from mclab.probe import ProbeEntry, probe_stable_recovery
from mclab.textio import (
    format_matrix,
    read_config,
    read_mask,
    read_matrix,
    read_step_graphon,
    write_csv,
    write_json,
    write_matrix,
)

__all__ = ["ExperimentOutputs", "cli_main", "probe_stable_recovery", "run_completion_experiment"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

CSV_COLUMNS = [
    "k",
    "errModified",
    "errPlain",
    "nuclearModified",
    "nuclearPlain",
    "nuclearTruth",
    "itersModified",
    "itersPlain",
    "convergedModified",
    "convergedPlain",
    "maskedDiff",
    "fullDiff",
    "probeVerdict",
]


# --- Experiment reports ---
@dataclass
class ExperimentOutputs:
    report: ExperimentReport
    json_path: Path
    csv_path: Path
    witness_paths: List[Path] = field(default_factory=list)


def report_paths(output_path: str):
    """A *.json output path names the report itself; anything else is a directory."""
    target = Path(output_path)
    if target.suffix.lower() == ".json":
        return target, target.with_suffix(".csv")
    return target / "report.json", target / "report.csv"


def _csv_rows(report: ExperimentReport):
    for rec in report.perSize:
        yield [
            rec.k,
            repr(rec.errModified),
            repr(rec.errPlain),
            repr(rec.nuclear.modified),
            repr(rec.nuclear.plain),
            repr(rec.nuclear.truth),
            rec.iters["modified"],
            rec.iters["plain"],
            rec.converged["modified"],
            rec.converged["plain"],
            "" if rec.maskedDiff is None else repr(rec.maskedDiff),
            "" if rec.fullDiff is None else repr(rec.fullDiff),
            rec.probeVerdict or "",
        ]


def run_completion_experiment(cfg: ExperimentConfig) -> ExperimentOutputs:
    """
    Run the completion experiment described by `cfg` and write its JSON
    report and CSV table. When the probe runs, each size's witness pair is
    saved next to the report.
    """
    state = run_experiment_graph(cfg)
    report = state["report"]
    json_path, csv_path = report_paths(cfg.output_path)

    witness_paths = []
    for entry in state.get("probes") or []:
        stem = json_path.with_suffix("")
        for tag, matrix in (("A", entry.witness_a), ("B", entry.witness_b)):
            path = Path(f"{stem}-probe-k{entry.shape[0]}-{tag}.txt")
            witness_paths.append(write_matrix(path, matrix))

    write_json(json_path, report.model_dump(mode="json"))
    write_csv(csv_path, CSV_COLUMNS, _csv_rows(report))
    logger.info(f"run_completion_experiment - wrote {json_path} and {csv_path}")
    return ExperimentOutputs(report, json_path, csv_path, witness_paths)


# --- Argument parsing ---
class UsageError(Exception):
    """Bad command-line arguments."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _emit_matrix(A, output: Optional[str]) -> None:
    if output:
        write_matrix(output, A)
        print(f"wrote {output}")
    else:
        sys.stdout.write(format_matrix(A))


def _load_graphon(source: str):
    if not Path(source).exists() and source in reference_graphons:
        return reference_graphon(source)
    return read_step_graphon(source)


def _cmd_complete(args) -> int:
    X = read_matrix(args.matrix)
    P = read_mask(args.mask)
    cfg = SolverConfig(max_iters=args.max_iters) if args.max_iters else SolverConfig()
    result = complete_plain_cr(X, P, cfg) if args.plain else complete_modified_cr(X, P, args.L, cfg)
    _emit_matrix(result.estimate, args.output)
    print(
        f"nuclear {result.nuclear_norm:.17g} iterations {result.iterations} "
        f"converged {str(result.converged).lower()}",
        file=sys.stderr,
    )
    return EXIT_OK


def _cmd_cutnorm(args) -> int:
    A = read_matrix(args.matrix)
    if args.exact:
        est = cut_norm_exact(A)
    else:
        est = cut_norm(A, restarts=args.restarts, seed=args.seed)
    print(f"{est.value:.17g}")
    if not est.exact:
        print(f"upper {est.upper_bound:.17g}")
    return EXIT_OK


def _cmd_cutdist(args) -> int:
    A = read_matrix(args.first)
    B = read_matrix(args.second)
    est = cut_distance_exact(A, B) if args.exact else cut_distance(A, B, seed=args.seed)
    print(f"{est.value:.17g} {'exact' if est.exact else 'heuristic'}")
    return EXIT_OK


def _cmd_discretize(args) -> int:
    W = _load_graphon(args.graphon)
    _emit_matrix(discretize(W, args.m, args.n), args.output)
    return EXIT_OK


def _cmd_verdict(args) -> int:
    W = _load_graphon(args.graphon)
    report = recovery_verdict(W, args.eta or DEFAULT_ETAS)
    print(json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True))
    return EXIT_OK


def _probe_payload(entry: ProbeEntry, mask_path: str, K: int, L: float, seed: int) -> dict:
    payload = entry.to_dict()
    payload.update({"mask": mask_path, "rankBound": K, "boxBound": L, "seed": seed})
    return payload


def _cmd_probe(args) -> int:
    P = read_mask(args.mask)
    entry = probe_stable_recovery(P, args.rank, args.L, seed=args.seed)
    if args.output:
        stem = Path(args.output).with_suffix("")
        write_matrix(f"{stem}-A.txt", entry.witness_a)
        write_matrix(f"{stem}-B.txt", entry.witness_b)
        write_json(args.output, _probe_payload(entry, args.mask, args.rank, args.L, args.seed))
    print(f"{entry.verdict} maskedDiff {entry.masked_diff:.17g} fullDiff {entry.full_diff:.17g}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    cfg = read_config(args.config)
    if args.output:
        cfg = cfg.model_copy(update={"output_path": args.output})
    outputs = run_completion_experiment(cfg)
    print(outputs.json_path)
    print(outputs.csv_path)
    return EXIT_OK


def _cmd_generate(args) -> int:
    _emit_matrix(generate_mask(args.family, args.k, density=args.density), args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="completion_lab", description="Deterministic matrix-completion lab")
    parser.add_argument("--log-level", default=None, help="Logging level (default: LAB_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("complete", help="Complete a partially revealed matrix")
    p.add_argument("matrix")
    p.add_argument("mask")
    p.add_argument("--L", type=float, default=1.0, help="Box bound on every entry")
    p.add_argument("--plain", action="store_true", help="Drop the box constraint")
    p.add_argument("--max-iters", type=int, default=None)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_complete)

    p = sub.add_parser("cutnorm", help="Cut norm of a matrix")
    p.add_argument("matrix")
    p.add_argument("--exact", action="store_true", help="Enumerate sign vectors")
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, default=utils.DEFAULT_SEED)
    p.set_defaults(handler=_cmd_cutnorm)

    p = sub.add_parser("cutdist", help="Cut distance between two matrices")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--exact", action="store_true", help="Require the exhaustive search")
    p.add_argument("--seed", type=int, default=utils.DEFAULT_SEED)
    p.set_defaults(handler=_cmd_cutdist)

    p = sub.add_parser("discretize", help="Block averages of a step graphon")
    p.add_argument("graphon", help="Step graphon file or reference graphon name")
    p.add_argument("m", type=int)
    p.add_argument("n", type=int)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_discretize)

    p = sub.add_parser("verdict", help="Recovery verdict of a graphon")
    p.add_argument("graphon", help="Step graphon file or reference graphon name")
    p.add_argument("--eta", type=float, action="append")
    p.set_defaults(handler=_cmd_verdict)

    p = sub.add_parser("probe", help="Search for a stable-recovery violation")
    p.add_argument("mask")
    p.add_argument("--rank", type=int, default=2)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=utils.DEFAULT_SEED)
    p.add_argument("-o", "--output", help="JSON report path; witnesses are saved next to it")
    p.set_defaults(handler=_cmd_probe)

    p = sub.add_parser("experiment", help="Run a completion experiment from a config file")
    p.add_argument("config")
    p.add_argument("-o", "--output", help="Override output_path")
    p.set_defaults(handler=_cmd_experiment)

    p = sub.add_parser("generate", help="Write a reveal mask")
    p.add_argument("family", choices=family_names())
    p.add_argument("k", type=int)
    p.add_argument("--density", type=float, default=0.5)
    p.add_argument("-o", "--output")
    p.set_defaults(handler=_cmd_generate)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        # --help
        return int(exc.code or 0)

    utils.configure_logging(args.log_level)
    try:
        return args.handler(args)
    except (QuadratureError, InfeasibleError, EnumerationLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (FormatError, DimensionError, PreconditionError, LabError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"error: invalid configuration\n{exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_USAGE

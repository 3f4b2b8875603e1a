"""
Command-line front end.

    banddensity classify --builtin lw_paired_squares --k 2
    banddensity witness --builtin penta_geometric --N 100 --out witness.json
    banddensity verify --input witness.json
    banddensity xi --builtin lw_linear --N 20 --format csv
    banddensity sweep --grid grid.yaml --N 10000

Exit codes: 0 pass, 1 a verification check failed, 2 usage or library error.
JSON and CSV go to stdout (or --out); logs go to stderr.
"""
import argparse
import csv
import io
import itertools
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import yaml

from framework.config_manager import config
from framework.logger import log_step, setup_logger
from banddensity.classify import classify_family, mu_lw, mu_penta, recip_a
from banddensity.errors import BandDensityError, ConfigError
from banddensity.export import build_witness, bundle_to_dict, operator_from_dict, verify_export
from banddensity.family import BUILTIN_NAMES, LW, PENTA, CoefficientFamily, builtin_family, family_from_spec, parse_family
from banddensity.scalars import MODES, format_scalar
from banddensity.systems import build_system
from banddensity.verify import EXIT_ERROR, EXIT_PASS
from banddensity.xi import xi_closed, xi_comparison_rows, xi_definitional

logger = logging.getLogger(__name__)

FORMATS = ("json", "csv")
SWEEP_COLUMNS = ["label", "kind", "k", "property", "answer", "basis", "partial_sum", "horizon", "slope",
                 "tail_increment"]
XI_COLUMNS = ["n", "xi_definitional", "xi_closed", "abs_diff"]


# ------------------------------------------------------------------
# Argument parsing
# ------------------------------------------------------------------


def _family_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    group = parent.add_argument_group("family")
    group.add_argument("--builtin", choices=BUILTIN_NAMES, help="built-in family name")
    group.add_argument("--lw", metavar="EXPR", help="tridiagonal family a_n")
    group.add_argument("--penta-a", metavar="EXPR")
    group.add_argument("--penta-b", metavar="EXPR")
    group.add_argument("--penta-c", metavar="EXPR")
    group.add_argument("--penta-d", metavar="EXPR", help="optional; derived as a_n b_n - c_n when omitted")
    group.add_argument("--label", help="label used in reports")
    group.add_argument("--mode", choices=MODES, help="arithmetic mode (default: arithmetic.mode)")
    return parent


def _output_options() -> argparse.ArgumentParser:
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--out", metavar="PATH", help="write output to PATH instead of stdout")
    parent.add_argument("--format", choices=FORMATS, help="output format (default: output.format)")
    return parent


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected an integer >= 1, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="banddensity",
        description="Density criteria, witnesses and verification for band-diagonal biorthogonal systems.")
    parser.add_argument("--config", metavar="PATH", help="alternative YAML configuration")
    parser.add_argument("--verbose", "-v", action="store_true", help="log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)
    family, output = _family_options(), _output_options()

    classify = commands.add_parser("classify", parents=[family, output], help="density verdict for a family")
    classify.add_argument("--k", type=_positive_int, default=1, help="number of points (lw only)")
    classify.add_argument("--N", type=_positive_int, help="heuristic horizon (default: diagnostics.horizon)")
    classify.add_argument("--no-facts", action="store_true", help="ignore symbolic facts of built-ins")

    witness = commands.add_parser("witness", parents=[family, output], help="construct and verify a witness")
    witness.add_argument("--k", type=_positive_int, default=1)
    witness.add_argument("--N", type=_positive_int, default=50)

    verify = commands.add_parser("verify", parents=[output], help="re-verify a witness export")
    verify.add_argument("--input", required=True, metavar="PATH")

    xi = commands.add_parser("xi", parents=[family, output], help="dump Xi or mu sequences")
    xi.add_argument("--sequence", choices=("xi", "mu"), default="xi")
    xi.add_argument("--operator", metavar="PATH", help="operator JSON (operator_entries, operator_factors or an export)")
    xi.add_argument("--k", type=_positive_int, default=1)
    xi.add_argument("--N", type=_positive_int, default=20)

    sweep = commands.add_parser("sweep", parents=[output], help="classify every family of a YAML grid")
    sweep.add_argument("--grid", required=True, metavar="PATH")
    sweep.add_argument("--k", type=_positive_int, default=1)
    sweep.add_argument("--N", type=_positive_int, help="heuristic horizon")
    sweep.add_argument("--workers", type=_positive_int, help="process pool size (default: sweep.workers)")
    return parser


def family_from_args(args: argparse.Namespace) -> CoefficientFamily:
    """
    Resolve exactly one family source from the parsed flags.

    Raises:
        ConfigError: If no source or several sources are given
    """
    penta = [args.penta_a, args.penta_b, args.penta_c, args.penta_d]
    sources = [name for name, given in (("--builtin", args.builtin), ("--lw", args.lw),
                                        ("--penta-*", any(value is not None for value in penta))) if given]
    if len(sources) != 1:
        raise ConfigError(f"give exactly one family source (--builtin, --lw or --penta-a/-b/-c), got {sources or 'none'}")
    if args.builtin:
        family = builtin_family(args.builtin, args.mode)
        return family if not args.label else family_from_spec({"builtin": args.builtin, "label": args.label}, args.mode)
    if args.lw:
        return parse_family(args.lw, LW, args.mode, label=args.label)
    return parse_family(None, PENTA, args.mode, a=args.penta_a, b=args.penta_b, c=args.penta_c, d=args.penta_d,
                        label=args.label)


# ------------------------------------------------------------------
# Output helpers
# ------------------------------------------------------------------


def _csv_text(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buffer.getvalue()


def _json_text(data) -> str:
    return json.dumps(data, indent=int(config.get('output.indent', 2))) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"Output written to {out}")
    else:
        sys.stdout.write(text)


def _format(args: argparse.Namespace) -> str:
    fmt = args.format or config.get('output.format', 'json')
    if fmt not in FORMATS:
        raise ConfigError(f"Unsupported output format: {fmt}. Supported: {', '.join(FORMATS)}")
    return fmt


# ------------------------------------------------------------------
# Commands
# ------------------------------------------------------------------


def cmd_classify(args: argparse.Namespace) -> int:
    family = family_from_args(args)
    log_step(logger, f"Classify {family.label}")
    verdict = classify_family(family, args.N, args.k, use_facts=not args.no_facts)
    if _format(args) == "csv":
        _emit(_csv_text(SWEEP_COLUMNS, [_verdict_row(family.label, family.kind, args.k, verdict.to_dict())]), args.out)
    else:
        _emit(_json_text(verdict.to_dict()), args.out)
    return EXIT_PASS


def cmd_witness(args: argparse.Namespace) -> int:
    family = family_from_args(args)
    if _format(args) != "json":
        raise ConfigError("witness exports are JSON only")
    log_step(logger, f"Construct witness for {family.label}")
    bundle = build_witness(family, args.N, args.k)
    data = bundle_to_dict(bundle)
    if args.out:
        _emit(_json_text(data), args.out)
        sys.stdout.write(bundle.report.to_json() + "\n")
    else:
        sys.stdout.write(_json_text(data))
    return bundle.report.exit_code


def cmd_verify(args: argparse.Namespace) -> int:
    log_step(logger, f"Verify {args.input}")
    report = verify_export(args.input)
    _emit(report.to_json() + "\n", args.out)
    return report.exit_code


def _load_operator(path: str):
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Operator file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Operator file {path} is not valid JSON: {e}") from e
    return operator_from_dict(data)


def _mu_rows(family: CoefficientFamily, N: int, k: int) -> List[List]:
    if family.kind == PENTA:
        mu = mu_penta(family, N)
        return [[n, format_scalar(value) if value != float("inf") else "inf", mu.cases[n]]
                for n, value in enumerate(mu.values)]
    mu = mu_lw(family, N) if k == 1 else recip_a(family, N)
    return [[n, format_scalar(value), ""] for n, value in enumerate(mu.values)]


def cmd_xi(args: argparse.Namespace) -> int:
    family = family_from_args(args)
    fmt = _format(args)
    if args.sequence == "mu":
        rows = _mu_rows(family, args.N, args.k)
        columns = ["n", "mu", "case"]
    else:
        if args.operator:
            T, window = _load_operator(args.operator), args.N
        else:
            bundle = build_witness(family, args.N, args.k)
            T, window = bundle.operator, bundle.window
        system = build_system(family)
        comparison = xi_comparison_rows(xi_definitional(T, system, window), xi_closed(T, family, window))
        rows = [[n, format_scalar(defn), format_scalar(closed), format_scalar(diff)]
                for n, defn, closed, diff in comparison]
        columns = XI_COLUMNS
    if fmt == "csv":
        _emit(_csv_text(columns, rows), args.out)
    else:
        _emit(_json_text([dict(zip(columns, row)) for row in rows]), args.out)
    return EXIT_PASS


# ------------------------------------------------------------------
# Sweep
# ------------------------------------------------------------------


def _expand_template(template: Dict, params: Dict[str, Sequence], label: Optional[str]) -> List[Dict]:
    names = list(params)
    specs = []
    for values in itertools.product(*(params[name] for name in names)):
        point = {name: value for name, value in zip(names, values)}
        spec = {key: value.format(**point) if isinstance(value, str) else value for key, value in template.items()}
        spec["label"] = label.format(**point) if label else ",".join(f"{name}={value}" for name, value in point.items())
        specs.append(spec)
    return specs


def load_grid(path: str) -> List[Dict]:
    """
    Read a sweep grid: ``families:`` (list of family specs) and/or
    ``template:`` + ``params:`` (cartesian product in declaration order).

    Raises:
        ConfigError: Missing file, invalid YAML or duplicate labels
    """
    try:
        with open(path, 'r') as file:
            grid = yaml.safe_load(file) or {}
    except FileNotFoundError as e:
        raise ConfigError(f"Grid file not found: {path}") from e
    except yaml.YAMLError as e:
        raise ConfigError(f"Grid file {path} is not valid YAML: {e}") from e
    if not isinstance(grid, dict):
        raise ConfigError(f"Grid file {path} must contain a mapping")

    specs = [dict(spec) for spec in grid.get("families") or []]
    if grid.get("template"):
        specs.extend(_expand_template(grid["template"], grid.get("params") or {}, grid.get("label")))

    labels = []
    for spec in specs:
        label = spec.get("label") or spec.get("builtin")
        if label is None:
            raise ConfigError(f"grid family needs a label: {spec}")
        spec["label"] = label
        labels.append(label)
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ConfigError(f"duplicate labels in grid {path}: {', '.join(duplicates)}")
    return specs


def _verdict_row(label: str, kind: str, k: int, verdict: Dict) -> List:
    evidence = verdict.get("evidence") or {}
    return [label, kind, k, verdict["property"], verdict["answer"], verdict["basis"],
            evidence.get("partial_sum", ""), evidence.get("horizon", ""), evidence.get("slope", ""),
            evidence.get("tail_increment", "")]


def _sweep_row(spec: Dict, mode: Optional[str], N: Optional[int], k: int) -> List:
    family = family_from_spec(spec, mode)
    verdict = classify_family(family, N, k)
    return _verdict_row(family.label, family.kind, k, verdict.to_dict())


def _load_worker_config(config_path: Optional[str]):
    if config_path:
        config.load_config(config_path)


def run_sweep(specs: List[Dict], N: Optional[int], k: int, workers: int = 1, mode: str = None) -> List[List]:
    """
    Classify every grid family; rows come back in grid order.

    Worker processes reload the configuration file the caller has loaded, so
    a --config override reaches them under any process start method.
    """
    if workers > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=workers, initializer=_load_worker_config,
                                 initargs=(config.path,)) as pool:
            futures = [pool.submit(_sweep_row, spec, mode, N, k) for spec in specs]
            return [future.result() for future in futures]
    return [_sweep_row(spec, mode, N, k) for spec in specs]


def cmd_sweep(args: argparse.Namespace) -> int:
    specs = load_grid(args.grid)
    workers = args.workers or int(config.get_sweep_config().get('workers', 1))
    log_step(logger, f"Sweep {len(specs)} families with {workers} worker(s)")
    rows = run_sweep(specs, args.N, args.k, workers)
    if _format(args) == "json":
        _emit(_json_text([dict(zip(SWEEP_COLUMNS, row)) for row in rows]), args.out)
    else:
        _emit(_csv_text(SWEEP_COLUMNS, rows), args.out)
    return EXIT_PASS


COMMANDS = {
    "classify": cmd_classify,
    "witness": cmd_witness,
    "verify": cmd_verify,
    "xi": cmd_xi,
    "sweep": cmd_sweep,
}


def _configure_logging(verbose: bool) -> None:
    settings = config.get_logging_config()
    level = logging.DEBUG if verbose else getattr(logging, str(settings.get('level', 'WARNING')).upper(), logging.WARNING)
    kwargs = {"level": level, "log_file": settings.get('file')}
    if settings.get('format'):
        kwargs["fmt"] = settings['format']
    setup_logger("banddensity", **kwargs)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PASS if e.code == 0 else EXIT_ERROR
    try:
        if args.config:
            config.load_config(args.config)
        _configure_logging(args.verbose)
        return COMMANDS[args.command](args)
    except BandDensityError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=args.verbose)
        sys.stderr.write(f"error: {e}\n")
        return EXIT_ERROR

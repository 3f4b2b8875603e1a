"""
Witness bundles: construction, verification and the JSON export round trip.

A bundle couples a family with the vectors and the operator built for it.
``verify_bundle`` derives every check from what the export stores (plus the
family itself), so reloading an export with ``load_bundle`` and verifying it
again reproduces the same report.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from framework.config_manager import config
from banddensity.classify import mu_penta
from banddensity.errors import ConfigError, WitnessError
from banddensity.family import LW, CoefficientFamily, family_from_spec
from banddensity.scalars import check_mode, format_scalar, parse_scalar
from banddensity.systems import build_system
from banddensity.vectors import VecSeq
from banddensity.verify import (
    Report,
    merge_reports,
    summability_monitor,
    verify_annihilation,
    verify_eq9,
    verify_lw_relation,
    verify_plan_bounds,
    verify_trace,
    verify_xi_identity,
    verify_xi_oracle,
)
from banddensity.witness import (
    annihilator_mass_bound,
    assemble_rank_k,
    lw_operator_from_witness,
    lw_witness_k1,
    lw_witness_k2,
    penta_annihilator,
    penta_length_plan,
    penta_witness_2d,
    wrap_lw_witness,
)
from banddensity.xi import FactoredOperator, SparseOperator

logger = logging.getLogger(__name__)

EXPORT_FORMAT = "banddensity-witness"
EXPORT_VERSION = 1

LW_COLLINEAR = "lw_collinear"
LW_PLANAR = "lw_planar"
PENTA_ANNIHILATOR = "penta_annihilator"
PENTA_PLANAR = "penta_planar"
CONSTRUCTIONS = (LW_COLLINEAR, LW_PLANAR, PENTA_ANNIHILATOR, PENTA_PLANAR)
EXACT_CONSTRUCTIONS = (LW_COLLINEAR, PENTA_ANNIHILATOR)

Operator = Union[SparseOperator, FactoredOperator]


@dataclass
class WitnessBundle:
    """
    A witness and everything needed to verify it.

    Attributes:
        family: Coefficient family
        construction: One of CONSTRUCTIONS
        N: Construction length (lw: r_0..r_N; penta: blocks 0..N)
        k: Requested number of points
        window: Verification window of the operator
        operator: Sparse or factored operator
        vectors: Witness sequences by role
        monitors: Summability monitors and the trace-class proxy
        warnings: Human readable warnings (e.g. a monitor that does not flatten)
    """

    family: CoefficientFamily
    construction: str
    N: int
    k: int
    window: int
    operator: Operator
    vectors: Dict[str, VecSeq] = field(default_factory=dict)
    monitors: Dict[str, Dict] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    report: Optional[Report] = None


def choose_construction(family: CoefficientFamily, k: int) -> str:
    """lw: collinear for k = 1, planar otherwise; penta: sparse annihilator for k = 1, planar otherwise."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if family.kind == LW:
        return LW_COLLINEAR if k == 1 else LW_PLANAR
    return PENTA_ANNIHILATOR if k == 1 else PENTA_PLANAR


def _monitor(bundle: WitnessBundle, name: str, values) -> None:
    result = summability_monitor(values)
    bundle.monitors[name] = result.to_dict()
    if not result.flat:
        message = (f"partial sums of {name} still grow over the last decade "
                   f"(increment {result.last_decade_increment:.3g} at N={len(values) - 1})")
        bundle.warnings.append(message)
        logger.warning(message)


def _attach_monitors(bundle: WitnessBundle) -> None:
    if bundle.construction in (LW_COLLINEAR, LW_PLANAR):
        _monitor(bundle, "r_squared_lengths", bundle.vectors["r"].squared_lengths())
    elif bundle.construction == PENTA_PLANAR:
        u, v = bundle.vectors["u"], bundle.vectors["v"]
        _monitor(bundle, "uv_squared_lengths",
                 [a + b for a, b in zip(u.squared_lengths(), v.squared_lengths())])
    else:
        mass, bound = annihilator_mass_bound(bundle.operator, mu_penta(bundle.family, bundle.N))
        bundle.monitors["trace_class_proxy"] = {"abs_sum": format_scalar(mass), "bound": format_scalar(bound),
                                                "within_bound": bool(mass <= bound)}


def build_witness(family: CoefficientFamily, N: int, k: int = 1) -> WitnessBundle:
    """
    Construct the witness matching the family kind and k, then verify it.

    Args:
        family: Coefficient family
        N: Construction length (>= 1)
        k: Number of points

    Returns:
        WitnessBundle with its report attached

    Example:
        >>> bundle = build_witness(builtin_family("penta_geometric"), 20)
        >>> bundle.operator.trace(), bundle.report.status
        (Fraction(-1, 1), 'pass')
    """
    if N < 1:
        raise ConfigError(f"N must be at least 1, got {N}")
    construction = choose_construction(family, k)
    logger.info(f"Building {construction} witness for {family.label} (N={N}, k={k})")

    if construction in (LW_COLLINEAR, LW_PLANAR):
        r = lw_witness_k1(family, N) if construction == LW_COLLINEAR else lw_witness_k2(family, N)
        w, w_star = wrap_lw_witness(r)
        bundle = WitnessBundle(family, construction, N, k, N, lw_operator_from_witness(w, w_star),
                               {"r": r, "w": w, "w_star": w_star})
    elif construction == PENTA_ANNIHILATOR:
        bundle = WitnessBundle(family, construction, N, k, 2 * N + 2, penta_annihilator(family, N))
    else:
        u, v, _ = penta_witness_2d(family, N)
        bundle = WitnessBundle(family, construction, N, k, 2 * N + 2, assemble_rank_k(u, v, family, N),
                               {"u": u, "v": v})

    _attach_monitors(bundle)
    bundle.report = verify_bundle(bundle)
    return bundle


def verify_bundle(bundle: WitnessBundle) -> Report:
    """
    Checks for a bundle: trace -1, annihilation, the Xi identity and the Xi
    closed form over the window, plus the construction's own relations.

    Exact constructions are checked with the mode's default tolerance (0 in
    rational mode); planar ones with tolerances.residual.
    """
    family = bundle.family
    system = build_system(family)
    exact = bundle.construction in EXACT_CONSTRUCTIONS
    residual = None if exact else float(config.get('tolerances.residual', 1e-10))
    T = bundle.operator

    reports = [
        verify_trace(T, -1, None if exact else residual, family.mode),
        verify_annihilation(T, system, bundle.window, residual),
        verify_xi_identity(T, system, bundle.window, residual),
        verify_xi_oracle(T, system, bundle.window, residual),
    ]
    if bundle.construction in (LW_COLLINEAR, LW_PLANAR):
        reports.append(verify_lw_relation(bundle.vectors["r"], family, bundle.N, residual))
    elif bundle.construction == PENTA_PLANAR:
        reports.append(verify_eq9(bundle.vectors["u"], bundle.vectors["v"], family, bundle.N + 1))
        reports.append(verify_plan_bounds(penta_length_plan(family, bundle.N)))
    report = merge_reports(reports)
    return Report(report.checks, family.mode, bundle.window)


# ------------------------------------------------------------------
# JSON round trip
# ------------------------------------------------------------------


def _vectors_to_json(seq: VecSeq) -> Dict:
    return {
        "dim": seq.dim,
        "start": seq.start,
        "coordinates": [[format_scalar(x) for x in vector] for vector in seq.vectors],
    }


def _vectors_from_json(role: str, data: Dict) -> VecSeq:
    return VecSeq.of(int(data["dim"]), [[parse_scalar(x) for x in vector] for vector in data["coordinates"]],
                     role, int(data.get("start", 0)))


def bundle_to_dict(bundle: WitnessBundle) -> Dict:
    """JSON-ready description of a bundle."""
    data = {
        "format": EXPORT_FORMAT,
        "version": EXPORT_VERSION,
        "family_label": bundle.family.label,
        "family": dict(bundle.family.spec),
        "kind": bundle.family.kind,
        "mode": bundle.family.mode,
        "construction": bundle.construction,
        "N": bundle.N,
        "k": bundle.k,
        "window": bundle.window,
        "vectors": {role: _vectors_to_json(seq) for role, seq in bundle.vectors.items()},
    }
    T = bundle.operator
    if isinstance(T, SparseOperator):
        data["operator_entries"] = [[i, j, format_scalar(value)] for (i, j), value in T.items()]
    else:
        data["operator_factors"] = {
            "dim": T.dim,
            "rows": [[i, [format_scalar(x) for x in T.rows[i]]] for i in sorted(T.rows)],
            "cols": [[j, [format_scalar(x) for x in T.cols[j]]] for j in sorted(T.cols)],
        }
    data["monitors"] = bundle.monitors
    data["warnings"] = list(bundle.warnings)
    data["residual_summary"] = bundle.report.to_dict() if bundle.report is not None else None
    return data


def operator_from_dict(data: Dict) -> Operator:
    """
    Rebuild an operator from ``operator_entries`` ([[i, j, value], ...]) or
    ``operator_factors`` ({dim, rows, cols}).

    Raises:
        ConfigError: If neither key is present
    """
    if "operator_entries" in data:
        return SparseOperator.from_triples((int(i), int(j), parse_scalar(str(value)))
                                           for i, j, value in data["operator_entries"])
    if "operator_factors" in data:
        factors = data["operator_factors"]
        rows = {int(i): tuple(parse_scalar(x) for x in vector) for i, vector in factors["rows"]}
        cols = {int(j): tuple(parse_scalar(x) for x in vector) for j, vector in factors["cols"]}
        return FactoredOperator(rows, cols, int(factors["dim"]))
    raise ConfigError("operator JSON needs 'operator_entries' or 'operator_factors'")


def bundle_from_dict(data: Dict) -> WitnessBundle:
    """
    Inverse of bundle_to_dict (monitors and warnings are carried over as stored).

    Raises:
        ConfigError: If the document is not a witness export
        WitnessError: If the construction is unknown
    """
    if data.get("format") != EXPORT_FORMAT:
        raise ConfigError(f"not a witness export: format={data.get('format')!r}, expected {EXPORT_FORMAT!r}")
    construction = data.get("construction")
    if construction not in CONSTRUCTIONS:
        raise WitnessError(f"Unsupported construction: {construction}. Supported: {', '.join(CONSTRUCTIONS)}")
    family = family_from_spec(data["family"], check_mode(data["mode"]))
    vectors = {role: _vectors_from_json(role, seq) for role, seq in data.get("vectors", {}).items()}
    return WitnessBundle(family, construction, int(data["N"]), int(data.get("k", 1)), int(data["window"]),
                         operator_from_dict(data), vectors, dict(data.get("monitors", {})),
                         list(data.get("warnings", [])))


def write_bundle(bundle: WitnessBundle, path: Union[str, Path], indent: int = None) -> None:
    if indent is None:
        indent = int(config.get('output.indent', 2))
    Path(path).write_text(json.dumps(bundle_to_dict(bundle), indent=indent) + "\n", encoding="utf-8")
    logger.info(f"Witness written to {path}")


def load_bundle(path: Union[str, Path]) -> WitnessBundle:
    """
    Read a witness export.

    Raises:
        ConfigError: If the file is missing or not valid JSON
    """
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"Witness file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"Witness file {path} is not valid JSON: {e}") from e
    return bundle_from_dict(data)


def verify_export(path: Union[str, Path]) -> Report:
    """Reload an export and recompute its report with the same checks build_witness ran."""
    bundle = load_bundle(path)
    bundle.report = verify_bundle(bundle)
    return bundle.report

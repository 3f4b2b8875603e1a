"""
Brute-force verification of systems, operators and witnesses.

Every verify_* function returns a Report made of named checks. A check
carries its status, the worst residual it saw and the first index that broke
the tolerance. Indices whose band reaches past the window are listed in a
separate ``<name>.boundary`` check with status ``skipped``; they never pass.

Default tolerances: 0 in rational mode, tolerances.residual in float mode.
Witnesses built from square roots and angles (planar constructions) are only
exact up to their working precision and are verified with an explicit
tolerance even in rational mode.
"""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from framework.config_manager import config
from framework.logger import log_check
from banddensity.errors import ConfigError, NegativeTermError
from banddensity.family import LW, CoefficientFamily
from banddensity.scalars import FLOAT, RATIONAL, format_scalar
from banddensity.systems import BandSystem, biorthogonality_residuals, biorthogonality_tolerance
from banddensity.vectors import VecSeq, inner
from banddensity.witness import LengthPlan, plan_bound_violations
from banddensity.xi import Operator, fourier_term, xi_closed, xi_definitional

logger = logging.getLogger(__name__)

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"
STATUSES = (PASS, FAIL, SKIPPED)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_ERROR = 2


def _printable(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return [_printable(item) for item in value]
    if isinstance(value, (int, float)) or hasattr(value, "denominator"):
        return format_scalar(value)
    return str(value)


@dataclass(frozen=True)
class Check:
    """
    One verified quantity.

    Attributes:
        name: Quantity name (e.g. 'annihilation', 'annihilation.boundary')
        status: 'pass', 'fail' or 'skipped'
        worst_value: Largest residual over the checked indices
        location: First failing index (or index pair); for skipped checks the excluded indices
        tolerance: Allowed residual
    """

    name: str
    status: str
    worst_value: Any = None
    location: Any = None
    tolerance: Any = None

    def __post_init__(self):
        if self.status not in STATUSES:
            raise ConfigError(f"Unsupported check status: {self.status}. Supported: {', '.join(STATUSES)}")

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "status": self.status,
            "worst_value": _printable(self.worst_value),
            "location": _printable(self.location) if self.status != SKIPPED else self.location,
            "tolerance": _printable(self.tolerance),
        }


@dataclass(frozen=True)
class Report:
    """Checks for one window; failed as soon as one check fails."""

    checks: List[Check] = field(default_factory=list)
    mode: str = RATIONAL
    N: int = 0

    @property
    def status(self) -> str:
        return FAIL if any(check.status == FAIL for check in self.checks) else PASS

    @property
    def exit_code(self) -> int:
        return EXIT_FAIL if self.status == FAIL else EXIT_PASS

    def check(self, name: str) -> Check:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(f"Report has no check named {name!r}; available: {[c.name for c in self.checks]}")

    def to_dict(self) -> Dict:
        return {"status": self.status, "mode": self.mode, "N": self.N,
                "checks": [check.to_dict() for check in self.checks]}

    def to_json(self, indent: int = None) -> str:
        if indent is None:
            indent = int(config.get('output.indent', 2))
        return json.dumps(self.to_dict(), indent=indent)


def merge_reports(reports: Sequence[Report]) -> Report:
    """Concatenate the checks of several reports (mode of the first, largest window)."""
    if not reports:
        return Report()
    checks = [check for report in reports for check in report.checks]
    return Report(checks, reports[0].mode, max(report.N for report in reports))


def _default_tolerance(mode: str, tolerance, key: str = 'residual'):
    if tolerance is not None:
        return tolerance
    if mode == RATIONAL:
        return 0
    return float(config.get(f'tolerances.{key}', 1e-10))


def _scan(name: str, residuals: Iterable, tolerance) -> Check:
    """Build a check from (location, residual) pairs."""
    worst, first_failure, seen = 0, None, False
    for location, residual in residuals:
        seen = True
        if residual > worst:
            worst = residual
        if first_failure is None and residual > tolerance:
            first_failure = location
    if not seen:
        check = Check(name, SKIPPED, None, [], tolerance)
    else:
        check = Check(name, FAIL if first_failure is not None else PASS, worst, first_failure, tolerance)
    log_check(logger, name, worst, tolerance, check.status)
    return check


def _boundary(name: str, indices: List[int]) -> List[Check]:
    if not indices:
        return []
    log_check(logger, f"{name}.boundary", None, None, SKIPPED)
    return [Check(f"{name}.boundary", SKIPPED, None, indices, None)]


def _split_window(system: BandSystem, N: int):
    last = N - system.bandwidth
    return range(max(last + 1, 0)), list(range(max(last + 1, 0), N + 1))


def verify_annihilation(T: Operator, system: BandSystem, N: int, tol=None) -> Report:
    """
    Check <T f_n, f*_n> = 0 for every n <= N whose band stays inside the window.

    Example:
        >>> report = verify_annihilation(SparseOperator({(0, 0): 1}), build_lw_system(builtin_family("lw_linear")), 4)
        >>> report.status, report.check("annihilation").location
        ('fail', 0)
    """
    tol = _default_tolerance(system.mode, tol)
    main, skipped = _split_window(system, N)
    residuals = ((n, abs(fourier_term(T, system, n))) for n in main)
    checks = [_scan("annihilation", residuals, tol)] + _boundary("annihilation", skipped)
    return Report(checks, system.mode, N)


def verify_xi_identity(T: Operator, system: BandSystem, N: int, tol=None) -> Report:
    """
    Check Xi_n + sum_{m<=n} T_mm = 0 with Xi from its definition.

    The left side is the partial sum of <T f_m, f*_m>, so this report agrees
    with verify_annihilation on status and on the first failing index whenever
    the tolerance is 0.
    """
    tol = _default_tolerance(system.mode, tol)
    main, skipped = _split_window(system, N)
    if not len(main):
        return Report([_scan("xi_identity", [], tol)] + _boundary("xi_identity", skipped), system.mode, N)
    xi = xi_definitional(T, system, main[-1], check_support=False)
    running_trace = 0
    residuals = []
    for n in main:
        running_trace += T.entry(n, n)
        residuals.append((n, abs(xi[n] + running_trace)))
    checks = [_scan("xi_identity", residuals, tol)] + _boundary("xi_identity", skipped)
    return Report(checks, system.mode, N)


def verify_xi_oracle(T: Operator, system: BandSystem, N: int, tol=None) -> Report:
    """Closed-form Xi against the definitional Xi for n <= N."""
    tol = _default_tolerance(system.mode, tol)
    definitional = xi_definitional(T, system, N, check_support=False)
    closed = xi_closed(T, system.family, N)
    residuals = ((n, abs(definitional[n] - closed[n])) for n in range(N + 1))
    return Report([_scan("xi_oracle", residuals, tol)], system.mode, N)


def verify_trace(T: Operator, expected=-1, tol=None, mode: str = RATIONAL) -> Report:
    """|trace T - expected|."""
    tol = _default_tolerance(mode, tol)
    return Report([_scan("trace", [(0, abs(T.trace() - expected))], tol)], mode, T.support_bound())


def verify_biorthogonality(system: BandSystem, N: int, tol=None) -> Report:
    """<f_t, f*_l> = delta_tl over the window; float tolerance scales with the largest coefficient."""
    if tol is None:
        tol = 0 if system.mode == RATIONAL else biorthogonality_tolerance(system, N)
    worst, location = biorthogonality_residuals(system, N)
    check = _scan("biorthogonality", [(list(location), worst)], tol)
    return Report([check], system.mode, N)


def verify_eq9(u: VecSeq, v: VecSeq, family: CoefficientFamily, N: int, tol=None) -> Report:
    """
    Check, for every j < N,

        a_j <u_j, v_j> + c_j <v_{j+1}, v_j> = 1
        -d_j <v_{j+1}, v_j> + b_j <v_{j+1}, u_j> = 1

    The location of a failure is [j, line] with line 0 or 1. The default
    tolerance is tolerances.eq9 in both modes.
    """
    if tol is None:
        tol = float(config.get('tolerances.eq9', 1e-9))
    if len(u) < N or len(v) < N + 1:
        raise ConfigError(f"verify_eq9 needs u_0..u_{N - 1} and v_0..v_{N}, got {len(u)} and {len(v)} vectors")

    def residuals():
        for j in range(N):
            a, b, c, d = family.coefficients(j)
            cross = inner(v[j + 1], v[j])
            yield [j, 0], abs(a * inner(u[j], v[j]) + c * cross - 1)
            yield [j, 1], abs(-d * cross + b * inner(v[j + 1], u[j]) - 1)

    return Report([_scan("eq9", residuals(), tol)], family.mode, N)


def verify_lw_relation(r: VecSeq, family: CoefficientFamily, N: int, tol=None) -> Report:
    """a_{n+1} <r_n, r_{n+1}> = 1 for r.start <= n < N; trimmed indices are reported as skipped."""
    if family.kind != LW:
        raise ConfigError(f"verify_lw_relation needs an lw family, got {family.kind}")
    tol = _default_tolerance(family.mode, tol)
    if len(r) < N + 1:
        raise ConfigError(f"verify_lw_relation needs r_0..r_{N}, got {len(r)} vectors")
    residuals = ((n, abs(family.a(n + 1) * inner(r[n], r[n + 1]) - 1)) for n in range(r.start, N))
    checks = [_scan("lw_relation", residuals, tol)] + _boundary("lw_relation", list(range(min(r.start, N))))
    return Report(checks, family.mode, N)


def verify_plan_bounds(plan: LengthPlan) -> Report:
    """M_{n+1} <= sqrt(mu_n), V_n <= max(2 sqrt(mu_n), M_n), U_n <= 2 sqrt(mu_n)."""
    violations = plan_bound_violations(plan)
    if violations:
        worst = max(lhs - rhs for _, _, lhs, rhs in violations)
        n, name, _, _ = violations[0]
        check = Check("plan_bounds", FAIL, worst, [n, name], 0)
    else:
        check = Check("plan_bounds", PASS, 0.0, None, 0)
    log_check(logger, "plan_bounds", check.worst_value, 0, check.status)
    return Report([check], FLOAT, len(plan.U) - 1)


@dataclass(frozen=True)
class MonitorResult:
    """Partial sums S_0..S_N of a non-negative sequence and the increment over its last decade."""

    partial_sums: np.ndarray
    total: float
    last_decade_increment: float
    monotone: bool
    flat: bool

    def to_dict(self) -> Dict:
        return {
            "N": int(self.partial_sums.size - 1),
            "total": self.total,
            "last_decade_increment": self.last_decade_increment,
            "monotone": self.monotone,
            "flat": self.flat,
        }


def summability_monitor(values: Sequence, N: Optional[int] = None, threshold: float = None) -> MonitorResult:
    """
    Partial sums of ``values`` and S_N - S_{N // 10}.

    No verdict is drawn; ``flat`` only reports whether the increment is below
    diagnostics.flatness_threshold.

    Raises:
        NegativeTermError: If a term is negative

    Example:
        >>> summability_monitor([0.0] * 50).total
        0.0
    """
    if threshold is None:
        threshold = float(config.get('diagnostics.flatness_threshold', 1e-8))
    terms = np.asarray([float(value) for value in values], dtype=float)
    if N is not None:
        terms = terms[:N + 1]
    negative = np.flatnonzero(terms < 0)
    if negative.size:
        index = int(negative[0])
        raise NegativeTermError(f"monitored terms must be non-negative, got {terms[index]} at n={index}", index)
    if terms.size == 0:
        return MonitorResult(np.zeros(1), 0.0, 0.0, True, True)
    partial_sums = np.cumsum(terms)
    last = partial_sums.size - 1
    increment = float(partial_sums[last] - partial_sums[last // 10])
    monotone = bool(np.all(np.diff(partial_sums) >= 0))
    return MonitorResult(partial_sums, float(partial_sums[last]), increment, monotone, increment < threshold)

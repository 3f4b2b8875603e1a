"""
Criterion sequences and density verdicts.

Tridiagonal systems: one-point density holds iff mu_n (alternating ratio
products of the a_n) is not square summable; k-point density for k >= 2 holds
iff 1/a_n is not summable. Pentadiagonal systems: rank-one density (and
k-point density for every k > 1) holds iff the three-way minimum mu_n is not
summable.

Summability of an infinite sequence cannot be decided from finitely many terms,
so verdicts either come from exact facts attached to built-in families or from
a partial-sum heuristic whose evidence is reported alongside the answer.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from framework.config_manager import config
from banddensity.errors import (
    CoefficientOverflowError,
    ConfigError,
    NegativeTermError,
    ZeroCoefficientError,
)
from banddensity.family import LW, PENTA, CoefficientFamily
from banddensity.scalars import FLOAT, one, zero

logger = logging.getLogger(__name__)

LW_ONE_POINT = "lw_one_point"
LW_RECIP_A = "lw_recip_a"
PENTA_MIN = "penta_min"

ONE_POINT_DENSE = "one_point_dense"
K_POINT_DENSE = "k_point_dense_k_ge_2"
RANK_ONE_DENSE = "rank_one_dense"

YES, NO, INCONCLUSIVE = "yes", "no", "inconclusive"
CONVERGES, DIVERGES = "converges", "diverges"
SYMBOLIC_FACT = "symbolic_fact"
PARTIAL_SUM_HEURISTIC = "partial_sum_heuristic"

# Attaining argument of the pentadiagonal minimum, numbered in the order the
# ratios appear in mu_n. The annihilator blocks follow the same order.
CASE_AB = 1  # 1/|a| + 1/|b|
CASE_D = 2  # (1 + |b|)/|d|
CASE_C = 3  # (1 + |a|)/|c|

DEFAULT_DIAGNOSTICS = {"delta": 0.1, "tolerance": 1e-12, "harmonic_band": 0.01, "growth_ratio": 0.01}


@dataclass(frozen=True)
class MuSeq:
    """
    Criterion sequence mu_0..mu_N.

    Attributes:
        values: mu_n (math.inf where every pentadiagonal ratio is infinite)
        kind: 'lw_one_point', 'lw_recip_a' or 'penta_min'
        cases: Pentadiagonal only, attaining case per index (0 when infinite)
        infinite_indices: Indices whose value is infinite
    """

    values: Tuple
    kind: str
    cases: Tuple[int, ...] = ()
    infinite_indices: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int):
        return self.values[n]


@dataclass(frozen=True)
class Verdict:
    """
    Density verdict.

    ``evidence`` is None for verdicts resting on a symbolic fact and a dict
    {partial_sum, horizon, slope, ...} for heuristic ones.
    """

    property: str
    answer: str
    basis: str
    evidence: Optional[Dict] = None
    family: str = ""

    def __post_init__(self):
        if self.basis == SYMBOLIC_FACT and self.answer == INCONCLUSIVE:
            raise ConfigError("a verdict resting on a symbolic fact cannot be inconclusive")

    def to_dict(self) -> Dict:
        return {
            "family": self.family,
            "property": self.property,
            "answer": self.answer,
            "basis": self.basis,
            "evidence": self.evidence,
        }


@dataclass(frozen=True)
class SeriesDiagnostic:
    """Outcome of the partial-sum heuristic."""

    outcome: str
    partial_sum: float
    horizon: int
    slope: float
    tail_increment: float
    requested_horizon: int = 0

    def evidence(self) -> Dict:
        return {
            "partial_sum": self.partial_sum,
            "horizon": self.horizon,
            "slope": self.slope,
            "tail_increment": self.tail_increment,
            "requested_horizon": self.requested_horizon or self.horizon,
        }


def mu_lw(family: CoefficientFamily, N: int) -> MuSeq:
    """
    One-point criterion sequence of a tridiagonal family.

    mu_0 = 1 and mu_{n+1} = 1/(|a_{n+1}| mu_n), i.e. alternating products of
    |a_{n-1}| |a_{n-3}| ... / (|a_n| |a_{n-2}| ...) with both chains stopping at
    the smallest positive index.

    Args:
        family: Family of kind 'lw'
        N: Last index (>= 1)

    Returns:
        MuSeq of kind 'lw_one_point' with values mu_0..mu_N

    Raises:
        ZeroCoefficientError: If a_n = 0 for some 1 <= n <= N

    Example:
        >>> mu_lw(parse_family("n", "lw"), 4).values[4]
        Fraction(3, 8)
    """
    if family.kind != LW:
        raise ConfigError(f"mu_lw needs an lw family, got {family.kind}")
    values = [one(family.mode)]
    for n in range(1, N + 1):
        a = family.a(n)
        if a == 0:
            raise ZeroCoefficientError(f"a_{n} = 0 for {family.label}; mu is undefined", n)
        values.append(1 / (abs(a) * values[-1]))
    return MuSeq(tuple(values), LW_ONE_POINT)


def recip_a(family: CoefficientFamily, N: int) -> MuSeq:
    """1/|a_n| for 1 <= n <= N (index 0 holds 0)."""
    if family.kind != LW:
        raise ConfigError(f"recip_a needs an lw family, got {family.kind}")
    values = [zero(family.mode)]
    for n in range(1, N + 1):
        a = family.a(n)
        if a == 0:
            raise ZeroCoefficientError(f"a_{n} = 0 for {family.label}", n)
        values.append(1 / abs(a))
    return MuSeq(tuple(values), LW_RECIP_A)


def penta_mu_value(a, b, c, d) -> Tuple[object, int]:
    """
    min(1/|a| + 1/|b|, (1 + |b|)/|d|, (1 + |a|)/|c|) and the attaining case.

    A zero coefficient makes its ratio infinite. Ties go to the lowest case
    number, CASE_AB before CASE_D before CASE_C, so (1, 1, 1, 1) is CASE_AB
    and (0, 0, 1, 1) is CASE_D.

    Returns:
        (value, case) with (math.inf, 0) when all three ratios are infinite
    """
    candidates = []
    if a != 0 and b != 0:
        candidates.append((1 / abs(a) + 1 / abs(b), CASE_AB))
    if d != 0:
        candidates.append(((1 + abs(b)) / abs(d), CASE_D))
    if c != 0:
        candidates.append(((1 + abs(a)) / abs(c), CASE_C))
    if not candidates:
        return math.inf, 0
    best_value, best_case = candidates[0]
    for value, case in candidates[1:]:
        if value < best_value:
            best_value, best_case = value, case
    return best_value, best_case


def mu_penta(family: CoefficientFamily, N: int) -> MuSeq:
    """
    Pentadiagonal criterion mu_n = min(1/|a_n| + 1/|b_n|, (1+|b_n|)/|d_n|, (1+|a_n|)/|c_n|).

    Args:
        family: Family of kind 'penta'
        N: Last index

    Returns:
        MuSeq of kind 'penta_min' with attaining cases and flagged infinities

    Example:
        >>> mu_penta(builtin_family("penta_unit"), 3).values
        (Fraction(2, 1), Fraction(2, 1), Fraction(2, 1), Fraction(2, 1))
    """
    if family.kind != PENTA:
        raise ConfigError(f"mu_penta needs a penta family, got {family.kind}")
    values, cases, infinite = [], [], []
    for n in range(N + 1):
        value, case = penta_mu_value(*family.coefficients(n))
        values.append(value)
        cases.append(case)
        if case == 0:
            infinite.append(n)
    if infinite:
        logger.warning(f"mu_penta of {family.label} is infinite at {len(infinite)} indices, first n={infinite[0]}")
    return MuSeq(tuple(values), PENTA_MIN, tuple(cases), tuple(infinite))


def _diagnostics_settings(overrides: Dict) -> Dict:
    settings = config.get_diagnostics_config()
    settings.update({key: value for key, value in overrides.items() if value is not None})
    for key in ("delta", "tolerance", "harmonic_band", "growth_ratio"):
        settings[key] = float(settings.get(key, DEFAULT_DIAGNOSTICS[key]))
    return settings


def series_diagnostic(values: Sequence[float], N: int = None, delta: float = None, tolerance: float = None,
                      harmonic_band: float = None, growth_ratio: float = None) -> SeriesDiagnostic:
    """
    Partial-sum heuristic for summability of a non-negative sequence.

    Terms are summed from n = 1. The log-log slope s is fit to the running
    maximum envelope of the nonzero tail terms over the last decade
    N/10 < n <= N. With S the partial sum and D the tail increment
    S_N - S_{N/10}:

    - any infinite term: diverges
    - D <= tolerance * max(1, S): converges
    - s <= -1 - delta: converges
    - s >= -1 - harmonic_band and D >= growth_ratio * S: diverges
    - otherwise: inconclusive

    Args:
        values: Terms indexed from 0 (index 0 is ignored)
        N: Horizon; defaults to the last available index
        delta, tolerance, harmonic_band, growth_ratio: Override config diagnostics

    Returns:
        SeriesDiagnostic

    Raises:
        NegativeTermError: If a term is negative

    Example:
        >>> series_diagnostic([0] + [1 / n for n in range(1, 100001)]).outcome
        'diverges'
    """
    settings = _diagnostics_settings({"delta": delta, "tolerance": tolerance,
                                      "harmonic_band": harmonic_band, "growth_ratio": growth_ratio})
    horizon = len(values) - 1 if N is None else min(N, len(values) - 1)
    if horizon < 1:
        return SeriesDiagnostic(CONVERGES, 0.0, max(horizon, 0), -math.inf, 0.0)

    terms = np.asarray([float(value) for value in values[1:horizon + 1]], dtype=float)
    negative = np.flatnonzero(terms < 0)
    if negative.size:
        index = int(negative[0]) + 1
        raise NegativeTermError(f"summability diagnostics need non-negative terms, got {terms[index - 1]} at n={index}", index)

    if np.isinf(terms).any():
        return SeriesDiagnostic(DIVERGES, math.inf, horizon, math.nan, math.inf)

    cumulative = np.cumsum(terms)
    total = float(cumulative[-1])
    low = max(1, horizon // 10)
    tail = terms[low:]
    increment = float(total - cumulative[low - 1])
    slope = _tail_slope(tail, low + 1)

    if increment <= settings['tolerance'] * max(1.0, total):
        outcome = CONVERGES
    elif slope <= -1 - settings['delta']:
        outcome = CONVERGES
    elif slope >= -1 - settings['harmonic_band'] and increment >= settings['growth_ratio'] * total:
        outcome = DIVERGES
    else:
        outcome = INCONCLUSIVE
    logger.debug(f"series_diagnostic N={horizon}: S={total}, tail={increment}, slope={slope} -> {outcome}")
    return SeriesDiagnostic(outcome, total, horizon, slope, increment)


def _tail_slope(tail: np.ndarray, first_index: int) -> float:
    if tail.size == 0:
        return -math.inf
    envelope = np.maximum.accumulate(tail[::-1])[::-1]
    indices = np.arange(first_index, first_index + tail.size, dtype=float)
    positive = envelope > 0
    if positive.sum() < 2:
        return -math.inf
    slope, _ = np.polyfit(np.log(indices[positive]), np.log(envelope[positive]), 1)
    return float(slope)


def _float_terms(generate: Callable[[int], List[float]], N: int) -> Tuple[List[float], int]:
    """Run a float-mode generator, truncating the horizon at the first overflow."""
    try:
        return generate(N), N
    except (CoefficientOverflowError, OverflowError, ZeroDivisionError) as e:
        index = getattr(e, "index", None)
        logger.info(f"float evaluation stopped early ({e}); truncating horizon")
        if index is None:
            raise
        effective = max(index - 1, 0)
        return generate(effective), effective


def _lw_mu_squares(family: CoefficientFamily, N: int) -> List[float]:
    values = [0.0]
    mu = 1.0
    for n in range(1, N + 1):
        a = family.a(n)
        if a == 0:
            raise ZeroCoefficientError(f"a_{n} = 0 for {family.label}; mu is undefined", n)
        product = abs(a) * mu
        if product == 0 or math.isinf(product):
            raise CoefficientOverflowError("mu left the float range", n)
        mu = 1.0 / product
        if math.isinf(mu):
            raise CoefficientOverflowError("mu left the float range", n)
        values.append(mu * mu)
    return values


def _heuristic_verdict(prop: str, generate: Callable[[int], List[float]], N: int, label: str) -> Verdict:
    values, effective = _float_terms(generate, N)
    diagnostic = series_diagnostic(values, effective)
    answer = {DIVERGES: YES, CONVERGES: NO}.get(diagnostic.outcome, INCONCLUSIVE)
    evidence = diagnostic.evidence()
    evidence["requested_horizon"] = N
    logger.info(f"{label}: {prop} = {answer} (heuristic, {diagnostic.outcome}, N={effective})")
    return Verdict(prop, answer, PARTIAL_SUM_HEURISTIC, evidence, label)


def _horizon(N: Optional[int]) -> int:
    horizon = int(N if N is not None else config.get_diagnostics_config()['horizon'])
    if horizon < 1:
        raise ConfigError(f"horizon must be at least 1, got {horizon}")
    return horizon


def classify_lw(family: CoefficientFamily, N: int = None, k: int = 1, use_facts: bool = True) -> Verdict:
    """
    Density verdict for a tridiagonal family.

    k = 1 asks for one-point density (mu not in l^2); k >= 2 asks for k-point
    density (1/a_n not in l^1). Symbolic facts win when present.

    Args:
        family: Family of kind 'lw'
        N: Heuristic horizon; defaults to diagnostics.horizon (BANDDENSITY_HORIZON)
        k: Number of points
        use_facts: Use symbolic facts when the family has them

    Returns:
        Verdict; answer 'yes' means dense

    Example:
        >>> classify_lw(builtin_family("lw_paired_squares"), k=2).answer
        'no'
    """
    if family.kind != LW:
        raise ConfigError(f"classify_lw needs an lw family, got {family.kind}")
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    facts = family.facts if use_facts else None

    if k == 1:
        if facts is not None and facts.mu_in_l2 is not None:
            return Verdict(ONE_POINT_DENSE, NO if facts.mu_in_l2 else YES, SYMBOLIC_FACT, None, family.label)
        floats = family.with_mode(FLOAT)
        return _heuristic_verdict(ONE_POINT_DENSE, lambda n: _lw_mu_squares(floats, n), _horizon(N), family.label)

    if facts is not None and facts.recip_a_in_l1 is not None:
        return Verdict(K_POINT_DENSE, NO if facts.recip_a_in_l1 else YES, SYMBOLIC_FACT, None, family.label)
    floats = family.with_mode(FLOAT)
    return _heuristic_verdict(K_POINT_DENSE, lambda n: [float(v) for v in recip_a(floats, n).values],
                              _horizon(N), family.label)


def classify_penta(family: CoefficientFamily, N: int = None, use_facts: bool = True) -> Verdict:
    """
    Rank-one density verdict for a pentadiagonal family (equivalently k-point density for all k > 1).

    Example:
        >>> classify_penta(builtin_family("penta_unit")).answer
        'yes'
    """
    if family.kind != PENTA:
        raise ConfigError(f"classify_penta needs a penta family, got {family.kind}")
    facts = family.facts if use_facts else None
    if facts is not None and facts.mu_penta_in_l1 is not None:
        return Verdict(RANK_ONE_DENSE, NO if facts.mu_penta_in_l1 else YES, SYMBOLIC_FACT, None, family.label)
    floats = family.with_mode(FLOAT)
    return _heuristic_verdict(RANK_ONE_DENSE, lambda n: [float(v) for v in mu_penta(floats, n).values],
                              _horizon(N), family.label)


def classify_family(family: CoefficientFamily, N: int = None, k: int = 1, use_facts: bool = True) -> Verdict:
    """Dispatch on family kind (k is ignored for pentadiagonal families)."""
    if family.kind == LW:
        return classify_lw(family, N, k, use_facts)
    return classify_penta(family, N, use_facts)

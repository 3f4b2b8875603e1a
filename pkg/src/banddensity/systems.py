"""
Band-diagonal biorthogonal systems.

Both systems live over an implicit orthonormal basis e_0, e_1, ... and are
generated lazily from their coefficient family: f_t and f*_t are built on
request, so one system serves windows of any size.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterator, List, Tuple

from framework.config_manager import config
from banddensity.errors import ConfigError
from banddensity.family import LW, PENTA, CoefficientFamily, check_penta_constraint
from banddensity.scalars import RATIONAL, Scalar, check_mode, format_scalar, one, zero

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BandVector:
    """
    Finitely supported vector sum_k entries[k] e_k around a defining index.

    Entries are kept sorted by basis index and never store explicit zeros.
    """

    center: int
    entries: Tuple[Tuple[int, Scalar], ...]

    @classmethod
    def from_pairs(cls, center: int, pairs) -> "BandVector":
        kept = sorted((index, value) for index, value in pairs if value != 0)
        return cls(center, tuple(kept))

    def __getitem__(self, index: int) -> Scalar:
        for key, value in self.entries:
            if key == index:
                return value
        return 0

    def as_dict(self) -> Dict[int, Scalar]:
        return dict(self.entries)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(index for index, _ in self.entries)

    def dot(self, other: "BandVector"):
        theirs = other.as_dict()
        return sum((value * theirs[index] for index, value in self.entries if index in theirs), 0)


@dataclass(frozen=True)
class BandSystem:
    """
    Paired sequences f_t, f*_t with bandwidth L.

    Attributes:
        kind: 'lw' (L = 1) or 'penta' (L = 2)
        family: Coefficient family the vectors are generated from
        bandwidth: L
        strict: Pentadiagonal only; validate c + d = ab for every coefficient used
    """

    kind: str
    family: CoefficientFamily
    bandwidth: int
    strict: bool = True

    @property
    def mode(self) -> str:
        return self.family.mode

    def with_mode(self, mode: str) -> "BandSystem":
        return replace(self, family=self.family.with_mode(mode))

    def _coefficients(self, n: int) -> Tuple[Scalar, ...]:
        if self.kind == PENTA and self.strict and n >= 0:
            check_penta_constraint(self.family, n)
        return self.family.coefficients(n)

    def f(self, t: int) -> BandVector:
        """The system vector f_t."""
        if self.kind == LW:
            return _lw_f(self.family, t)
        return _penta_f(self._coefficients, t, self.mode)

    def f_star(self, t: int) -> BandVector:
        """The biorthogonal vector f*_t."""
        if self.kind == LW:
            return _lw_f_star(self.family, t)
        return _penta_f_star(self._coefficients, t, self.mode)

    def window(self, N: int) -> Iterator[Tuple[int, BandVector, BandVector]]:
        """Yield (t, f_t, f*_t) for 0 <= t <= N."""
        for t in range(N + 1):
            yield t, self.f(t), self.f_star(t)


def _lw_f(family: CoefficientFamily, t: int) -> BandVector:
    mode = family.mode
    if t % 2 == 0:
        return BandVector.from_pairs(t, [(t, one(mode))])
    return BandVector.from_pairs(t, [(t - 1, -family.a(t)), (t, one(mode)), (t + 1, family.a(t + 1))])


def _lw_f_star(family: CoefficientFamily, t: int) -> BandVector:
    mode = family.mode
    if t % 2 == 1:
        return BandVector.from_pairs(t, [(t, one(mode))])
    pairs = [(t, one(mode)), (t + 1, family.a(t + 1))]
    if t > 0:
        pairs.append((t - 1, -family.a(t)))
    return BandVector.from_pairs(t, pairs)


CoefficientLookup = Callable[[int], Tuple[Scalar, ...]]


def _penta_f(coefficients: CoefficientLookup, t: int, mode: str) -> BandVector:
    j, r = divmod(t, 4)
    base = 4 * j
    if r == 0:
        return BandVector.from_pairs(t, [(t, one(mode))])
    if r == 1:
        a, b, c, d = coefficients(2 * j)
        return BandVector.from_pairs(t, [(base, -a), (base + 1, one(mode))])
    if r == 2:
        a0, b0, c0, d0 = coefficients(2 * j)
        a1, b1, c1, d1 = coefficients(2 * j + 1)
        return BandVector.from_pairs(t, [
            (base, d0), (base + 1, -b0), (base + 2, one(mode)), (base + 3, a1), (base + 4, c1),
        ])
    a1, b1, c1, d1 = coefficients(2 * j + 1)
    return BandVector.from_pairs(t, [(base + 3, one(mode)), (base + 4, b1)])


def _penta_f_star(coefficients: CoefficientLookup, t: int, mode: str) -> BandVector:
    j, r = divmod(t, 4)
    base = 4 * j
    if r == 0:
        a0, b0, c0, d0 = coefficients(2 * j)
        pairs = [(base, one(mode)), (base + 1, a0), (base + 2, c0)]
        if j > 0:
            am, bm, cm, dm = coefficients(2 * j - 1)
            pairs += [(base - 2, dm), (base - 1, -bm)]
        return BandVector.from_pairs(t, pairs)
    if r == 1:
        a, b, c, d = coefficients(2 * j)
        return BandVector.from_pairs(t, [(base + 1, one(mode)), (base + 2, b)])
    if r == 2:
        return BandVector.from_pairs(t, [(t, one(mode))])
    a1, b1, c1, d1 = coefficients(2 * j + 1)
    return BandVector.from_pairs(t, [(base + 2, -a1), (base + 3, one(mode))])


def build_lw_system(family: CoefficientFamily) -> BandSystem:
    """
    Build the tridiagonal system of a family.

    f_{2j} = e_{2j}, f_{2j+1} = -a_{2j+1} e_{2j} + e_{2j+1} + a_{2j+2} e_{2j+2},
    f*_{2j} = -a_{2j} e_{2j-1} + e_{2j} + a_{2j+1} e_{2j+1}, f*_{2j+1} = e_{2j+1}.

    Raises:
        ConfigError: If the family is not of kind 'lw'
    """
    if family.kind != LW:
        raise ConfigError(f"build_lw_system needs an lw family, got {family.kind}")
    return BandSystem(LW, family, 1)


def build_penta_system(family: CoefficientFamily, strict: bool = True) -> BandSystem:
    """
    Build the pentadiagonal system of a family.

    Args:
        family: Family of kind 'penta'
        strict: When True every coefficient index touched is checked against
            c_n + d_n = a_n b_n and a violation raises ConstraintViolationError

    Raises:
        ConfigError: If the family is not of kind 'penta'
    """
    if family.kind != PENTA:
        raise ConfigError(f"build_penta_system needs a penta family, got {family.kind}")
    return BandSystem(PENTA, family, 2, strict)


def build_system(family: CoefficientFamily, strict: bool = True) -> BandSystem:
    """Dispatch on family kind."""
    if family.kind == LW:
        return build_lw_system(family)
    return build_penta_system(family, strict)


def biorthogonality_residuals(system: BandSystem, N: int) -> Tuple[Scalar, Tuple[int, int]]:
    """
    Worst |<f_t, f*_l> - delta_tl| over 0 <= t, l <= N and where it occurs.

    Pairs farther apart than 2L have disjoint supports and are skipped.

    Returns:
        (worst residual, (t, l)); the location is (0, 0) when everything is exact
    """
    reach = 2 * system.bandwidth
    stars = {l: system.f_star(l) for l in range(N + 1)}
    worst, location = zero(system.mode), (0, 0)
    for t in range(N + 1):
        f_t = system.f(t)
        for l in range(max(0, t - reach), min(N, t + reach) + 1):
            target = 1 if t == l else 0
            residual = abs(f_t.dot(stars[l]) - target)
            if residual > worst:
                worst, location = residual, (t, l)
    logger.debug(f"Biorthogonality window N={N} for {system.family.label}: worst {worst} at {location}")
    return worst, location


def check_biorthogonality(system: BandSystem, N: int, mode: str = None) -> Scalar:
    """
    Max over 0 <= t, l <= N of |<f_t, f*_l> - delta_tl|.

    Args:
        system: Band system
        N: Window (N = 0 checks only <f_0, f*_0> = 1)
        mode: Arithmetic mode; defaults to the system's mode

    Returns:
        Maximum residual; exactly 0 in rational mode for valid families

    Example:
        >>> check_biorthogonality(build_lw_system(builtin_family("lw_linear")), 200, "rational")
        Fraction(0, 1)
    """
    if N < 0:
        raise ConfigError(f"window N must be non-negative, got {N}")
    if mode is not None and check_mode(mode) != system.mode:
        system = system.with_mode(mode)
    worst, _ = biorthogonality_residuals(system, N)
    return worst


def biorthogonality_tolerance(system: BandSystem, N: int) -> float:
    """Float-mode tolerance: the configured relative tolerance times the largest coefficient in the window."""
    relative = float(config.get('tolerances.biorthogonality_relative', 1e-12))
    if system.mode == RATIONAL:
        return 0.0
    largest = 1.0
    for n in range(-1, N + 1):
        largest = max([largest] + [abs(float(value)) for value in system.family.coefficients(n)])
    return relative * largest


def system_window_json(system: BandSystem, N: int) -> List[dict]:
    """
    Serialize f_t, f*_t for t <= N.

    Returns:
        [{"index": t, "entries": [[k, "value"], ...], "star_entries": [...]}, ...]
    """
    rows = []
    for t, f_t, f_star_t in system.window(N):
        rows.append({
            "index": t,
            "entries": [[k, format_scalar(value)] for k, value in f_t.entries],
            "star_entries": [[k, format_scalar(value)] for k, value in f_star_t.entries],
        })
    return rows

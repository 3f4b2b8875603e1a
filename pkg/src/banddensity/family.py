"""
Coefficient families: the parameters a_n (tridiagonal system) or
a_n, b_n, c_n, d_n (pentadiagonal system).
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Mapping, Optional, Tuple

from framework.config_manager import config
from banddensity.dsl import FamilyExpr
from banddensity.errors import (
    CoefficientOverflowError,
    ConfigError,
    ConstraintViolationError,
    UnknownFamilyError,
    ZeroCoefficientError,
)
from banddensity.scalars import FLOAT, RATIONAL, Scalar, check_mode, coerce, zero

logger = logging.getLogger(__name__)

LW = "lw"
PENTA = "penta"
KINDS = (LW, PENTA)

Evaluator = Callable[[int, str], Scalar]


@dataclass(frozen=True)
class SummabilityFacts:
    """Exact summability facts known for a built-in family (None = not known)."""

    recip_a_in_l1: Optional[bool] = None
    mu_in_l2: Optional[bool] = None
    mu_penta_in_l1: Optional[bool] = None

    def to_dict(self) -> Dict[str, bool]:
        return {key: value for key, value in self.__dict__.items() if value is not None}


@dataclass(frozen=True)
class CoefficientFamily:
    """
    Immutable coefficient family.

    For kind 'lw' ``evaluators`` holds one callable (a); for kind 'penta' it
    holds four (a, b, c, d). Every callable maps (n, mode) to a scalar.
    Evaluation is pure, so one instance can be shared across workers.

    Attributes:
        kind: 'lw' or 'penta'
        label: Human readable name, used to merge sweep results
        evaluators: Coefficient callables
        mode: Arithmetic mode of returned values
        facts: Summability facts (built-in families only)
        spec: JSON description that rebuilds the family (see family_from_spec)
    """

    kind: str
    label: str
    evaluators: Tuple[Evaluator, ...]
    mode: str = RATIONAL
    facts: Optional[SummabilityFacts] = None
    spec: Mapping = field(default_factory=dict, compare=False)

    def with_mode(self, mode: str) -> "CoefficientFamily":
        """Return the same family evaluating in another arithmetic mode."""
        return replace(self, mode=check_mode(mode))

    def _value(self, evaluator: Evaluator, n: int) -> Scalar:
        value = coerce(evaluator(n, self.mode), self.mode)
        if self.mode != RATIONAL and not math.isfinite(value):
            raise CoefficientOverflowError(f"coefficient of {self.label} is not finite", n)
        return value

    def a(self, n: int) -> Scalar:
        """a_n; zero for n <= 0 in the tridiagonal case and n < 0 in the pentadiagonal case."""
        if n < 0 or (self.kind == LW and n == 0):
            return zero(self.mode)
        return self._value(self.evaluators[0], n)

    def coefficients(self, n: int) -> Tuple[Scalar, ...]:
        """
        All coefficients at index n.

        Returns:
            (a_n,) for 'lw', (a_n, b_n, c_n, d_n) for 'penta'; zeros for n < 0
        """
        if self.kind == LW:
            return (self.a(n),)
        if n < 0:
            return (zero(self.mode),) * 4
        return tuple(self._value(evaluator, n) for evaluator in self.evaluators)

    def constraint_residual(self, n: int) -> Scalar:
        """c_n + d_n - a_n b_n (pentadiagonal only)."""
        a, b, c, d = self.coefficients(n)
        return c + d - a * b


def _derived_d(a: Evaluator, b: Evaluator, c: Evaluator) -> Evaluator:
    def d(n: int, mode: str) -> Scalar:
        return coerce(a(n, mode), mode) * coerce(b(n, mode), mode) - coerce(c(n, mode), mode)
    return d


def _constraint_holds(residual: Scalar, scale: Scalar, mode: str) -> bool:
    if mode == RATIONAL:
        return residual == 0
    return abs(residual) <= 1e-12 * max(1.0, abs(scale))


def check_penta_constraint(family: CoefficientFamily, n: int):
    """
    Raise if c_n + d_n != a_n b_n (exactly in rational mode, 1e-12 relative in float mode).

    Raises:
        ConstraintViolationError: At the first violating index
    """
    a, b, c, d = family.coefficients(n)
    residual = c + d - a * b
    if not _constraint_holds(residual, a * b, family.mode):
        raise ConstraintViolationError(
            f"c_n + d_n != a_n b_n for {family.label} at n={n}: residual {residual}", n)


def _constraint_window() -> int:
    return int(config.get('arithmetic.constraint_window', 64))


def check_lw_nonzero(family: CoefficientFamily, window: Optional[int] = None):
    """
    Raise if a tridiagonal a_n vanishes for some 1 <= n <= window.

    Evaluation runs in float so expressions with irrational values (n^0.5)
    are accepted in rational mode too; the scan stops where a_n overflows.

    Raises:
        ZeroCoefficientError: At the first vanishing index
    """
    window = _constraint_window() if window is None else window
    floats = family.with_mode(FLOAT)
    for n in range(1, window + 1):
        try:
            value = floats.a(n)
        except CoefficientOverflowError:
            logger.debug(f"a_n of {family.label} overflows at n={n}; nonzero check stops there")
            return
        if value == 0:
            raise ZeroCoefficientError(f"a_n = 0 for {family.label} at n={n}", n)


def parse_family(text=None, kind: str = LW, mode: str = None, *, a: str = None, b: str = None,
                 c: str = None, d: str = None, label: str = None) -> CoefficientFamily:
    """
    Build a family from DSL expressions.

    For kind 'lw' pass the single expression as ``text`` (or ``a``). For kind
    'penta' pass ``a``, ``b``, ``c`` and optionally ``d``; ``text`` may also be a
    sequence of three or four expressions. A missing d is derived as
    d_n = a_n b_n - c_n; a supplied d is checked against the identity. A
    tridiagonal a_n must not vanish on 1..window, checked in float arithmetic
    until the values overflow.

    Args:
        text: Expression text (lw) or sequence of expressions (penta)
        kind: 'lw' or 'penta'
        mode: Arithmetic mode; defaults to arithmetic.mode from config
        a, b, c, d: Individual expressions
        label: Optional label

    Returns:
        CoefficientFamily

    Raises:
        FamilySyntaxError: Malformed expression
        ConstraintViolationError: Four expressions violate c + d = ab at a checked index
        ZeroCoefficientError: A tridiagonal a_n vanishes at a checked index
        ConfigError: Wrong number of expressions or unknown kind

    Example:
        >>> family = parse_family("n^2", "lw")
        >>> family.a(5)
        Fraction(25, 1)
    """
    mode = check_mode(mode or config.get('arithmetic.mode', RATIONAL))
    if kind == LW:
        source = text if text is not None else a
        if source is None or not isinstance(source, str):
            raise ConfigError("lw family needs exactly one expression")
        expr = FamilyExpr.parse(source)
        spec = {"kind": LW, "a": expr.text}
        family = CoefficientFamily(LW, label or f"lw:a={expr.text}", (expr,), mode, None, spec)
        check_lw_nonzero(family)
        logger.debug(f"Parsed lw family {family.label}")
        return family

    if kind != PENTA:
        raise ConfigError(f"Unsupported family kind: {kind}. Supported kinds: {', '.join(KINDS)}")

    if isinstance(text, str):
        raise ConfigError("penta family needs separate a, b, c[, d] expressions, not one string")
    sources = list(text) if text is not None else [a, b, c] + ([d] if d is not None else [])
    if len(sources) not in (3, 4) or any(source is None for source in sources):
        raise ConfigError(f"penta family needs three (a, b, c) or four (a, b, c, d) expressions, got {len(sources)}")
    exprs = [FamilyExpr.parse(source) for source in sources]
    spec = {"kind": PENTA, **{name: expr.text for name, expr in zip("abcd", exprs)}}
    if len(exprs) == 3:
        evaluators = (exprs[0], exprs[1], exprs[2], _derived_d(*exprs))
    else:
        evaluators = tuple(exprs)
    default_label = "penta:" + ",".join(f"{name}={expr.text}" for name, expr in zip("abcd", exprs))
    family = CoefficientFamily(PENTA, label or default_label, evaluators, mode, None, spec)

    if len(exprs) == 4:
        window = _constraint_window()
        for n in range(window + 1):
            check_penta_constraint(family, n)
        logger.debug(f"Checked c + d = ab for {family.label} on 0..{window}")
    return family


def _paired_squares(n: int, mode: str) -> Scalar:
    k = (n + 1) // 2
    return coerce(k * k, mode)


def _builtin_definitions() -> Dict[str, dict]:
    return {
        "lw_linear": {
            "kind": LW, "a": "n",
            "facts": SummabilityFacts(recip_a_in_l1=False, mu_in_l2=False),
        },
        "lw_geometric2": {
            "kind": LW, "a": "2^n",
            "facts": SummabilityFacts(recip_a_in_l1=True, mu_in_l2=True),
        },
        "lw_paired_squares": {
            "kind": LW, "a": _paired_squares,
            "facts": SummabilityFacts(recip_a_in_l1=True, mu_in_l2=False),
        },
        "penta_unit": {
            "kind": PENTA, "a": "1", "b": "1", "c": "1/2",
            "facts": SummabilityFacts(mu_penta_in_l1=False),
        },
        "penta_geometric": {
            "kind": PENTA, "a": "2^n", "b": "2^n", "c": "2^(2*n-1)",
            "facts": SummabilityFacts(mu_penta_in_l1=True),
        },
    }


BUILTIN_NAMES = tuple(_builtin_definitions())


def builtin_family(name: str, mode: str = None) -> CoefficientFamily:
    """
    Return a built-in family with its summability facts.

    Args:
        name: One of BUILTIN_NAMES
        mode: Arithmetic mode; defaults to arithmetic.mode from config

    Raises:
        UnknownFamilyError: If the name is not a built-in

    Example:
        >>> builtin_family("lw_linear").facts.recip_a_in_l1
        False
    """
    definitions = _builtin_definitions()
    if name not in definitions:
        raise UnknownFamilyError(f"Unknown built-in family: {name}. Available: {', '.join(BUILTIN_NAMES)}")
    definition = definitions[name]
    mode = check_mode(mode or config.get('arithmetic.mode', RATIONAL))
    spec = {"builtin": name}

    if definition["kind"] == LW:
        source = definition["a"]
        evaluator = FamilyExpr.parse(source) if isinstance(source, str) else source
        return CoefficientFamily(LW, name, (evaluator,), mode, definition["facts"], spec)

    a, b, c = (FamilyExpr.parse(definition[key]) for key in "abc")
    return CoefficientFamily(PENTA, name, (a, b, c, _derived_d(a, b, c)), mode, definition["facts"], spec)


def family_from_spec(spec: Mapping, mode: str = None) -> CoefficientFamily:
    """
    Rebuild a family from its JSON description.

    Accepts ``{"builtin": name}``, ``{"kind": "lw", "a": expr}`` or
    ``{"kind": "penta", "a": ..., "b": ..., "c": ..., ["d": ...]}``; an optional
    ``label`` key overrides the default label.

    Raises:
        ConfigError: If the description is incomplete
    """
    if "builtin" in spec:
        family = builtin_family(spec["builtin"], mode)
        return replace(family, label=spec.get("label", family.label))
    kind = spec.get("kind")
    if kind == LW:
        return parse_family(spec.get("a"), LW, mode, label=spec.get("label"))
    if kind == PENTA:
        return parse_family(None, PENTA, mode, a=spec.get("a"), b=spec.get("b"), c=spec.get("c"),
                            d=spec.get("d"), label=spec.get("label"))
    raise ConfigError(f"Family spec needs 'builtin' or 'kind' in {', '.join(KINDS)}: {dict(spec)}")


def perturbed_penta_family(base: CoefficientFamily, index: int, delta) -> CoefficientFamily:
    """
    Copy of a pentadiagonal family whose c_index is shifted by ``delta`` while d is kept.

    The result breaks c + d = ab at ``index``; it is meant for residual
    diagnostics with build_penta_system(..., strict=False).
    """
    if base.kind != PENTA:
        raise ConfigError(f"perturbed_penta_family needs a penta family, got {base.kind}")
    a, b, c, d = base.evaluators

    def shifted_c(n: int, mode: str) -> Scalar:
        value = coerce(c(n, mode), mode)
        return value + coerce(delta, mode) if n == index else value

    spec = {"perturbed": dict(base.spec), "index": index, "delta": str(delta)}
    return CoefficientFamily(PENTA, f"{base.label}+perturbed@{index}", (a, b, shifted_c, d), base.mode, None, spec)

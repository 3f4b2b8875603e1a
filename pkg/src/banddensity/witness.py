"""
Explicit non-density witnesses.

Tridiagonal systems:
    lw_witness_k1          collinear r_n with a_{n+1} r_n r_{n+1} = 1
    lw_witness_k2          planar r_n with a_n <r_n, r_{n-1}> = 1 and |r_n| = R_n
    normalize_lw_witness   (w, w*) solving the partial-trace relations -> r
    wrap_lw_witness        r -> (w, w*) with a single nonzero starred vector

Pentadiagonal systems:
    penta_annihilator      sparse operator with Xi = 1 and trace -1
    penta_length_plan      lengths V_n, M_n, U_n of the planar construction
    triangle_solve         three vectors with prescribed lengths and products
    penta_witness_2d       planar u_n, v_n built by solving and rotating triangles
    assemble_rank_k        finite-rank operator from the planar sequences
    row_mass_diagnostic    minimum row mass g_n over its breakpoints

Planar constructions run in mpmath at a precision derived from the size of the
coefficients and return exact rationals of the binary values they computed;
verification then evaluates the relations without further rounding.
"""
import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import mpmath

from framework.config_manager import config
from banddensity.classify import CASE_AB, CASE_C, CASE_D, MuSeq, mu_lw, mu_penta, penta_mu_value
from banddensity.errors import (
    ConfigError,
    DimensionMismatchError,
    InfeasibleAngleError,
    PlanError,
    TriangleInfeasibleError,
    WitnessError,
    ZeroCoefficientError,
)
from banddensity.family import LW, PENTA, CoefficientFamily
from banddensity.scalars import divide, magnitude_bits, mpf_to_fraction, one, sign, to_mpf
from banddensity.vectors import VecSeq, Vector, inner, is_zero_vector, perp, scale, squared_norm
from banddensity.xi import FactoredOperator, SparseOperator, xi_closed_penta

logger = logging.getLogger(__name__)

MpVector = Tuple[mpmath.mpf, mpmath.mpf]


# ------------------------------------------------------------------
# Working precision
# ------------------------------------------------------------------


def working_precision(family: CoefficientFamily, N: int) -> int:
    """
    Binary precision for a planar construction over indices 0..N+1.

    The residuals of the planar relations are products of a coefficient and
    rounding errors of vectors whose lengths scale like inverse square roots of
    the coefficients, so the precision grows with the largest coefficient
    magnitude (in bits) seen in the window.
    """
    base = int(config.get('arithmetic.precision_bits', 96))
    margin = int(config.get('arithmetic.precision_margin', 2))
    largest = 0
    for n in range(N + 2):
        for value in family.coefficients(n):
            largest = max(largest, magnitude_bits(value))
    return base + margin * largest


def _to_fraction_vector(vector: Sequence) -> Vector:
    return tuple(mpf_to_fraction(component) for component in vector)


def _rotate(vector: MpVector, angle) -> MpVector:
    c, s = mpmath.cos(angle), mpmath.sin(angle)
    x, y = vector
    return (c * x - s * y, s * x + c * y)


def _heading(vector: MpVector):
    return mpmath.atan2(vector[1], vector[0])


# ------------------------------------------------------------------
# Tridiagonal witnesses
# ------------------------------------------------------------------


def lw_witness_k1(family: CoefficientFamily, N: int) -> VecSeq:
    """
    Collinear witness r_0..r_N in R^1.

    r_n = sigma_n mu_n with r_0 = sign(a_1), sigma_1 = +1 and
    sigma_{n+1} = sign(sigma_n a_{n+1}), so a_{n+1} r_n r_{n+1} = 1 for all
    0 <= n < N. Exact in rational mode. Square summability is not enforced.

    Raises:
        ZeroCoefficientError: If some a_n vanishes (1 <= n <= N)

    Example:
        >>> r = lw_witness_k1(builtin_family("lw_geometric2"), 3)
        >>> [v[0] for v in r]
        [Fraction(1, 1), Fraction(1, 2), Fraction(1, 2), Fraction(1, 4)]
    """
    if family.kind != LW:
        raise ConfigError(f"lw_witness_k1 needs an lw family, got {family.kind}")
    N = max(N, 1)
    mu = mu_lw(family, N)
    coordinates = [sign(family.a(1)) * mu[0]]
    sigma = 1
    coordinates.append(sigma * mu[1])
    for n in range(1, N):
        sigma = sign(sigma * family.a(n + 1))
        coordinates.append(sigma * mu[n + 1])
    r = VecSeq.of(1, [(value,) for value in coordinates], "r")
    logger.info(f"lw_witness_k1 {family.label} N={N}: sum |r_n|^2 = {float(sum(x * x for x in coordinates)):.6g}")
    return r


@dataclass(frozen=True)
class AnglePlan:
    """Lengths R_n and consecutive angles theta_n (theta_0 = 0) of the planar tridiagonal witness."""

    R: Tuple
    theta: Tuple
    precision: int


def lw_angle_plan(family: CoefficientFamily, N: int) -> AnglePlan:
    """
    R_0 = |a_1|^(-1/2), R_n = max(|a_n|^(-1/2), |a_{n+1}|^(-1/2)),
    theta_n = arccos(1/(a_n R_n R_{n-1})).

    Raises:
        ZeroCoefficientError: If some a_n vanishes
        InfeasibleAngleError: If |a_n| R_n R_{n-1} < 1
    """
    if family.kind != LW:
        raise ConfigError(f"lw_angle_plan needs an lw family, got {family.kind}")
    bits = working_precision(family, N)
    with mpmath.workprec(bits):
        coefficients = []
        for n in range(1, N + 2):
            a = family.a(n)
            if a == 0:
                raise ZeroCoefficientError(f"a_{n} = 0 for {family.label}", n)
            coefficients.append(to_mpf(a))
        a_mp = [mpmath.mpf(0)] + coefficients

        def inverse_root(n):
            return 1 / mpmath.sqrt(abs(a_mp[n]))

        R = [inverse_root(1)] + [max(inverse_root(n), inverse_root(n + 1)) for n in range(1, N + 1)]
        theta = [mpmath.mpf(0)]
        for n in range(1, N + 1):
            cosine = 1 / (a_mp[n] * R[n] * R[n - 1])
            if abs(cosine) > 1 + mpmath.mpf(2) ** (-bits // 2):
                raise InfeasibleAngleError(f"|a_{n}| R_{n} R_{n - 1} < 1 for {family.label}: cos = {mpmath.nstr(cosine, 12)}")
            theta.append(mpmath.acos(max(-1, min(1, cosine))))
    return AnglePlan(tuple(R), tuple(theta), bits)


def lw_witness_k2(family: CoefficientFamily, N: int) -> VecSeq:
    """
    Planar witness r_0..r_N: |r_n| = R_n and the angle from r_{n-1} to r_n is theta_n.

    Then a_n <r_n, r_{n-1}> = a_n R_n R_{n-1} cos(theta_n) = 1 for 1 <= n <= N.

    Raises:
        ZeroCoefficientError, InfeasibleAngleError: From lw_angle_plan
    """
    plan = lw_angle_plan(family, N)
    with mpmath.workprec(plan.precision):
        heading = mpmath.mpf(0)
        vectors = []
        for n in range(N + 1):
            heading += plan.theta[n]
            vectors.append(_to_fraction_vector((plan.R[n] * mpmath.cos(heading), plan.R[n] * mpmath.sin(heading))))
    r = VecSeq.of(2, vectors, "r")
    logger.info(f"lw_witness_k2 {family.label} N={N} at {plan.precision} bits: "
                f"sum |r_n|^2 = {sum(r.squared_lengths()):.6g}")
    return r


def wrap_lw_witness(r: VecSeq) -> Tuple[VecSeq, VecSeq]:
    """
    Embed r into the (w, w*) form: w = r, w* = 0 except w*_s = -w_s/|w_s|^2 at the first nonzero index s.

    Raises:
        WitnessError: If every r_n is zero
    """
    s = r.first_nonzero()
    if s < 0:
        raise WitnessError("cannot wrap an all-zero witness: no vector to pair with -1")
    w = VecSeq.of(r.dim, list(r), "w")
    partner = scale(divide(-1, squared_norm(r[s])), r[s])
    zero_vector = (0,) * r.dim
    w_star = VecSeq.of(r.dim, [partner if n == s else zero_vector for n in range(len(r))], "w_star")
    return w, w_star


def normalize_lw_witness(w: VecSeq, w_star: VecSeq, family: CoefficientFamily, N: int) -> VecSeq:
    """
    Rescale a solution (w, w*) of a_{n+1} <w_n, w_{n+1}> = Xi_n, Xi_n = -sum_{m<=n} <w_m, w*_m>,
    into r_n with a_{n+1} <r_n, r_{n+1}> = 1.

    Indices up to the largest N0 with Xi_{N0} = 0 are trimmed (the result starts
    at N0 + 1); afterwards r_n = lambda_n w_n with lambda_start = 1 and
    lambda_{n+1} = 1/(lambda_n Xi_n).

    Args:
        w, w_star: Vector sequences of equal dimension, at least N + 1 long
        family: Tridiagonal family the relations refer to
        N: Last index

    Returns:
        VecSeq r with ``start`` set to the first kept index

    Raises:
        WitnessError: If a kept w_n has zero length or everything is trimmed
    """
    if w.dim != w_star.dim:
        raise DimensionMismatchError(f"w has dimension {w.dim} but w* has dimension {w_star.dim}")
    if len(w) < N + 1 or len(w_star) < N + 1:
        raise ConfigError(f"normalize_lw_witness needs N + 1 = {N + 1} vectors")
    xi = []
    running = 0
    for n in range(N + 1):
        running -= inner(w[n], w_star[n])
        xi.append(running)

    worst = 0
    for n in range(N):
        worst = max(worst, abs(family.a(n + 1) * inner(w[n], w[n + 1]) - xi[n]))
    if worst != 0:
        logger.warning(f"normalize_lw_witness: input misses a_(n+1)<w_n, w_(n+1)> = Xi_n by up to {float(worst):.3g}")

    trimmed = max((n for n in range(N + 1) if xi[n] == 0), default=-1)
    start = trimmed + 1
    if start > N:
        raise WitnessError(f"Xi_{N} = 0: nothing is left after trimming")

    vectors = []
    factor = 1
    for n in range(start, N + 1):
        if is_zero_vector(w[n]):
            raise WitnessError(f"w_{n} has zero length; the rescaling is undefined")
        vectors.append(scale(factor, w[n]))
        factor = 1 / (factor * xi[n])
    logger.debug(f"normalize_lw_witness: trimmed {start} leading indices")
    return VecSeq.of(w.dim, vectors, "r", start)


def lw_operator_from_witness(w: VecSeq, w_star: VecSeq) -> FactoredOperator:
    """
    Rank-k operator T_ij = <u_j, v_i> of the tridiagonal system from (w, w*).

    u_{2n} = w_{2n}, v_{2n} = w*_{2n}, v_{2n+1} = w_{2n+1}, u_{2n+1} = w*_{2n+1};
    then Xi_n = a_{n+1} <w_n, w_{n+1}> and trace T = sum <w_n, w*_n>.
    """
    if w.dim != w_star.dim:
        raise DimensionMismatchError(f"w has dimension {w.dim} but w* has dimension {w_star.dim}")
    count = min(len(w), len(w_star))
    rows = {i: (w_star[i] if i % 2 == 0 else w[i]) for i in range(count)}
    cols = {j: (w[j] if j % 2 == 0 else w_star[j]) for j in range(count)}
    return FactoredOperator(rows, cols, w.dim)


# ------------------------------------------------------------------
# Pentadiagonal annihilator
# ------------------------------------------------------------------


def block_positions(n: int) -> Tuple[Tuple[int, int], Tuple[int, int], Tuple[int, int]]:
    """
    Matrix positions (P, Q, R) of coefficient block n, with
    Xi_{2n} = a_n T_P + c_n T_Q and Xi_{2n+1} = -d_n T_Q + b_n T_R.
    """
    j, odd = divmod(n, 2)
    base = 4 * j
    if odd:
        return (base + 2, base + 3), (base + 2, base + 4), (base + 3, base + 4)
    return (base + 1, base), (base + 2, base), (base + 2, base + 1)


def _block_entries(case: int, a, b, c, d):
    if case == CASE_AB:
        return 1 / a, 0, 1 / b
    if case == CASE_D:
        return b / d, -1 / d, 0
    return 0, 1 / c, a / c


def penta_annihilator(family: CoefficientFamily, N: int) -> SparseOperator:
    """
    Sparse operator with T_00 = -1 and Xi_n = 1 for n <= 2N + 1.

    For each block n <= N the case attaining mu_n picks the entries at (P, Q, R):
    1/|a|+1/|b| -> (1/a, 0, 1/b); (1+|b|)/|d| -> (b/d, -1/d, 0);
    (1+|a|)/|c| -> (0, 1/c, a/c). Every other diagonal entry is zero, so the
    trace is -1 and <T f_n, f*_n> = 0 inside the window 2N + 2.

    Raises:
        WitnessError: If all three ratios are infinite at some n

    Example:
        >>> T = penta_annihilator(builtin_family("penta_geometric"), 1)
        >>> T[2, 3], T[3, 4]
        (Fraction(1, 2), Fraction(1, 2))
    """
    if family.kind != PENTA:
        raise ConfigError(f"penta_annihilator needs a penta family, got {family.kind}")
    entries: Dict[Tuple[int, int], object] = {(0, 0): -one(family.mode)}
    mass = 1
    for n in range(N + 1):
        a, b, c, d = family.coefficients(n)
        value, case = penta_mu_value(a, b, c, d)
        if case == 0:
            raise WitnessError(f"all three ratios of mu_{n} are infinite for {family.label}")
        for position, entry in zip(block_positions(n), _block_entries(case, a, b, c, d)):
            entries[position] = entry
        mass += value
    T = SparseOperator(entries)
    logger.info(f"penta_annihilator {family.label} N={N}: {len(T)} entries, trace-class proxy "
                f"sum|T_ij| = {float(T.abs_sum()):.6g} (1 + sum mu = {float(mass):.6g})")
    return T


def annihilator_mass_bound(T: SparseOperator, mu: MuSeq) -> Tuple[object, object]:
    """(sum |T_ij|, 1 + 2 sum mu_n): the trace-class proxy and its bound."""
    return T.abs_sum(), 1 + 2 * sum(mu.values)


# ------------------------------------------------------------------
# Pentadiagonal planar witness
# ------------------------------------------------------------------


@dataclass(frozen=True)
class TriangleSolution:
    """Planar x, y, z with <x, y> = 0, <x, z> = 1/A, <y, z> = 1/B and lengths X, Y, Z."""

    x: MpVector
    y: MpVector
    z: MpVector
    A: object
    B: object
    X: object
    Y: object
    Z: object
    alpha: object


def triangle_solve(A, B, X, Y, Z, tolerance: float = None) -> TriangleSolution:
    """
    Place x, y, z in the plane with |x| = X, |y| = Y, |z| = Z, x perpendicular to y,
    <x, z> = 1/A and <y, z> = 1/B.

    z lies along the first axis; alpha = atan2(1/(BYZ), 1/(AXZ)) so that
    cos(alpha) = 1/(AXZ); x = X(cos alpha, -sin alpha) and y = Y(sin alpha, cos alpha).
    Negative A or B move alpha into the matching quadrant. Arithmetic runs at
    the current mpmath precision.

    Args:
        A, B, X, Y, Z: Nonzero scalars (int, float, Fraction or mpf)
        tolerance: Relative tolerance of (AX)^-2 + (BY)^-2 = Z^2; defaults to tolerances.triangle

    Returns:
        TriangleSolution

    Raises:
        TriangleInfeasibleError: If a value is zero or the identity fails

    Example:
        >>> s = triangle_solve(1, 1, math.sqrt(2), math.sqrt(2), 1)
        >>> [float(c) for c in s.x], [float(c) for c in s.y]
        ([1.0, -1.0], [1.0, 1.0])
    """
    if tolerance is None:
        tolerance = float(config.get('tolerances.triangle', 1e-10))
    values = [to_mpf(value) if not isinstance(value, mpmath.mpf) else value for value in (A, B, X, Y, Z)]
    if any(value == 0 for value in values):
        raise TriangleInfeasibleError(f"triangle data must be nonzero, got A={A}, B={B}, X={X}, Y={Y}, Z={Z}")
    A_, B_, X_, Y_, Z_ = values
    X_, Y_, Z_ = abs(X_), abs(Y_), abs(Z_)
    hypotenuse = 1 / (A_ * X_) ** 2 + 1 / (B_ * Y_) ** 2
    if abs(hypotenuse - Z_ ** 2) > tolerance * Z_ ** 2:
        raise TriangleInfeasibleError(
            f"(AX)^-2 + (BY)^-2 = {mpmath.nstr(hypotenuse, 15)} differs from Z^2 = {mpmath.nstr(Z_ ** 2, 15)}")
    alpha = mpmath.atan2(1 / (B_ * Y_ * Z_), 1 / (A_ * X_ * Z_))
    cos_alpha, sin_alpha = mpmath.cos(alpha), mpmath.sin(alpha)
    z = (Z_, mpmath.mpf(0))
    x = (X_ * cos_alpha, -X_ * sin_alpha)
    y = (Y_ * sin_alpha, Y_ * cos_alpha)
    return TriangleSolution(x, y, z, A_, B_, X_, Y_, Z_, alpha)


@dataclass(frozen=True)
class LengthPlan:
    """
    Planned lengths of the pentadiagonal planar witness.

    V and M cover 0..N+1, U covers 0..N; ``cases`` holds the attaining case of
    mu_n for 0..N+1 and ``mu`` the exact mu_n. Lengths are mpf at ``precision`` bits.
    """

    V: Tuple
    M: Tuple
    U: Tuple
    cases: Tuple[int, ...]
    mu: Tuple
    precision: int

    def as_floats(self) -> Dict[str, List[float]]:
        return {"V": [float(v) for v in self.V], "M": [float(m) for m in self.M], "U": [float(u) for u in self.U]}


def _plan_bounds(case: int, a, b, c, d) -> Tuple[object, object]:
    """(M_{n+1}, lower bound on V_n) for one case, in mpf."""
    if case == CASE_AB:
        return 1 / mpmath.sqrt(abs(b)), 1 / mpmath.sqrt(abs(a))
    if case == CASE_C:
        return max(mpmath.sqrt(abs(a) / abs(c)), 1 / mpmath.sqrt(abs(c))), 2 / mpmath.sqrt(abs(c))
    return max(mpmath.sqrt(abs(b) / abs(d)), 1 / mpmath.sqrt(abs(d))), (2 + mpmath.sqrt(abs(b))) / mpmath.sqrt(abs(d))


def _build_plan(family: CoefficientFamily, N: int, bits: int) -> LengthPlan:
    mu = mu_penta(family, N + 1)
    if mu.infinite_indices:
        raise PlanError(f"mu_{mu.infinite_indices[0]} is infinite for {family.label}; no length plan exists")
    coefficients = [tuple(to_mpf(value) for value in family.coefficients(n)) for n in range(N + 2)]

    M = [mpmath.mpf(1)]
    lower = []
    for n in range(N + 2):
        next_m, bound = _plan_bounds(mu.cases[n], *coefficients[n])
        M.append(next_m)
        lower.append(bound)
    M = M[:N + 2]
    V = [max(M[n], lower[n]) for n in range(N + 2)]

    U = []
    for n in range(N + 1):
        a, b, c, d = coefficients[n]
        case = mu.cases[n]
        if case == CASE_AB:
            U.append(mpmath.sqrt(1 / (a * V[n]) ** 2 + 1 / (b * V[n + 1]) ** 2))
            continue
        if case == CASE_C:
            radicand = (c * V[n + 1] * V[n]) ** 2 - 1
            numerator = abs(a) * V[n]
        else:
            radicand = (d * V[n + 1] * V[n]) ** 2 - 1
            numerator = abs(b) * V[n + 1]
        if radicand <= 0:
            raise PlanError(f"non-positive radicand {mpmath.nstr(radicand, 10)} in U_{n} for {family.label}")
        U.append(numerator / mpmath.sqrt(radicand))
    return LengthPlan(tuple(V), tuple(M), tuple(U), mu.cases, mu.values, bits)


def penta_length_plan(family: CoefficientFamily, N: int) -> LengthPlan:
    """
    Lengths V_n = |v_n|, U_n = |u_n| and the auxiliary M_n for the planar witness.

    The recursion starts from M_0 = 1. For each n the case attaining mu_n sets

    - 1/|a|+1/|b|: M_{n+1} = |b|^(-1/2), V_n = max(M_n, |a|^(-1/2)),
      U_n = sqrt(1/(a V_n)^2 + 1/(b V_{n+1})^2)
    - (1+|a|)/|c|: M_{n+1} = max(sqrt(|a/c|), |c|^(-1/2)), V_n = max(M_n, 2|c|^(-1/2)),
      U_n = |a| V_n / sqrt(c^2 V_{n+1}^2 V_n^2 - 1)
    - (1+|b|)/|d|: M_{n+1} = max(sqrt(|b/d|), |d|^(-1/2)), V_n = max(M_n, (2 + sqrt|b|)|d|^(-1/2)),
      U_n = |b| V_{n+1} / sqrt(d^2 V_{n+1}^2 V_n^2 - 1)

    Raises:
        PlanError: If mu_n is infinite or a radicand is not positive
    """
    if family.kind != PENTA:
        raise ConfigError(f"penta_length_plan needs a penta family, got {family.kind}")
    bits = working_precision(family, N)
    with mpmath.workprec(bits):
        plan = _build_plan(family, N, bits)
    logger.info(f"penta_length_plan {family.label} N={N} at {bits} bits")
    return plan


def plan_bound_violations(plan: LengthPlan) -> List[Tuple[int, str, float, float]]:
    """
    Check M_{n+1} <= sqrt(mu_n), V_n <= max(2 sqrt(mu_n), M_n) and U_n <= 2 sqrt(mu_n).

    For indices driven by (1+|b|)/|d| the V bound uses 2 sqrt(2) sqrt(mu_n).

    Returns:
        List of (n, bound name, lhs, rhs) for every violated inequality
    """
    violations = []
    slack = mpmath.mpf(2) ** (-plan.precision // 2)
    with mpmath.workprec(plan.precision):
        for n in range(len(plan.U)):
            root = mpmath.sqrt(to_mpf(plan.mu[n]))
            factor = 2 * mpmath.sqrt(2) if plan.cases[n] == CASE_D else 2
            checks = [
                ("M_next", plan.M[n + 1], root),
                ("V", plan.V[n], max(factor * root, plan.M[n])),
                ("U", plan.U[n], 2 * root),
            ]
            for name, lhs, rhs in checks:
                if lhs > rhs * (1 + slack):
                    violations.append((n, name, float(lhs), float(rhs)))
    return violations


def _angle_placed(length, partner_length, target) -> Tuple[MpVector, MpVector]:
    """Local (partner, other) with |partner| = partner_length along the axis and <partner, other> = target."""
    cosine = target / (length * partner_length)
    if abs(cosine) > 1:
        raise InfeasibleAngleError(f"cannot realize cos = {mpmath.nstr(cosine, 12)}")
    angle = mpmath.acos(cosine)
    return (partner_length, mpmath.mpf(0)), (length * mpmath.cos(angle), length * mpmath.sin(angle))


def _local_triple(case: int, coefficients, V_n, V_next, U_n) -> Tuple[MpVector, MpVector, MpVector]:
    """Local (u_n, v_n, v_{n+1}) solving the relations of one block."""
    a, b, c, d = coefficients
    zero_vector = (mpmath.mpf(0), mpmath.mpf(0))
    if case == CASE_AB:
        solution = triangle_solve(a, b, V_n, V_next, U_n)
        return solution.z, solution.x, solution.y
    if case == CASE_C:
        if a == 0:
            v_n, v_next = _angle_placed(V_next, V_n, 1 / c)
            return zero_vector, v_n, v_next
        solution = triangle_solve(c / a, c, U_n, V_n, V_next)
        return solution.x, solution.y, solution.z
    if b == 0:
        v_n, v_next = _angle_placed(V_next, V_n, -1 / d)
        return zero_vector, v_n, v_next
    solution = triangle_solve(d / b, -d, U_n, V_next, V_n)
    return solution.x, solution.z, solution.y


def penta_witness_2d(family: CoefficientFamily, N: int) -> Tuple[VecSeq, VecSeq, LengthPlan]:
    """
    Planar sequences u_0..u_N and v_0..v_{N+1} with, for every n <= N,

        a_n <u_n, v_n> + c_n <v_{n+1}, v_n> = 1
        -d_n <v_{n+1}, v_n> + b_n <v_{n+1}, u_n> = 1

    v_0 = (0, V_0). Each step solves the block's triangle in local coordinates
    and rotates it so that the local v_n lands on the already placed v_n.

    Returns:
        (u, v, plan)

    Raises:
        PlanError, TriangleInfeasibleError, InfeasibleAngleError: When a step cannot be built
    """
    if family.kind != PENTA:
        raise ConfigError(f"penta_witness_2d needs a penta family, got {family.kind}")
    bits = working_precision(family, N)
    with mpmath.workprec(bits):
        plan = _build_plan(family, N, bits)
        v_mp: List[MpVector] = [(mpmath.mpf(0), plan.V[0])]
        u_mp: List[MpVector] = []
        for n in range(N + 1):
            coefficients = tuple(to_mpf(value) for value in family.coefficients(n))
            u_local, v_local, v_next_local = _local_triple(plan.cases[n], coefficients, plan.V[n], plan.V[n + 1], plan.U[n])
            turn = _heading(v_mp[n]) - _heading(v_local)
            u_mp.append(_rotate(u_local, turn))
            v_mp.append(_rotate(v_next_local, turn))
            logger.debug(f"penta_witness_2d step n={n} case={plan.cases[n]} turn={mpmath.nstr(turn, 8)}")
        u = VecSeq.of(2, [_to_fraction_vector(vector) for vector in u_mp], "u")
        v = VecSeq.of(2, [_to_fraction_vector(vector) for vector in v_mp], "v")
    total = sum(u.squared_lengths()) + sum(v.squared_lengths())
    logger.info(f"penta_witness_2d {family.label} N={N} at {bits} bits: sum |u|^2 + |v|^2 = {total:.6g}")
    return u, v, plan


def _partner(u_n: Vector, v_next: Vector, n: int) -> Vector:
    """q orthogonal to u_n with <q, v_next> = <u_n, v_next>."""
    product = inner(u_n, v_next)
    if product == 0:
        return (0, 0)
    turned = perp(u_n)
    denominator = inner(turned, v_next)
    if denominator == 0:
        raise WitnessError(f"u_{n} is parallel to v_{n + 1}; no orthogonal partner carries their product")
    return scale(divide(product, denominator), turned)


def assemble_rank_k(u: VecSeq, v: VecSeq, family: CoefficientFamily, N: int = None) -> FactoredOperator:
    """
    Finite-rank operator from witness sequences.

    Pentadiagonal families: rows R and columns C with T_ij = <R_i, C_j>;
    v_m sits at index 2m (column for even m, row for odd m); u_n sits at
    index 2n+1 (row for even n, column for odd n) and the opposite side of
    2n+1 holds a vector orthogonal to u_n with the same product with v_{n+1};
    row 0 holds v*_0 = -v_0/|v_0|^2. The result has trace -1, zero diagonal
    elsewhere, and reproduces the block products of u, v, so Xi_n = 1 wherever
    the planar relations hold.

    Tridiagonal families: ``u`` and ``v`` are read as (w, w*) and
    de-interleaved by lw_operator_from_witness.

    Args:
        u, v: Witness sequences (penta: u_0..u_N, v_0..v_{N+1})
        family: The family the witness was built for
        N: Last block; defaults to len(u) - 1

    Raises:
        WitnessError: If v_0 is zero (nothing can carry the -1 trace)
    """
    if family.kind == LW:
        return lw_operator_from_witness(u, v)
    if u.dim != 2 or v.dim != 2:
        raise DimensionMismatchError(f"pentadiagonal assembly needs planar vectors, got dims {u.dim} and {v.dim}")
    N = len(u) - 1 if N is None else N
    if len(u) < N + 1 or len(v) < N + 2:
        raise ConfigError(f"assemble_rank_k needs u_0..u_{N} and v_0..v_{N + 1}")
    if is_zero_vector(v[0]):
        raise WitnessError("v_0 is zero: no unstarred vector can be paired with -1")

    rows: Dict[int, Vector] = {0: scale(divide(-1, squared_norm(v[0])), v[0])}
    cols: Dict[int, Vector] = {}
    for m in range(N + 2):
        (cols if m % 2 == 0 else rows)[2 * m] = v[m]
    for n in range(N + 1):
        q = _partner(u[n], v[n + 1], n)
        if n % 2 == 0:
            rows[2 * n + 1], cols[2 * n + 1] = u[n], q
        else:
            cols[2 * n + 1], rows[2 * n + 1] = u[n], q
    T = FactoredOperator(rows, cols, 2)
    logger.info(f"assemble_rank_k {family.label} N={N}: {T!r}, trace = {T.trace()}")
    return T


@dataclass(frozen=True)
class RowMassDiagnostic:
    """Breakpoints of g_n, its minimum and minimizer, and nu_n = g_n at the operator's own entry."""

    n: int
    breakpoints: Tuple
    values: Tuple
    minimum: object
    argmin: object
    nu: object


def row_mass_diagnostic(T, family: CoefficientFamily, n: int) -> RowMassDiagnostic:
    """
    Minimum of g_n(x) = |(Xi_{2n} - c_n x)/a_n| + |x| + |(Xi_{2n+1} + d_n x)/b_n|.

    g_n is the mass |T_P| + |T_Q| + |T_R| of block n when T_Q = x and the other
    two entries are solved from the closed forms of Xi_{2n}, Xi_{2n+1}. It is
    convex and piecewise linear, so its minimum sits at one of the breakpoints
    0, Xi_{2n}/c_n, -Xi_{2n+1}/d_n (a breakpoint is dropped when c_n or d_n is 0).

    Raises:
        WitnessError: If a_n or b_n is zero (g_n is undefined)
    """
    if family.kind != PENTA:
        raise ConfigError(f"row_mass_diagnostic needs a penta family, got {family.kind}")
    a, b, c, d = family.coefficients(n)
    if a == 0 or b == 0:
        raise WitnessError(f"g_{n} needs nonzero a_{n} and b_{n}")
    xi = xi_closed_penta(T, family, 2 * n + 1)
    xi_even, xi_odd = xi[2 * n], xi[2 * n + 1]

    def g(x):
        return abs((xi_even - c * x) / a) + abs(x) + abs((xi_odd + d * x) / b)

    breakpoints = [0 * a]
    if c != 0:
        breakpoints.append(xi_even / c)
    if d != 0:
        breakpoints.append(-xi_odd / d)
    values = [g(x) for x in breakpoints]
    best = min(range(len(values)), key=lambda index: values[index])
    q_position = block_positions(n)[1]
    return RowMassDiagnostic(n, tuple(breakpoints), tuple(values), values[best], breakpoints[best],
                             g(T.entry(*q_position)))

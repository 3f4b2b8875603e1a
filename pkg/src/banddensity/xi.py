"""
Operators and the Xi-sequence.

Index orientation is fixed everywhere as T_ij = <T e_j, e_i> (row i, column j).

Xi_n is the difference between the partial traces of T in the system basis
and in the canonical basis:

    Xi_n = sum_{m<=n} <T f_m, f*_m> - sum_{m<=n} T_mm

It is computed incrementally from its definition, or read off the closed forms
available for the tridiagonal and pentadiagonal systems.
"""
import csv
import io
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Protocol, Tuple

from banddensity.errors import ConfigError, DimensionMismatchError, SupportWindowError
from banddensity.family import LW, PENTA, CoefficientFamily
from banddensity.scalars import format_scalar
from banddensity.systems import BandSystem
from banddensity.vectors import VecSeq, Vector, inner, is_zero_vector

logger = logging.getLogger(__name__)

DEFINITIONAL = "definitional"
CLOSED_FORM_LW = "closed_form_lw"
CLOSED_FORM_PENTA = "closed_form_penta"


class Operator(Protocol):
    """Anything exposing finitely supported matrix entries."""

    def entry(self, i: int, j: int): ...

    def trace(self): ...

    def support_bound(self) -> int: ...


class SparseOperator:
    """
    Finitely supported matrix (row, col) -> scalar.

    Zeros are never stored; entry() returns 0 outside the support. Instances
    are treated as immutable.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: Optional[Mapping[Tuple[int, int], object]] = None):
        cleaned: Dict[Tuple[int, int], object] = {}
        for (i, j), value in (entries or {}).items():
            if i < 0 or j < 0:
                raise ConfigError(f"operator entry ({i}, {j}) has a negative index")
            if value != 0:
                cleaned[(int(i), int(j))] = value
        self._entries = cleaned

    @classmethod
    def from_triples(cls, triples: Iterable[Tuple[int, int, object]]) -> "SparseOperator":
        entries: Dict[Tuple[int, int], object] = {}
        for i, j, value in triples:
            entries[(i, j)] = entries.get((i, j), 0) + value
        return cls(entries)

    def entry(self, i: int, j: int):
        return self._entries.get((i, j), 0)

    def __getitem__(self, key: Tuple[int, int]):
        return self.entry(*key)

    def items(self) -> List[Tuple[Tuple[int, int], object]]:
        """Entries in row-major order."""
        return sorted(self._entries.items())

    def __len__(self) -> int:
        return len(self._entries)

    def trace(self):
        return sum((value for (i, j), value in self._entries.items() if i == j), 0)

    def abs_sum(self):
        """Sum of |T_ij|, the finite-window trace-class proxy."""
        return sum((abs(value) for value in self._entries.values()), 0)

    def support_bound(self) -> int:
        """Largest row or column index in the support, -1 when T = 0."""
        return max((max(i, j) for i, j in self._entries), default=-1)

    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        merged = dict(self._entries)
        for key, value in other._entries.items():
            merged[key] = merged.get(key, 0) + value
        return SparseOperator(merged)

    def __mul__(self, factor) -> "SparseOperator":
        return SparseOperator({key: factor * value for key, value in self._entries.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "SparseOperator":
        return self * -1

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return self + (-other)

    def __eq__(self, other) -> bool:
        return isinstance(other, SparseOperator) and self._entries == other._entries

    def __repr__(self) -> str:
        return f"SparseOperator({len(self._entries)} entries, support <= {self.support_bound()})"


class FactoredOperator:
    """
    Finite-rank operator T_ij = <R_i, C_j> held as row and column vectors in R^k.

    Entries are produced on demand, so an operator assembled from a planar
    witness never materializes its dense square.
    """

    def __init__(self, rows: Mapping[int, Vector], cols: Mapping[int, Vector], dim: int):
        for side, vectors in (("row", rows), ("column", cols)):
            for index, vector in vectors.items():
                if len(vector) != dim:
                    raise DimensionMismatchError(f"{side} vector {index} has dimension {len(vector)}, expected {dim}")
        self.rows = {i: tuple(v) for i, v in rows.items() if not is_zero_vector(v)}
        self.cols = {j: tuple(v) for j, v in cols.items() if not is_zero_vector(v)}
        self.dim = dim

    def entry(self, i: int, j: int):
        row = self.rows.get(i)
        col = self.cols.get(j)
        if row is None or col is None:
            return 0
        return inner(row, col)

    def __getitem__(self, key: Tuple[int, int]):
        return self.entry(*key)

    def trace(self):
        return sum((inner(self.rows[i], self.cols[i]) for i in sorted(self.rows) if i in self.cols), 0)

    def support_bound(self) -> int:
        return max(max(self.rows, default=-1), max(self.cols, default=-1))

    @property
    def rank_bound(self) -> int:
        return self.dim

    def to_sparse(self) -> SparseOperator:
        """Materialize every entry (quadratic in the support size)."""
        return SparseOperator({(i, j): inner(row, col)
                               for i, row in self.rows.items() for j, col in self.cols.items()})

    def __repr__(self) -> str:
        return f"FactoredOperator(rank<={self.dim}, {len(self.rows)} rows, {len(self.cols)} cols)"


@dataclass(frozen=True)
class XiSeq:
    """Xi_0..Xi_N with the path that produced them."""

    values: Tuple
    provenance: str

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, n: int):
        return self.values[n]

    def to_csv(self) -> str:
        """CSV with columns n, xi, provenance."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["n", "xi", "provenance"])
        for n, value in enumerate(self.values):
            writer.writerow([n, format_scalar(value), self.provenance])
        return buffer.getvalue()


def fourier_term(T: Operator, system: BandSystem, m: int):
    """<T f_m, f*_m>, expanded over the band entries of f_m and f*_m only."""
    f_m = system.f(m)
    f_star_m = system.f_star(m)
    total = 0
    for i, star_value in f_star_m.entries:
        for j, value in f_m.entries:
            entry = T.entry(i, j)
            if entry != 0:
                total += star_value * entry * value
    return total


def fourier_terms(T: Operator, system: BandSystem, N: int) -> List:
    return [fourier_term(T, system, m) for m in range(N + 1)]


def _check_support(T: Operator, system: BandSystem, N: int):
    bound = T.support_bound()
    if bound > N + system.bandwidth:
        raise SupportWindowError(
            f"operator support reaches index {bound} but window N={N} with bandwidth "
            f"{system.bandwidth} only sees indices <= {N + system.bandwidth}")


def _xi_values(T: Operator, system: BandSystem, N: int) -> List:
    values = []
    running = 0
    for m in range(N + 1):
        running = running + fourier_term(T, system, m) - T.entry(m, m)
        values.append(running)
    return values


def xi_definitional(T: Operator, system: BandSystem, N: int, check_support: bool = True) -> XiSeq:
    """
    Xi_0..Xi_N straight from the definition.

    Args:
        T: Operator with support inside rows/cols <= N + L
        system: Band system
        N: Last index
        check_support: Reject operators whose support exceeds the window

    Returns:
        XiSeq with provenance 'definitional'

    Raises:
        SupportWindowError: If T reaches past N + L

    Example:
        >>> lw = build_lw_system(parse_family("5", "lw"))
        >>> xi_definitional(SparseOperator({(1, 0): 1}), lw, 0).values
        (Fraction(5, 1),)
    """
    if check_support:
        _check_support(T, system, N)
    return XiSeq(tuple(_xi_values(T, system, N)), DEFINITIONAL)


def xi_closed_lw(T: Operator, family: CoefficientFamily, N: int) -> XiSeq:
    """
    Tridiagonal closed form: Xi_{2n-1} = a_{2n} T_{2n-1,2n}, Xi_{2n} = a_{2n+1} T_{2n+1,2n}.
    """
    if family.kind != LW:
        raise ConfigError(f"xi_closed_lw needs an lw family, got {family.kind}")
    values = []
    for m in range(N + 1):
        if m % 2 == 1:
            values.append(family.a(m + 1) * T.entry(m, m + 1))
        else:
            values.append(family.a(m + 1) * T.entry(m + 1, m))
    return XiSeq(tuple(values), CLOSED_FORM_LW)


def xi_closed_penta(T: Operator, family: CoefficientFamily, N: int) -> XiSeq:
    """
    Pentadiagonal closed form, for m = 4j + r:

        Xi_{4j}   =  a_{2j}   T_{4j+1,4j}   + c_{2j}   T_{4j+2,4j}
        Xi_{4j+1} = -d_{2j}   T_{4j+2,4j}   + b_{2j}   T_{4j+2,4j+1}
        Xi_{4j+2} =  a_{2j+1} T_{4j+2,4j+3} + c_{2j+1} T_{4j+2,4j+4}
        Xi_{4j+3} = -d_{2j+1} T_{4j+2,4j+4} + b_{2j+1} T_{4j+3,4j+4}
    """
    if family.kind != PENTA:
        raise ConfigError(f"xi_closed_penta needs a penta family, got {family.kind}")
    values = []
    for m in range(N + 1):
        j, r = divmod(m, 4)
        base = 4 * j
        a, b, c, d = family.coefficients(2 * j + 1 if r >= 2 else 2 * j)
        if r == 0:
            value = a * T.entry(base + 1, base) + c * T.entry(base + 2, base)
        elif r == 1:
            value = -d * T.entry(base + 2, base) + b * T.entry(base + 2, base + 1)
        elif r == 2:
            value = a * T.entry(base + 2, base + 3) + c * T.entry(base + 2, base + 4)
        else:
            value = -d * T.entry(base + 2, base + 4) + b * T.entry(base + 3, base + 4)
        values.append(value)
    return XiSeq(tuple(values), CLOSED_FORM_PENTA)


def xi_closed(T: Operator, family: CoefficientFamily, N: int) -> XiSeq:
    """Closed form matching the family kind."""
    if family.kind == LW:
        return xi_closed_lw(T, family, N)
    return xi_closed_penta(T, family, N)


def xi_comparison_rows(definitional: XiSeq, closed: XiSeq) -> List[Tuple[int, object, object, object]]:
    """Rows (n, xi_definitional, xi_closed, abs_diff) over the shared domain."""
    count = min(len(definitional), len(closed))
    return [(n, definitional[n], closed[n], abs(definitional[n] - closed[n])) for n in range(count)]


def trace_two_ways(u: VecSeq, v: VecSeq, N: int) -> Tuple[object, object]:
    """
    Trace of T = sum_{t,l} <u_t, v_l> e_t (x) e_l (truncated to N) and sum_{n<=N} <u_n, v_n>.

    Returns:
        (trace of the assembled operator, direct sum); the two are equal

    Raises:
        DimensionMismatchError: If u and v live in different dimensions
        ConfigError: If either sequence is shorter than N + 1
    """
    if u.dim != v.dim:
        raise DimensionMismatchError(f"u has dimension {u.dim} but v has dimension {v.dim}")
    if len(u) < N + 1 or len(v) < N + 1:
        raise ConfigError(f"trace_two_ways needs N + 1 = {N + 1} vectors, got {len(u)} and {len(v)}")
    T = FactoredOperator({t: u[t] for t in range(N + 1)}, {l: v[l] for l in range(N + 1)}, u.dim)
    direct = sum((inner(u[n], v[n]) for n in range(N + 1)), 0)
    return T.trace(), direct

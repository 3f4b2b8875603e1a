"""
Xi-sequence tests: definitional path against the closed forms.
"""
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banddensity.errors import ConfigError, DimensionMismatchError, SupportWindowError
from banddensity.family import builtin_family, parse_family
from banddensity.systems import build_lw_system, build_system
from banddensity.vectors import VecSeq
from banddensity.xi import (
    CLOSED_FORM_LW,
    CLOSED_FORM_PENTA,
    DEFINITIONAL,
    FactoredOperator,
    SparseOperator,
    fourier_term,
    trace_two_ways,
    xi_closed,
    xi_closed_lw,
    xi_closed_penta,
    xi_comparison_rows,
    xi_definitional,
)

SUPPORT = 60

_values = st.fractions(min_value=-10, max_value=10, max_denominator=12)
_band_keys = st.tuples(st.integers(0, SUPPORT), st.integers(-2, 2)).map(
    lambda key: (key[0], min(max(key[0] + key[1], 0), SUPPORT)))
_any_keys = st.tuples(st.integers(0, SUPPORT), st.integers(0, SUPPORT))

# Mostly |i - j| <= 2, plus a few entries anywhere in the window
_entries = st.tuples(
    st.dictionaries(_band_keys, _values, max_size=30),
    st.dictionaries(_any_keys, _values, max_size=10),
).map(lambda parts: {**parts[1], **parts[0]})


@pytest.mark.unit
class TestSparseOperator:
    """Tests for the finitely supported operator."""

    def test_zeros_not_stored(self):
        T = SparseOperator({(0, 0): 0, (1, 2): Fraction(3)})
        assert len(T) == 1
        assert T[1, 2] == 3 and T[5, 5] == 0
        assert T.support_bound() == 2
        print("\n✓ Only nonzero entries are stored")

    def test_negative_index_rejected(self):
        with pytest.raises(ConfigError):
            SparseOperator({(-1, 0): 1})
        print("\n✓ Negative index rejected")

    def test_arithmetic(self):
        S = SparseOperator({(0, 0): 1, (1, 0): 2})
        T = SparseOperator({(0, 0): -1, (2, 2): 5})
        assert (S + T).items() == [((1, 0), 2), ((2, 2), 5)]
        assert (2 * S).trace() == 2
        assert (S - S) == SparseOperator()
        assert SparseOperator().support_bound() == -1
        print("\n✓ Sum, scaling and difference")

    def test_from_triples_accumulates(self):
        T = SparseOperator.from_triples([(0, 1, 1), (0, 1, 2), (3, 3, -1)])
        assert T[0, 1] == 3 and T.abs_sum() == 4
        print("\n✓ Repeated triples add up")

    def test_factored_matches_sparse(self):
        F = FactoredOperator({0: (1, 2), 3: (0, 1)}, {0: (3, 0), 1: (1, 1)}, 2)
        S = F.to_sparse()
        assert F[0, 1] == S[0, 1] == 3
        assert F[3, 1] == 1 and F[1, 1] == 0
        assert F.trace() == S.trace() == 3
        assert F.rank_bound == 2
        print("\n✓ Factored operator entries agree with their sparse form")

    def test_factored_dimension_checked(self):
        with pytest.raises(DimensionMismatchError):
            FactoredOperator({0: (1, 2)}, {0: (1,)}, 2)
        print("\n✓ Factor dimensions checked")


@pytest.mark.unit
class TestXiDefinitional:
    """Tests for Xi computed from its definition."""

    def test_single_entry_lw(self):
        """
        Test the hand-expanded value <T e_0, f*_0> = a_1 T_10.

        Verifies:
        - a_1 = 5 and T_10 = 1 give Xi_0 = 5 on both paths
        """
        family = parse_family("5", "lw", "rational")
        T = SparseOperator({(1, 0): 1})
        assert xi_definitional(T, build_lw_system(family), 0).values == (5,)
        assert xi_closed_lw(T, family, 0).values == (5,)
        print("\n✓ Xi_0 = 5")

    def test_provenance(self, lw_linear_system, penta_geometric_system):
        T = SparseOperator({(0, 0): 1})
        assert xi_definitional(T, lw_linear_system, 3).provenance == DEFINITIONAL
        assert xi_closed(T, lw_linear_system.family, 3).provenance == CLOSED_FORM_LW
        assert xi_closed(T, penta_geometric_system.family, 3).provenance == CLOSED_FORM_PENTA
        print("\n✓ Provenance recorded")

    def test_support_outside_window(self, lw_linear_system):
        """Entries past N + L cannot be seen by the window."""
        T = SparseOperator({(5, 5): 1})
        with pytest.raises(SupportWindowError):
            xi_definitional(T, lw_linear_system, 3)
        assert len(xi_definitional(T, lw_linear_system, 4)) == 5
        print("\n✓ Support beyond N + L rejected")

    def test_kind_mismatch(self, lw_families, penta_families):
        with pytest.raises(ConfigError):
            xi_closed_lw(SparseOperator(), penta_families["penta_unit"], 2)
        with pytest.raises(ConfigError):
            xi_closed_penta(SparseOperator(), lw_families["lw_linear"], 2)
        print("\n✓ Closed forms check the family kind")

    def test_csv(self):
        family = parse_family("5", "lw", "rational")
        csv_text = xi_definitional(SparseOperator({(1, 0): Fraction(1, 2)}), build_lw_system(family), 1).to_csv()
        assert csv_text.splitlines() == ["n,xi,provenance", "0,5/2,definitional", "1,0,definitional"]
        print("\n✓ CSV export of Xi")

    def test_comparison_rows(self, lw_linear_system):
        T = SparseOperator({(1, 0): 1, (1, 2): 3})
        rows = xi_comparison_rows(xi_definitional(T, lw_linear_system, 3),
                                  xi_closed(T, lw_linear_system.family, 3))
        assert [row[0] for row in rows] == [0, 1, 2, 3]
        assert all(row[3] == 0 for row in rows)
        assert rows[1][1] == 6
        print("\n✓ Comparison rows agree")


@pytest.mark.property
class TestXiOracle:
    """Closed forms agree with the definition for random sparse operators."""

    @pytest.mark.parametrize("name", ["lw_linear", "lw_geometric2", "lw_paired_squares",
                                      "penta_unit", "penta_geometric"])
    @settings(max_examples=100, deadline=None)
    @given(entries=_entries)
    def test_closed_form_matches_definition(self, name, entries):
        """
        Verifies:
        - xi_closed == xi_definitional entrywise, exactly, on 0..60
        """
        family = builtin_family(name, "rational")
        T = SparseOperator(entries)
        definitional = xi_definitional(T, build_system(family), SUPPORT)
        closed = xi_closed(T, family, SUPPORT)
        assert definitional.values == closed.values

    @settings(max_examples=50, deadline=None)
    @given(entries=_entries)
    def test_float_mode_within_tolerance(self, entries):
        family = builtin_family("penta_unit", "float")
        T = SparseOperator({key: float(value) for key, value in entries.items()})
        rows = xi_comparison_rows(xi_definitional(T, build_system(family), SUPPORT), xi_closed(T, family, SUPPORT))
        assert max(row[3] for row in rows) <= 1e-10

    @settings(max_examples=50, deadline=None)
    @given(entries=_entries)
    def test_partial_sums_are_fourier_terms_minus_diagonal(self, entries):
        system = build_system(builtin_family("lw_linear", "rational"))
        T = SparseOperator(entries)
        xi = xi_definitional(T, system, SUPPORT)
        for n in range(1, SUPPORT + 1):
            assert xi[n] - xi[n - 1] == fourier_term(T, system, n) - T[n, n]


    @pytest.mark.parametrize("name", ["lw_linear", "lw_paired_squares", "penta_unit", "penta_geometric"])
    @settings(max_examples=100, deadline=None)
    @given(first=_entries, second=_entries, alpha=_values, beta=_values)
    def test_linear_in_the_operator(self, name, first, second, alpha, beta):
        """
        Verifies:
        - Xi(alpha T1 + beta T2) = alpha Xi(T1) + beta Xi(T2) exactly on both paths
        """
        family = builtin_family(name, "rational")
        system = build_system(family)
        T1, T2 = SparseOperator(first), SparseOperator(second)
        combined = alpha * T1 + beta * T2
        for xi in (lambda T: xi_definitional(T, system, SUPPORT), lambda T: xi_closed(T, family, SUPPORT)):
            expected = [alpha * x + beta * y for x, y in zip(xi(T1).values, xi(T2).values)]
            assert list(xi(combined).values) == expected


@pytest.mark.unit
class TestTraceTwoWays:
    """Trace of an assembled finite-rank operator."""

    def test_planar_sequences(self):
        u = VecSeq.of(2, [(1, 0), (0, 2), (Fraction(1, 2), 1)], "u")
        v = VecSeq.of(2, [(3, 5), (1, Fraction(1, 4)), (2, 2)], "v")
        assembled, direct = trace_two_ways(u, v, 2)
        assert assembled == direct == 3 + Fraction(1, 2) + 3
        print(f"\n✓ Both traces equal {direct}")

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            trace_two_ways(VecSeq.of(1, [(1,)], "u"), VecSeq.of(2, [(1, 0)], "v"), 0)
        print("\n✓ Dimension mismatch rejected")

    def test_too_short(self):
        with pytest.raises(ConfigError):
            trace_two_ways(VecSeq.of(1, [(1,)], "u"), VecSeq.of(1, [(1,)], "v"), 3)
        print("\n✓ Short sequences rejected")

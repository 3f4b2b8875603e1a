"""
Coefficient family and expression DSL tests.

Covers parsing, printing, exact/float evaluation, built-in families and the
pentadiagonal constraint c_n + d_n = a_n b_n.
"""
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banddensity.dsl import BinOp, Num, Var, evaluate, parse_expression, print_expression
from banddensity.errors import (
    CoefficientOverflowError,
    ConfigError,
    ConstraintViolationError,
    FamilyEvaluationError,
    FamilySyntaxError,
    UnknownFamilyError,
    ZeroCoefficientError,
)
from banddensity.family import (
    BUILTIN_NAMES,
    LW,
    PENTA,
    builtin_family,
    check_penta_constraint,
    family_from_spec,
    parse_family,
    perturbed_penta_family,
)


@pytest.mark.unit
class TestExpressionParsing:
    """Tests for the lark-based coefficient grammar."""

    def test_power_parses_to_tree(self):
        """
        Test that n^2 parses into a power node.

        Verifies:
        - Operator and operands of the root node
        """
        assert parse_expression("n^2") == BinOp("^", Var("n"), Num("2"))
        print("\n✓ n^2 parsed into BinOp('^', n, 2)")

    def test_power_is_right_associative(self):
        """2^3^2 groups as 2^(3^2)."""
        assert evaluate(parse_expression("2^3^2"), 0) == 512
        print("\n✓ Power is right associative")

    def test_unary_minus_binds_below_power(self):
        """-n^2 means -(n^2)."""
        assert evaluate(parse_expression("-n^2"), 3) == -9
        assert evaluate(parse_expression("(-n)^2"), 3) == 9
        print("\n✓ Unary minus precedence is correct")

    @pytest.mark.parametrize("text, position", [
        ("2 * * n", 4),
        ("n $ 2", 2),
    ])
    def test_syntax_error_reports_offset(self, text, position):
        """
        Test that malformed input raises with the offset of the bad token.

        Verifies:
        - FamilySyntaxError is raised
        - The offset points at the offending character
        """
        with pytest.raises(FamilySyntaxError) as excinfo:
            parse_expression(text)
        assert excinfo.value.position == position
        print(f"\n✓ {text!r} rejected at offset {position}")

    def test_trailing_operator_rejected(self):
        """Input that ends mid-expression is a syntax error."""
        with pytest.raises(FamilySyntaxError):
            parse_expression("n +")
        print("\n✓ Trailing operator rejected")

    def test_unknown_variable_rejected(self):
        """Only n is a variable."""
        with pytest.raises(FamilySyntaxError) as excinfo:
            parse_expression("m + 1")
        assert excinfo.value.position == 0
        print("\n✓ Unknown variable rejected")

    def test_call_arity_checked(self):
        """pow takes two arguments."""
        with pytest.raises(FamilySyntaxError):
            parse_expression("pow(n)")
        print("\n✓ Wrong arity rejected")

    @pytest.mark.parametrize("text, printed", [
        ("((n)) ^ (2)", "n^2"),
        ("(n + 1) * 2", "(n + 1) * 2"),
        ("n - (1 - n)", "n - (1 - n)"),
        ("2^(2*n-1)", "2^(2 * n - 1)"),
        ("geometric( 3 )", "geometric(3)"),
    ])
    def test_print_uses_minimal_parentheses(self, text, printed):
        """Printing keeps only the parentheses the grammar needs."""
        assert print_expression(parse_expression(text)) == printed
        print(f"\n✓ {text!r} printed as {printed!r}")


_leaves = st.one_of(st.just("n"), st.integers(min_value=0, max_value=9).map(str))


def _arithmetic(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
        children.map(lambda c: f"-({c})"),
    )


def _combine(children):
    return st.one_of(
        st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]}) {t[1]} ({t[2]})"),
        children.map(lambda c: f"-({c})"),
        children.map(lambda c: f"({c})^2"),
    )


@pytest.mark.property
class TestExpressionProperties:
    """Property-based round trip of the printer and parser."""

    @settings(max_examples=200, deadline=None)
    @given(st.recursive(_leaves, _combine, max_leaves=8))
    def test_printed_form_parses_to_same_tree(self, text):
        """
        Verifies:
        - parse(print(tree)) == tree for random expressions
        """
        tree = parse_expression(text)
        assert parse_expression(print_expression(tree)) == tree

    @settings(max_examples=100, deadline=None)
    @given(st.recursive(_leaves, _arithmetic, max_leaves=6), st.integers(min_value=0, max_value=12))
    def test_float_mode_agrees_with_rational_mode(self, text, n):
        """Small integer polynomials evaluate identically in both modes."""
        tree = parse_expression(text)
        exact = evaluate(tree, n, "rational")
        assert evaluate(tree, n, "float") == pytest.approx(float(exact), rel=1e-12, abs=1e-12)


@pytest.mark.unit
class TestEvaluation:
    """Tests for exact and float evaluation."""

    def test_rational_division_is_exact(self):
        assert evaluate(parse_expression("1/3 + 1/6"), 0) == Fraction(1, 2)
        print("\n✓ 1/3 + 1/6 = 1/2 exactly")

    def test_decimal_literal_is_exact(self):
        assert evaluate(parse_expression("0.1 * n"), 10) == 1
        print("\n✓ Decimal literals are exact rationals")

    def test_geometric_call(self):
        assert evaluate(parse_expression("geometric(2)"), 5) == 32
        assert evaluate(parse_expression("pow(n, 2)"), 7) == 49
        print("\n✓ geometric(b) = b^n and pow(x, y) = x^y")

    def test_non_integer_exponent_rejected_in_rational_mode(self):
        """
        Verifies:
        - n^0.5 raises in rational mode
        - n^0.5 evaluates in float mode
        """
        tree = parse_expression("n^0.5")
        with pytest.raises(FamilyEvaluationError):
            evaluate(tree, 4, "rational")
        assert evaluate(tree, 4, "float") == 2.0
        print("\n✓ Irrational powers only in float mode")

    def test_division_by_zero_reports_index(self):
        with pytest.raises(FamilyEvaluationError) as excinfo:
            evaluate(parse_expression("1/(n-3)"), 3)
        assert excinfo.value.index == 3
        print("\n✓ Division by zero carries the index")

    def test_float_overflow_raises(self):
        with pytest.raises(CoefficientOverflowError) as excinfo:
            evaluate(parse_expression("2^n"), 2000, "float")
        assert excinfo.value.index == 2000
        print("\n✓ Float overflow detected")

    def test_negative_base_with_fractional_exponent_rejected(self):
        with pytest.raises(FamilyEvaluationError):
            evaluate(parse_expression("(0-n)^0.5"), 2, "float")
        print("\n✓ Negative base with fractional exponent rejected")


@pytest.mark.unit
class TestFamilies:
    """Tests for family construction and the pentadiagonal constraint."""

    def test_lw_family_values(self):
        """a_0 is zero for tridiagonal families; a_n follows the expression."""
        family = parse_family("n^2", LW)
        assert family.a(0) == 0
        assert family.a(5) == 25
        assert family.spec == {"kind": "lw", "a": "n^2"}
        print("\n✓ lw family evaluates n^2")

    def test_penta_derives_d(self):
        """
        Test that a missing d is derived from the constraint.

        Verifies:
        - d_n = a_n b_n - c_n
        - Constraint residual is zero
        """
        family = parse_family(None, PENTA, a="1", b="1", c="1/2")
        assert family.coefficients(3) == (1, 1, Fraction(1, 2), Fraction(1, 2))
        assert family.constraint_residual(3) == 0
        print("\n✓ d derived as ab - c")

    def test_penta_four_expressions_checked(self):
        """A supplied d that breaks c + d = ab is rejected at the first bad index."""
        with pytest.raises(ConstraintViolationError) as excinfo:
            parse_family(None, PENTA, a="n", b="n", c="n", d="n^2 - n + 1")
        assert excinfo.value.index == 0
        print("\n✓ Inconsistent d rejected")

    def test_penta_four_expressions_accepted(self):
        family = parse_family(["n", "2", "n", "n"], PENTA)
        check_penta_constraint(family, 10)
        print("\n✓ Consistent four-expression family accepted")

    def test_lw_zero_coefficient_rejected_at_parse(self):
        """
        Verifies:
        - a_3 = 0 is reported at index 3 when the family is parsed
        - A zero beyond the checked window is left to the builders
        - Irrational values parse in rational mode
        """
        with pytest.raises(ZeroCoefficientError) as excinfo:
            parse_family("n - 3", LW, "rational")
        assert excinfo.value.index == 3
        assert parse_family("n - 100", LW, "rational").a(100) == 0
        assert parse_family("n^0.5", LW, "rational").with_mode("float").a(4) == pytest.approx(2.0)
        print("\n✓ a_n = 0 inside the window fails at parse")

    def test_lw_zero_check_stops_at_overflow(self):
        family = parse_family("2^(n^2)", LW, "float")
        assert family.a(3) == 512.0
        print("\n✓ Overflowing a_n ends the nonzero check without an error")

    def test_penta_rejects_single_string(self):
        with pytest.raises(ConfigError):
            parse_family("n", PENTA)
        print("\n✓ Single expression rejected for penta")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            parse_family("n", "hexa")
        print("\n✓ Unknown kind rejected")

    def test_with_mode_switches_arithmetic(self):
        family = parse_family("1/n", LW)
        assert family.a(3) == Fraction(1, 3)
        assert family.with_mode("float").a(3) == pytest.approx(1 / 3)
        print("\n✓ with_mode switches to float")

    def test_perturbed_family_breaks_constraint_once(self, penta_families):
        family = perturbed_penta_family(penta_families["penta_unit"], 1, Fraction(1, 10))
        assert family.constraint_residual(1) == Fraction(1, 10)
        assert family.constraint_residual(0) == 0
        assert family.constraint_residual(2) == 0
        print("\n✓ Perturbation only at the requested index")


@pytest.mark.unit
class TestBuiltins:
    """Tests for built-in families."""

    def test_all_builtins_available(self):
        assert set(BUILTIN_NAMES) == {"lw_linear", "lw_geometric2", "lw_paired_squares",
                                      "penta_unit", "penta_geometric"}
        print(f"\n✓ {len(BUILTIN_NAMES)} built-in families")

    def test_unknown_builtin(self):
        with pytest.raises(UnknownFamilyError) as excinfo:
            builtin_family("lw_cubic")
        assert "lw_linear" in str(excinfo.value)
        print("\n✓ Unknown built-in lists the available names")

    def test_paired_squares_values(self):
        family = builtin_family("lw_paired_squares")
        assert [family.a(n) for n in range(1, 7)] == [1, 1, 4, 4, 9, 9]
        print("\n✓ lw_paired_squares = 1, 1, 4, 4, 9, 9, ...")

    def test_penta_builtins_satisfy_constraint(self, penta_families):
        for family in penta_families.values():
            for n in range(50):
                check_penta_constraint(family, n)
        print("\n✓ Built-in penta families satisfy c + d = ab")

    def test_penta_geometric_values(self, penta_families):
        assert penta_families["penta_geometric"].coefficients(2) == (4, 4, 8, 8)
        print("\n✓ penta_geometric coefficients at n=2")

    @pytest.mark.parametrize("name", BUILTIN_NAMES)
    def test_spec_round_trip(self, name):
        family = builtin_family(name)
        rebuilt = family_from_spec(family.spec)
        assert [rebuilt.coefficients(n) for n in range(10)] == [family.coefficients(n) for n in range(10)]
        assert rebuilt.facts == family.facts
        print(f"\n✓ {name} rebuilt from its spec")

    def test_inline_spec_round_trip(self):
        family = family_from_spec({"kind": "penta", "a": "n", "b": "2", "c": "n", "label": "mine"})
        assert family.label == "mine"
        assert family.coefficients(3) == (3, 2, 3, 3)
        print("\n✓ Inline penta spec rebuilt")

    def test_float_builtin_values_are_floats(self):
        family = builtin_family("lw_geometric2", "float")
        assert isinstance(family.a(3), float) and family.a(3) == 8.0
        assert math.isclose(family.with_mode("rational").a(3), 8)
        print("\n✓ Float built-in evaluates to floats")

"""
Witness bundle tests: construction choice, verification and the JSON round trip.
"""
import json
from fractions import Fraction

import pytest

from banddensity.errors import ConfigError, WitnessError
from banddensity.export import (
    EXPORT_FORMAT,
    LW_COLLINEAR,
    LW_PLANAR,
    PENTA_ANNIHILATOR,
    PENTA_PLANAR,
    build_witness,
    bundle_to_dict,
    choose_construction,
    load_bundle,
    operator_from_dict,
    verify_export,
    write_bundle,
)
from banddensity.family import builtin_family
from banddensity.verify import EXIT_PASS, PASS
from banddensity.xi import FactoredOperator, SparseOperator


@pytest.mark.unit
class TestChooseConstruction:
    """Construction per family kind and k."""

    @pytest.mark.parametrize("name, k, expected", [
        ("lw_linear", 1, LW_COLLINEAR),
        ("lw_linear", 2, LW_PLANAR),
        ("lw_linear", 5, LW_PLANAR),
        ("penta_unit", 1, PENTA_ANNIHILATOR),
        ("penta_unit", 2, PENTA_PLANAR),
    ])
    def test_choice(self, name, k, expected):
        assert choose_construction(builtin_family(name), k) == expected
        print(f"\n✓ {name} k={k}: {expected}")

    def test_k_zero_rejected(self, lw_families):
        with pytest.raises(ConfigError):
            choose_construction(lw_families["lw_linear"], 0)
        print("\n✓ k = 0 rejected")


@pytest.mark.regression
class TestBuildWitness:
    """Every construction yields a trace -1 operator that passes its own report."""

    def test_penta_annihilator(self, penta_families, report_artifacts):
        """
        Test the sparse annihilator bundle for a_n = b_n = 2^n.

        Verifies:
        - Trace is exactly -1
        - Every check passes in rational mode
        - The trace-class proxy stays within its bound
        """
        bundle = build_witness(penta_families["penta_geometric"], 20)
        report_artifacts.append(bundle.report)
        assert bundle.construction == PENTA_ANNIHILATOR
        assert isinstance(bundle.operator, SparseOperator)
        assert bundle.operator.trace() == Fraction(-1)
        assert bundle.window == 42
        assert bundle.report.status == PASS
        assert bundle.monitors["trace_class_proxy"]["within_bound"] is True
        print(f"\n✓ Annihilator bundle with {len(bundle.operator)} entries")

    def test_lw_collinear(self, lw_families, report_artifacts):
        bundle = build_witness(lw_families["lw_linear"], 20)
        report_artifacts.append(bundle.report)
        assert bundle.construction == LW_COLLINEAR
        assert isinstance(bundle.operator, FactoredOperator)
        assert bundle.operator.trace() == -1
        assert bundle.report.status == PASS
        assert bundle.report.check("lw_relation").status == PASS
        assert set(bundle.vectors) == {"r", "w", "w_star"}
        print("\n✓ Collinear tridiagonal bundle")

    def test_lw_planar(self, lw_families, report_artifacts):
        bundle = build_witness(lw_families["lw_paired_squares"], 20, k=2)
        report_artifacts.append(bundle.report)
        assert bundle.construction == LW_PLANAR
        assert bundle.operator.dim == 2
        assert bundle.operator.trace() == -1
        assert bundle.report.status == PASS
        print("\n✓ Planar tridiagonal bundle")

    def test_penta_planar(self, penta_families, report_artifacts):
        """
        Verifies:
        - The rank-two operator passes the Xi checks within tolerances.residual
        - The block relations and plan bounds are part of the report
        """
        bundle = build_witness(penta_families["penta_unit"], 6, k=2)
        report_artifacts.append(bundle.report)
        assert bundle.construction == PENTA_PLANAR
        assert bundle.operator.trace() == -1
        assert bundle.report.status == PASS
        assert bundle.report.check("eq9").status == PASS
        assert bundle.report.check("xi_identity").tolerance == pytest.approx(1e-10)
        assert "uv_squared_lengths" in bundle.monitors
        print("\n✓ Planar pentadiagonal bundle")

    def test_monitor_warns_on_growth(self, lw_families):
        """mu_n^2 ~ 1/n for a_n = n, so the r monitor cannot flatten."""
        bundle = build_witness(lw_families["lw_linear"], 30)
        monitor = bundle.monitors["r_squared_lengths"]
        assert monitor["flat"] is False
        assert any("r_squared_lengths" in warning for warning in bundle.warnings)
        print(f"\n✓ Warning recorded: {bundle.warnings[0]}")

    def test_short_window_rejected(self, lw_families):
        with pytest.raises(ConfigError):
            build_witness(lw_families["lw_linear"], 0)
        print("\n✓ N = 0 rejected")


@pytest.mark.regression
class TestExportRoundTrip:
    """write_bundle / load_bundle / verify_export."""

    @pytest.mark.parametrize("name, k", [("penta_geometric", 1), ("lw_linear", 1)])
    def test_exact_round_trip(self, name, k, tmp_path):
        """
        Verifies:
        - The reloaded operator equals the original
        - verify_export reproduces the stored residual summary exactly
        """
        bundle = build_witness(builtin_family(name), 12, k)
        path = tmp_path / f"{name}.json"
        write_bundle(bundle, path)

        data = json.loads(path.read_text())
        assert data["format"] == EXPORT_FORMAT
        assert data["construction"] == bundle.construction
        assert data["family"] == {"builtin": name}

        loaded = load_bundle(path)
        assert loaded.family.label == name
        if isinstance(bundle.operator, FactoredOperator):
            assert loaded.operator.to_sparse() == bundle.operator.to_sparse()
        else:
            assert loaded.operator == bundle.operator
        report = verify_export(path)
        assert report.to_dict() == data["residual_summary"]
        assert report.exit_code == EXIT_PASS
        print(f"\n✓ {name}: export verified again with the same report")

    def test_planar_round_trip(self, tmp_path):
        bundle = build_witness(builtin_family("penta_unit"), 4, k=2)
        path = tmp_path / "planar.json"
        write_bundle(bundle, path)
        data = json.loads(path.read_text())
        assert "operator_factors" in data
        report = verify_export(path)
        assert report.status == data["residual_summary"]["status"] == PASS
        assert [check["name"] for check in report.to_dict()["checks"]] == \
            [check["name"] for check in data["residual_summary"]["checks"]]
        print("\n✓ Planar export verified again")

    def test_dict_keys(self):
        data = bundle_to_dict(build_witness(builtin_family("penta_unit"), 3))
        for key in ("format", "version", "family_label", "kind", "mode", "construction", "N", "k", "window",
                    "vectors", "operator_entries", "monitors", "warnings", "residual_summary"):
            assert key in data
        print("\n✓ Export carries every documented key")


@pytest.mark.unit
class TestLoadErrors:
    """Malformed exports are rejected with library errors."""

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_bundle(tmp_path / "absent.json")
        print("\n✓ Missing file")

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json")
        with pytest.raises(ConfigError):
            load_bundle(path)
        print("\n✓ Invalid JSON")

    def test_wrong_format(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(ConfigError):
            load_bundle(path)
        print("\n✓ Foreign document rejected")

    def test_unknown_construction(self, tmp_path):
        path = tmp_path / "unknown.json"
        path.write_text(json.dumps({"format": EXPORT_FORMAT, "construction": "spiral"}))
        with pytest.raises(WitnessError):
            load_bundle(path)
        print("\n✓ Unknown construction rejected")

    def test_operator_without_entries(self):
        with pytest.raises(ConfigError):
            operator_from_dict({})
        print("\n✓ Operator JSON needs entries or factors")

    def test_operator_entries(self):
        T = operator_from_dict({"operator_entries": [[0, 1, "1/2"], [2, 2, "-3"]]})
        assert T[0, 1] == Fraction(1, 2) and T.trace() == -3
        print("\n✓ Operator entries parsed exactly")

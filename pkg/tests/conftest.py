"""
Pytest configuration and fixtures for the band-density test suite.
"""
import json

import pytest
from pathlib import Path

from framework.config_manager import config
from banddensity.family import builtin_family
from banddensity.systems import build_system

LW_BUILTINS = ("lw_linear", "lw_geometric2", "lw_paired_squares")
PENTA_BUILTINS = ("penta_unit", "penta_geometric")


@pytest.fixture(scope="session")
def lw_families():
    """Rational-mode tridiagonal built-ins keyed by name."""
    return {name: builtin_family(name, "rational") for name in LW_BUILTINS}


@pytest.fixture(scope="session")
def penta_families():
    """Rational-mode pentadiagonal built-ins keyed by name."""
    return {name: builtin_family(name, "rational") for name in PENTA_BUILTINS}


@pytest.fixture(params=LW_BUILTINS + PENTA_BUILTINS)
def any_builtin(request):
    """Each built-in family in rational mode, one test run per family."""
    return builtin_family(request.param, "rational")


@pytest.fixture
def lw_linear_system():
    return build_system(builtin_family("lw_linear", "rational"))


@pytest.fixture
def penta_geometric_system():
    return build_system(builtin_family("penta_geometric", "rational"))


@pytest.fixture
def restore_config():
    """
    Reload the default config.yaml after a test that swaps the configuration.

    Yields:
        The global ConfigManager
    """
    yield config
    config.load_config()


@pytest.fixture
def report_artifacts(request):
    """
    Collect verification reports and save them when the test fails.

    Usage:
        report_artifacts.append(report)

    After test:
        - Writes every collected report to <artifacts_dir>/failures/<test>.json on failure
    """
    reports = []
    yield reports

    rep_call = getattr(request.node, "rep_call", None)
    if reports and rep_call is not None and rep_call.failed:
        _save_failure_reports(reports, request.node.nodeid)


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """
    Hook to make test results available to fixtures.

    This allows the report_artifacts fixture to know if a test failed.
    """
    outcome = yield
    rep = outcome.get_result()
    setattr(item, f"rep_{rep.when}", rep)


def _save_failure_reports(reports, test_name: str):
    """
    Write the reports collected by a failed test.

    Args:
        reports: verify.Report instances
        test_name: Name/ID of the failed test
    """
    try:
        project_root = Path(__file__).parent.parent
        artifact_dir = project_root / config.get('testing.artifacts_dir', 'artifacts') / "failures"
        artifact_dir.mkdir(parents=True, exist_ok=True)

        safe_name = test_name.replace("::", "_").replace("/", "_").replace("\\", "_")
        artifact_path = artifact_dir / f"{safe_name}.json"
        artifact_path.write_text(json.dumps([report.to_dict() for report in reports], indent=2))
        print(f"\nReports saved: {artifact_path}")

    except Exception as e:
        print(f"\nFailed to save reports: {e}")


# Configuration for pytest
def pytest_configure(config):
    """Add custom markers to pytest."""
    config.addinivalue_line(
        "markers", "property: mark test as a hypothesis property suite"
    )
    config.addinivalue_line(
        "markers", "smoke: mark test as a smoke test"
    )
    config.addinivalue_line(
        "markers", "regression: mark test as a regression test"
    )
    config.addinivalue_line(
        "markers", "slow: mark test as slow (large windows or horizons)"
    )

import shutil

import pytest

from portfolio_engine.fixture import write_fixture


@pytest.fixture(scope="session")
def fixture_src(tmp_path_factory):
    """The bundled synthetic dataset (12 firms, 300 days), generated once."""
    d = tmp_path_factory.mktemp("fixture_src")
    write_fixture(d, seed=7, firms=12, days=300)
    return d


@pytest.fixture
def fixture_dir(fixture_src, tmp_path):
    """A private copy of the dataset so each test can write its own outputs."""
    d = tmp_path / "fx"
    shutil.copytree(fixture_src, d)
    return d



ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    """Print one PASS/FAIL line per acceptance criterion that ran."""
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])

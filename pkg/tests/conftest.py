import pytest

from puckpace.sequencing import sequence_table
from puckpace.synth import GenConfig, TeamConfig, generate


@pytest.fixture(scope="session")
def season():
    """Four-game two-team season shared by the quicker tests."""
    return generate(GenConfig(seed=3, n_games=4))


@pytest.fixture(scope="session")
def tab(season):
    return sequence_table(season.log)


@pytest.fixture(scope="session")
def three_team_season():
    teams = [TeamConfig("A", {"DZ": 1.0, "NZ": 1.0, "OZ": 1.2}), TeamConfig("B"), TeamConfig("C")]
    return generate(GenConfig(seed=5, n_games=6, teams=teams))


# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

from helpers import CRITERIA  # noqa: E402


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for k in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[k])

import pytest

# reduced germs whose resolutions stay over Q, with their branch counts
CORPUS = {
    "x*y": 2,
    "y^2-x^3": 1,
    "y^2-x^5": 1,
    "y^3-x^4": 1,
    "(y^2-x^3)*(y^2+x^3)": 2,
    "x*(y^2-x^3)": 2,
    "(y-x)*(y+x)*(y-2*x)": 3,
    "y*(y-x^2)": 2,
    "y^2-x^2": 2,
    "(y-x^2)*(y+x^2)": 2,
}


@pytest.fixture(scope="session")
def corpus():
    return dict(CORPUS)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

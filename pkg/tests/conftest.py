import numpy as np
import pytest

from macstag.grid import MacGrid

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


def random_nonuniform_grid(rng, dim, max_cells=8, lo=0.0, hi=1.0):
    """Random strictly increasing axis partitions, at least 2 cells per axis."""
    axes = []
    for _ in range(dim):
        n = int(rng.integers(2, max_cells + 1))
        cuts = np.sort(rng.uniform(lo, hi, size=n - 1))
        # keep interior cuts separated so widths stay well above roundoff
        while n > 1 and np.min(np.diff(np.concatenate([[lo], cuts, [hi]]))) < 1e-3 * (hi - lo):
            cuts = np.sort(rng.uniform(lo, hi, size=n - 1))
        axes.append(np.concatenate([[lo], cuts, [hi]]))
    return MacGrid(axes)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)

import numpy as np
import pytest

from prism_rca.model import FailureCase, PropertyId, PropertyKind, PropertySeries

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_series(component, metric, kind, values, start=0):
    values = np.asarray(values, dtype=float)
    return PropertySeries(PropertyId(component, metric, kind), np.arange(start, start + len(values)), values)


@pytest.fixture
def tiny_case():
    """Two components, ten pre and five post steps; ``a`` is the root."""
    rng = np.random.default_rng(7)
    pre, post = 10, 5
    n = pre + post
    step = np.r_[np.zeros(pre), np.ones(post)]
    series = [
        make_series("a", "cpu", PropertyKind.INTERNAL, 50 + rng.normal(size=n) + 20 * step),
        make_series("a", "latency", PropertyKind.EXTERNAL, 1 + 0.01 * rng.normal(size=n) + 0.5 * step),
        make_series("b", "cpu", PropertyKind.INTERNAL, 40 + rng.normal(size=n)),
        make_series("b", "latency", PropertyKind.EXTERNAL, 2 + 0.01 * rng.normal(size=n) + 1.0 * step),
    ]
    return FailureCase("tiny", tuple(series), inject_time=pre, ground_truth=frozenset({"a"}), fault_type="cpu")

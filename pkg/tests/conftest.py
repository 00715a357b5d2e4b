import numpy as np
import pandas as pd
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def registry():
    from tabtree.registry import builtin_registry

    return builtin_registry()


@pytest.fixture
def mixed_frame():
    rng = np.random.default_rng(11)
    n = 80
    frame = pd.DataFrame({
        "num": rng.normal(10, 3, n),
        "cat": rng.choice(["red", "green", "blue"], n).astype(object),
        "cnt": rng.integers(-5, 20, n).astype(float),
        "y": rng.choice(["yes", "no"], n).astype(object),
    })
    frame.loc[[2, 17], "num"] = np.nan
    frame.loc[[5], "cat"] = None
    return frame


_VERDICTS = []


@pytest.fixture
def verdict():
    """Print and record one pass/fail line for an acceptance criterion, then assert it."""

    def record(label: str, ok: bool, detail: str):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        _VERDICTS.append(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)

import os

import numpy as np
import pytest

from eegpnn.ingest import subject_specs, synthesize

_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance_line(request):
    """Record one pass/fail line for the acceptance summary.

    Call with ``(criterion, passed, detail)`` before asserting so that a
    failing criterion still gets its line.
    """
    lines = request.config.stash[_ACCEPTANCE]

    def record(criterion: int, passed: bool, detail: str):
        lines.append((criterion, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(lines, key=lambda t: t[0]):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {criterion:>2}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_recordings():
    """3 epileptic + 3 healthy subjects, 30 s each at 200 Hz."""
    return [synthesize(s) for s in subject_specs(3, seed=11, duration_s=30.0)]


@pytest.fixture(scope="session")
def small_config():
    from eegpnn.features import ExtractionConfig, SpectralBandSpec
    from eegpnn.signal import FilterSpec

    return ExtractionConfig(1024, FilterSpec(40.0), SpectralBandSpec(2, 32, 1))


@pytest.fixture
def out_env(monkeypatch):
    """Keep CLI runs from inheriting an output directory from the environment."""
    monkeypatch.delenv("EEGPNN_OUT", raising=False)
    return os.environ

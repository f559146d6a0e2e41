import numpy as np
import pytest

from gfdmpa.waveform import GfdmConfig, build_prototype_filter


@pytest.fixture(scope="session")
def ref_setup():
    cfg = GfdmConfig()
    return cfg, build_prototype_filter(cfg)


@pytest.fixture(scope="session")
def ref_m35():
    cfg = GfdmConfig(M=35)
    return cfg, build_prototype_filter(cfg)


@pytest.fixture(scope="session")
def small():
    cfg = GfdmConfig(K=2, M=2, N=16, Ts=1e-3, alpha=0.02)
    return cfg, build_prototype_filter(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


def record(request_or_capsys, criterion: str, ok: bool, detail: str) -> None:
    line = f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    with request_or_capsys.disabled():
        print("\n" + line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)

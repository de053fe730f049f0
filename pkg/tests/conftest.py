import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("ferrosim", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("ferrosim")


def brute_force_run(v_up, v_down, state, active, weights, p_sat, voltages):
    """Per-hysteron threshold rules evaluated one by one in plain Python."""
    state = [int(s) for s in state]
    out = []
    total = sum(weights)
    for v in voltages:
        for i in range(len(state)):
            if not active[i]:
                continue
            if v >= v_up[i]:
                state[i] = 1
            elif v <= v_down[i]:
                state[i] = -1
        acc = 0.0
        for i in range(len(state)):
            if active[i]:
                acc += weights[i] * state[i]
        out.append(p_sat * acc / total)
    return out, state


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_ACCEPTANCE: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; printed in the summary."""
    def record(n: int, ok: bool, detail: str) -> bool:
        line = f"[criterion {n:2d}] {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        _ACCEPTANCE.append(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)

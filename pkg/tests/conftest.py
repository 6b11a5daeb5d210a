"""Shared test scaffolding: JIT warmup and the acceptance summary."""

import pytest


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # first simulate() pays the JIT compile; keep it out of timed tests
    from thirdsound.langevin import SimConfig, simulate
    from thirdsound.repro import fig3_thermometry_params

    config = SimConfig(params=fig3_thermometry_params(), duration=2e-4,
                       sample_rate=1e7, seed=0)
    simulate(config)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, []):
            if "test_acceptance" in report.nodeid and report.when == "call":
                name = report.nodeid.split("::")[-1]
                verdict = "PASS" if outcome == "passed" else "FAIL"
                lines.append((name, verdict))
    if lines:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"{name}: {verdict}")

"""Shared flow runs.

The long simulations are run once per session and shared between the
flow tests and the acceptance suite.
"""

import time

import pytest

from lmcflab.flow1d import FlowPolicy, build_curve, init_state, preset, run_with_surgeries


def _run(name, horizon, policy=None, watch=None, **kw):
    amb, loops, opt = preset(name, **kw)
    state = init_state(build_curve(amb, loops, **opt))
    extra = {"initial": state, "watch": []}

    def cb(s, row):
        if watch is not None:
            extra["watch"].append(watch(s, row))

    t0 = time.perf_counter()
    traj = run_with_surgeries(state, policy or FlowPolicy(), horizon=horizon, callback=cb)
    extra["seconds"] = time.perf_counter() - t0
    return traj, extra


@pytest.fixture(scope="session")
def circle_run():
    return _run("circle", 1.0, FlowPolicy(snapshot_every=0.05))


@pytest.fixture(scope="session")
def infinity_unequal_run():
    return _run("infinity", 1.0, a1=0.5, a2=0.2)


@pytest.fixture(scope="session")
def infinity_equal_run():
    return _run("infinity", 1.0, a1=0.3, a2=0.3)


def _gap_watch(state, row):
    x = [c for c in state.crossings if c.mu_pm == 1 and c.cochain is not None]
    if len(x) != 1 or state.curve.n_components != 1:
        return None
    x = x[0]
    return {"t": state.t, "key": x.key, "gap": x.potential_gap,
            "valuation": x.cochain.valuation(), "faces": row["faces"]}


@pytest.fixture(scope="session")
def wall_chain_run():
    return _run("wall_chain", 1.0, watch=_gap_watch)


@pytest.fixture(scope="session")
def torus_line_run():
    return _run("torus_line", 0.5, klass=(1, 1), amplitude=0.05)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)

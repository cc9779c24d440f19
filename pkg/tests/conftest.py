from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import strategies as st

from calnet.netgraph import CalorieMatrix, NetTradeNetwork

FIXTURES = Path(__file__).parent / "fixtures"


def net(edges: dict[tuple[str, str], float], nodes=None, year: int = 2000) -> NetTradeNetwork:
    if nodes is None:
        nodes = sorted({n for e in edges for n in e})
    return NetTradeNetwork(year, tuple(nodes), dict(edges))


def cycle(n: int, weight: float = 1.0) -> NetTradeNetwork:
    names = [f"N{i}" for i in range(n)]
    return net({(names[i], names[(i + 1) % n]): weight for i in range(n)}, names)


def bipartite(n_exp: int, n_imp: int, weight=lambda i, j: 1.0) -> NetTradeNetwork:
    exporters = [f"E{i}" for i in range(n_exp)]
    importers = [f"I{j}" for j in range(n_imp)]
    edges = {(e, m): weight(i, j) for i, e in enumerate(exporters) for j, m in enumerate(importers)}
    return net(edges, exporters + importers)


def dyads() -> NetTradeNetwork:
    return net({("A", "B"): 1.0, ("C", "D"): 1.0})


def planted(seed: int = 7) -> NetTradeNetwork:
    """Two groups of five, every in-group pair linked, one bridge edge."""
    rng = random.Random(seed)
    groups = [[f"G{g}{i}" for i in range(5)] for g in range(2)]
    edges = {}
    for members in groups:
        for a in range(5):
            for b in range(a + 1, 5):
                u, v = members[a], members[b]
                if rng.random() < 0.5:
                    u, v = v, u
                edges[(u, v)] = rng.uniform(1.0, 10.0)
    edges[(groups[0][0], groups[1][0])] = 1.0
    return net(edges, groups[0] + groups[1])


def random_network(rng: random.Random, n: int, p: float = 0.5, year: int = 2000) -> NetTradeNetwork:
    names = [f"C{i:02d}" for i in range(n)]
    edges = {}
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                u, v = (names[i], names[j]) if rng.random() < 0.5 else (names[j], names[i])
                edges[(u, v)] = rng.uniform(0.5, 1e6)
    return NetTradeNetwork(year, tuple(names), edges)


def random_matrix(rng: random.Random, n: int, year: int = 2000) -> CalorieMatrix:
    names = [f"C{i:02d}" for i in range(n)]
    flows = {}
    for i in names:
        for j in names:
            if i != j and rng.random() < 0.6:
                # small integers make exact ties common
                flows[(i, j)] = float(rng.randint(0, 4)) if rng.random() < 0.5 else rng.uniform(0, 1e7)
    return CalorieMatrix(year, tuple(names), flows)


@st.composite
def networks(draw, min_nodes: int = 2, max_nodes: int = 9, min_edges: int = 0):
    n = draw(st.integers(min_nodes, max_nodes))
    names = [f"C{i}" for i in range(n)]
    pairs = [(names[i], names[j]) for i in range(n) for j in range(i + 1, n)]
    edges = {}
    for u, v in pairs:
        choice = draw(st.sampled_from(("none", "fwd", "back")))
        if choice == "none":
            continue
        w = draw(st.floats(1e-3, 1e6, allow_nan=False, allow_infinity=False))
        edges[(u, v) if choice == "fwd" else (v, u)] = w
    if len(edges) < min_edges:
        u, v = pairs[0]
        edges.pop((v, u), None)
        edges[(u, v)] = 1.0
    return NetTradeNetwork(2000, tuple(names), edges)


@pytest.fixture
def fixture_dir() -> Path:
    return FIXTURES


# --- acceptance reporting --------------------------------------------------

_CRITERIA: dict[str, tuple[int, str]] = {}
_OUTCOMES: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion")


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _CRITERIA[item.nodeid] = (mark.args[0], mark.args[1])


def pytest_runtest_logreport(report):
    if report.nodeid not in _CRITERIA:
        return
    if report.when == "setup" and report.skipped:
        _OUTCOMES[report.nodeid] = "SKIP"
    elif report.when == "call" or (report.when == "setup" and report.failed):
        if report.passed:
            _OUTCOMES[report.nodeid] = "PASS"
        elif report.skipped:
            _OUTCOMES[report.nodeid] = "SKIP"
        else:
            _OUTCOMES[report.nodeid] = "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _OUTCOMES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid, (number, text) in sorted(_CRITERIA.items(), key=lambda kv: kv[1][0]):
        if nodeid in _OUTCOMES:
            label = f"#{number}" if number else "A-runtime"
            terminalreporter.write_line(f"{_OUTCOMES[nodeid]:4}  {label:9}  {text}")

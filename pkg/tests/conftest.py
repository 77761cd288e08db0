import itertools

import numpy as np
import pytest

from tamlearn.bn import TabularBN
from tamlearn.graph import Dag


def chain_bn(p0=0.3, p1=(0.2, 0.7), p2=(0.1, 0.6)):
    """Positive binary chain 0 -> 1 -> 2."""
    dag = Dag(3, {(0, 1), (1, 2)})
    cpts = (
        np.array([[1 - p0, p0]]),
        np.array([[1 - p1[0], p1[0]], [1 - p1[1], p1[1]]]),
        np.array([[1 - p2[0], p2[0]], [1 - p2[1], p2[1]]]),
    )
    return TabularBN(dag, (2, 2, 2), cpts, name="chain")


def collider_bn():
    """Positive binary collider 0 -> 2 <- 1."""
    dag = Dag(3, {(0, 2), (1, 2)})
    rows = [[0.9, 0.1], [0.4, 0.6], [0.3, 0.7], [0.15, 0.85]]
    cpts = (np.array([[0.6, 0.4]]), np.array([[0.3, 0.7]]), np.array(rows))
    return TabularBN(dag, (2, 2, 2), cpts, name="collider")


def edgeless_bn(d=3, q=0.3):
    dag = Dag(d)
    return TabularBN(dag, (2,) * d, tuple(np.array([[1 - q, q]]) for _ in range(d)))


def brute_force_joint(bn):
    """Joint probability of every configuration by direct product of cpt entries."""
    out = {}
    for cfg in itertools.product(*[range(s) for s in bn.supports]):
        prob = 1.0
        for k in range(bn.d):
            row = 0
            mult = 1
            for q in bn.parent_list(k):
                row += cfg[q] * mult
                mult *= bn.supports[q]
            prob *= bn.cpts[k][row, cfg[k]]
        out[cfg] = prob
    return out


def brute_force_entropy(bn, nodes):
    marg = {}
    for cfg, prob in brute_force_joint(bn).items():
        key = tuple(cfg[i] for i in sorted(nodes))
        marg[key] = marg.get(key, 0.0) + prob
    return -sum(p * np.log(p) for p in marg.values() if p > 0)


@pytest.fixture
def chain():
    return chain_bn()


@pytest.fixture
def collider():
    return collider_bn()


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def record(request):
    """Collect one summary line per acceptance criterion."""
    return request.config.acceptance_lines.append


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)

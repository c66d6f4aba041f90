import functools
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import graphmga
import graphmga.attack
import graphmga.cli
import graphmga.community
from graphmga.gcn import TrainConfig, default_features, train
from graphmga.graph import generate_planted_partition

from invariants import check_attack_invariants

ACCEPTANCE_LINES = []
SWEEP = {"attacks": 0, "violations": []}


def _checked(fn):
    @functools.wraps(fn)
    def wrapper(m, g, X, labels, target, cfg=None, *args, **kwargs):
        result = fn(m, g, X, labels, target, cfg, *args, **kwargs)
        SWEEP["attacks"] += 1
        try:
            check_attack_invariants(g, result, cfg or graphmga.attack.AttackConfig())
        except AssertionError as exc:
            SWEEP["violations"].append(f"target {target}: {exc}")
            raise
        return result

    return wrapper


@pytest.fixture(autouse=True, scope="session")
def invariant_sweep():
    """Every attack run anywhere in the suite is checked for structural
    invariants on the way out."""
    original = graphmga.attack.run_attack
    wrapped = _checked(original)
    modules = [graphmga.attack, graphmga, graphmga.community, graphmga.cli]
    for mod in modules:
        mod.run_attack = wrapped
    yield SWEEP
    for mod in modules:
        mod.run_attack = original


@pytest.fixture(scope="session")
def planted():
    """n=200 planted partition with a trained surrogate (CLI seed convention)."""
    g, labels = generate_planted_partition(200, 2, 0.1, 0.01, 0)
    X = default_features(g.n)
    model, history = train(g, X, labels, TrainConfig(seed=1))
    return g, labels, X, model, history


@pytest.fixture(scope="session")
def small_planted():
    g, labels = generate_planted_partition(60, 2, 0.3, 0.02, 3)
    X = default_features(g.n)
    model, history = train(g, X, labels, TrainConfig(seed=4))
    return g, labels, X, model, history


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(items):
    """Run the acceptance module last so the structural sweep (criterion 6)
    has seen every attack in the suite."""
    items.sort(key=lambda item: item.fspath.basename == "test_acceptance.py")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
    terminalreporter.write_line(f"structural invariant sweep: {SWEEP['attacks']} attacks checked")

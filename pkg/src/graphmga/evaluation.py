"""Target selection, ASR/AML aggregation, transfer to retrained models and
limited-knowledge graph views."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .attack import Perturbation, replay
from .gcn import GcnModel, TrainConfig, predict, train
from .graph import Graph, LabelAssignment, node_betweenness, node_degrees

STRATEGIES = ("uniform", "hub", "bridge")


class TargetSelectionError(ValueError):
    pass


@dataclass
class TargetSet:
    strategy: str
    nodes: list
    seed: int = 0

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


@dataclass
class AttackReport:
    perturbations: list
    budget: int
    asr: np.ndarray
    aml: float
    config: dict = field(default_factory=dict)
    fingerprint: str = ""

    @property
    def success_steps(self):
        return [p.success_step for p in self.perturbations]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "dataset_fingerprint": self.fingerprint,
            "budget": self.budget,
            "asr": [float(a) for a in self.asr],
            "aml": float(self.aml),
            "targets": [
                {
                    "target": int(p.target),
                    "success_step": p.success_step,
                    "steps": [[int(i), int(j), a] for i, j, a in p.steps],
                    "trace": [[float(loss), int(lbl)] for loss, lbl in p.trace],
                }
                for p in self.perturbations
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def curve_csv(self) -> str:
        rows = ["budget,asr"]
        rows += [f"{rho},{float(a)!r}" for rho, a in enumerate(self.asr, 1)]
        return "\n".join(rows) + "\n"


def correctly_classified(m: GcnModel, g: Graph, X, labels: LabelAssignment, candidates=None):
    pred = predict(m, g, X)
    nodes = labels.labeled if candidates is None else np.asarray(candidates, dtype=int)
    return np.array([v for v in nodes if labels[v] >= 0 and pred[v] == labels[v]], dtype=int)


def select_targets(g: Graph, labels: LabelAssignment, m: GcnModel, X, strategy: str,
                   count: int, seed: int = 0, candidates=None) -> TargetSet:
    """Pick attack targets among the nodes the model gets right.

    ``uniform`` samples ``count`` nodes per class; ``hub`` and ``bridge``
    take the top ``count`` by degree and node betweenness (ties to the
    lower id). ``candidates`` restricts the pool, e.g. to the test split.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; expected one of {STRATEGIES}")
    pool = correctly_classified(m, g, X, labels, candidates)
    if strategy == "uniform":
        rng = np.random.default_rng(seed)
        chosen, deficit = [], {}
        for c in range(labels.num_classes):
            members = pool[labels.classes[pool] == c]
            if members.size < count:
                deficit[c] = count - members.size
                continue
            chosen.extend(sorted(rng.choice(members, count, replace=False).tolist()))
        if deficit:
            raise TargetSelectionError(f"not enough correctly classified nodes per class; deficit {deficit}")
        return TargetSet(strategy, chosen, seed)

    if pool.size < count:
        raise TargetSelectionError(
            f"need {count} correctly classified nodes, only {pool.size} available"
        )
    score = node_degrees(g) if strategy == "hub" else node_betweenness(g)
    order = sorted(pool.tolist(), key=lambda v: (-score[v], v))
    return TargetSet(strategy, order[:count], seed)


def select_high_degree_targets(g: Graph, labels, m, X, fraction=0.1, seed=0, candidates=None) -> TargetSet:
    """Random ``fraction`` of all nodes drawn from the correctly classified
    nodes whose degree exceeds the mean degree."""
    deg = node_degrees(g)
    pool = correctly_classified(m, g, X, labels, candidates)
    pool = pool[deg[pool] > deg.mean()]
    count = int(np.floor(fraction * g.n))
    if pool.size < count:
        raise TargetSelectionError(f"need {count} above-average-degree targets, only {pool.size} available")
    rng = np.random.default_rng(seed)
    return TargetSet("high_degree", sorted(rng.choice(pool, count, replace=False).tolist()), seed)


def success_curve(success_steps, budget: int) -> np.ndarray:
    steps = np.array([budget + 1 if s is None else s for s in success_steps])
    return np.array([np.mean(steps <= rho) for rho in range(1, budget + 1)])


def evaluate(reports, K: int, config: dict | None = None, fingerprint: str = "") -> AttackReport:
    """ASR per budget ``1..K`` and the average number of modified links,
    where a target that never flips counts as ``K``."""
    reports = list(reports)
    if not reports:
        raise ValueError("cannot evaluate an empty list of perturbations")
    steps = [p.success_step for p in reports]
    asr = success_curve(steps, K)
    aml = float(np.mean([K if s is None or s > K else s for s in steps]))
    return AttackReport(reports, K, asr, aml, dict(config or {}), fingerprint)


def transfer_evaluate(perturbations, g: Graph, X, labels: LabelAssignment, retrain_seeds,
                      train_cfg: TrainConfig | None = None, budget: int | None = None):
    """ASR of fixed perturbations against freshly trained models.

    Each seed trains a new GCN (new split and initialisation) and replays
    every perturbation on ``g``. Targets the fresh model already gets wrong
    on the clean graph are left out of that seed's denominator.
    Returns ``{seed: (asr, n_counted)}``.
    """
    perturbations = list(perturbations)
    if not perturbations:
        raise ValueError("no perturbations to transfer")
    base = train_cfg or TrainConfig()
    if budget is None:
        budget = max(len(p) for p in perturbations)
    out = {}
    for seed in retrain_seeds:
        cfg = TrainConfig(**{**asdict(base), "seed": seed})
        model, _ = train(g, X, labels, cfg)
        replays = [replay(model, g, X, labels, p) for p in perturbations]
        counted = [r for r in replays if r.success_step != 0]
        if counted:
            asr = float(np.mean([r.success_step is not None and r.success_step <= budget for r in counted]))
        else:
            asr = float("nan")
        out[seed] = (asr, len(counted))
    return out


def limited_knowledge_graph(g: Graph, mode: str, p_miss: float, target: int, seed=0) -> Graph:
    """Attacker's partial view of ``g``.

    ``seed`` is anything :func:`numpy.random.default_rng` accepts. For a
    fixed seed the links dropped at a smaller ``p_miss`` are a subset of
    those dropped at a larger one.

    ``keep_1hop`` keeps every link at ``target`` and drops each other link
    with probability ``p_miss``; ``random`` drops every link that way.
    """
    if not 0.0 <= p_miss <= 1.0:
        raise ValueError(f"p_miss must lie in [0, 1], got {p_miss}")
    if mode not in ("keep_1hop", "random"):
        raise ValueError(f"unknown limited-knowledge mode {mode!r}")
    edges = np.array(g.edges, dtype=int).reshape(-1, 2)
    rng = np.random.default_rng(seed)
    drop = rng.random(len(edges)) < p_miss
    if mode == "keep_1hop":
        drop &= (edges[:, 0] != target) & (edges[:, 1] != target)
    return Graph.from_edges(g.n, edges[~drop].tolist())


def limited_knowledge_attack(m: GcnModel, g: Graph, X, labels: LabelAssignment, target: int,
                             cfg, mode: str, p_miss: float, seed=0) -> Perturbation:
    """Attack from a partial view of ``g`` and score the result on ``g``.

    The attacker computes gradients on :func:`limited_knowledge_graph`;
    the chosen modifications are then replayed on the full graph, where
    steps that no longer apply are skipped without consuming budget.
    """
    from .attack import run_attack

    partial = limited_knowledge_graph(g, mode, p_miss, target, seed)
    attempt = run_attack(m, partial, X, labels, target, cfg, check_clean=False)
    return replay(m, g, X, labels, attempt, skip_infeasible=True)

"""Community deception against label propagation.

A target is considered hidden once label propagation on the rewired graph
puts it in a community whose best overlap match in the original partition
is not the community it started in.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .attack import AttackConfig, Perturbation, apply_modification, run_attack
from .gcn import TrainConfig, default_features, train
from .graph import Graph, LabelAssignment

logger = logging.getLogger(__name__)


class NonConvergenceError(RuntimeError):
    pass


@dataclass
class CommunityPartition:
    assignment: np.ndarray
    num_communities: int

    def __getitem__(self, node):
        return int(self.assignment[node])

    def members(self, cid) -> np.ndarray:
        return np.flatnonzero(self.assignment == cid)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.num_communities)

    def as_labels(self) -> LabelAssignment:
        return LabelAssignment(self.assignment.copy(), self.num_communities)


def _compact(raw) -> CommunityPartition:
    ids = {}
    out = np.empty(len(raw), dtype=np.int64)
    for v, lbl in enumerate(raw):
        out[v] = ids.setdefault(lbl, len(ids))
    return CommunityPartition(out, len(ids))


def _best_labels(labels, nbrs):
    vals, counts = np.unique(labels[nbrs], return_counts=True)
    return vals[counts == counts.max()]


def label_propagation(g: Graph, seed: int = 0, max_sweeps: int | None = None) -> CommunityPartition:
    """Asynchronous label propagation with seeded node order and tie-breaks.

    A node whose current label is already among the most frequent in its
    neighbourhood keeps it; otherwise it draws uniformly among the most
    frequent ones. Stops once every node holds a most-frequent label.
    """
    n = g.n
    nbrs = [np.asarray(x, dtype=int) for x in g.neighbors()]
    labels = np.arange(n)
    rng = np.random.default_rng(seed)
    max_sweeps = 100 * max(n, 1) if max_sweeps is None else max_sweeps
    for _ in range(max_sweeps):
        for v in rng.permutation(n):
            if nbrs[v].size == 0:
                continue
            best = _best_labels(labels, nbrs[v])
            if labels[v] not in best:
                labels[v] = best[rng.integers(best.size)] if best.size > 1 else best[0]
        if is_fixpoint(g, labels):
            return _compact(labels)
    raise NonConvergenceError(f"label propagation did not settle within {max_sweeps} sweeps")


def is_fixpoint(g: Graph, labels) -> bool:
    labels = labels.assignment if isinstance(labels, CommunityPartition) else np.asarray(labels)
    for v, nb in enumerate(g.neighbors()):
        if nb and labels[v] not in _best_labels(labels, np.asarray(nb)):
            return False
    return True


def match_communities(old: CommunityPartition, new: CommunityPartition) -> dict:
    """Map new community ids to old ones by maximum total node overlap.

    The matching is one-to-one; new communities left over when the new
    partition has more communities map to ``None``.
    """
    overlap = np.zeros((new.num_communities, old.num_communities), dtype=np.int64)
    np.add.at(overlap, (new.assignment, old.assignment), 1)
    rows, cols = linear_sum_assignment(overlap, maximize=True)
    mapping = {c: None for c in range(new.num_communities)}
    mapping.update({int(r): int(c) for r, c in zip(rows, cols)})
    return mapping


def community_changed(old: CommunityPartition, new: CommunityPartition, target: int) -> bool:
    return match_communities(old, new)[new[target]] != old[target]


def deception_run(g: Graph, labels: LabelAssignment, target: int, cfg: AttackConfig | None = None,
                  seed: int = 0, X=None, train_cfg: TrainConfig | None = None, model=None,
                  detector=label_propagation):
    """Attack ``target`` and check whether the detector moves it.

    The GCN surrogate is trained on ``labels`` (detected communities or
    metadata classes) unless ``model`` is given. The detector is rerun with
    the same seed after every modification; the returned perturbation's
    ``success_step`` is the first step at which the target's matched
    community differs from the original one.

    Returns ``(perturbation, success)``.
    """
    cfg = cfg or AttackConfig()
    X = default_features(g.n) if X is None else X
    before = detector(g, seed)
    if before.sizes()[before[target]] < 2:
        raise ValueError(f"target {target} sits in a singleton community")
    if model is None:
        model, _ = train(g, X, labels, train_cfg or TrainConfig(seed=seed))
    pert = run_attack(model, g, X, labels, target, AttackConfig(**{**cfg.__dict__, "stop_on_success": False}))
    result = Perturbation(target, [], [], None)
    state = g
    for k, (step, rec) in enumerate(zip(pert.steps, pert.trace), 1):
        state = apply_modification(state, *step)
        result.steps.append(step)
        result.trace.append(rec)
        if community_changed(before, detector(state, seed), target):
            result.success_step = k
            break
    if result.success_step is None or not cfg.stop_on_success:
        result.steps, result.trace = list(pert.steps), list(pert.trace)
    return result, result.success_step is not None


def write_partition(p: CommunityPartition, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for v, c in enumerate(p.assignment):
            fh.write(f"{v}\t{c}\n")


def read_partition(path) -> CommunityPartition:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip() or line.startswith("#"):
                continue
            try:
                v, c = (int(x) for x in line.split())
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected 'node<TAB>community'") from None
            pairs.append((v, c))
    assignment = np.zeros(len(pairs), dtype=np.int64)
    for v, c in pairs:
        assignment[v] = c
    return CommunityPartition(assignment, int(assignment.max()) + 1 if pairs else 0)

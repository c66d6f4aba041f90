"""Statistics of the links an attack picks, indexed by modification order.

For the gamma-th modification across all targets:

* ``D``   mean endpoint degree sum, measured before the modification;
* ``B``   mean edge betweenness of the modified link (before a delete,
  after an add, so the link exists when scored);
* ``A_s`` / ``A_d`` mean hop distance from the target to labeled nodes of
  its own / other classes after the first gamma modifications.

Targets whose attack stopped before step gamma are left out of that row.
Unreachable nodes count as distance ``n``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .attack import ADD, apply_modification
from .graph import UNREACHABLE, Graph, LabelAssignment, bfs_distances, edge_betweenness, node_degrees

CSV_HEADER = "gamma,D,B,A_s,A_d,n_t,A_s_train,A_d_train"


class AnalysisError(ValueError):
    pass


@dataclass
class LinkAnalysisRow:
    gamma: int
    D: float
    B: float
    A_s: float
    A_d: float
    n_t: int
    A_s_train: float = float("nan")
    A_d_train: float = float("nan")

    def csv(self) -> str:
        vals = [self.D, self.B, self.A_s, self.A_d]
        extra = [self.A_s_train, self.A_d_train]
        return ",".join([str(self.gamma)] + [repr(float(v)) for v in vals] + [str(self.n_t)]
                        + [repr(float(v)) for v in extra])


@dataclass
class LinkAnalysisReport:
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [r.csv() for r in self.rows]) + "\n"


def _eligible(perturbations, gamma):
    if gamma < 1:
        raise AnalysisError("gamma starts at 1")
    chosen = [p for p in perturbations if len(p.steps) >= gamma]
    if not chosen:
        raise AnalysisError(f"no perturbation has {gamma} or more steps")
    return chosen


def _link_betweenness(g: Graph, i, j, action):
    state = apply_modification(g, i, j, action) if action == ADD else g
    return edge_betweenness(state)[(min(i, j), max(i, j))]


def _distances(g: Graph, t: int) -> np.ndarray:
    dist = bfs_distances(g, t).astype(float)
    dist[dist == UNREACHABLE] = g.n
    return dist


def _class_means(dist, labels: LabelAssignment, t: int, reference):
    y = labels[t]
    ref = np.asarray(reference, dtype=int)
    ref = ref[(ref != t) & (labels.classes[ref] >= 0)]
    same = ref[labels.classes[ref] == y]
    diff = ref[labels.classes[ref] != y]
    a_s = dist[same].mean() if same.size else np.nan
    a_d = dist[diff].mean() if diff.size else np.nan
    return a_s, a_d


def degree_metric(g: Graph, perturbations, gamma: int) -> float:
    chosen = _eligible(perturbations, gamma)
    total = 0.0
    for p in chosen:
        state = p.apply(g, gamma - 1)
        i, j, _ = p.steps[gamma - 1]
        deg = node_degrees(state)
        total += deg[i] + deg[j]
    return total / len(chosen)


def betweenness_metric(g: Graph, perturbations, gamma: int) -> float:
    chosen = _eligible(perturbations, gamma)
    total = 0.0
    for p in chosen:
        state = p.apply(g, gamma - 1)
        total += _link_betweenness(state, *p.steps[gamma - 1])
    return total / len(chosen)


def class_distance_metrics(g: Graph, perturbations, labels: LabelAssignment, gamma: int,
                           reference=None) -> tuple[float, float]:
    """``(A_s, A_d)`` after the first ``gamma`` modifications of each target.

    ``reference`` restricts the labeled nodes distances are averaged over
    (e.g. the training split); by default every labeled node is used.
    """
    chosen = _eligible(perturbations, gamma)
    reference = labels.labeled if reference is None else reference
    per_s, per_d = [], []
    for p in chosen:
        dist = _distances(p.apply(g, gamma), p.target)
        a_s, a_d = _class_means(dist, labels, p.target, reference)
        per_s.append(a_s)
        per_d.append(a_d)
    return _nanmean(per_s), _nanmean(per_d)


def _nanmean(values):
    arr = np.asarray(values, dtype=float)
    return float(arr[~np.isnan(arr)].mean()) if np.any(~np.isnan(arr)) else float("nan")


def link_analysis(g: Graph, perturbations, labels: LabelAssignment, max_gamma: int | None = None,
                  train_nodes=None) -> LinkAnalysisReport:
    """All metrics for ``gamma = 1..max_gamma``, replaying each trace once."""
    perturbations = list(perturbations)
    longest = max((len(p.steps) for p in perturbations), default=0)
    max_gamma = longest if max_gamma is None else max_gamma
    if max_gamma < 1 or longest == 0:
        raise AnalysisError("no modifications to analyse")
    acc = {gm: {"D": [], "B": [], "s": [], "d": [], "st": [], "dt": []} for gm in range(1, max_gamma + 1)}
    for p in perturbations:
        state = g
        for gm, (i, j, action) in enumerate(p.steps[:max_gamma], 1):
            deg = node_degrees(state)
            acc[gm]["D"].append(deg[i] + deg[j])
            acc[gm]["B"].append(_link_betweenness(state, i, j, action))
            state = apply_modification(state, i, j, action)
            dist = _distances(state, p.target)
            a_s, a_d = _class_means(dist, labels, p.target, labels.labeled)
            acc[gm]["s"].append(a_s)
            acc[gm]["d"].append(a_d)
            if train_nodes is not None:
                a_s, a_d = _class_means(dist, labels, p.target, train_nodes)
                acc[gm]["st"].append(a_s)
                acc[gm]["dt"].append(a_d)
    report = LinkAnalysisReport()
    for gm in range(1, max_gamma + 1):
        a = acc[gm]
        if not a["D"]:
            break
        report.rows.append(LinkAnalysisRow(
            gm, float(np.mean(a["D"])), float(np.mean(a["B"])), _nanmean(a["s"]), _nanmean(a["d"]),
            len(a["D"]),
            _nanmean(a["st"]) if a["st"] else float("nan"),
            _nanmean(a["dt"]) if a["dt"] else float("nan"),
        ))
    return report

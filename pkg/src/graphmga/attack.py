"""Momentum Gradient Attack (MGA) and the Fast Gradient Attack (FGA) baseline.

Both attacks flip one node pair per iteration. FGA picks the pair with the
largest absolute link gradient; MGA picks it from an exponentially decayed
accumulation of L1-normalised link gradients. A positive score means
"add the link", anything else means "delete it".
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .adjgrad import link_gradient
from .gcn import GcnModel, forward, normalized_adjacency
from .graph import Graph, LabelAssignment

logger = logging.getLogger(__name__)

MODES = ("unlimited", "direct", "indirect")
METHODS = ("MGA", "FGA")
ADD, DELETE = "add", "delete"


class AttackPreconditionError(ValueError):
    pass


class InfeasibleModificationError(ValueError):
    pass


@dataclass
class AttackConfig:
    budget: int = 20
    mu: float = 0.5
    mode: str = "unlimited"
    method: str = "MGA"
    seed: int = 0
    stop_on_success: bool = False
    protect_target_degree: bool = True

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError(f"mu must lie in [0, 1], got {self.mu}")
        if self.budget < 1:
            raise ValueError(f"budget must be >= 1, got {self.budget}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        self.method = self.method.upper()
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")


@dataclass
class LinkMomentumNet:
    values: np.ndarray
    k: int


@dataclass
class Perturbation:
    """Ordered link modifications against one target, with the loss and
    predicted label recorded after each step."""

    target: int
    steps: list = field(default_factory=list)
    trace: list = field(default_factory=list)
    success_step: int | None = None

    def __len__(self):
        return len(self.steps)

    def pairs(self):
        return [(i, j) for i, j, _ in self.steps]

    def apply(self, g: Graph, upto: int | None = None) -> Graph:
        for i, j, action in self.steps[:upto]:
            g = apply_modification(g, i, j, action)
        return g

    def to_lines(self) -> list[str]:
        lines = []
        for k, ((i, j, action), (loss, label)) in enumerate(zip(self.steps, self.trace), 1):
            lines.append(f"{k}\t{i}\t{j}\t{action}\t{loss!r}\t{label}")
        return lines


def momentum_update(prev: LinkMomentumNet | None, g_k: np.ndarray, mu: float, k: int) -> LinkMomentumNet:
    if k < 1:
        raise ValueError("iteration index starts at 1")
    if (prev is None) != (k == 1):
        raise ValueError("previous momentum must be given exactly when k > 1")
    if k == 1:
        return LinkMomentumNet(np.array(g_k, dtype=np.float64, copy=True), 1)
    norm = np.abs(g_k).sum()
    step = g_k / norm if norm > 0 else np.zeros_like(g_k)
    return LinkMomentumNet(mu * prev.values + step, k)


def sign_of(m: float) -> int:
    return 1 if m > 0 else -1


def select_candidate(lmn, A, mode: str, target: int, used=(), protect_target_degree=True):
    """Best eligible pair ``(i, j, action)`` with ``i < j``, or ``None``.

    Pairs are ranked by absolute score; ties go to the lexicographically
    smallest pair. A pair is eligible when it has not been used before,
    passes the mode filter, its implied add/delete is feasible on ``A``, and
    (optionally) a delete does not leave the target without neighbours.
    """
    scores = lmn.values if isinstance(lmn, LinkMomentumNet) else np.asarray(lmn)
    A = np.asarray(A.adjacency if isinstance(A, Graph) else A)
    n = scores.shape[0]
    mag = np.abs(scores)
    ok = np.triu(mag > 0, 1)
    if mode == "direct":
        touch = np.zeros((n, n), dtype=bool)
        touch[target, :] = touch[:, target] = True
        ok &= touch
    elif mode == "indirect":
        ok[target, :] = ok[:, target] = False
    elif mode != "unlimited":
        raise ValueError(f"unknown mode {mode!r}")
    # positive score -> add (needs no edge), otherwise delete (needs an edge)
    ok &= (scores > 0) == (A == 0)
    if protect_target_degree and A[target].sum() <= 1:
        last = np.zeros((n, n), dtype=bool)
        last[target, :] = A[target] == 1
        last[:, target] = A[:, target] == 1
        ok &= ~last
    for i, j in used:
        ok[min(i, j), max(i, j)] = False
    if not ok.any():
        return None
    flat = np.where(ok, mag, -1.0).ravel()
    i, j = divmod(int(np.argmax(flat)), n)
    return i, j, ADD if scores[i, j] > 0 else DELETE


def apply_modification(g: Graph, i: int, j: int, action: str) -> Graph:
    if i == j:
        raise InfeasibleModificationError(f"cannot modify self-pair ({i}, {i})")
    present = g.has_edge(i, j)
    if action == ADD and present:
        raise InfeasibleModificationError(f"cannot add existing link ({i}, {j})")
    if action == DELETE and not present:
        raise InfeasibleModificationError(f"cannot delete absent link ({i}, {j})")
    if action not in (ADD, DELETE):
        raise InfeasibleModificationError(f"unknown action {action!r}")
    return g.with_flip(i, j)


def _loss_and_label(m, A, X, XW, y, t):
    A_bar = normalized_adjacency(A)
    P = forward(m, A_bar, X)
    return float(-np.log(P[t, y])), int(P[t].argmax())


def run_attack(m: GcnModel, g: Graph, X, labels: LabelAssignment, target: int,
               cfg: AttackConfig | None = None, check_clean=True) -> Perturbation:
    """Rewire up to ``cfg.budget`` links to push ``target`` out of its class.

    The gradient is re-evaluated on the current adversarial graph each
    iteration; model weights stay fixed.
    """
    cfg = cfg or AttackConfig()
    X = np.asarray(X, dtype=np.float64)
    y = labels[target]
    if y < 0:
        raise AttackPreconditionError(f"target {target} is unlabeled")
    XW = X @ m.W0
    if check_clean:
        _, label = _loss_and_label(m, g.adjacency, X, XW, y, target)
        if label != y:
            raise AttackPreconditionError(
                f"target {target} is already misclassified on the clean graph"
            )

    result = Perturbation(target)
    A = np.array(g.adjacency, dtype=np.float64)
    used = set()
    lmn = None
    for k in range(1, cfg.budget + 1):
        grad = link_gradient(m, A, X, labels, target, XW=XW)
        if cfg.method == "MGA":
            lmn = momentum_update(lmn, grad, cfg.mu, k)
            scores = lmn.values
        else:
            scores = grad
        choice = select_candidate(scores, A, cfg.mode, target, used, cfg.protect_target_degree)
        if choice is None:
            logger.debug("target %d: candidates exhausted at step %d", target, k)
            break
        i, j, action = choice
        A[i, j] = A[j, i] = 1.0 if action == ADD else 0.0
        used.add((i, j))
        loss, label = _loss_and_label(m, A, X, XW, y, target)
        result.steps.append((i, j, action))
        result.trace.append((loss, label))
        if label != y and result.success_step is None:
            result.success_step = k
            if cfg.stop_on_success:
                break
    return result


def replay(m: GcnModel, g: Graph, X, labels: LabelAssignment, p: Perturbation,
           skip_infeasible=False) -> Perturbation:
    """Re-apply the steps of ``p`` on ``g`` and re-score them with ``m``.

    With ``skip_infeasible`` steps that do not apply to ``g`` are dropped
    (and do not count towards the budget); otherwise they raise.
    """
    X = np.asarray(X, dtype=np.float64)
    t, y = p.target, labels[p.target]
    XW = X @ m.W0
    A = np.array(g.adjacency, dtype=np.float64)
    out = Perturbation(t)
    _, label = _loss_and_label(m, A, X, XW, y, t)
    if label != y:
        out.success_step = 0
    for i, j, action in p.steps:
        feasible = (action == ADD and A[i, j] == 0) or (action == DELETE and A[i, j] == 1)
        if i == j or not feasible:
            if skip_infeasible:
                continue
            raise InfeasibleModificationError(
                f"step ({i}, {j}, {action}) does not apply to the graph"
            )
        A[i, j] = A[j, i] = 1.0 if action == ADD else 0.0
        loss, label = _loss_and_label(m, A, X, XW, y, t)
        out.steps.append((i, j, action))
        out.trace.append((loss, label))
        if label != y and out.success_step is None:
            out.success_step = len(out.steps)
    return out


def write_perturbation(p: Perturbation, path, header: dict | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# target={p.target}\n")
        fh.write(f"# success_step={p.success_step if p.success_step is not None else 'none'}\n")
        for key, value in (header or {}).items():
            fh.write(f"# {key}={value}\n")
        for line in p.to_lines():
            fh.write(line + "\n")


def read_perturbation(path) -> Perturbation:
    target = None
    success = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.rstrip("\n")
            if not s.strip():
                continue
            if s.startswith("#"):
                key, _, value = s[1:].strip().partition("=")
                if key == "target":
                    target = int(value)
                elif key == "success_step" and value != "none":
                    success = int(value)
                continue
            parts = s.split("\t")
            try:
                if len(parts) != 6 or parts[3] not in (ADD, DELETE):
                    raise ValueError("expected k, i, j, add|delete, loss, label")
                k, i, j = int(parts[0]), int(parts[1]), int(parts[2])
                loss, label = float(parts[4]), int(parts[5])
                if k != len(rows) + 1:
                    raise ValueError(f"step index {k} out of sequence")
                if i == j:
                    raise ValueError("self-pair")
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: corrupted perturbation line ({exc})") from None
            rows.append(((i, j, parts[3]), (loss, label)))
    if target is None:
        raise ValueError(f"{path}: missing '# target=' header")
    return Perturbation(target, [r[0] for r in rows], [r[1] for r in rows], success)

"""Two-layer graph convolutional network in plain numpy.

Forward pass ``softmax(Abar @ relu(Abar @ X @ W0) @ W1)`` with
``Abar = D^-1/2 (A + I) D^-1/2``, full-batch gradient-descent training and
the single-node cross-entropy that the attacks maximise.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .graph import Graph, LabelAssignment

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = "graphmga-gcn-checkpoint"
CHECKPOINT_VERSION = 1


class TrainingError(RuntimeError):
    pass


class DivergenceError(TrainingError):
    def __init__(self, epoch):
        super().__init__(f"non-finite training loss at epoch {epoch}")
        self.epoch = epoch


@dataclass
class GcnModel:
    W0: np.ndarray
    W1: np.ndarray

    def __post_init__(self):
        self.W0 = np.asarray(self.W0, dtype=np.float64)
        self.W1 = np.asarray(self.W1, dtype=np.float64)
        if self.W0.ndim != 2 or self.W1.ndim != 2 or self.W0.shape[1] != self.W1.shape[0]:
            raise ValueError(
                f"inconsistent weight shapes {self.W0.shape} and {self.W1.shape}"
            )

    @property
    def input_dim(self):
        return self.W0.shape[0]

    @property
    def hidden(self):
        return self.W0.shape[1]

    @property
    def num_classes(self):
        return self.W1.shape[1]

    def copy(self):
        return GcnModel(self.W0.copy(), self.W1.copy())


@dataclass
class TrainConfig:
    hidden: int = 16
    learning_rate: float = 1.0
    epochs: int = 200
    seed: int = 0
    train_fraction: float = 0.1
    val_fraction: float = 0.1
    weight_decay: float = 5e-4

    def __post_init__(self):
        if self.train_fraction <= 0 or self.val_fraction <= 0:
            raise ValueError("split fractions must be positive")
        if self.train_fraction + self.val_fraction >= 1:
            raise ValueError("train_fraction + val_fraction must be < 1")


@dataclass
class Split:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    val_accuracy: list = field(default_factory=list)
    best_epoch: int = -1
    split: Split | None = None
    accuracy: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.loss)

    def __getitem__(self, i):
        return self.loss[i]


def _as_matrix(A):
    return np.asarray(A.adjacency if isinstance(A, Graph) else A, dtype=np.float64)


def normalized_adjacency(A) -> np.ndarray:
    """``D^-1/2 (A + I) D^-1/2`` with ``D`` the row sums of ``A + I``.

    Accepts a :class:`Graph` or any square (possibly real-valued) matrix.
    """
    At = _as_matrix(A) + np.eye(_as_matrix(A).shape[0])
    s = 1.0 / np.sqrt(At.sum(axis=1))
    return s[:, None] * At * s[None, :]


def softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _check_dims(m, A_bar, X):
    n = A_bar.shape[0]
    if A_bar.shape != (n, n) or X.shape[0] != n or X.shape[1] != m.input_dim:
        raise ValueError(
            f"dimension mismatch: Abar {A_bar.shape}, X {X.shape}, W0 {m.W0.shape}"
        )


def forward_cache(m: GcnModel, A_bar, X):
    """Intermediate activations ``(XW0, H1, Z, ZW1, logits, P)``."""
    X = np.asarray(X, dtype=np.float64)
    _check_dims(m, A_bar, X)
    XW = X @ m.W0
    H1 = A_bar @ XW
    Z = np.maximum(H1, 0.0)
    ZW = Z @ m.W1
    logits = A_bar @ ZW
    return XW, H1, Z, ZW, logits, softmax(logits)


def forward(m: GcnModel, A_bar, X) -> np.ndarray:
    return forward_cache(m, A_bar, X)[-1]


def predict(m: GcnModel, A, X) -> np.ndarray:
    """Argmax class for every node (ties go to the lowest class index)."""
    return forward(m, normalized_adjacency(A), X).argmax(axis=1)


def predict_label(m: GcnModel, A, X, v: int) -> int:
    return int(predict(m, A, X)[v])


def target_loss(m: GcnModel, A, X, labels: LabelAssignment, t: int) -> float:
    y = labels[t]
    if y < 0:
        raise ValueError(f"target {t} is unlabeled")
    P = forward(m, normalized_adjacency(A), X)
    return float(-np.log(P[t, y]))


def default_features(n: int) -> np.ndarray:
    """One-hot node identity, used when a dataset has no features."""
    return np.eye(n)


def init_weights(d, hidden, num_classes, rng) -> GcnModel:
    lim0 = np.sqrt(6.0 / (d + hidden))
    lim1 = np.sqrt(6.0 / (hidden + num_classes))
    return GcnModel(
        rng.uniform(-lim0, lim0, size=(d, hidden)),
        rng.uniform(-lim1, lim1, size=(hidden, num_classes)),
    )


def _allocate(total, sizes):
    # largest-remainder apportionment, at least one slot per nonempty class
    sizes = np.asarray(sizes, dtype=float)
    quota = total * sizes / sizes.sum()
    alloc = np.floor(quota).astype(int)
    alloc = np.minimum(np.maximum(alloc, (sizes > 0).astype(int)), sizes.astype(int))
    order = np.argsort(-(quota - np.floor(quota)), kind="stable")
    i = 0
    while alloc.sum() < total and i < 10 * len(sizes):
        c = order[i % len(sizes)]
        if alloc[c] < sizes[c]:
            alloc[c] += 1
        i += 1
    while alloc.sum() > total:
        c = int(np.argmax(alloc))
        alloc[c] -= 1
    return alloc


def split_nodes(labels: LabelAssignment, cfg: TrainConfig) -> Split:
    """Stratified train/val/test split of the labeled nodes.

    Sizes are ``floor(fraction * |labeled|)`` for train and validation; the
    remainder goes to test. Training gets at least one node per class when
    its size allows.
    """
    labeled = labels.labeled
    m = labeled.size
    if m == 0:
        raise TrainingError("no labeled nodes")
    rng = np.random.default_rng([cfg.seed, 1])
    n_train = int(np.floor(cfg.train_fraction * m))
    n_val = int(np.floor(cfg.val_fraction * m))
    if n_train == 0:
        raise TrainingError(f"empty training split ({m} labeled nodes, fraction {cfg.train_fraction})")
    per_class = [rng.permutation(labeled[labels.classes[labeled] == c]) for c in range(labels.num_classes)]
    sizes = [len(p) for p in per_class]
    tr_alloc = _allocate(n_train, sizes)
    rest = [p[a:] for p, a in zip(per_class, tr_alloc)]
    va_alloc = _allocate(n_val, [len(r) for r in rest]) if n_val else np.zeros(len(rest), int)
    train = np.concatenate([p[:a] for p, a in zip(per_class, tr_alloc)])
    val = np.concatenate([r[:a] for r, a in zip(rest, va_alloc)])
    test = np.concatenate([r[a:] for r, a in zip(rest, va_alloc)])
    return Split(np.sort(train), np.sort(val), np.sort(test))


def weight_gradients(m: GcnModel, A_bar, X, Y, nodes, weight_decay=0.0):
    """Loss and analytic gradients of the mean cross-entropy over ``nodes``
    plus ``weight_decay/2 * (|W0|^2 + |W1|^2)``.

    Returns ``(loss, dW0, dW1)``.
    """
    XW, H1, Z, ZW, logits, P = forward_cache(m, A_bar, X)
    nodes = np.asarray(nodes)
    cls = Y[nodes].argmax(axis=1)
    with np.errstate(divide="ignore"):
        ce = -np.log(P[nodes, cls]).sum() / nodes.size
    loss = ce + 0.5 * weight_decay * ((m.W0 ** 2).sum() + (m.W1 ** 2).sum())
    dlogits = np.zeros_like(P)
    dlogits[nodes] = (P[nodes] - Y[nodes]) / nodes.size
    dZW = A_bar.T @ dlogits
    dW1 = Z.T @ dZW + weight_decay * m.W1
    dH1 = (dZW @ m.W1.T) * (H1 > 0)
    dW0 = np.asarray(X, dtype=np.float64).T @ (A_bar.T @ dH1) + weight_decay * m.W0
    return float(loss), dW0, dW1


def train(g: Graph, X, labels: LabelAssignment, cfg: TrainConfig | None = None):
    """Full-batch gradient descent on the training split.

    Returns ``(model, history)``; the model is the snapshot with the best
    validation accuracy (later epochs win ties).
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.shape[0] != g.n:
        raise ValueError(f"feature rows {X.shape[0]} != node count {g.n}")
    split = split_nodes(labels, cfg)
    present = set(labels.classes[split.train].tolist())
    missing = sorted(set(range(labels.num_classes)) - present)
    if missing:
        raise TrainingError(f"training split has no nodes of classes {missing}")

    rng = np.random.default_rng([cfg.seed, 2])
    model = init_weights(X.shape[1], cfg.hidden, labels.num_classes, rng)
    A_bar = normalized_adjacency(g)
    Y = labels.one_hot()
    history = TrainHistory(split=split)
    eval_nodes = split.val if split.val.size else split.train
    best, best_acc = model.copy(), -1.0

    for epoch in range(cfg.epochs):
        loss, dW0, dW1 = weight_gradients(model, A_bar, X, Y, split.train, cfg.weight_decay)
        if not np.isfinite(loss):
            raise DivergenceError(epoch)
        model.W0 -= cfg.learning_rate * dW0
        model.W1 -= cfg.learning_rate * dW1
        pred = forward(model, A_bar, X).argmax(axis=1)
        acc = float(np.mean(pred[eval_nodes] == labels.classes[eval_nodes]))
        history.loss.append(loss)
        history.val_accuracy.append(acc)
        if acc >= best_acc:
            best, best_acc, history.best_epoch = model.copy(), acc, epoch

    pred = forward(best, A_bar, X).argmax(axis=1)
    for name in ("train", "val", "test"):
        idx = getattr(split, name)
        history.accuracy[name] = float(np.mean(pred[idx] == labels.classes[idx])) if idx.size else float("nan")
    logger.debug("trained GCN: best epoch %d, accuracy %s", history.best_epoch, history.accuracy)
    return best, history


def save_checkpoint(m: GcnModel, path, meta: dict | None = None) -> None:
    """Text checkpoint; floats are written as hex so loading is bit-exact.

    ``meta`` entries are stored as ``# key=value`` comment lines.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        fh.write(f"{m.input_dim} {m.hidden} {m.num_classes}\n")
        for W in (m.W0, m.W1):
            for row in W:
                fh.write(" ".join(float(x).hex() for x in row) + "\n")


def load_checkpoint(path) -> GcnModel:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    lines = lines[:1] + [ln for ln in lines[1:] if not ln.startswith("#")]
    if not lines or lines[0] != f"{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}":
        raise ValueError(f"{path}: not a v{CHECKPOINT_VERSION} GCN checkpoint")
    try:
        d, h, f = (int(x) for x in lines[1].split())
        rows = [[float.fromhex(x) for x in line.split()] for line in lines[2:]]
        W0 = np.array(rows[:d], dtype=np.float64).reshape(d, h)
        W1 = np.array(rows[d:d + h], dtype=np.float64).reshape(h, f)
    except (ValueError, IndexError) as exc:
        raise ValueError(f"{path}: corrupted checkpoint ({exc})") from None
    if len(rows) != d + h:
        raise ValueError(f"{path}: expected {d + h} weight rows, found {len(rows)}")
    return GcnModel(W0, W1)

"""Gradient of a single node's cross-entropy with respect to the adjacency
matrix, propagated through the symmetric degree normalisation."""

from __future__ import annotations

import numpy as np

from .gcn import GcnModel, _as_matrix, forward_cache, normalized_adjacency, target_loss
from .graph import LabelAssignment


class GradientError(ArithmeticError):
    pass


def adjacency_gradient(m: GcnModel, A, X, labels: LabelAssignment, t: int,
                       XW: np.ndarray | None = None) -> np.ndarray:
    """Raw ``dL_t/dA[i, j]`` for every entry of a (continuous) adjacency.

    Each entry is the derivative with respect to ``A[i, j]`` alone, not its
    mirror; both layers' use of the normalised adjacency contribute, and the
    degree matrix is differentiated as the row sums of ``A + I``.

    ``XW`` may carry a precomputed ``X @ W0``, which does not depend on A.
    """
    y = labels[t]
    if y < 0:
        raise ValueError(f"target {t} is unlabeled")
    At = _as_matrix(A) + np.eye(_as_matrix(A).shape[0])
    deg = At.sum(axis=1)
    s = 1.0 / np.sqrt(deg)
    A_bar = s[:, None] * At * s[None, :]

    X = np.asarray(X, dtype=np.float64)
    if XW is None:
        XW = X @ m.W0
    H1 = A_bar @ XW
    Z = np.maximum(H1, 0.0)
    ZW = Z @ m.W1
    logits_t = A_bar[t] @ ZW
    p = np.exp(logits_t - logits_t.max())
    p /= p.sum()
    dlogit_t = p.copy()
    dlogit_t[y] -= 1.0

    # dL/dAbar: the output layer only touches row t
    G = np.zeros_like(A_bar)
    G[t] = ZW @ dlogit_t
    dZW = np.outer(A_bar[t], dlogit_t)
    dH1 = (dZW @ m.W1.T) * (H1 > 0)
    G += dH1 @ XW.T

    M = G * At
    ds = M @ s + M.T @ s
    grad = G * np.outer(s, s) + (ds * -0.5 * deg ** -1.5)[:, None]
    if not np.all(np.isfinite(grad)):
        raise GradientError(f"non-finite adjacency gradient for target {t}")
    return grad


def symmetrize(raw) -> np.ndarray:
    """Average with the transpose and zero the diagonal."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] != raw.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {raw.shape}")
    g = (raw + raw.T) / 2.0
    np.fill_diagonal(g, 0.0)
    return g


def link_gradient(m: GcnModel, A, X, labels: LabelAssignment, t: int, XW=None) -> np.ndarray:
    return symmetrize(adjacency_gradient(m, A, X, labels, t, XW=XW))


def finite_difference_oracle(m: GcnModel, A, X, labels: LabelAssignment, t: int,
                             i: int, j: int, step: float = 1e-5) -> float:
    """Central difference of the target loss in the single entry ``A[i, j]``."""
    if i == j:
        raise ValueError("finite-difference oracle is defined for off-diagonal entries")
    if step <= 0:
        raise ValueError("step must be positive")
    A = _as_matrix(A)
    plus, minus = A.copy(), A.copy()
    plus[i, j] += step
    minus[i, j] -= step
    return (target_loss(m, plus, X, labels, t) - target_loss(m, minus, X, labels, t)) / (2 * step)


def min_hidden_preactivation(m: GcnModel, A, X) -> float:
    """Smallest ``|H1|`` entry; near zero means a ReLU kink is close."""
    _, H1, *_ = forward_cache(m, normalized_adjacency(A), X)
    return float(np.abs(H1).min())

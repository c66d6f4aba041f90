"""Undirected simple graphs, file ingestion, synthetic generation and
shortest-path structure (BFS distances, Brandes betweenness)."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

UNREACHABLE = -1


class GraphFormatError(ValueError):
    """Malformed input file; message carries the path and line number."""


class GraphConfigError(ValueError):
    pass


class Graph:
    """Undirected simple graph on nodes ``0..n-1`` backed by a dense
    symmetric binary adjacency matrix.

    The adjacency is stored read-only; mutation always goes through
    :meth:`with_flip`, which returns a new graph.
    """

    __slots__ = ("_adj", "_neighbors")

    def __init__(self, adjacency):
        adj = np.array(adjacency, dtype=np.int8, copy=True)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise GraphConfigError(f"adjacency must be square, got shape {adj.shape}")
        if not np.array_equal(adj, adj.T):
            raise GraphConfigError("adjacency must be symmetric")
        if np.any(np.diag(adj) != 0):
            raise GraphConfigError("self-loops are not allowed")
        if np.any((adj != 0) & (adj != 1)):
            raise GraphConfigError("adjacency must be binary")
        adj.setflags(write=False)
        self._adj = adj
        self._neighbors = None

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        adj = np.zeros((n, n), dtype=np.int8)
        for u, v in edges:
            if u == v:
                raise GraphConfigError(f"self-loop on node {u}")
            adj[u, v] = adj[v, u] = 1
        return cls(adj)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n), dtype=np.int8))

    @property
    def n(self) -> int:
        return self._adj.shape[0]

    @property
    def adjacency(self) -> np.ndarray:
        return self._adj

    @property
    def edges(self) -> list[tuple[int, int]]:
        iu, ju = np.nonzero(np.triu(self._adj, 1))
        return list(zip(iu.tolist(), ju.tolist()))

    @property
    def num_edges(self) -> int:
        return int(self._adj.sum()) // 2

    def has_edge(self, u: int, v: int) -> bool:
        return bool(self._adj[u, v])

    def neighbors(self) -> list[list[int]]:
        """Adjacency-list view, built lazily and cached."""
        if self._neighbors is None:
            self._neighbors = [np.flatnonzero(row).tolist() for row in self._adj]
        return self._neighbors

    def with_flip(self, u: int, v: int) -> "Graph":
        adj = self._adj.copy()
        adj[u, v] = adj[v, u] = 1 - adj[u, v]
        return Graph(adj)

    def fingerprint(self) -> str:
        import hashlib

        h = hashlib.sha256()
        h.update(str(self.n).encode())
        h.update(np.packbits(self._adj.astype(bool)).tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, Graph) and np.array_equal(self._adj, other._adj)

    def __hash__(self):
        return hash(self.fingerprint())

    def __repr__(self):
        return f"Graph(n={self.n}, edges={self.num_edges})"


@dataclass
class LabelAssignment:
    """Class index per node; ``-1`` marks an unlabeled node."""

    classes: np.ndarray
    num_classes: int = field(default=-1)

    def __post_init__(self):
        self.classes = np.asarray(self.classes, dtype=np.int64)
        if self.num_classes < 0:
            self.num_classes = int(self.classes.max()) + 1 if self.classes.size else 0
        labeled = self.classes[self.classes >= 0]
        if labeled.size and labeled.max() >= self.num_classes:
            raise GraphConfigError(
                f"class index {labeled.max()} out of range for {self.num_classes} classes"
            )

    def __len__(self):
        return self.classes.shape[0]

    def __getitem__(self, node):
        return int(self.classes[node])

    @property
    def labeled(self) -> np.ndarray:
        return np.flatnonzero(self.classes >= 0)

    def one_hot(self) -> np.ndarray:
        Y = np.zeros((len(self), self.num_classes))
        idx = self.labeled
        Y[idx, self.classes[idx]] = 1.0
        return Y


def _parse_pairs(path, kind):
    path = Path(path)
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split(None, 1)
            if len(parts) != 2:
                raise GraphFormatError(f"{path}:{lineno}: expected two fields in {kind} line")
            rows.append((lineno, parts[0], parts[1]))
    return path, rows


def _parse_node(path, lineno, token):
    try:
        value = int(token)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: invalid node id {token!r}") from None
    if value < 0:
        raise GraphFormatError(f"{path}:{lineno}: negative node id {value}")
    return value


def load_edge_list(path, n: int | None = None) -> Graph:
    """Read a whitespace-separated edge list.

    Duplicate lines and both orientations of a pair collapse to one edge.
    When ``n`` is omitted the node count is ``max id + 1``.
    """
    path, rows = _parse_pairs(path, "edge")
    edges = []
    for lineno, a, b in rows:
        u = _parse_node(path, lineno, a)
        if len(b.split()) != 1:
            raise GraphFormatError(f"{path}:{lineno}: expected exactly two node ids")
        v = _parse_node(path, lineno, b)
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on node {u}")
        if n is not None and max(u, v) >= n:
            raise GraphFormatError(
                f"{path}:{lineno}: node id {max(u, v)} out of range for n={n}"
            )
        edges.append((u, v))
    if n is None:
        n = max((max(e) for e in edges), default=-1) + 1
    return Graph.from_edges(n, edges)


def load_labels(path, n: int) -> LabelAssignment:
    path, rows = _parse_pairs(path, "label")
    classes = np.full(n, -1, dtype=np.int64)
    for lineno, a, b in rows:
        node = _parse_node(path, lineno, a)
        if node >= n:
            raise GraphFormatError(f"{path}:{lineno}: node id {node} out of range for n={n}")
        try:
            classes[node] = int(b)
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: invalid class {b!r}") from None
        if classes[node] < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative class {classes[node]}")
    return LabelAssignment(classes)


def load_features(path, n: int) -> np.ndarray:
    path, rows = _parse_pairs(path, "feature")
    vectors = {}
    for lineno, a, b in rows:
        node = _parse_node(path, lineno, a)
        if node >= n:
            raise GraphFormatError(f"{path}:{lineno}: node id {node} out of range for n={n}")
        try:
            vectors[node] = [float(x) for x in b.split(",")]
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: invalid feature vector") from None
    widths = {len(v) for v in vectors.values()}
    if len(widths) > 1:
        raise GraphFormatError(f"{path}: inconsistent feature widths {sorted(widths)}")
    d = widths.pop() if widths else 0
    X = np.zeros((n, d))
    for node, vec in vectors.items():
        X[node] = vec
    return X


def write_edge_list(g: Graph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u, v in g.edges:
            fh.write(f"{u}\t{v}\n")


def write_labels(labels: LabelAssignment, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for node in labels.labeled:
            fh.write(f"{node}\t{labels[node]}\n")


def generate_planted_partition(n, k, p_in, p_out, seed):
    """Planted-partition graph with ``k`` equal blocks of consecutive nodes.

    Returns ``(graph, labels)`` where labels are block indices.
    """
    if not 0 <= p_out < p_in <= 1:
        raise GraphConfigError(
            f"need 0 <= p_out < p_in <= 1 (got p_in={p_in}, p_out={p_out})"
        )
    if k < 1 or n % k:
        raise GraphConfigError(f"n={n} is not divisible by k={k}")
    block = np.repeat(np.arange(k), n // k)
    rng = np.random.default_rng(seed)
    same = block[:, None] == block[None, :]
    prob = np.where(same, p_in, p_out)
    draw = rng.random((n, n)) < prob
    adj = np.triu(draw, 1)
    adj = (adj | adj.T).astype(np.int8)
    return Graph(adj), LabelAssignment(block, k)


def node_degrees(g: Graph) -> np.ndarray:
    return g.adjacency.sum(axis=1).astype(np.int64)


def bfs_distances(g: Graph, source: int) -> np.ndarray:
    """Hop distances from ``source``; unreachable nodes get ``UNREACHABLE``."""
    if not 0 <= source < g.n:
        raise IndexError(f"source {source} out of range for n={g.n}")
    nbrs = g.neighbors()
    dist = np.full(g.n, UNREACHABLE, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for w in nbrs[v]:
            if dist[w] == UNREACHABLE:
                dist[w] = dist[v] + 1
                queue.append(w)
    return dist


def _brandes(g: Graph, want_edges: bool):
    # Accumulates over ordered (s, t) pairs; callers halve for unordered pairs.
    nbrs = g.neighbors()
    n = g.n
    node_bc = np.zeros(n)
    edge_bc = {e: 0.0 for e in g.edges} if want_edges else None
    for s in range(n):
        stack = []
        preds = [[] for _ in range(n)]
        sigma = [0] * n
        sigma[s] = 1
        dist = [-1] * n
        dist[s] = 0
        queue = deque([s])
        while queue:
            v = queue.popleft()
            stack.append(v)
            for w in nbrs[v]:
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue.append(w)
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        while stack:
            w = stack.pop()
            for v in preds[w]:
                c = sigma[v] / sigma[w] * (1.0 + delta[w])
                if want_edges:
                    edge_bc[(v, w) if v < w else (w, v)] += c
                delta[v] += c
            if w != s:
                node_bc[w] += delta[w]
    return node_bc, edge_bc


def edge_betweenness(g: Graph) -> dict[tuple[int, int], float]:
    """Unnormalized edge betweenness over unordered node pairs.

    For each edge ``e`` the value is the sum over pairs ``{u, v}`` of the
    fraction of shortest ``u``-``v`` paths that traverse ``e``.
    """
    _, edge_bc = _brandes(g, want_edges=True)
    return {e: val / 2.0 for e, val in edge_bc.items()}


def node_betweenness(g: Graph) -> np.ndarray:
    node_bc, _ = _brandes(g, want_edges=False)
    return node_bc / 2.0

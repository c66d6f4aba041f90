"""Brute-force reference implementations, independent of the library code."""

import itertools

import numpy as np


def floyd_warshall(adj):
    adj = np.asarray(adj)
    n = adj.shape[0]
    dist = np.full((n, n), np.inf)
    dist[adj > 0] = 1
    np.fill_diagonal(dist, 0)
    for k in range(n):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])
    return dist


def all_shortest_paths(adj, u, v):
    """Every shortest u-v path as a node tuple, by exhaustive DFS."""
    adj = np.asarray(adj)
    dist = floyd_warshall(adj)
    if not np.isfinite(dist[u, v]):
        return []
    target_len = int(dist[u, v])
    paths = []

    def extend(path):
        if len(path) - 1 == target_len:
            if path[-1] == v:
                paths.append(tuple(path))
            return
        for w in np.flatnonzero(adj[path[-1]]):
            if w not in path:
                extend(path + [int(w)])

    extend([u])
    return paths


def brute_edge_betweenness(adj):
    adj = np.asarray(adj)
    n = adj.shape[0]
    result = {(i, j): 0.0 for i, j in zip(*np.nonzero(np.triu(adj, 1)))}
    result = {(int(i), int(j)): v for (i, j), v in result.items()}
    for u, v in itertools.combinations(range(n), 2):
        paths = all_shortest_paths(adj, u, v)
        if not paths:
            continue
        for e in result:
            through = sum(1 for p in paths
                          if any({p[k], p[k + 1]} == set(e) for k in range(len(p) - 1)))
            result[e] += through / len(paths)
    return result


def brute_node_betweenness(adj):
    adj = np.asarray(adj)
    n = adj.shape[0]
    bc = np.zeros(n)
    for u, v in itertools.combinations(range(n), 2):
        paths = all_shortest_paths(adj, u, v)
        for w in range(n):
            if w in (u, v) or not paths:
                continue
            bc[w] += sum(w in p for p in paths) / len(paths)
    return bc


def random_adjacency(rng, n, p):
    a = np.triu(rng.random((n, n)) < p, 1)
    return (a | a.T).astype(np.int8)


def central_difference(f, x, step=1e-6):
    """Gradient of scalar ``f`` at array ``x`` by central differences."""
    x = np.array(x, dtype=float)
    grad = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + step
        fp = f(x)
        x[idx] = orig - step
        fm = f(x)
        x[idx] = orig
        grad[idx] = (fp - fm) / (2 * step)
    return grad


def random_trace(rng, adj, length):
    """Random feasible add/delete sequence without revisits, as
    ``(i, j, action)`` triples with ``i < j``."""
    adj = np.array(adj)
    n = adj.shape[0]
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    order = rng.permutation(len(pairs))[:length]
    steps = []
    for idx in order:
        i, j = pairs[idx]
        steps.append((i, j, "delete" if adj[i, j] else "add"))
        adj[i, j] = adj[j, i] = 1 - adj[i, j]
    return steps


def brute_link_metrics(adj, steps, target, classes, gamma):
    """D, B, A_s, A_d of a single trace at step ``gamma``, from
    Floyd-Warshall distances and exhaustive path enumeration."""
    adj = np.array(adj)
    n = adj.shape[0]
    for i, j, _ in steps[: gamma - 1]:
        adj[i, j] = adj[j, i] = 1 - adj[i, j]
    i, j, action = steps[gamma - 1]
    deg_sum = float(adj[i].sum() + adj[j].sum())
    after = adj.copy()
    after[i, j] = after[j, i] = 1 - after[i, j]
    scored = after if action == "add" else adj
    btw = brute_edge_betweenness(scored)[(i, j)]
    dist = floyd_warshall(after)[target]
    dist[~np.isfinite(dist)] = n
    others = [v for v in range(n) if v != target and classes[v] >= 0]
    same = [dist[v] for v in others if classes[v] == classes[target]]
    diff = [dist[v] for v in others if classes[v] != classes[target]]
    a_s = float(np.mean(same)) if same else float("nan")
    a_d = float(np.mean(diff)) if diff else float("nan")
    return deg_sum, btw, a_s, a_d

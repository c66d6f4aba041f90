"""
Checking the closed-form adjacency gradient
===========================================

The attack ranks links by the derivative of the target's loss with respect
to each adjacency entry. Here the closed form is compared with central
finite differences on a tiny random instance.
"""

import numpy as np

from graphmga import GcnModel, LabelAssignment
from graphmga.adjgrad import adjacency_gradient, finite_difference_oracle, symmetrize

rng = np.random.default_rng(0)
n = 6
A = np.triu(rng.random((n, n)) < 0.5, 1).astype(float)
A = A + A.T
X = rng.normal(size=(n, 3))
model = GcnModel(rng.normal(size=(3, 4)), rng.normal(size=(4, 2)))
labels = LabelAssignment(rng.integers(0, 2, size=n), 2)
target = 0

G = adjacency_gradient(model, A, X, labels, target)
worst = 0.0
for i in range(n):
    for j in range(n):
        if i != j:
            fd = finite_difference_oracle(model, A, X, labels, target, i, j)
            worst = max(worst, abs(G[i, j] - fd) / max(abs(fd), 1e-12))
print("max relative error vs finite differences:", worst)

# an undirected link moves A[i, j] and A[j, i] together, so the score of a
# link is the average of the two directed derivatives
print(np.round(symmetrize(G), 4))

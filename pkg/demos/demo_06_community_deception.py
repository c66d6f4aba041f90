"""
Hiding a node from label propagation
====================================

Label propagation finds the communities, a GCN is trained on them, and
the attack rewires links around one node until label propagation (same
seed) places it in a different community.
"""

import numpy as np

from graphmga import AttackConfig, generate_planted_partition
from graphmga.community import deception_run, label_propagation
from graphmga.gcn import TrainConfig
from graphmga.graph import node_degrees

g, _ = generate_planted_partition(60, 2, 0.4, 0.02, seed=0)
partition = label_propagation(g, seed=0)
print("communities found:", partition.num_communities, "sizes", partition.sizes().tolist())

deg = node_degrees(g)
low = np.flatnonzero(deg <= np.median(deg))[:5]
for t in low:
    p, hidden = deception_run(g, partition.as_labels(), int(t), AttackConfig(budget=20), seed=0,
                              train_cfg=TrainConfig(seed=1))
    print(f"node {t:2d} (degree {deg[t]}): hidden={hidden} after {p.success_step} modifications")

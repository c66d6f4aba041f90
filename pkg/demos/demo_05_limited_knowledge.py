"""
Attacking with a partial view of the graph
==========================================

The attacker computes gradients on a copy of the graph with some links
missing, then the chosen modifications are replayed on the real graph.
Modifications that do not apply there (adding a link that already exists)
are skipped and cost nothing.
"""

import numpy as np

from graphmga import AttackConfig, TrainConfig, default_features, generate_planted_partition, train
from graphmga.evaluation import evaluate, limited_knowledge_attack, select_high_degree_targets

g, labels = generate_planted_partition(200, 2, 0.1, 0.01, seed=0)
X = default_features(g.n)
model, history = train(g, X, labels, TrainConfig(seed=1))
targets = select_high_degree_targets(g, labels, model, X, 0.1, seed=0, candidates=history.split.test)
cfg = AttackConfig(budget=20)

for mode in ("keep_1hop", "random"):
    for p_miss in (0.0, 0.2, 0.5, 0.8):
        perts = [limited_knowledge_attack(model, g, X, labels, t, cfg, mode, p_miss, [4, t])
                 for t in targets]
        rep = evaluate(perts, 20)
        print(f"{mode:9s} p_miss={p_miss:.1f}  ASR {rep.asr[-1]:.2f}  AML {rep.aml:5.2f}"
              f"  ASR@5 {np.round(rep.asr[4], 2)}")

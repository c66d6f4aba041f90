"""
Momentum attack against the single-gradient baseline
====================================================

Both attacks rewire one link per step. FGA picks the link with the largest
current gradient; MGA picks the largest entry of a decayed sum of
normalised gradients, so earlier directions keep some weight.
"""

from graphmga import (
    AttackConfig,
    TrainConfig,
    default_features,
    evaluate,
    generate_planted_partition,
    run_attack,
    select_targets,
    train,
)
from graphmga.gcn import split_nodes

g, labels = generate_planted_partition(200, 2, 0.1, 0.01, seed=0)
X = default_features(g.n)
cfg = TrainConfig(seed=1)
model, _ = train(g, X, labels, cfg)

# ten correctly classified test nodes per class
test = split_nodes(labels, cfg).test
targets = select_targets(g, labels, model, X, "uniform", 10, seed=2, candidates=test)

for method in ("MGA", "FGA"):
    attack_cfg = AttackConfig(budget=20, mu=0.5, method=method)
    report = evaluate([run_attack(model, g, X, labels, t, attack_cfg) for t in targets], 20)
    print(f"{method}: ASR@5 {report.asr[4]:.2f}  ASR@20 {report.asr[-1]:.2f}  AML {report.aml:.2f}")

# a single perturbation, step by step
p = run_attack(model, g, X, labels, targets.nodes[0], AttackConfig(budget=8))
for k, ((i, j, action), (loss, label)) in enumerate(zip(p.steps, p.trace), 1):
    print(f"step {k}: {action:6s} ({i:3d}, {j:3d})  loss {loss:.3f}  predicted {label}")
print("first misclassified after step", p.success_step)

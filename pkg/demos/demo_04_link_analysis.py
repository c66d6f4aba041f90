"""
Which links does the attack pick?
=================================

For the gamma-th modification across all targets we look at the endpoint
degree sum (D), the edge betweenness of the link (B) and the mean hop
distance from the target to labeled nodes of its own class (A_s) and of
the other classes (A_d).
"""

from graphmga import (
    AttackConfig,
    TrainConfig,
    default_features,
    generate_planted_partition,
    link_analysis,
    run_attack,
    select_targets,
    train,
)

g, labels = generate_planted_partition(120, 2, 0.15, 0.01, seed=4)
X = default_features(g.n)
model, history = train(g, X, labels, TrainConfig(seed=5))
targets = select_targets(g, labels, model, X, "uniform", 5, seed=6)

perts = [run_attack(model, g, X, labels, t, AttackConfig(budget=10)) for t in targets]
report = link_analysis(g, perts, labels, train_nodes=history.split.train)

# A_d shrinks quickly: the attack wires the target into the other block
print(report.to_csv())

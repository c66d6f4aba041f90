"""Momentum gradient attacks on graph convolutional networks."""

from .adjgrad import adjacency_gradient, finite_difference_oracle, link_gradient, symmetrize
from .analysis import (
    betweenness_metric,
    class_distance_metrics,
    degree_metric,
    link_analysis,
)
from .attack import (
    AttackConfig,
    LinkMomentumNet,
    Perturbation,
    apply_modification,
    momentum_update,
    replay,
    run_attack,
    select_candidate,
    sign_of,
)
from .community import CommunityPartition, deception_run, label_propagation
from .evaluation import (
    AttackReport,
    TargetSet,
    evaluate,
    limited_knowledge_attack,
    limited_knowledge_graph,
    select_targets,
    transfer_evaluate,
)
from .gcn import (
    GcnModel,
    TrainConfig,
    default_features,
    forward,
    normalized_adjacency,
    predict_label,
    target_loss,
    train,
)
from .graph import (
    Graph,
    LabelAssignment,
    bfs_distances,
    edge_betweenness,
    generate_planted_partition,
    load_edge_list,
    node_betweenness,
    node_degrees,
)

__version__ = "0.1.0"

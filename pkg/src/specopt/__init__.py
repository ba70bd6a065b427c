"""specopt: graph-spectral collaborative optimization at desk scale.

Parameter vectors are nodes of a weighted graph; the graph Laplacian's
eigenbasis defines frequencies over which gradients are low-pass filtered
and a Dirichlet smoothness penalty is imposed. The package provides the
graph constructors, a dense symmetric eigensolver, the joint loss and its
gradients, the filtered descent loop, synthetic tasks, and a CLI that runs
seeded experiments into CSV/JSON reports with rendered figures.
"""

from .param_graph import (
    ParameterGraph,
    connected_components,
    from_edge_list,
    graph_from_dict,
    graph_to_dict,
    layer_chain_graph,
    load_graph,
    save_graph,
    similarity_graph,
)
from .spectral_engine import (
    FilterSpec,
    JacobiConvergenceError,
    SpectralBasis,
    apply_filter,
    as_parameter_matrix,
    basis_from_dict,
    basis_to_dict,
    eigendecompose,
    filter_gains,
    from_spectral,
    load_basis,
    save_basis,
    to_spectral,
)
from .coopt_loss import (
    JointLossConfig,
    LossBreakdown,
    joint_grad,
    joint_loss,
    spectral_reg,
    spectral_reg_grad,
)
from .spectral_optimizer import (
    DIVERGENCE_LIMIT,
    OptimizerConfig,
    TraceRecord,
    TrainTrace,
    filtered_task_grad,
    step,
    train,
)
from .toy_tasks import (
    NodeRegressionTask,
    SmoothSignalSpec,
    TinyNetTask,
    ToyTask,
    gen_smooth_signal,
    node_regression_task,
    tiny_net_task,
)

__version__ = "0.1.0"

__all__ = [
    "ParameterGraph",
    "connected_components",
    "from_edge_list",
    "graph_from_dict",
    "graph_to_dict",
    "layer_chain_graph",
    "load_graph",
    "save_graph",
    "similarity_graph",
    "FilterSpec",
    "JacobiConvergenceError",
    "SpectralBasis",
    "apply_filter",
    "as_parameter_matrix",
    "basis_from_dict",
    "basis_to_dict",
    "eigendecompose",
    "filter_gains",
    "from_spectral",
    "load_basis",
    "save_basis",
    "to_spectral",
    "JointLossConfig",
    "LossBreakdown",
    "joint_grad",
    "joint_loss",
    "spectral_reg",
    "spectral_reg_grad",
    "DIVERGENCE_LIMIT",
    "OptimizerConfig",
    "TraceRecord",
    "TrainTrace",
    "filtered_task_grad",
    "step",
    "train",
    "NodeRegressionTask",
    "SmoothSignalSpec",
    "TinyNetTask",
    "ToyTask",
    "gen_smooth_signal",
    "node_regression_task",
    "tiny_net_task",
    "__version__",
]

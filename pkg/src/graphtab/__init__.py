"""graphtab: graph-to-table featurization for node property prediction.

Turns an attributed graph into a plain feature matrix (neighborhood feature
aggregation, structural features, randomized positional encodings) so that
any tabular predictor, including an external in-context backbone, can solve
node-level tasks.
"""

from .assemble import (
    AssembleOptions,
    AugmentedTable,
    PcaModel,
    assemble_features,
    load_table,
    one_hot,
    pca_fit,
    pca_transform,
    save_table,
)
from .data import (
    CATEGORICAL,
    NUMERICAL,
    Column,
    Dataset,
    DatasetStats,
    FeatureTable,
    Graph,
    Split,
    TaskSpec,
    build_graph,
    dataset_stats,
    load_dataset,
    load_dataset_dir,
    load_split,
    make_split,
    save_dataset,
    save_split,
)
from .equivariance import (
    CheckResult,
    Report,
    check_feature_permutation,
    check_label_permutation,
    check_node_permutation,
    permute_nodes,
)
from .errors import (
    BridgeError,
    ConvergenceError,
    GraphTabError,
    InputDataError,
    LimitViolation,
    NumericError,
)
from .kernels import backend_name
from .metrics import MetricResult, accuracy, average_precision, evaluate, r2
from .nfa import NfaTable, compute_nfa, nfa_categorical, nfa_numerical
from .pearl import (
    DEFAULT_WEIGHT_SEED,
    PearlConfig,
    PearlWeights,
    gnn_forward,
    init_weights,
    load_weights,
    pearl_encode,
    save_weights,
    train_pearl,
)
from .predictors import (
    PredictRequest,
    Prediction,
    bridge_predict,
    knn_predict,
    label_shuffle_wrap,
    linear_train_predict,
)
from .structural import (
    StructuralConfig,
    StructuralFeatures,
    component_labels,
    degrees,
    laplacian_eigenvectors,
    pagerank,
    structural_features,
)
from .synth import gnp_graph, make_sbm_dataset, sbm_graph

__version__ = "0.1.0"

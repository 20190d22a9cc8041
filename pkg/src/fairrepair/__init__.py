"""Group-fair repair of attributed graphs via optimal transport.

The package repairs a graph's adjacency matrix so that node neighbourhood
distributions become comparable across protected-attribute groups, embeds
the repaired graph, and evaluates link prediction under group and
individual fairness metrics.
"""
from .embedding import (EmbeddingConfig, EmbeddingMatrix, embed_graph,
                        random_walks, skipgram_train, spectral_embed)
from .errors import (ConfigError, DataError, FairRepairError, NumericalError,
                     UndefinedMetricError)
from .graphs import (AttributedGraph, GroupPartition, SbmSpec, assortativity,
                     builtin_spec, generate_sbm, knn_graph, laplacian,
                     partition_by_label, read_graph_files, write_graph_files)
from .metrics import (FairnessReport, Theorem1Report, check_corollary1,
                      check_theorem1, consistency, di_ber, representation_bias)
from .ot import (CostMatrix, Coupling, QuadraticTerm, RegularizedProblem,
                 cost_matrix, free_support_barycenter, solve_emd,
                 solve_laplacian_ot)
from .pipeline import ExperimentConfig, run_single, run_sweep
from .predict import (Classifier, EdgeSplit, auc, hadamard_features,
                      link_prediction_pipeline, split_edges, train_logreg)
from .repair import (RepairConfig, RepairResult, repair_binary, repair_graph,
                     repair_multiclass, repair_random)

__version__ = "0.1.0"

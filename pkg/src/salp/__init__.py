"""Semi-automatic label propagation workbench.

Propagates class labels from a few supervised samples to many unsupervised
ones with optimum-path forests in a 2-D embedding, routes low-confidence
samples to a (possibly simulated) annotator, and scores the resulting
training sets with a supervised forest classifier and Cohen's kappa.
"""

from .data import (Dataset, Sample, Split, load_dataset, load_dataset_full,
                   read_features, read_split, stratified_split, write_features,
                   write_manifest, write_split)
from .featurize import PCAReducer, PcaModel, pca_fit, pca_transform
from .metrics import ConfusionMatrix, cohens_kappa, confusion, kappa_from_confusion, \
    propagation_accuracy
from .opf import (ForestResult, OpfModel, OPFClassifier, PropagationResult,
                  SemiSupervisedOPF, confidence, minimax_forest, opf_classify,
                  opf_semi_propagate, opf_train)
from .pipeline import (EvaluationReport, ExperimentContext, RunParams,
                       finalize_and_train, run_experiment, run_protocol)
from .session import (SessionBundle, SessionState, apply_manual_labels,
                      load_archive, save_archive, set_threshold, simulate_user,
                      threshold_split, undo)
from .tsne import (AffinityMatrix, ExactTSNE, Projection2D, TsneParams,
                   conditional_affinities, kl_divergence, pairwise_sq_dists,
                   project_features, symmetrize, tsne_gradient, tsne_optimize)

__version__ = "0.1.0"

__all__ = [
    "Dataset", "Sample", "Split", "load_dataset", "load_dataset_full",
    "read_features", "read_split", "stratified_split", "write_features",
    "write_manifest", "write_split",
    "PCAReducer", "PcaModel", "pca_fit", "pca_transform",
    "ConfusionMatrix", "cohens_kappa", "confusion", "kappa_from_confusion",
    "propagation_accuracy",
    "ForestResult", "OpfModel", "OPFClassifier", "PropagationResult",
    "SemiSupervisedOPF", "confidence", "minimax_forest", "opf_classify",
    "opf_semi_propagate", "opf_train",
    "EvaluationReport", "ExperimentContext", "RunParams", "finalize_and_train",
    "run_experiment", "run_protocol",
    "SessionBundle", "SessionState", "apply_manual_labels", "load_archive",
    "save_archive", "set_threshold", "simulate_user", "threshold_split", "undo",
    "AffinityMatrix", "ExactTSNE", "Projection2D", "TsneParams",
    "conditional_affinities", "kl_divergence", "pairwise_sq_dists",
    "project_features", "symmetrize", "tsne_gradient", "tsne_optimize",
    "__version__",
]

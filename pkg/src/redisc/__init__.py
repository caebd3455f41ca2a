"""Masked label diffusion for transductive node classification, with
label-propagation and GNN baselines, on a small numpy/scipy autodiff core."""

from redisc.baselines import (
    GNNTrainConfig,
    LPConfig,
    TrainedModel,
    forward_proba,
    label_spread,
    label_trick_loss,
    predict_independent,
    spread_to_proba,
    train_label_trick,
    train_vanilla_gnn,
)
from redisc.denoiser import (
    GNNConfig,
    denoise_predict,
    feature_cache,
    forward_logits,
    init_params,
    label_matrix,
)
from redisc.experiment import METHODS, run_experiment, run_method, write_report
from redisc.graph import (
    UNKNOWN,
    BundleError,
    GraphBundle,
    NormalizedAdjacency,
    SplitSpec,
    generate_sbm,
    load_bundle,
    make_per_class_split,
    normalize_adjacency,
    save_bundle,
)
from redisc.metrics import node_accuracy, subgraph_accuracy
from redisc.rng import (
    BASELINE,
    DENOISER_INIT,
    EM_LOOP,
    GRAD_CHECK,
    PREDICT,
    SBM,
    SPLIT,
    WARMUP_DRAW,
    WARMUP_INIT,
    stream,
)
from redisc.sampler import SampleTrace, StepRecord, sample_conditional, sample_unconditional
from redisc.schedule import (
    MASKED,
    LabelState,
    NoiseSchedule,
    RoutingDraw,
    cosine_schedule,
    draw_routing,
    forward_mask,
    loss_weight_and_mask,
)
from redisc.training import (
    EMResult,
    PseudoLabelQueue,
    QueueEntry,
    TrainConfig,
    em_train,
    load_config,
    m_step,
    majority_vote,
    predict,
    warmup_queue,
)

__all__ = [
    "BASELINE",
    "DENOISER_INIT",
    "EM_LOOP",
    "GRAD_CHECK",
    "MASKED",
    "METHODS",
    "PREDICT",
    "SBM",
    "SPLIT",
    "UNKNOWN",
    "WARMUP_DRAW",
    "WARMUP_INIT",
    "BundleError",
    "EMResult",
    "GNNConfig",
    "GNNTrainConfig",
    "GraphBundle",
    "LPConfig",
    "LabelState",
    "NoiseSchedule",
    "NormalizedAdjacency",
    "PseudoLabelQueue",
    "QueueEntry",
    "RoutingDraw",
    "SampleTrace",
    "SplitSpec",
    "StepRecord",
    "TrainConfig",
    "TrainedModel",
    "cosine_schedule",
    "denoise_predict",
    "draw_routing",
    "em_train",
    "feature_cache",
    "forward_logits",
    "forward_mask",
    "forward_proba",
    "generate_sbm",
    "init_params",
    "label_matrix",
    "label_spread",
    "label_trick_loss",
    "load_bundle",
    "load_config",
    "loss_weight_and_mask",
    "m_step",
    "majority_vote",
    "make_per_class_split",
    "node_accuracy",
    "normalize_adjacency",
    "predict",
    "predict_independent",
    "run_experiment",
    "run_method",
    "sample_conditional",
    "sample_unconditional",
    "save_bundle",
    "spread_to_proba",
    "stream",
    "subgraph_accuracy",
    "train_label_trick",
    "train_vanilla_gnn",
    "warmup_queue",
    "write_report",
]

from . import transition
from .transition import (
    TransitionNets,
    make_transition,
    matrix_to_weights,
    pair_indices,
    predict_next,
    predict_next_backward,
    transition_params,
    weights_to_matrix,
)
from .model import (
    CONTRASTIVE_TEMPERATURE,
    LossWeights,
    ModelDims,
    REGIMES,
    STATIC_PRIOR_STD,
    WorldModel,
    encode_step,
    fc_weights,
    features,
    load_model,
    make_model,
    save_model,
)
from .losses import (
    LossBreakdown,
    combine,
    contrastive_loss,
    cosine_matrix,
    sample_window_noise,
    static_backward,
    static_loss,
    window_loss,
)
from .train import (
    DivergenceError,
    TrainConfig,
    TrainResult,
    Windows,
    evaluate_loss,
    infer_latents,
    make_windows,
    train_world_model,
)
from .probe import ProbeError, attribute_targets, linear_probe, ridge_fit, ridge_predict


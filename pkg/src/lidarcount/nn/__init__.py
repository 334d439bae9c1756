from .archs import (
    AE_WIDTHS,
    CNN_PARAM_COUNT,
    ThresholdResult,
    build_autoencoder,
    build_cnn2d,
    choose_threshold,
    classify_ae,
    classify_cnn,
    reconstruction_error,
)
from .model import (
    BN_EPS,
    BN_MOMENTUM,
    LayerSpec,
    Model,
    ModelSpec,
    count_params,
    forward,
    infer_shapes,
    init_params,
)
from .train import (
    TrainConfig,
    TrainingDivergedError,
    gradient_check,
    mse_loss,
    softmax_ce_from_logits,
    train,
)

__all__ = [
    "AE_WIDTHS",
    "BN_EPS",
    "BN_MOMENTUM",
    "CNN_PARAM_COUNT",
    "LayerSpec",
    "Model",
    "ModelSpec",
    "ThresholdResult",
    "TrainConfig",
    "TrainingDivergedError",
    "build_autoencoder",
    "build_cnn2d",
    "choose_threshold",
    "classify_ae",
    "classify_cnn",
    "count_params",
    "forward",
    "gradient_check",
    "infer_shapes",
    "init_params",
    "mse_loss",
    "reconstruction_error",
    "softmax_ce_from_logits",
    "train",
]

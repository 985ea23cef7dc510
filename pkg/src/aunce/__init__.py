"""Weighted contrastive pretraining for imbalanced, noisy multi-label detection.

The package provides the loss family (occurrence-weighted cross-entropy and
the re-weighted contrastive loss with its gradient diagnostics), in-batch
positive/negative pair construction, a seeded synthetic data generator, a
small exactly-differentiated encoder, the two-stage trainer, multi-label
metrics, sklearn-style estimators and an experiment CLI.
"""

from .config import AugmentConfig, AunceConfig
from .encoder import (
    EncoderParams,
    backward,
    forward,
    forward_batch,
    init_encoder,
    load_checkpoint,
    save_checkpoint,
)
from .estimators import AunceDetector, ContrastiveEmbedder
from .exceptions import (
    AunceError,
    ConfigurationError,
    ContractViolationError,
    DegenerateInputError,
    EmptyBatchError,
    NumericFailureError,
)
from .gradcheck import central_difference, grad_check
from .losses import (
    AuWeights,
    LossOutput,
    au_weights,
    aunce_loss,
    aunce_term,
    gradient_ratio_profile,
    wce_loss,
    wce_loss_and_grad,
)
from .mathops import dot, exp_sim, l2_normalize, log_sum_exp
from .metrics import (
    ConfusionCounts,
    MetricsReport,
    accuracy,
    confusion,
    f1_macro,
    f1_micro,
)
from .optim import AdamW
from .rng import RngStream
from .sampling import (
    PairPlan,
    PositiveKind,
    augment,
    beta_for_anchor,
    build_pair_plan,
    select_positive,
)
from .synthdata import (
    RATE_PRESETS,
    GeneratorSpec,
    SyntheticDataset,
    generate,
    load_csv,
    save_csv,
    split,
)
from .trainer import LinearHead, TrainRun, baseline_e2e, linear_eval, pretrain

__version__ = "0.1.0"

"""Desk-scale simulator for speculative decoding with online-learned draft models."""

__version__ = "0.1.0"

from .dist import (  # noqa: F401
    Categorical,
    acceptance_rate,
    entropy,
    kl_divergence,
    residual,
    sample,
    total_variation,
)
from .draft import DraftParams, ce_grad, ce_loss, predict, project  # noqa: F401
from .engine import RandomStream, SpecConfig, StepOutcome, run_round, verify_step  # noqa: F401
from .metrics import (  # noqa: F401
    RoundRecord,
    RunSummary,
    acceleration_rate,
    dynamic_regret,
    expected_emitted,
    optimal_k_closed_form,
    optimal_k_exact,
)

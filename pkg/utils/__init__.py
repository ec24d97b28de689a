# Utilities module for the heterogeneous-environment detector
# Contains linear algebra, random streams, validation and logging helpers

from .linalg import (
    HermitianPD,
    LinalgError,
    NotPositiveDefiniteError,
    SingularGramError,
    complement_projector,
    inv_sqrt,
    orthogonal_projector,
    pd_repair,
    sample_covariance,
)
from .logging_config import bind_context, campaign_context, configure_logging, get_logger
from .rng import make_rng, trial_rng

__all__ = [
    "HermitianPD",
    "LinalgError",
    "NotPositiveDefiniteError",
    "SingularGramError",
    "complement_projector",
    "inv_sqrt",
    "orthogonal_projector",
    "pd_repair",
    "sample_covariance",
    "configure_logging",
    "get_logger",
    "bind_context",
    "campaign_context",
    "make_rng",
    "trial_rng",
]

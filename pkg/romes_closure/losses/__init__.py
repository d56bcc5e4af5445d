from .losses import (
    LossKind,
    LossModule,
    COMBINED_OMEGAS,
    evaluate_loss,
    log_likelihood_loss,
    interval_loss,
    combined_loss,
    ks_loss,
)
from .metrics import (
    erf_inverse,
    fvu,
    validation_frequency,
    ks_statistic,
    pareto_front,
    relative_error,
)

"""Margin-based debiasing engine.

Python veneer over the C++ core: group-margin softmax loss with margins
learned by meta-optimizing an equalized loss on balanced meta-batches,
plus biased synthetic datasets and group-fairness metrics.
"""

try:
    from ._mdnfair import (  # type: ignore[attr-defined]
        EngineError,
        __version__,
        ce_loss,
        generate_dataset,
        mel_loss,
        metrics,
        msl_grad_margins,
        msl_loss,
        run_gradient_checks,
        train,
    )
except ImportError:  # extension built out-of-tree (development layout)
    from _mdnfair import (  # type: ignore[no-redef]
        EngineError,
        __version__,
        ce_loss,
        generate_dataset,
        mel_loss,
        metrics,
        msl_grad_margins,
        msl_loss,
        run_gradient_checks,
        train,
    )

__all__ = [
    "EngineError",
    "__version__",
    "ce_loss",
    "generate_dataset",
    "mel_loss",
    "metrics",
    "msl_grad_margins",
    "msl_loss",
    "run_gradient_checks",
    "train",
]

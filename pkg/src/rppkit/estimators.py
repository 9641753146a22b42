"""scikit-learn compatible wrappers around the filter and degradation model.

Inputs are single frames ``(H, W)`` or stacks ``(n, H, W)`` of unit-range
samples; outputs keep the input's layout. The transforms are stateless
apart from validated configuration, so ``fit`` only checks parameters.
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_frames, check_unit_interval
from .dct_core import DctConfig, adaptive_dct_filter, adaptive_dct_loss
from .degrade import apply_recipe, sample_recipe
from .exceptions import ContractViolation
from .rd_harness import alpha_blend


def _unit_range(stack):
    if stack.size and (stack.min() < 0.0 or stack.max() > 1.0):
        raise ContractViolation("samples must lie in [0, 1]")
    return stack


class AdaptiveDCTFilter(TransformerMixin, BaseEstimator):
    """Zero (or shrink) the small high-frequency DCT coefficients of each frame.

    Parameters
    ----------
    block_sizes : tuple of int
        Block sizes, processed in ascending order.
    diagonal_threshold : int or None
        Anti-diagonal cut ``S``; None uses ``S = N``.
    normalization, threshold_mode, reduction : str
        See :class:`rppkit.dct_core.DctConfig`.
    strength : float in [0, 1]
        1 zeroes the selected coefficients, 0 is a no-op.
    """

    def __init__(self, block_sizes=(8, 16), diagonal_threshold=None,
                 normalization="orthonormal", threshold_mode="block-area",
                 reduction="mean", strength=1.0):
        self.block_sizes = block_sizes
        self.diagonal_threshold = diagonal_threshold
        self.normalization = normalization
        self.threshold_mode = threshold_mode
        self.reduction = reduction
        self.strength = strength

    def _make_config(self):
        return DctConfig(self.block_sizes, self.diagonal_threshold, self.normalization,
                         self.threshold_mode, self.reduction)

    def _check(self, X):
        stack, was_2d = check_frames(X, min_size=max(self.config_.block_sizes))
        return _unit_range(stack), was_2d

    def fit(self, X=None, y=None):
        self.config_ = self._make_config()
        check_unit_interval(self.strength, "strength")
        if X is not None:
            self._check(X)
        return self

    def _filter(self, stack):
        return np.stack([adaptive_dct_filter(f, self.config_, self.strength) for f in stack])

    def transform(self, X):
        check_is_fitted(self, "config_")
        stack, was_2d = self._check(X)
        out = self._filter(stack)
        return out[0] if was_2d else out

    def loss(self, X):
        """Adaptive DCT loss of every frame."""
        check_is_fitted(self, "config_")
        stack, _ = self._check(X)
        return np.array([adaptive_dct_loss(f, self.config_) for f in stack])

    def score(self, X, y=None):
        """Negative mean loss of the filtered frames (higher is better)."""
        return -float(np.mean(self.loss(self.transform(X))))


class RatePerceptionPreprocessor(AdaptiveDCTFilter):
    """Adaptive DCT filter blended with its input: ``alpha*filtered + (1-alpha)*X``."""

    def __init__(self, block_sizes=(8, 16), diagonal_threshold=None,
                 normalization="orthonormal", threshold_mode="block-area",
                 reduction="mean", strength=1.0, alpha=0.5):
        super().__init__(block_sizes, diagonal_threshold, normalization,
                         threshold_mode, reduction, strength)
        self.alpha = alpha

    def fit(self, X=None, y=None):
        check_unit_interval(self.alpha, "alpha")
        return super().fit(X, y)

    def _filter(self, stack):
        return alpha_blend(super()._filter(stack), stack, self.alpha)


class DegradationTransformer(TransformerMixin, BaseEstimator):
    """Apply one seeded degradation recipe to every frame.

    ``fit`` samples the recipe (``recipe_``); frames keep their size.
    """

    def __init__(self, seed=0, ranges=None, n_orders=2):
        self.seed = seed
        self.ranges = ranges
        self.n_orders = n_orders

    def fit(self, X=None, y=None):
        self.recipe_ = sample_recipe(self.seed, self.ranges, self.n_orders)
        return self

    def transform(self, X):
        check_is_fitted(self, "recipe_")
        stack, was_2d = check_frames(X)
        _unit_range(stack)
        out = np.stack([apply_recipe(f, self.recipe_)[0] for f in stack])
        return out[0] if was_2d else out

"""
Weight update rules.
Implements Strategy pattern for the W step of one view.
"""

import logging

import numpy as np

from core.design_patterns.strategy import IStrategy


logger = logging.getLogger(__name__)

# Gradients with a smaller Frobenius norm are not normalized.
MIN_GRADIENT_NORM = 1e-12


class NormalizedWeightUpdate(IStrategy):
    """
    W <- W - dt * G / ||G||_F.
    The step is skipped when ||G||_F is below MIN_GRADIENT_NORM.
    """

    name = 'normalized'

    def execute(self, W: np.ndarray, gradient: np.ndarray, step: float, view_id: str = '') -> np.ndarray:
        norm = float(np.linalg.norm(gradient, 'fro'))
        if norm < MIN_GRADIENT_NORM:
            logger.warning("Skipping W step for view '%s': gradient norm %.3g", view_id, norm)
            return W
        return W - step * gradient / norm


class RawWeightUpdate(IStrategy):
    """W <- W - dt * G."""

    name = 'raw'

    def execute(self, W: np.ndarray, gradient: np.ndarray, step: float, view_id: str = '') -> np.ndarray:
        return W - step * gradient

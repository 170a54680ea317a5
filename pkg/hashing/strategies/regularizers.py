"""
Correlation regularizers on the embedding's Gram matrix.
Implements Strategy pattern for the two forms of the penalty.

Both forms enter the objective squared, gamma * ||R(C)||_F^2, where
R(C) is the residual of the Gram matrix C^T C / n against its target.
"""

import numpy as np

from core.design_patterns.factory import BaseFactory
from core.design_patterns.strategy import IStrategy


class CorrelationRegularizer(IStrategy):
    """Base class: the residual is C^T C / n minus a target matrix."""

    name = ''

    @staticmethod
    def gram(values: np.ndarray) -> np.ndarray:
        """C^T C / n."""
        return values.T @ values / values.shape[0]

    def residual(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def norm(self, values: np.ndarray) -> float:
        """Unsquared Frobenius norm of the residual."""
        return float(np.linalg.norm(self.residual(values), 'fro'))

    def execute(self, values: np.ndarray) -> float:
        """
        Penalty value as it enters the objective.

        Args:
            values: Embedding matrix C (n x c)

        Returns:
            float: ||R(C)||_F^2
        """
        residual = self.residual(values)
        return float(np.sum(residual * residual))

    def gradient(self, values: np.ndarray) -> np.ndarray:
        """
        Derivative of ||R(C)||_F^2 with respect to C.

        R is symmetric and dR = (dC^T C + C^T dC) / n, so the derivative is
        (4 / n) C R.
        """
        n = values.shape[0]
        return (4.0 / n) * (values @ self.residual(values))


class SimplifiedCorrelationRegularizer(CorrelationRegularizer):
    """||C^T C / n||_F: penalizes every inner product between code columns."""

    name = 'simplified'

    def residual(self, values: np.ndarray) -> np.ndarray:
        return self.gram(values)


class IdentityCorrelationRegularizer(CorrelationRegularizer):
    """||C^T C / n - I||_F: pulls the Gram matrix toward the identity."""

    name = 'identity'

    def residual(self, values: np.ndarray) -> np.ndarray:
        return self.gram(values) - np.eye(values.shape[1])


class RegularizerFactory(BaseFactory):
    """
    Factory for correlation regularizers keyed by their config name.
    """

    def __init__(self):
        super().__init__()
        self.register_product(SimplifiedCorrelationRegularizer.name, SimplifiedCorrelationRegularizer)
        self.register_product(IdentityCorrelationRegularizer.name, IdentityCorrelationRegularizer)


# Singleton instance
regularizer_factory = RegularizerFactory()

"""
Strategy pattern implementations for the hashing model.
"""

from .regularizers import (
    CorrelationRegularizer,
    SimplifiedCorrelationRegularizer,
    IdentityCorrelationRegularizer,
    regularizer_factory,
)

__all__ = [
    'CorrelationRegularizer',
    'SimplifiedCorrelationRegularizer',
    'IdentityCorrelationRegularizer',
    'regularizer_factory',
]

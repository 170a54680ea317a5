"""
Strategy pattern implementations for training.
"""

from .schedules import LinearDecaySchedule, ConstantSchedule
from .updates import NormalizedWeightUpdate, RawWeightUpdate

__all__ = [
    'LinearDecaySchedule',
    'ConstantSchedule',
    'NormalizedWeightUpdate',
    'RawWeightUpdate',
]

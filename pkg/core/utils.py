"""
Utility functions for the hashing toolkit.
Provides numeric helpers used across the apps.
"""

from typing import Sequence

import numpy as np

from core.exceptions import ContractViolationException, InputValidationException


# Denominator floor for relative changes.
RELATIVE_EPSILON = 1e-12


def as_finite_matrix(values, name: str = 'matrix') -> np.ndarray:
    """
    Convert values to a 2-D float64 array and reject NaN/inf entries.

    Args:
        values: Array-like input
        name: Name used in error messages

    Returns:
        np.ndarray: 2-D float64 array

    Raises:
        ContractViolationException: If the input is not two-dimensional
        InputValidationException: If any entry is not finite
    """
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 2:
        raise ContractViolationException(f"{name} must be 2-D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputValidationException(f"{name} contains non-finite entries")
    return array


def as_finite_vector(values, name: str = 'vector') -> np.ndarray:
    """Convert values to a 1-D float64 array and reject NaN/inf entries."""
    array = np.asarray(values, dtype=np.float64)
    if array.ndim != 1:
        raise ContractViolationException(f"{name} must be 1-D, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise InputValidationException(f"{name} contains non-finite entries")
    return array


def relative_change(current: float, previous: float, eps: float = RELATIVE_EPSILON) -> float:
    """
    Scale-free change between two objective values.

    Args:
        current: Value at this iteration
        previous: Value at the previous iteration
        eps: Floor for the denominator

    Returns:
        float: |current - previous| / max(previous, eps)
    """
    return abs(current - previous) / max(previous, eps)


def expand_per_view(values: Sequence, count: int, name: str) -> list:
    """
    Broadcast a one-element list to ``count`` entries, or check the length.

    Args:
        values: One value for all views, or one value per view
        count: Number of views
        name: Parameter name used in error messages

    Returns:
        list: Exactly ``count`` values
    """
    values = list(values)
    if len(values) == 1:
        return values * count
    if len(values) != count:
        raise ContractViolationException(
            f"{name} has {len(values)} entries for {count} views"
        )
    return values


def format_duration(seconds: float) -> str:
    """
    Format a duration for log lines.

    Args:
        seconds: Duration in seconds

    Returns:
        str: ``MM:SS.mmm`` or ``HH:MM:SS`` for long runs
    """
    hours = int(seconds // 3600)
    minutes = int((seconds % 3600) // 60)
    secs = seconds % 60

    if hours > 0:
        return f"{hours:02d}:{minutes:02d}:{int(secs):02d}"
    return f"{minutes:02d}:{secs:06.3f}"

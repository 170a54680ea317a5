"""
Domain models for regularizer geometry checks.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from core.exceptions import ContractViolationException


@dataclass(frozen=True)
class AngleProfile:
    """
    Pairwise angles (radians) between the columns of a matrix, pairs p < q
    in row-major order, with their spread around the mean.
    """

    pairwise_angles: Tuple[float, ...]
    max_deviation: float
    abs_cosine_deviation: float = 0.0

    def __post_init__(self):
        angles = tuple(float(a) for a in self.pairwise_angles)
        if any(not 0.0 <= a <= np.pi for a in angles):
            raise ContractViolationException("angles must lie in [0, pi]")
        object.__setattr__(self, 'pairwise_angles', angles)


@dataclass(frozen=True, eq=False)
class MinimizationResult:
    """Best iterate of the projected descent on the orthogonality penalty."""

    W: np.ndarray
    profile: AngleProfile
    penalty: float
    iterations: int
    converged: bool


@dataclass(frozen=True, eq=False)
class RankCheck:
    """Numerical rank of an embedding against the d + 1 bound."""

    numerical_rank: int
    bound: int
    singular_values: np.ndarray = field(repr=False, default=None)
    smallest_gram_eigenvalue: float = 0.0
    largest_gram_eigenvalue: float = 0.0

    @property
    def within_bound(self) -> bool:
        return self.numerical_rank <= self.bound


@dataclass(frozen=True)
class PropositionCheckResult:
    """
    One row of the proposition report.

    Informational rows carry a value but never fail the run.
    """

    check: str
    seed: int
    value: float
    threshold: float
    passed: Optional[bool]
    informational: bool = False
    detail: str = ''

"""
Retrieval strategies over Hamming distances.
Implements Strategy pattern for the two protocols: ranking and lookup.
"""

import numpy as np

from codes.services import rank_by_distance
from core.design_patterns.strategy import IStrategy
from core.exceptions import ContractViolationException


class HammingRankingStrategy(IStrategy):
    """
    Order the whole database by Hamming distance to the query.
    Equal distances keep ascending database index.
    """

    name = 'ranking'

    def execute(self, distances: np.ndarray, cutoff: int = None) -> np.ndarray:
        """
        Rank database items.

        Args:
            distances: Distance from the query to every database item
            cutoff: Number of leading items to return, all by default

        Returns:
            np.ndarray: Database indices, nearest first
        """
        order = rank_by_distance(np.asarray(distances))
        return order if cutoff is None else order[:cutoff]


class HashLookupStrategy(IStrategy):
    """Retrieve every database item within a Hamming radius of the query."""

    name = 'lookup'

    def __init__(self, radius: int):
        if radius < 0:
            raise ContractViolationException(f"radius must be non-negative, got {radius}")
        self.radius = radius

    def execute(self, distances: np.ndarray) -> np.ndarray:
        """Boolean mask of retrieved items."""
        return distances <= self.radius

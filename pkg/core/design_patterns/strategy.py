"""
Strategy Pattern implementation for the hashing toolkit.

The Strategy pattern enables selecting an algorithm at runtime.
Used for:
- Correlation regularizers (simplified MCR, identity-subtracted MCR)
- Step-size schedules (linear decay, constant)
- Weight update rules (normalized, raw)
- Retrieval protocols (Hamming ranking, hash lookup)
"""

from abc import ABC, abstractmethod
from typing import Any


class IStrategy(ABC):
    """Base interface for all strategy implementations."""

    name: str = ''

    @abstractmethod
    def execute(self, *args, **kwargs) -> Any:
        """
        Execute the strategy algorithm.

        Args:
            *args: Positional arguments for the strategy
            **kwargs: Keyword arguments for the strategy

        Returns:
            Any: Result of the strategy execution
        """
        pass

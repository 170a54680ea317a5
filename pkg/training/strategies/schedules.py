"""
Step-size schedules.
Implements Strategy pattern for choosing the step at iteration k.
"""

from core.design_patterns.strategy import IStrategy
from core.exceptions import ContractViolationException


class LinearDecaySchedule(IStrategy):
    """
    Step decreasing linearly from k_s at k=0 to k_e at k=K.
    dt = k_s - (k_s - k_e) * k / K
    """

    name = 'linear'

    def __init__(self, k_s: float, k_e: float, K: int):
        self.k_s = k_s
        self.k_e = k_e
        self.K = K

    def execute(self, k: int) -> float:
        """
        Step size at iteration k.

        Args:
            k: Iteration index, 0 <= k <= K

        Returns:
            float: Step size in [k_e, k_s]
        """
        if not 0 <= k <= self.K:
            raise ContractViolationException(f"iteration {k} outside [0, {self.K}]")
        return self.k_s - (self.k_s - self.k_e) * k / self.K


class ConstantSchedule(IStrategy):
    """Fixed step for every iteration."""

    name = 'constant'

    def __init__(self, step: float, K: int):
        self.step = step
        self.K = K

    def execute(self, k: int) -> float:
        if not 0 <= k <= self.K:
            raise ContractViolationException(f"iteration {k} outside [0, {self.K}]")
        return self.step

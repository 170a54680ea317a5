"""
Domain models for training.

Plain value objects describing a training run's configuration and outcome.
"""

from dataclasses import asdict, dataclass, field
from typing import List, Tuple

from core.exceptions import ConfigurationException
from hashing.models import CodeMatrix, ViewParams


@dataclass(frozen=True)
class TrainConfig:
    """
    Optimizer settings.

    k_s and k_e bound the linearly decaying step, K caps the number of
    iterations and convergence_rtol is the relative objective change below
    which training stops.
    """

    k_s: float = 0.003
    k_e: float = 0.0015
    K: int = 400
    convergence_rtol: float = 1e-5
    seed: int = 0
    code_length: int = 32
    regularizer: str = 'simplified'
    workers: int = 1

    def __post_init__(self):
        errors = {}
        if not self.k_e > 0:
            errors['k_e'] = f"must be positive, got {self.k_e}"
        if not self.k_s >= self.k_e:
            errors['k_s'] = f"must be at least k_e ({self.k_e}), got {self.k_s}"
        if not (isinstance(self.K, int) and self.K >= 1):
            errors['K'] = f"must be a positive integer, got {self.K}"
        if not self.convergence_rtol >= 0:
            errors['convergence_rtol'] = f"must be non-negative, got {self.convergence_rtol}"
        if not (isinstance(self.code_length, int) and self.code_length >= 1):
            errors['code_length'] = f"must be a positive integer, got {self.code_length}"
        if not (isinstance(self.workers, int) and self.workers >= 1):
            errors['workers'] = f"must be a positive integer, got {self.workers}"
        if errors:
            raise ConfigurationException("Invalid training configuration", errors)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TrainTrace:
    """Objective value per iteration plus run metadata."""

    objective_per_iteration: Tuple[float, ...]
    step_sizes: Tuple[float, ...]
    converged: bool
    seconds: float = 0.0

    @property
    def iterations_run(self) -> int:
        return len(self.objective_per_iteration)

    @property
    def final_objective(self) -> float:
        return self.objective_per_iteration[-1]


@dataclass(frozen=True, eq=False)
class TrainingResult:
    """Final parameters, final code matrix and trace of one run."""

    params: List[ViewParams]
    codes: CodeMatrix
    trace: TrainTrace
    view_ids: List[str] = field(default_factory=list)

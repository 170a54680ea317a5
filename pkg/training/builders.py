"""
Builder pattern implementation for training.

TrainConfigBuilder assembles a TrainConfig from project settings and overrides.
"""

from django.conf import settings

from core.design_patterns.builder import BaseBuilder
from .models import TrainConfig


class TrainConfigBuilder(BaseBuilder):
    """
    Builder for training configurations.
    Starts from the DMH_* settings; every with_* call overrides one group.
    """

    def reset(self):
        """Reset the builder to the configured defaults."""
        self._product = {
            'k_s': settings.DMH_KS,
            'k_e': settings.DMH_KE,
            'K': settings.DMH_MAX_ITER,
            'convergence_rtol': settings.DMH_CONVERGENCE_RTOL,
            'seed': settings.DMH_SEED,
            'code_length': settings.DMH_CODE_LENGTH,
            'regularizer': settings.DMH_REGULARIZER,
            'workers': settings.DMH_WORKERS,
        }
        return self

    def with_step_sizes(self, k_s: float, k_e: float):
        """
        Set the first and last step of the linear schedule.

        Returns:
            self for chaining
        """
        self._set('k_s', k_s)
        return self._set('k_e', k_e)

    def with_max_iterations(self, K: int):
        return self._set('K', K)

    def with_convergence_rtol(self, rtol: float):
        return self._set('convergence_rtol', rtol)

    def with_seed(self, seed: int):
        return self._set('seed', seed)

    def with_code_length(self, code_length: int):
        return self._set('code_length', code_length)

    def with_regularizer(self, name: str):
        return self._set('regularizer', name)

    def with_workers(self, workers: int):
        return self._set('workers', workers)

    def build(self) -> TrainConfig:
        """
        Build the configuration and reset the builder.

        Raises:
            ConfigurationException: If the collected values violate TrainConfig invariants
        """
        config = TrainConfig(**self._product)
        self.reset()
        return config

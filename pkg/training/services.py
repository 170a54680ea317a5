"""
Service layer for training.

Alternates the closed-form code-matrix update with gradient steps on every
view's bias and weights. The step schedule and the weight update rule are
strategies, so the normalized method and its unnormalized prototype share
one loop.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from typing import List, Sequence

import numpy as np

from core.exceptions import ContractViolationException, TrainingDivergedException
from core.utils import format_duration, relative_change
from hashing.models import ViewHyper, ViewMatrix, ViewParams
from hashing.services import (
    initialize_params,
    objective,
    update_code_matrix,
    view_gradients,
    warn_degenerate_views,
)
from hashing.strategies.regularizers import regularizer_factory
from .models import TrainConfig, TrainingResult, TrainTrace
from .strategies.schedules import ConstantSchedule, LinearDecaySchedule
from .strategies.updates import NormalizedWeightUpdate, RawWeightUpdate


logger = logging.getLogger(__name__)


def step_size(k: int, config: TrainConfig) -> float:
    """
    Linearly decaying step dt = k_s - (k_s - k_e) * k / K.

    Raises:
        ContractViolationException: If k is outside [0, K]
    """
    return LinearDecaySchedule(config.k_s, config.k_e, config.K).execute(k)


class TrainingService:
    """
    Service running the alternating optimization.

    Each iteration k:
      1. dt from the schedule
      2. B from the closed-form update
      3. E(B, params) recorded; stop if its relative change is below the tolerance
      4. v <- v - dt * dE/dv, then W by the weight update strategy
    """

    def __init__(self, schedule_factory=None, weight_update=None):
        """
        Initialize the service with its strategies.

        Args:
            schedule_factory: Callable TrainConfig -> schedule strategy
            weight_update: Weight update strategy (normalized by default)
        """
        self.schedule_factory = schedule_factory or (
            lambda config: LinearDecaySchedule(config.k_s, config.k_e, config.K)
        )
        self.weight_update = weight_update or NormalizedWeightUpdate()

    def train(self, views: Sequence[ViewMatrix], config: TrainConfig, hypers: Sequence[ViewHyper],
              views_prescaled: bool = False) -> TrainingResult:
        """
        Train one model.

        Args:
            views: View matrices sharing row order
            config: Optimizer settings
            hypers: alpha, beta, gamma per view
            views_prescaled: True when every view was already multiplied by its beta

        Returns:
            TrainingResult: Final parameters, final code matrix and trace

        Raises:
            ContractViolationException: If views and hyperparameters disagree
            TrainingDivergedException: If parameters or objective become non-finite
        """
        views = list(views)
        hypers = list(hypers)
        if not views:
            raise ContractViolationException("at least one view is required")
        if len(views) != len(hypers):
            raise ContractViolationException(f"{len(views)} views but {len(hypers)} hyperparameter sets")
        if len({view.n for view in views}) != 1:
            raise ContractViolationException(f"views disagree on row count: {[view.n for view in views]}")
        if not views_prescaled:
            views = [view.scaled(hyper.beta) for view, hyper in zip(views, hypers)]
        warn_degenerate_views(views)

        regularizer = regularizer_factory.create(config.regularizer)
        schedule = self.schedule_factory(config)
        params = initialize_params(views, hypers, config.code_length, config.seed, prescaled=True)

        logger.info(
            "Training %d views, n=%d, c=%d, K=%d, update=%s, schedule=%s",
            len(views), views[0].n, config.code_length, config.K, self.weight_update.name, schedule.name,
        )
        started = time.perf_counter()
        objectives: List[float] = []
        steps: List[float] = []
        converged = False

        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            for k in range(config.K):
                dt = schedule.execute(k)
                B = update_code_matrix(views, params)
                value = objective(B, views, params, regularizer)
                if not np.isfinite(value):
                    raise TrainingDivergedException(k)
                # The first iteration counts as a full relative change.
                change = relative_change(value, objectives[-1]) if objectives else 1.0
                objectives.append(value)
                steps.append(dt)
                logger.debug("iteration %d: E=%.10g dt=%.6g", k, value, dt)
                if change < config.convergence_rtol:
                    converged = True
                    break

                gradients = list(pool.map(
                    lambda pair: view_gradients(pair[0], pair[1], B, regularizer),
                    zip(views, params),
                ))
                params = [
                    self._step(view, view_params, grads, dt, k)
                    for view, view_params, grads in zip(views, params, gradients)
                ]

        codes = update_code_matrix(views, params)
        seconds = time.perf_counter() - started
        trace = TrainTrace(tuple(objectives), tuple(steps), converged, seconds)
        logger.info(
            "Training finished: %d iterations, converged=%s, E=%.6g, time %s",
            trace.iterations_run, converged, trace.final_objective, format_duration(seconds),
        )
        return TrainingResult(params, codes, trace, [view.view_id for view in views])

    def _step(self, view: ViewMatrix, params: ViewParams, grads, dt: float, k: int) -> ViewParams:
        v = params.v - dt * grads.bias
        W = self.weight_update.execute(params.W, grads.weights, dt, view.view_id)
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(W))):
            raise TrainingDivergedException(k, f"Parameters of view '{view.view_id}' became non-finite at iteration {k}")
        return params.with_weights(W, v)


def train(views: Sequence[ViewMatrix], config: TrainConfig, hypers: Sequence[ViewHyper],
          views_prescaled: bool = False) -> TrainingResult:
    """Normalized W steps with the linearly decaying step size."""
    return TrainingService().train(views, config, hypers, views_prescaled)


def train_prototype(views: Sequence[ViewMatrix], config: TrainConfig, hypers: Sequence[ViewHyper],
                    views_prescaled: bool = False) -> TrainingResult:
    """Raw W steps with the fixed step k_s."""
    service = TrainingService(
        schedule_factory=lambda c: ConstantSchedule(c.k_s, c.K),
        weight_update=RawWeightUpdate(),
    )
    return service.train(views, config, hypers, views_prescaled)

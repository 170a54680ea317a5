"""
Finite-difference diagnostics for the analytic gradients.

A centered-difference approximation of dE/dv and dE/dW is compared
elementwise against grad_bias and grad_weights on seeded random instances.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .models import CodeMatrix, ViewMatrix, ViewParams
from .services import grad_bias, grad_weights, update_code_matrix, view_objective
from .strategies.regularizers import CorrelationRegularizer, SimplifiedCorrelationRegularizer


logger = logging.getLogger(__name__)

FD_STEP = 1e-5
FD_RTOL = 1e-4
# Entries this far below the gradient's largest magnitude are compared absolutely.
FD_ATOL_FRACTION = 1e-6

GAMMA_GRID = (0.0, 0.001, 0.1)

GradientFunction = Callable[[ViewMatrix, ViewParams, CodeMatrix, Optional[CorrelationRegularizer]], np.ndarray]


@dataclass(frozen=True)
class GradientCheckResult:
    """Outcome of one finite-difference comparison."""

    seed: int
    target: str
    n: int
    d: int
    c: int
    gamma: float
    regularizer: str
    max_abs_error: float
    max_rel_error: float
    passed: bool


def finite_difference_bias(view: ViewMatrix, params: ViewParams, B, regularizer=None,
                           eps: float = FD_STEP) -> np.ndarray:
    """Centered differences of the objective with respect to each bias entry."""
    grad = np.zeros(params.c)
    for k in range(params.c):
        plus = params.v.copy()
        plus[k] += eps
        minus = params.v.copy()
        minus[k] -= eps
        f_plus = view_objective(view, params.with_weights(params.W, plus), B, regularizer)
        f_minus = view_objective(view, params.with_weights(params.W, minus), B, regularizer)
        grad[k] = (f_plus - f_minus) / (2 * eps)
    return grad


def finite_difference_weights(view: ViewMatrix, params: ViewParams, B, regularizer=None,
                              eps: float = FD_STEP) -> np.ndarray:
    """Centered differences of the objective with respect to each weight entry."""
    grad = np.zeros_like(params.W)
    for j in range(params.d):
        for k in range(params.c):
            plus = params.W.copy()
            plus[j, k] += eps
            minus = params.W.copy()
            minus[j, k] -= eps
            f_plus = view_objective(view, params.with_weights(plus, params.v), B, regularizer)
            f_minus = view_objective(view, params.with_weights(minus, params.v), B, regularizer)
            grad[j, k] = (f_plus - f_minus) / (2 * eps)
    return grad


def compare_gradients(analytic: np.ndarray, numeric: np.ndarray, rtol: float = FD_RTOL):
    """
    Elementwise comparison with relative tolerance.

    Returns:
        tuple: (max absolute error, max relative error, passed)
    """
    error = np.abs(analytic - numeric)
    scale = max(float(np.max(np.abs(numeric))), 1.0)
    atol = FD_ATOL_FRACTION * scale
    rel = error / np.maximum(np.abs(numeric), atol)
    passed = bool(np.all(error <= atol + rtol * np.abs(numeric)))
    return float(error.max()), float(rel.max()), passed


def random_instance(seed: int, gamma: float, max_n: int = 30, max_d: int = 8, max_c: int = 16):
    """
    Seeded random instance for gradient checks.

    Weights are drawn at unit scale over standard-normal data so the
    sigmoids stay away from saturation.

    Returns:
        tuple: (view, params, B)
    """
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_n + 1))
    d = int(rng.integers(1, max_d + 1))
    c = int(rng.integers(1, max_c + 1))
    view = ViewMatrix(rng.normal(size=(n, d)), view_id=f'random-{seed}')
    params = ViewParams(
        W=rng.normal(scale=0.5, size=(d, c)),
        v=rng.normal(scale=0.5, size=c),
        alpha=float(rng.uniform(0.5, 2.0)),
        beta=1.0,
        gamma=gamma,
    )
    B = update_code_matrix([view], [params])
    # Flip a few bits so the residual is not the rounding residual only.
    flips = rng.random(B.bits.shape) < 0.2
    B = CodeMatrix(np.where(flips, 1 - B.bits, B.bits))
    return view, params, B


class GradientCheckService:
    """
    Runs the finite-difference oracle over seeded random instances.

    The analytic gradient functions are injectable so a broken gradient can
    be checked as a negative control.
    """

    def __init__(self, bias_gradient: GradientFunction = grad_bias,
                 weight_gradient: GradientFunction = grad_weights,
                 regularizers: Sequence[CorrelationRegularizer] = None):
        self.bias_gradient = bias_gradient
        self.weight_gradient = weight_gradient
        self.regularizers = list(regularizers or [SimplifiedCorrelationRegularizer()])

    def check_instance(self, seed: int, gamma: float, regularizer: CorrelationRegularizer) -> List[GradientCheckResult]:
        """Compare both gradients on one instance."""
        view, params, B = random_instance(seed, gamma)
        results = []
        for target, analytic_fn, numeric_fn in (
            ('bias', self.bias_gradient, finite_difference_bias),
            ('weights', self.weight_gradient, finite_difference_weights),
        ):
            analytic = analytic_fn(view, params, B, regularizer)
            numeric = numeric_fn(view, params, B, regularizer)
            max_abs, max_rel, passed = compare_gradients(analytic, numeric)
            results.append(GradientCheckResult(
                seed=seed, target=target, n=view.n, d=view.d, c=params.c, gamma=gamma,
                regularizer=regularizer.name, max_abs_error=max_abs, max_rel_error=max_rel,
                passed=passed,
            ))
            if not passed:
                logger.warning("Gradient check failed: %s seed=%d gamma=%g", target, seed, gamma)
        return results

    def run(self, instances: int = 20, base_seed: int = 0) -> List[GradientCheckResult]:
        """
        Check every regularizer on ``instances`` seeded instances.

        Gammas cycle through 0, 0.001 and 0.1.
        """
        results = []
        for regularizer in self.regularizers:
            for index in range(instances):
                gamma = GAMMA_GRID[index % len(GAMMA_GRID)]
                results.extend(self.check_instance(base_seed + index, gamma, regularizer))
        return results

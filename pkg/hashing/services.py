"""
Service layer for the hashing model.

Implements the per-view sigmoid embedding, the multi-view quantization
objective with its correlation regularizer, the closed-form code-matrix
update and the analytic gradients with respect to each view's bias and
weights. Every function is pure: inputs are never modified.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np

from core.exceptions import ContractViolationException
from .models import CodeMatrix, EmbeddingMatrix, ViewHyper, ViewMatrix, ViewParams
from .strategies.regularizers import (
    CorrelationRegularizer,
    IdentityCorrelationRegularizer,
    SimplifiedCorrelationRegularizer,
)


logger = logging.getLogger(__name__)

# Saturation bounds keeping every embedding entry inside the open interval.
EMBED_LOWER = np.finfo(np.float64).tiny
EMBED_UPPER = np.nextafter(1.0, 0.0)

INIT_STD = 0.01

_default_regularizer = SimplifiedCorrelationRegularizer()


@dataclass(frozen=True)
class ViewGradients:
    """Gradients of the objective for one view."""

    bias: np.ndarray
    weights: np.ndarray


def _check_view(view: ViewMatrix, params: ViewParams) -> None:
    if view.d != params.d:
        raise ContractViolationException(
            f"view '{view.view_id}' has {view.d} features but W has {params.d} rows"
        )


def _code_values(B: Union[CodeMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(B, CodeMatrix):
        return B.bits.astype(np.float64)
    return np.asarray(B, dtype=np.float64)


def _embedding_values(C: Union[EmbeddingMatrix, np.ndarray]) -> np.ndarray:
    if isinstance(C, EmbeddingMatrix):
        return C.values
    return np.asarray(C, dtype=np.float64)


def pre_activation(view: ViewMatrix, params: ViewParams) -> np.ndarray:
    """
    Affine map beta * X W + 1 v^T of one view.

    Args:
        view: View matrix X (n x d)
        params: Parameters of the same view

    Returns:
        np.ndarray: n x c pre-activation
    """
    _check_view(view, params)
    return params.effective_beta * (view.data @ params.W) + params.v


def _logistic(z: np.ndarray):
    # exp(-|z|) never overflows; both branches are exact rewrites of 1/(1+exp(-z)).
    e = np.exp(-np.abs(z))
    values = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    slope = e / (1.0 + e) ** 2
    return np.clip(values, EMBED_LOWER, EMBED_UPPER), slope


def sigmoid_embed(view: ViewMatrix, params: ViewParams) -> EmbeddingMatrix:
    """
    Sigmoid embedding C = 1 / (1 + exp(-(beta X W + 1 v^T))).

    Args:
        view: View matrix
        params: Parameters of the same view

    Returns:
        EmbeddingMatrix: n x c matrix with entries strictly inside (0,1)
    """
    values, _ = _logistic(pre_activation(view, params))
    return EmbeddingMatrix(values, view_id=view.view_id)


def mcr_value(C: Union[EmbeddingMatrix, np.ndarray]) -> float:
    """Minimum correlation regularization ||C^T C / n||_F (unsquared)."""
    return SimplifiedCorrelationRegularizer().norm(_embedding_values(C))


def mcr_identity_value(C: Union[EmbeddingMatrix, np.ndarray]) -> float:
    """Identity-subtracted form ||C^T C / n - I||_F (unsquared)."""
    return IdentityCorrelationRegularizer().norm(_embedding_values(C))


def _check_consistent(views: Sequence[ViewMatrix], params: Sequence[ViewParams]) -> None:
    if not views:
        raise ContractViolationException("at least one view is required")
    if len(views) != len(params):
        raise ContractViolationException(f"{len(views)} views but {len(params)} parameter sets")
    n = views[0].n
    c = params[0].c
    for view, view_params in zip(views, params):
        _check_view(view, view_params)
        if view.n != n:
            raise ContractViolationException(f"view '{view.view_id}' has {view.n} rows, expected {n}")
        if view_params.c != c:
            raise ContractViolationException(f"view '{view.view_id}' has code length {view_params.c}, expected {c}")


def view_objective(view: ViewMatrix, params: ViewParams, B, regularizer: Optional[CorrelationRegularizer] = None) -> float:
    """alpha * (||B - C||_F^2 + gamma * ||R(C)||_F^2) for one view."""
    regularizer = regularizer or _default_regularizer
    values = sigmoid_embed(view, params).values
    codes = _code_values(B)
    if codes.shape != values.shape:
        raise ContractViolationException(f"B has shape {codes.shape}, embedding has {values.shape}")
    residual = codes - values
    value = float(np.sum(residual * residual))
    if params.gamma > 0:
        value += params.gamma * regularizer.execute(values)
    return params.alpha * value


def objective(B, views: Sequence[ViewMatrix], params: Sequence[ViewParams],
              regularizer: Optional[CorrelationRegularizer] = None) -> float:
    """
    Full objective E = sum_i alpha_i (||B - C^i||_F^2 + gamma_i ||R(C^i)||_F^2).

    Args:
        B: Code matrix (n x c)
        views: View matrices
        params: Parameters, one per view
        regularizer: Correlation regularizer (simplified form by default)

    Returns:
        float: Non-negative objective value
    """
    _check_consistent(views, params)
    return float(sum(view_objective(view, p, B, regularizer) for view, p in zip(views, params)))


def update_code_matrix(views: Sequence[ViewMatrix], params: Sequence[ViewParams]) -> CodeMatrix:
    """
    Closed-form B step: round the alpha-weighted mean of the embeddings.

    Ties (mean exactly 0.5) round up to 1.
    """
    _check_consistent(views, params)
    total_alpha = sum(p.alpha for p in params)
    weighted = sum(p.alpha * sigmoid_embed(view, p).values for view, p in zip(views, params))
    mean = weighted / total_alpha
    return CodeMatrix((mean >= 0.5).astype(np.uint8))


def _pre_activation_gradient(view: ViewMatrix, params: ViewParams, B,
                             regularizer: Optional[CorrelationRegularizer]) -> np.ndarray:
    # dE/dZ for Z = beta X W + 1 v^T, an n x c matrix.
    regularizer = regularizer or _default_regularizer
    values, slope = _logistic(pre_activation(view, params))
    codes = _code_values(B)
    if codes.shape != values.shape:
        raise ContractViolationException(f"B has shape {codes.shape}, embedding has {values.shape}")
    outer = 2.0 * (values - codes)
    if params.gamma > 0:
        outer = outer + params.gamma * regularizer.gradient(values)
    return params.alpha * outer * slope


def grad_bias(view: ViewMatrix, params: ViewParams, B,
              regularizer: Optional[CorrelationRegularizer] = None) -> np.ndarray:
    """dE/dv: column sums of the pre-activation gradient (length c)."""
    return _pre_activation_gradient(view, params, B, regularizer).sum(axis=0)


def grad_weights(view: ViewMatrix, params: ViewParams, B,
                 regularizer: Optional[CorrelationRegularizer] = None) -> np.ndarray:
    """dE/dW = beta X^T (dE/dZ), a d x c matrix."""
    delta = _pre_activation_gradient(view, params, B, regularizer)
    return params.effective_beta * (view.data.T @ delta)


def view_gradients(view: ViewMatrix, params: ViewParams, B,
                   regularizer: Optional[CorrelationRegularizer] = None) -> ViewGradients:
    """Both gradients of one view from a single pass over the embedding."""
    delta = _pre_activation_gradient(view, params, B, regularizer)
    return ViewGradients(
        bias=delta.sum(axis=0),
        weights=params.effective_beta * (view.data.T @ delta),
    )


def initialize_params(views: Sequence[ViewMatrix], hypers: Sequence[ViewHyper], code_length: int,
                      seed: int, prescaled: bool = False) -> List[ViewParams]:
    """
    Draw W and v for every view from N(0, 0.01^2).

    Views are initialized in order from one PCG64 generator seeded with ``seed``.
    """
    if code_length < 1:
        raise ContractViolationException(f"code length must be positive, got {code_length}")
    if len(views) != len(hypers):
        raise ContractViolationException(f"{len(views)} views but {len(hypers)} hyperparameter sets")
    rng = np.random.default_rng(seed)
    params = []
    for view, hyper in zip(views, hypers):
        W = rng.normal(0.0, INIT_STD, size=(view.d, code_length))
        v = rng.normal(0.0, INIT_STD, size=code_length)
        params.append(ViewParams(W, v, hyper.alpha, hyper.beta, hyper.gamma, prescaled=prescaled))
    return params


def warn_degenerate_views(views: Sequence[ViewMatrix]) -> List[str]:
    """
    Log a warning for every view whose features all have zero variance.

    Returns:
        List[str]: ids of the flagged views
    """
    flagged = []
    for view in views:
        if np.all(np.ptp(view.data, axis=0) == 0):
            logger.warning("View '%s' has zero variance in every feature", view.view_id)
            flagged.append(view.view_id)
    return flagged

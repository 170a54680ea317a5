"""
Service layer for the geometry of the orthogonality penalty ||W^T W - I||_F.

Covers its minimizers under a unit-column constraint, its invariance under
orthogonal mixing of the columns, and the rank of sigmoid embeddings.
"""

import itertools
import logging

import numpy as np

from core.exceptions import ContractViolationException
from core.utils import as_finite_matrix
from hashing.models import ViewMatrix, ViewParams
from hashing.services import sigmoid_embed
from .models import AngleProfile, MinimizationResult, RankCheck


logger = logging.getLogger(__name__)

ORTHOGONALITY_TOLERANCE = 1e-10
RANK_TOLERANCE = 1e-8
LEARNING_RATE = 0.05
MAX_ITERATIONS = 20000
GRADIENT_TOLERANCE = 1e-10
# Above this many columns sign canonicalization is greedy instead of exhaustive.
EXHAUSTIVE_SIGN_COLUMNS = 12


def or_penalty(W) -> float:
    """||W^T W - I||_F."""
    W = as_finite_matrix(W, name='W')
    return float(np.linalg.norm(W.T @ W - np.eye(W.shape[1]), 'fro'))


def or_penalty_gradient(W) -> np.ndarray:
    """Gradient of the squared penalty: 4 W (W^T W - I)."""
    W = as_finite_matrix(W, name='W')
    return 4.0 * W @ (W.T @ W - np.eye(W.shape[1]))


def unit_columns(W: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(W, axis=0)
    if np.any(norms == 0):
        raise ContractViolationException("cannot normalize a zero column")
    return W / norms


def _off_diagonal_sum(gram: np.ndarray, signs: np.ndarray) -> float:
    return float(signs @ gram @ signs - np.trace(gram))


def canonical_signs(W: np.ndarray) -> np.ndarray:
    """
    Flip column signs so the Gram off-diagonals sum as low as possible.

    The first column keeps its sign. Exhaustive up to EXHAUSTIVE_SIGN_COLUMNS
    columns, otherwise single-column flips until none helps.
    """
    W = np.asarray(W, dtype=np.float64)
    c = W.shape[1]
    if c < 2:
        return W.copy()
    gram = W.T @ W
    if c <= EXHAUSTIVE_SIGN_COLUMNS:
        best_signs, best_value = None, np.inf
        for rest in itertools.product((1.0, -1.0), repeat=c - 1):
            signs = np.array((1.0,) + rest)
            value = _off_diagonal_sum(gram, signs)
            if value < best_value - 1e-15:
                best_signs, best_value = signs, value
    else:
        best_signs = np.ones(c)
        improved = True
        while improved:
            improved = False
            for q in range(1, c):
                trial = best_signs.copy()
                trial[q] = -trial[q]
                if _off_diagonal_sum(gram, trial) < _off_diagonal_sum(gram, best_signs) - 1e-15:
                    best_signs, improved = trial, True
    return W * best_signs


def angle_profile(W) -> AngleProfile:
    """Pairwise column angles of W, p < q."""
    W = as_finite_matrix(W, name='W')
    unit = unit_columns(W)
    cosines = np.clip(unit.T @ unit, -1.0, 1.0)
    p, q = np.triu_indices(W.shape[1], k=1)
    pair_cosines = cosines[p, q]
    if pair_cosines.size == 0:
        return AngleProfile((), 0.0, 0.0)
    angles = np.arccos(pair_cosines)
    abs_cosines = np.abs(pair_cosines)
    return AngleProfile(
        pairwise_angles=tuple(angles),
        max_deviation=float(np.max(np.abs(angles - angles.mean()))),
        abs_cosine_deviation=float(np.max(np.abs(abs_cosines - abs_cosines.mean()))),
    )


def minimize_or_penalty(d: int, c: int, seed: int, learning_rate: float = LEARNING_RATE,
                        max_iterations: int = MAX_ITERATIONS,
                        gradient_tolerance: float = GRADIENT_TOLERANCE) -> MinimizationResult:
    """
    Projected gradient descent on the penalty over matrices with unit columns.

    Starts from seeded Gaussian columns, steps along the gradient of the
    squared penalty and renormalizes every column. Stops when the gradient's
    component tangent to the constraint falls below gradient_tolerance.

    Returns:
        MinimizationResult: Sign-canonical best iterate, its angle profile and
        a convergence flag (False when the iteration cap was reached)
    """
    if d < 1 or c < 1:
        raise ContractViolationException(f"d and c must be positive, got d={d}, c={c}")
    rng = np.random.default_rng(seed)
    W = unit_columns(rng.normal(size=(d, c)))
    best_W, best_penalty = W, or_penalty(W)
    converged = False
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        gradient = or_penalty_gradient(W)
        tangent = gradient - W * np.sum(W * gradient, axis=0)
        if np.linalg.norm(tangent) < gradient_tolerance:
            converged = True
            break
        W = unit_columns(W - learning_rate * gradient)
        penalty = or_penalty(W)
        if penalty <= best_penalty:
            best_W, best_penalty = W, penalty
    if not converged:
        logger.warning(
            "Penalty minimization d=%d c=%d seed=%d stopped at the cap of %d iterations (penalty %.6g)",
            d, c, seed, max_iterations, best_penalty,
        )
    best_W = canonical_signs(best_W)
    return MinimizationResult(best_W, angle_profile(best_W), best_penalty, iteration, converged)


def _check_orthogonal(R: np.ndarray, tolerance: float) -> None:
    if R.shape[0] != R.shape[1]:
        raise ContractViolationException(f"R must be square, got shape {R.shape}")
    error = float(np.max(np.abs(R.T @ R - np.eye(R.shape[0]))))
    if error > tolerance:
        raise ContractViolationException(f"R is not orthogonal: max |R^T R - I| = {error:.3g}")


def rotation_invariance_check(W, R, tolerance: float = ORTHOGONALITY_TOLERANCE) -> float:
    """
    |or_penalty(W R) - or_penalty(W)| for an orthogonal R.

    Raises:
        ContractViolationException: If R is not c x c or not orthogonal within tolerance
    """
    W = as_finite_matrix(W, name='W')
    R = as_finite_matrix(R, name='R')
    _check_orthogonal(R, tolerance)
    if R.shape[0] != W.shape[1]:
        raise ContractViolationException(f"R is {R.shape[0]}x{R.shape[0]}, W has {W.shape[1]} columns")
    return abs(or_penalty(W @ R) - or_penalty(W))


def random_orthogonal(size: int, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix from the QR factorization of a Gaussian matrix."""
    Q, upper = np.linalg.qr(rng.normal(size=(size, size)))
    return Q * np.sign(np.diag(upper))


def embedding_rank_bound_check(view: ViewMatrix, params: ViewParams, tolerance: float = RANK_TOLERANCE) -> RankCheck:
    """
    Numerical rank of the sigmoid embedding and the d + 1 bound.

    Singular values at or below tolerance times the largest count as zero.
    Nothing is asserted here.
    """
    values = sigmoid_embed(view, params).values
    singular_values = np.linalg.svd(values, compute_uv=False)
    rank = int(np.sum(singular_values > tolerance * singular_values[0]))
    eigenvalues = np.linalg.eigvalsh(values.T @ values)
    return RankCheck(
        numerical_rank=rank,
        bound=view.d + 1,
        singular_values=singular_values,
        smallest_gram_eigenvalue=float(eigenvalues[0]),
        largest_gram_eigenvalue=float(eigenvalues[-1]),
    )

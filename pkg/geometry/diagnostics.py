"""
Proposition checks for the orthogonality penalty and the sigmoid embedding.

Each check builds seeded instances, measures one quantity and compares it
with a threshold. The rank bound only holds while the sigmoid is close to
linear, so it is checked at a small weight scale; a unit-scale instance is
reported as an informational row.
"""

import logging
from typing import List

import numpy as np

from hashing.models import ViewMatrix, ViewParams
from .models import PropositionCheckResult
from .services import (
    embedding_rank_bound_check,
    minimize_or_penalty,
    or_penalty,
    random_orthogonal,
    rotation_invariance_check,
)


logger = logging.getLogger(__name__)

ORTHOGONAL_PENALTY_LIMIT = 1e-6
EQUILATERAL_ANGLE_TOLERANCE = 1e-3
EQUIANGULAR_TOLERANCE = 1e-2
TIGHT_FRAME_TOLERANCE = 1e-6
ROTATION_TOLERANCE = 1e-8
ROTATION_PAIRS = 50
RANK_INSTANCES = 20
RANK_WEIGHT_SCALE = 1e-4


def random_rank_instance(seed: int, weight_scale: float = RANK_WEIGHT_SCALE, n: int = 50):
    """View with d features and parameters with c > d + 1 code bits."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    c = int(rng.integers(d + 2, d + 9))
    view = ViewMatrix(rng.normal(size=(n, d)), view_id=f'rank{seed}')
    params = ViewParams(rng.normal(size=(d, c)) * weight_scale, rng.normal(size=c) * weight_scale)
    return view, params


class PropositionCheckService:
    """Runs every proposition check and collects one row per instance."""

    def __init__(self, base_seed: int = 0):
        self.base_seed = base_seed

    def check_orthogonal_minimizer(self) -> PropositionCheckResult:
        result = minimize_or_penalty(4, 4, self.base_seed)
        return PropositionCheckResult(
            'orthogonal_minimizer', self.base_seed, result.penalty, ORTHOGONAL_PENALTY_LIMIT,
            result.penalty < ORTHOGONAL_PENALTY_LIMIT, detail='d=4 c=4',
        )

    def check_equilateral_angles(self) -> PropositionCheckResult:
        result = minimize_or_penalty(2, 3, self.base_seed)
        deviation = max(abs(angle - 2 * np.pi / 3) for angle in result.profile.pairwise_angles)
        return PropositionCheckResult(
            'equilateral_angles', self.base_seed, deviation, EQUILATERAL_ANGLE_TOLERANCE,
            deviation < EQUILATERAL_ANGLE_TOLERANCE,
            detail='d=2 c=3 angles ' + ', '.join(f'{np.degrees(a):.4f}' for a in result.profile.pairwise_angles),
        )

    def check_simplex_angles(self) -> PropositionCheckResult:
        result = minimize_or_penalty(3, 4, self.base_seed)
        deviation = result.profile.abs_cosine_deviation
        return PropositionCheckResult(
            'equiangular_simplex', self.base_seed, deviation, EQUIANGULAR_TOLERANCE,
            deviation < EQUIANGULAR_TOLERANCE, detail='d=3 c=4 |cos| spread',
        )

    def check_tight_frame_penalty(self) -> PropositionCheckResult:
        d, c = 3, 6
        result = minimize_or_penalty(d, c, self.base_seed)
        # Unit columns: penalty^2 = ||W^T W||_F^2 - c >= c^2 / d - c.
        gap = abs(result.penalty - np.sqrt(c * c / d - c))
        return PropositionCheckResult(
            'tight_frame_penalty', self.base_seed, gap, TIGHT_FRAME_TOLERANCE,
            gap < TIGHT_FRAME_TOLERANCE, detail=f'd={d} c={c} penalty {result.penalty:.10f}',
        )

    def check_rotation_invariance(self) -> List[PropositionCheckResult]:
        rows = []
        for offset in range(ROTATION_PAIRS):
            seed = self.base_seed + offset
            rng = np.random.default_rng(seed)
            W = rng.normal(size=(5, 8))
            difference = rotation_invariance_check(W, random_orthogonal(8, rng))
            rows.append(PropositionCheckResult(
                'rotation_invariance', seed, difference, ROTATION_TOLERANCE, difference < ROTATION_TOLERANCE,
                detail=f'penalty {or_penalty(W):.6g}',
            ))
        return rows

    def check_rank_bound(self) -> List[PropositionCheckResult]:
        rows = []
        for offset in range(RANK_INSTANCES):
            seed = self.base_seed + offset
            view, params = random_rank_instance(seed)
            check = embedding_rank_bound_check(view, params)
            rows.append(PropositionCheckResult(
                'rank_bound', seed, float(check.numerical_rank), float(check.bound), check.within_bound,
                detail=f'd={view.d} c={params.c} weight scale {RANK_WEIGHT_SCALE:g}',
            ))
        return rows

    def saturated_rank(self) -> PropositionCheckResult:
        view, params = random_rank_instance(self.base_seed, weight_scale=1.0)
        check = embedding_rank_bound_check(view, params)
        return PropositionCheckResult(
            'rank_bound_saturated', self.base_seed, float(check.numerical_rank), float(check.bound), None,
            informational=True, detail=f'd={view.d} c={params.c} weight scale 1',
        )

    def run(self) -> List[PropositionCheckResult]:
        rows = [
            self.check_orthogonal_minimizer(),
            self.check_equilateral_angles(),
            self.check_simplex_angles(),
            self.check_tight_frame_penalty(),
        ]
        rows.extend(self.check_rotation_invariance())
        rows.extend(self.check_rank_bound())
        rows.append(self.saturated_rank())
        failed = [row for row in rows if row.passed is False]
        for row in failed:
            logger.warning("Proposition check failed: %s seed=%d value=%.6g", row.check, row.seed, row.value)
        logger.info("Proposition checks: %d rows, %d failed", len(rows), len(failed))
        return rows

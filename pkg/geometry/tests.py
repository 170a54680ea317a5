import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ContractViolationException
from hashing.models import ViewMatrix, ViewParams
from .diagnostics import PropositionCheckService, random_rank_instance
from .services import (
    angle_profile,
    canonical_signs,
    embedding_rank_bound_check,
    minimize_or_penalty,
    or_penalty,
    or_penalty_gradient,
    random_orthogonal,
    rotation_invariance_check,
)


class OrPenaltyTests(SimpleTestCase):

    def test_orthonormal_columns(self):
        Q = random_orthogonal(5, np.random.default_rng(0))[:, :3]
        self.assertLess(or_penalty(Q), 1e-14)

    def test_zero_matrix(self):
        self.assertAlmostEqual(or_penalty(np.zeros((4, 3))), np.sqrt(3), places=15)

    def test_equilateral_configuration(self):
        angles = np.array([0.0, 2 * np.pi / 3, 4 * np.pi / 3])
        W = np.vstack([np.cos(angles), np.sin(angles)])
        # Off-diagonal Gram entries are all -1/2.
        self.assertAlmostEqual(or_penalty(W), np.sqrt(6 * 0.25), places=14)

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        W = rng.normal(size=(3, 4))
        gradient = or_penalty_gradient(W)
        step = 1e-6
        for index in np.ndindex(W.shape):
            shifted = W.copy()
            shifted[index] += step
            plus = or_penalty(shifted) ** 2
            shifted[index] -= 2 * step
            minus = or_penalty(shifted) ** 2
            self.assertAlmostEqual(gradient[index], (plus - minus) / (2 * step), delta=1e-5 * max(1.0, abs(gradient[index])))


class MinimizeOrPenaltyTests(SimpleTestCase):

    def test_square_case_reaches_an_orthogonal_matrix(self):
        result = minimize_or_penalty(4, 4, seed=0)
        self.assertTrue(result.converged)
        self.assertLess(result.penalty, 1e-6)

    def test_three_columns_in_the_plane_form_an_equilateral_triangle(self):
        for seed in range(3):
            result = minimize_or_penalty(2, 3, seed=seed)
            self.assertEqual(len(result.profile.pairwise_angles), 3)
            for angle in result.profile.pairwise_angles:
                self.assertAlmostEqual(angle, 2 * np.pi / 3, delta=1e-3)

    def test_four_columns_in_space_are_equiangular(self):
        result = minimize_or_penalty(3, 4, seed=2)
        self.assertLess(result.profile.abs_cosine_deviation, 1e-2)
        W = result.W
        cosines = np.abs((W.T @ W)[np.triu_indices(4, k=1)])
        np.testing.assert_allclose(cosines, 1 / 3, atol=1e-4)

    def test_six_columns_in_space_reach_the_frame_bound(self):
        result = minimize_or_penalty(3, 6, seed=1)
        self.assertAlmostEqual(result.penalty, np.sqrt(6.0), delta=1e-6)

    def test_columns_stay_unit_norm(self):
        result = minimize_or_penalty(3, 5, seed=4)
        np.testing.assert_allclose(np.linalg.norm(result.W, axis=0), 1.0, atol=1e-12)

    def test_iteration_cap_returns_best_iterate_with_flag(self):
        with self.assertLogs('geometry.services', level='WARNING'):
            result = minimize_or_penalty(3, 6, seed=1, max_iterations=3)
        self.assertFalse(result.converged)
        self.assertEqual(result.iterations, 3)
        self.assertAlmostEqual(result.penalty, or_penalty(result.W), places=12)

    def test_seeded(self):
        a, b = minimize_or_penalty(2, 3, seed=9), minimize_or_penalty(2, 3, seed=9)
        np.testing.assert_array_equal(a.W, b.W)

    def test_invalid_sizes(self):
        with self.assertRaises(ContractViolationException):
            minimize_or_penalty(0, 3, seed=0)


class AngleProfileTests(SimpleTestCase):

    def test_sign_canonicalization_prefers_obtuse_angles(self):
        angles = np.array([0.0, np.pi / 3, 2 * np.pi / 3])
        W = np.vstack([np.cos(angles), np.sin(angles)])
        profile = angle_profile(canonical_signs(W))
        np.testing.assert_allclose(profile.pairwise_angles, 2 * np.pi / 3, atol=1e-12)

    def test_sign_flips_do_not_change_the_penalty(self):
        W = np.random.default_rng(5).normal(size=(3, 5))
        self.assertAlmostEqual(or_penalty(canonical_signs(W)), or_penalty(W), places=12)

    def test_single_column(self):
        profile = angle_profile(np.ones((3, 1)))
        self.assertEqual(profile.pairwise_angles, ())
        self.assertEqual(profile.max_deviation, 0.0)


class RotationInvarianceTests(SimpleTestCase):

    def test_identity(self):
        W = np.random.default_rng(0).normal(size=(5, 8))
        self.assertEqual(rotation_invariance_check(W, np.eye(8)), 0.0)

    def test_permutation(self):
        W = np.random.default_rng(1).normal(size=(5, 8))
        P = np.eye(8)[np.random.default_rng(2).permutation(8)]
        self.assertLess(rotation_invariance_check(W, P), 1e-10)

    def test_random_orthogonal_mixing(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            W = rng.normal(size=(5, 8))
            self.assertLess(rotation_invariance_check(W, random_orthogonal(8, rng)), 1e-8)

    def test_non_orthogonal_matrix_rejected(self):
        W = np.ones((2, 2))
        with self.assertRaises(ContractViolationException):
            rotation_invariance_check(W, np.array([[1.0, 0.1], [0.0, 1.0]]))

    def test_size_mismatch(self):
        with self.assertRaises(ContractViolationException):
            rotation_invariance_check(np.ones((2, 3)), np.eye(2))


class EmbeddingRankTests(SimpleTestCase):

    def test_small_weights_respect_the_bound(self):
        rng = np.random.default_rng(3)
        view = ViewMatrix(rng.normal(size=(50, 2)))
        params = ViewParams(rng.normal(size=(2, 8)) * 1e-4, rng.normal(size=8) * 1e-4)
        check = embedding_rank_bound_check(view, params)
        self.assertEqual(check.bound, 3)
        self.assertLessEqual(check.numerical_rank, 3)
        self.assertLess(check.smallest_gram_eigenvalue, 1e-8 * check.largest_gram_eigenvalue)

    def test_random_instances_within_bound(self):
        for seed in range(20):
            view, params = random_rank_instance(seed)
            self.assertGreater(params.c, view.d + 1)
            self.assertTrue(embedding_rank_bound_check(view, params).within_bound)

    def test_zero_parameters_give_rank_one(self):
        view = ViewMatrix(np.random.default_rng(4).normal(size=(20, 3)))
        check = embedding_rank_bound_check(view, ViewParams(np.zeros((3, 6)), np.zeros(6)))
        self.assertEqual(check.numerical_rank, 1)

    def test_wide_view_reaches_full_rank(self):
        rng = np.random.default_rng(6)
        view = ViewMatrix(rng.normal(size=(40, 8)))
        check = embedding_rank_bound_check(view, ViewParams(rng.normal(size=(8, 4)), rng.normal(size=4)))
        self.assertEqual(check.numerical_rank, 4)

    def test_saturated_sigmoid_exceeds_the_linear_bound(self):
        view, params = random_rank_instance(0, weight_scale=1.0)
        check = embedding_rank_bound_check(view, params)
        self.assertGreater(check.numerical_rank, check.bound)


class PropositionCheckServiceTests(SimpleTestCase):

    def test_default_run_passes(self):
        rows = PropositionCheckService().run()
        self.assertEqual(len(rows), 4 + 50 + 20 + 1)
        self.assertTrue(all(row.passed for row in rows if not row.informational))
        informational = [row for row in rows if row.informational]
        self.assertEqual([row.check for row in informational], ['rank_bound_saturated'])
        self.assertIsNone(informational[0].passed)

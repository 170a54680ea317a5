import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ContractViolationException, InputValidationException
from .diagnostics import (
    GradientCheckService,
    compare_gradients,
    finite_difference_bias,
    finite_difference_weights,
    random_instance,
)
from .models import CodeMatrix, EmbeddingMatrix, ViewHyper, ViewMatrix, ViewParams
from .services import (
    grad_bias,
    grad_weights,
    initialize_params,
    mcr_identity_value,
    mcr_value,
    objective,
    sigmoid_embed,
    update_code_matrix,
    view_gradients,
    warn_degenerate_views,
)
from .strategies.regularizers import IdentityCorrelationRegularizer, regularizer_factory


def _params(W, v, alpha=1.0, beta=1.0, gamma=0.0):
    return ViewParams(np.asarray(W, dtype=float), np.asarray(v, dtype=float), alpha, beta, gamma)


class SigmoidEmbedTests(SimpleTestCase):

    def test_zero_parameters_give_one_half(self):
        view = ViewMatrix(np.random.default_rng(0).normal(size=(6, 3)))
        C = sigmoid_embed(view, _params(np.zeros((3, 4)), np.zeros(4)))
        np.testing.assert_array_equal(C.values, np.full((6, 4), 0.5))

    def test_large_argument_saturates_below_one(self):
        view = ViewMatrix(np.array([[1.0]]))
        C = sigmoid_embed(view, _params([[40.0]], [0.0])).values[0, 0]
        self.assertLess(C, 1.0)
        self.assertAlmostEqual(C, 1.0, delta=1e-15)

    def test_large_negative_argument_stays_positive(self):
        view = ViewMatrix(np.array([[1.0]]))
        C = sigmoid_embed(view, _params([[-800.0]], [0.0])).values[0, 0]
        self.assertGreater(C, 0.0)

    def test_scalar_evaluation(self):
        view = ViewMatrix(np.eye(2))
        C = sigmoid_embed(view, _params([[1.0], [-1.0]], [0.0])).values
        expected = 1.0 / (1.0 + np.exp(-np.array([[1.0], [-1.0]])))
        np.testing.assert_allclose(C, expected, rtol=1e-14)
        self.assertAlmostEqual(C[0, 0], 0.7311, places=4)
        self.assertAlmostEqual(C[1, 0], 0.2689, places=4)

    def test_beta_scales_the_data_term_only(self):
        view = ViewMatrix(np.array([[2.0]]))
        C = sigmoid_embed(view, _params([[1.0]], [0.5], beta=3.0)).values[0, 0]
        self.assertAlmostEqual(C, 1.0 / (1.0 + np.exp(-6.5)), places=14)

    def test_prescaled_params_ignore_beta(self):
        view = ViewMatrix(np.array([[2.0]]))
        params = ViewParams(np.array([[1.0]]), np.array([0.0]), beta=255.0, prescaled=True)
        C = sigmoid_embed(view, params).values[0, 0]
        self.assertAlmostEqual(C, 1.0 / (1.0 + np.exp(-2.0)), places=14)

    def test_monotone_in_pre_activation(self):
        view = ViewMatrix(np.linspace(-5, 5, 21).reshape(-1, 1))
        C = sigmoid_embed(view, _params([[1.0]], [0.0])).values[:, 0]
        self.assertTrue(np.all(np.diff(C) > 0))

    def test_dimension_mismatch(self):
        view = ViewMatrix(np.ones((3, 2)))
        with self.assertRaises(ContractViolationException):
            sigmoid_embed(view, _params(np.zeros((3, 1)), np.zeros(1)))

    def test_non_finite_view_rejected(self):
        with self.assertRaises(InputValidationException):
            ViewMatrix(np.array([[1.0, np.nan]]))


class McrValueTests(SimpleTestCase):

    def test_zero_matrix(self):
        self.assertEqual(mcr_value(np.zeros((5, 3))), 0.0)

    def test_all_half_matrix(self):
        for n, c in ((4, 3), (10, 8)):
            C = np.full((n, c), 0.5)
            brute = np.sqrt(sum((C[:, p] @ C[:, q] / n) ** 2 for p in range(c) for q in range(c)))
            self.assertAlmostEqual(mcr_value(EmbeddingMatrix(C)), 0.25 * c, places=12)
            self.assertAlmostEqual(mcr_value(C), brute, places=12)

    def test_orthogonal_columns(self):
        n, c = 4, 4
        C = np.linalg.qr(np.random.default_rng(1).normal(size=(n, c)))[0] * np.sqrt(n)
        self.assertAlmostEqual(mcr_value(C), np.sqrt(c), places=10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(2)
        C = rng.uniform(0.05, 0.95, size=(12, 5))
        rows = rng.permutation(12)
        cols = rng.permutation(5)
        self.assertAlmostEqual(mcr_value(C[rows]), mcr_value(C), places=12)
        self.assertAlmostEqual(mcr_value(C[:, cols]), mcr_value(C), places=12)

    def test_identity_form_vanishes_on_orthonormal_gram(self):
        n = 6
        C = np.linalg.qr(np.random.default_rng(3).normal(size=(n, 3)))[0] * np.sqrt(n)
        self.assertAlmostEqual(mcr_identity_value(C), 0.0, places=10)


class ObjectiveTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(4)
        self.view = ViewMatrix(rng.normal(size=(7, 3)))
        self.params = _params(rng.normal(size=(3, 5)), rng.normal(size=5), alpha=1.5)

    def test_pure_quantization_loss_when_gamma_zero(self):
        C = sigmoid_embed(self.view, self.params).values
        B = CodeMatrix((C >= 0.5).astype(np.uint8))
        expected = 1.5 * np.sum((B.bits - C) ** 2)
        self.assertAlmostEqual(objective(B, [self.view], [self.params]), expected, places=12)

    def test_zero_parameters_against_all_ones(self):
        n, c = 9, 4
        view = ViewMatrix(np.random.default_rng(5).normal(size=(n, 2)))
        params = _params(np.zeros((2, c)), np.zeros(c), alpha=3.0)
        B = CodeMatrix(np.ones((n, c), dtype=np.uint8))
        brute = 3.0 * sum((1 - 0.5) ** 2 for _ in range(n * c))
        self.assertAlmostEqual(objective(B, [view], [params]), brute, places=12)
        self.assertAlmostEqual(objective(B, [view], [params]), 3.0 * n * c * 0.25, places=12)

    def test_additive_over_views(self):
        params = _params(self.params.W, self.params.v, alpha=1.0)
        B = update_code_matrix([self.view], [params])
        single = objective(B, [self.view], [params])
        double = objective(B, [self.view, self.view], [params, params])
        self.assertAlmostEqual(double, 2 * single, places=12)

    def test_regularizer_is_squared_norm(self):
        params = _params(self.params.W, self.params.v, alpha=2.0, gamma=0.3)
        B = update_code_matrix([self.view], [params])
        C = sigmoid_embed(self.view, params).values
        expected = 2.0 * (np.sum((B.bits - C) ** 2) + 0.3 * mcr_value(C) ** 2)
        self.assertAlmostEqual(objective(B, [self.view], [params]), expected, places=10)

    def test_identity_regularizer(self):
        params = _params(self.params.W, self.params.v, alpha=1.0, gamma=0.5)
        B = update_code_matrix([self.view], [params])
        C = sigmoid_embed(self.view, params).values
        expected = np.sum((B.bits - C) ** 2) + 0.5 * mcr_identity_value(C) ** 2
        value = objective(B, [self.view], [params], IdentityCorrelationRegularizer())
        self.assertAlmostEqual(value, expected, places=10)

    def test_non_negative(self):
        params = _params(self.params.W, self.params.v, gamma=0.1)
        B = CodeMatrix(np.random.default_rng(6).integers(0, 2, size=(7, 5)))
        self.assertGreaterEqual(objective(B, [self.view], [params]), 0.0)

    def test_shape_mismatch(self):
        B = CodeMatrix(np.zeros((7, 4), dtype=np.uint8))
        with self.assertRaises(ContractViolationException):
            objective(B, [self.view], [self.params])

    def test_view_count_mismatch(self):
        B = CodeMatrix(np.zeros((7, 5), dtype=np.uint8))
        with self.assertRaises(ContractViolationException):
            objective(B, [self.view, self.view], [self.params])


class UpdateCodeMatrixTests(SimpleTestCase):

    def test_single_view_rounds_embedding(self):
        rng = np.random.default_rng(7)
        view = ViewMatrix(rng.normal(size=(10, 4)))
        params = _params(rng.normal(size=(4, 6)), rng.normal(size=6))
        C = sigmoid_embed(view, params).values
        B = update_code_matrix([view], [params])
        np.testing.assert_array_equal(B.bits, (C >= 0.5).astype(np.uint8))

    def test_weighted_average_of_two_views(self):
        # sigmoid^-1(0.9) and sigmoid^-1(0.2) as biases on an empty data term.
        view = ViewMatrix(np.zeros((1, 1)))
        first = _params([[0.0]], [np.log(0.9 / 0.1)])
        second = _params([[0.0]], [np.log(0.2 / 0.8)])
        self.assertEqual(update_code_matrix([view, view], [first, second]).bits[0, 0], 1)

    def test_tie_rounds_up(self):
        view = ViewMatrix(np.zeros((2, 1)))
        params = _params([[0.0, 0.0]], [0.0, 0.0])
        np.testing.assert_array_equal(update_code_matrix([view], [params]).bits, np.ones((2, 2)))

    def test_alpha_weights_dominate(self):
        view = ViewMatrix(np.zeros((1, 1)))
        heavy = _params([[0.0]], [np.log(0.3 / 0.7)], alpha=10.0)
        light = _params([[0.0]], [np.log(0.9 / 0.1)], alpha=1.0)
        self.assertEqual(update_code_matrix([view, view], [heavy, light]).bits[0, 0], 0)

    def test_bit_flip_never_improves(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            n, c = int(rng.integers(2, 17)), int(rng.integers(1, 17))
            views, params = [], []
            for _ in range(int(rng.integers(1, 4))):
                d = int(rng.integers(1, 6))
                views.append(ViewMatrix(rng.normal(size=(n, d))))
                params.append(_params(rng.normal(size=(d, c)), rng.normal(size=c),
                                      alpha=float(rng.uniform(0.5, 10.0))))
            B = update_code_matrix(views, params)
            base = objective(B, views, params)
            for m in range(n):
                for k in range(c):
                    flipped = B.bits.copy()
                    flipped[m, k] = 1 - flipped[m, k]
                    self.assertGreaterEqual(objective(CodeMatrix(flipped), views, params), base - 1e-12)


class GradientTests(SimpleTestCase):

    def test_zero_when_codes_equal_embedding(self):
        rng = np.random.default_rng(8)
        view = ViewMatrix(rng.normal(size=(5, 3)))
        params = _params(rng.normal(size=(3, 4)), rng.normal(size=4))
        C = sigmoid_embed(view, params).values
        np.testing.assert_allclose(grad_bias(view, params, C), 0.0, atol=1e-15)
        np.testing.assert_allclose(grad_weights(view, params, C), 0.0, atol=1e-15)

    def test_zero_data_annihilates_weight_gradient(self):
        view = ViewMatrix(np.zeros((5, 3)))
        params = _params(np.ones((3, 2)), [0.3, -0.2])
        B = CodeMatrix(np.ones((5, 2), dtype=np.uint8))
        np.testing.assert_array_equal(grad_weights(view, params, B), np.zeros((3, 2)))

    def test_single_sample_bias_gradient(self):
        rng = np.random.default_rng(9)
        view = ViewMatrix(rng.normal(size=(1, 3)))
        params = _params(rng.normal(size=(3, 4)), rng.normal(size=4), alpha=1.7)
        B = CodeMatrix(np.array([[1, 0, 1, 0]], dtype=np.uint8))
        C = sigmoid_embed(view, params).values[0]
        expected = 2 * 1.7 * (C - B.bits[0]) * C * (1 - C)
        np.testing.assert_allclose(grad_bias(view, params, B), expected, rtol=1e-12)
        numeric = finite_difference_bias(view, params, B)
        self.assertTrue(compare_gradients(expected, numeric)[2])

    def test_alpha_scales_weight_gradient(self):
        view, params, B = random_instance(10, 0.1)
        doubled = ViewParams(params.W, params.v, 2 * params.alpha, params.beta, params.gamma)
        np.testing.assert_allclose(grad_weights(view, doubled, B), 2 * grad_weights(view, params, B), rtol=1e-12)

    def test_small_instance_matches_finite_differences(self):
        rng = np.random.default_rng(11)
        view = ViewMatrix(rng.normal(size=(20, 5)))
        params = _params(rng.normal(scale=0.5, size=(5, 8)), rng.normal(scale=0.5, size=8), gamma=0.001)
        B = CodeMatrix(rng.integers(0, 2, size=(20, 8)))
        self.assertTrue(compare_gradients(grad_bias(view, params, B), finite_difference_bias(view, params, B))[2])
        self.assertTrue(compare_gradients(grad_weights(view, params, B), finite_difference_weights(view, params, B))[2])

    def test_view_gradients_match_separate_calls(self):
        view, params, B = random_instance(12, 0.001)
        grads = view_gradients(view, params, B)
        np.testing.assert_array_equal(grads.bias, grad_bias(view, params, B))
        np.testing.assert_array_equal(grads.weights, grad_weights(view, params, B))

    def test_randomized_oracle_both_regularizers(self):
        service = GradientCheckService(regularizers=[
            regularizer_factory.create('simplified'),
            regularizer_factory.create('identity'),
        ])
        results = service.run(instances=20)
        self.assertEqual(len(results), 2 * 20 * 2)
        failures = [r for r in results if not r.passed]
        self.assertEqual(failures, [])
        self.assertEqual({r.gamma for r in results}, {0.0, 0.001, 0.1})

    def test_wrong_sign_gradient_is_caught(self):
        service = GradientCheckService(
            bias_gradient=lambda *args: -grad_bias(*args),
            weight_gradient=lambda *args: -grad_weights(*args),
        )
        results = service.run(instances=3, base_seed=1)
        self.assertTrue(any(not r.passed for r in results))


class InitializationTests(SimpleTestCase):

    def test_seeded_and_deterministic(self):
        views = [ViewMatrix(np.ones((3, 2))), ViewMatrix(np.ones((3, 5)))]
        hypers = [ViewHyper(1.0, 1.0, 0.001), ViewHyper(10.0, 255.0, 0.001)]
        first = initialize_params(views, hypers, 8, seed=3)
        second = initialize_params(views, hypers, 8, seed=3)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a.W, b.W)
            np.testing.assert_array_equal(a.v, b.v)
        self.assertEqual(first[1].W.shape, (5, 8))
        self.assertEqual(first[1].alpha, 10.0)
        self.assertLess(np.abs(first[0].W).max(), 0.1)

    def test_zero_variance_view_is_flagged(self):
        views = [ViewMatrix(np.ones((4, 3)), view_id='flat'), ViewMatrix(np.eye(4), view_id='ok')]
        with self.assertLogs('hashing.services', level='WARNING'):
            self.assertEqual(warn_degenerate_views(views), ['flat'])

    def test_code_length_may_exceed_dimension(self):
        views = [ViewMatrix(np.eye(3))]
        params = initialize_params(views, [ViewHyper()], 64, seed=0)
        self.assertEqual(params[0].c, 64)

import numpy as np
from django.test import SimpleTestCase, override_settings

from core.exceptions import ConfigurationException, ContractViolationException, TrainingDivergedException
from hashing.models import ViewHyper
from hashing.services import initialize_params, objective, update_code_matrix
from multimodal.factories import generate_synthetic
from multimodal.models import SyntheticSpec
from multimodal.services import auto_beta
from .builders import TrainConfigBuilder
from .models import TrainConfig
from .services import TrainingService, step_size, train, train_prototype
from .strategies.schedules import ConstantSchedule, LinearDecaySchedule
from .strategies.updates import NormalizedWeightUpdate, RawWeightUpdate


def _synthetic(seed=0, n_per_class=50):
    dataset = generate_synthetic(SyntheticSpec(n_per_class=n_per_class, n_classes=4, dims=(10, 12), seed=seed))
    hypers = [
        ViewHyper(alpha=10.0, beta=255.0) if view.is_label_view else ViewHyper(alpha=1.0, beta=auto_beta(view))
        for view in dataset.views
    ]
    return dataset.views, hypers


class ExplodingUpdate(NormalizedWeightUpdate):
    name = 'exploding'

    def execute(self, W, gradient, step, view_id=''):
        return W * np.inf


class StepSizeTests(SimpleTestCase):

    def setUp(self):
        self.config = TrainConfig(k_s=0.003, k_e=0.0015, K=400)

    def test_schedule_endpoints_and_midpoint(self):
        self.assertAlmostEqual(step_size(0, self.config), 0.003, places=15)
        self.assertAlmostEqual(step_size(400, self.config), 0.0015, places=15)
        self.assertAlmostEqual(step_size(200, self.config), 0.00225, places=15)

    def test_schedule_is_non_increasing(self):
        steps = [step_size(k, self.config) for k in range(401)]
        self.assertTrue(all(a >= b for a, b in zip(steps, steps[1:])))

    def test_out_of_range_iteration(self):
        with self.assertRaises(ContractViolationException):
            step_size(-1, self.config)
        with self.assertRaises(ContractViolationException):
            step_size(401, self.config)

    def test_constant_schedule(self):
        schedule = ConstantSchedule(0.01, 5)
        self.assertEqual([schedule.execute(k) for k in range(5)], [0.01] * 5)

    def test_linear_schedule_with_equal_endpoints_is_constant(self):
        schedule = LinearDecaySchedule(0.002, 0.002, 10)
        self.assertEqual(schedule.execute(7), 0.002)


class WeightUpdateTests(SimpleTestCase):

    def test_normalized_step_has_length_dt(self):
        W = np.zeros((3, 2))
        gradient = np.array([[3.0, 0.0], [0.0, 4.0], [0.0, 0.0]])
        updated = NormalizedWeightUpdate().execute(W, gradient, 0.5)
        self.assertAlmostEqual(np.linalg.norm(updated), 0.5, places=14)
        np.testing.assert_allclose(updated, -0.5 * gradient / 5.0)

    def test_vanishing_gradient_skips_the_step(self):
        W = np.ones((2, 2))
        with self.assertLogs('training.strategies.updates', level='WARNING'):
            updated = NormalizedWeightUpdate().execute(W, np.zeros((2, 2)), 0.1, 'image')
        np.testing.assert_array_equal(updated, W)

    def test_raw_step(self):
        updated = RawWeightUpdate().execute(np.ones((1, 2)), np.array([[2.0, -2.0]]), 0.25)
        np.testing.assert_allclose(updated, [[0.5, 1.5]])


class TrainConfigTests(SimpleTestCase):

    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual((config.k_s, config.k_e, config.K), (0.003, 0.0015, 400))
        self.assertEqual(config.convergence_rtol, 1e-5)

    def test_invalid_values_are_collected(self):
        with self.assertRaises(ConfigurationException) as caught:
            TrainConfig(k_s=0.001, k_e=0.002, K=0, code_length=0)
        self.assertEqual(set(caught.exception.errors), {'k_s', 'K', 'code_length'})

    def test_non_positive_final_step(self):
        with self.assertRaises(ConfigurationException):
            TrainConfig(k_s=0.0, k_e=0.0)

    def test_negative_tolerance(self):
        with self.assertRaises(ConfigurationException):
            TrainConfig(convergence_rtol=-1.0)


class TrainConfigBuilderTests(SimpleTestCase):

    @override_settings(DMH_KS=0.004, DMH_KE=0.001, DMH_MAX_ITER=50, DMH_CODE_LENGTH=16)
    def test_starts_from_settings(self):
        config = TrainConfigBuilder().build()
        self.assertEqual((config.k_s, config.k_e, config.K, config.code_length), (0.004, 0.001, 50, 16))

    def test_overrides(self):
        config = (TrainConfigBuilder()
                  .with_step_sizes(0.01, 0.005)
                  .with_max_iterations(7)
                  .with_seed(3)
                  .with_code_length(8)
                  .with_regularizer('identity')
                  .with_workers(2)
                  .build())
        self.assertEqual(config, TrainConfig(k_s=0.01, k_e=0.005, K=7, seed=3, code_length=8,
                                             regularizer='identity', workers=2,
                                             convergence_rtol=config.convergence_rtol))

    def test_invalid_override(self):
        with self.assertRaises(ConfigurationException):
            TrainConfigBuilder().with_max_iterations(0).build()


class TrainTests(SimpleTestCase):

    def setUp(self):
        self.views, self.hypers = _synthetic()

    def test_huge_tolerance_returns_initialized_parameters(self):
        config = TrainConfig(code_length=16, convergence_rtol=1e9, seed=4)
        result = train(self.views, config, self.hypers)
        self.assertEqual(result.trace.iterations_run, 1)
        self.assertTrue(result.trace.converged)
        scaled = [view.scaled(hyper.beta) for view, hyper in zip(self.views, self.hypers)]
        initial = initialize_params(scaled, self.hypers, 16, 4, prescaled=True)
        for trained, expected in zip(result.params, initial):
            np.testing.assert_array_equal(trained.W, expected.W)
            np.testing.assert_array_equal(trained.v, expected.v)

    def test_trace_records_objective_before_the_parameter_steps(self):
        result = train(self.views, TrainConfig(code_length=16, K=3, convergence_rtol=0.0, seed=4), self.hypers)
        scaled = [view.scaled(hyper.beta) for view, hyper in zip(self.views, self.hypers)]
        initial = initialize_params(scaled, self.hypers, 16, 4, prescaled=True)
        expected = objective(update_code_matrix(scaled, initial), scaled, initial)
        self.assertEqual(result.trace.objective_per_iteration[0], expected)

    def test_codes_are_binary_with_requested_shape(self):
        result = train(self.views, TrainConfig(code_length=16, K=20), self.hypers)
        self.assertEqual(result.codes.bits.shape, (200, 16))
        self.assertTrue(np.isin(result.codes.bits, (0, 1)).all())
        self.assertEqual(result.view_ids, ['view0', 'view1', 'labels'])

    def test_trace_respects_the_iteration_cap(self):
        result = train(self.views, TrainConfig(code_length=8, K=15, convergence_rtol=0.0), self.hypers)
        self.assertEqual(result.trace.iterations_run, 15)
        self.assertFalse(result.trace.converged)
        self.assertEqual(len(result.trace.step_sizes), 15)

    def test_objective_decreases_over_first_hundred_iterations(self):
        result = train(self.views, TrainConfig(code_length=32, K=100, convergence_rtol=0.0), self.hypers)
        trace = result.trace.objective_per_iteration
        self.assertEqual(len(trace), 100)
        self.assertLess(trace[99], trace[0])

    def test_fixed_seed_is_deterministic(self):
        config = TrainConfig(code_length=16, K=30, seed=7)
        first = train(self.views, config, self.hypers)
        second = train(self.views, config, self.hypers)
        self.assertEqual(first.codes, second.codes)
        self.assertEqual(first.trace.objective_per_iteration, second.trace.objective_per_iteration)
        for a, b in zip(first.params, second.params):
            np.testing.assert_array_equal(a.W, b.W)

    def test_worker_threads_do_not_change_the_result(self):
        single = train(self.views, TrainConfig(code_length=16, K=20, workers=1), self.hypers)
        threaded = train(self.views, TrainConfig(code_length=16, K=20, workers=3), self.hypers)
        self.assertEqual(single.codes, threaded.codes)
        for a, b in zip(single.params, threaded.params):
            np.testing.assert_array_equal(a.W, b.W)
            np.testing.assert_array_equal(a.v, b.v)

    def test_prescaled_views_match_scaling_inside_train(self):
        config = TrainConfig(code_length=8, K=10)
        scaled = [view.scaled(hyper.beta) for view, hyper in zip(self.views, self.hypers)]
        inside = train(self.views, config, self.hypers)
        outside = train(scaled, config, self.hypers, views_prescaled=True)
        self.assertEqual(inside.codes, outside.codes)

    def test_params_record_prescaling(self):
        result = train(self.views, TrainConfig(code_length=8, K=2), self.hypers)
        self.assertTrue(all(p.prescaled for p in result.params))
        self.assertEqual(result.params[-1].beta, 255.0)

    def test_view_and_hyper_counts_must_agree(self):
        with self.assertRaises(ContractViolationException):
            train(self.views, TrainConfig(K=2), self.hypers[:1])

    def test_non_finite_parameters_raise(self):
        service = TrainingService(weight_update=ExplodingUpdate())
        with self.assertRaises(TrainingDivergedException) as caught:
            service.train(self.views, TrainConfig(code_length=8, K=5, convergence_rtol=0.0), self.hypers)
        self.assertEqual(caught.exception.iteration, 0)

    def test_unknown_regularizer(self):
        with self.assertRaises(ConfigurationException):
            train(self.views, TrainConfig(K=2, regularizer='orthogonal'), self.hypers)


class PrototypeTests(SimpleTestCase):

    def test_small_fixed_step_never_increases_the_objective(self):
        views, _ = _synthetic()
        view = views[0]
        config = TrainConfig(k_s=1e-4, k_e=1e-4, K=10, code_length=8, convergence_rtol=0.0)
        result = train_prototype([view], config, [ViewHyper(alpha=1.0, beta=1.0, gamma=0.0)])
        trace = result.trace.objective_per_iteration
        for previous, current in zip(trace, trace[1:]):
            self.assertLessEqual(current, previous * (1 + 1e-12))

    def test_prototype_follows_a_different_trajectory(self):
        views, hypers = _synthetic()
        config = TrainConfig(code_length=8, K=10, convergence_rtol=0.0)
        normalized = train(views, config, hypers)
        raw = train_prototype(views, config, hypers)
        self.assertFalse(np.array_equal(normalized.params[0].W, raw.params[0].W))
        self.assertEqual(raw.trace.step_sizes, (config.k_s,) * 10)

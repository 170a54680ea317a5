import tempfile
from io import StringIO
from pathlib import Path
from unittest import mock

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from codes.repositories import PackedCodesRepository
from core.exceptions import (
    ArtifactNotFoundException,
    ConfigurationException,
    ContractViolationException,
    DatasetFormatException,
)
from evaluation.serializers import EvalSummarySerializer
from hashing.diagnostics import GradientCheckService
from hashing.models import ViewMatrix, ViewParams
from hashing.services import grad_bias
from multimodal.factories import generate_synthetic
from multimodal.models import MultimodalDataset, SyntheticSpec
from multimodal.repositories import MatrixFileRepository
from multimodal.services import auto_beta
from training.models import TrainConfig
from .forms import AblationGridForm, RunConfigForm, SyntheticSpecForm
from .management.commands import gradcheck
from .models import AblationGrid, HashingModel, RunConfig
from .repositories import MODEL_MAGIC, ModelArtifactRepository, ReportRepository
from .serializers import AblationRowSerializer
from .services import (
    GAMMA_SWEEP,
    AblationService,
    ExperimentService,
    model_directions,
    resolve_hypers,
    run_gradient_checks,
)


def _float32(values):
    return np.asarray(values, dtype=np.float32).astype(np.float64)


def _model(gammas=(0.001, 0.001, 0.001), seed=0):
    rng = np.random.default_rng(seed)
    params = [
        ViewParams(_float32(rng.normal(size=(d, 8))), _float32(rng.normal(size=8)),
                   alpha=alpha, beta=beta, gamma=gamma, prescaled=True)
        for d, alpha, beta, gamma in zip((3, 4, 2), (1.0, 1.0, 10.0), (12.5, 40.0, 255.0), gammas)
    ]
    return HashingModel(
        params=params,
        view_ids=['view0', 'view1', 'labels'],
        label_views=[False, False, True],
        config=TrainConfig(code_length=8, K=10),
        provenance={'dataset': {'kind': 'test'}, 'split': {'test_fraction': 0.25, 'seed': 3}},
    )


def _memorization_instance():
    """Two one-hot views and a model whose codes are one distinct pattern per class."""
    labels = np.repeat(np.eye(3), 10, axis=0)
    dataset = MultimodalDataset(
        views=[ViewMatrix(labels, view_id='a'), ViewMatrix(labels, view_id='b')],
        labels=labels,
    )
    W = 4.0 * np.array([
        [1, -1, 1, -1],
        [-1, 1, 1, -1],
        [-1, -1, -1, 1],
    ])
    params = [ViewParams(W, np.zeros(4), beta=1.0), ViewParams(W, np.zeros(4), beta=1.0)]
    model = HashingModel(
        params=params,
        view_ids=['a', 'b'],
        label_views=[False, False],
        config=TrainConfig(code_length=4),
        provenance={'split': {'test_fraction': 0.2, 'seed': 0}},
    )
    return dataset, model


class RunConfigFormTests(SimpleTestCase):

    def test_defaults_come_from_settings(self):
        run = RunConfigForm({}).to_run_config()
        self.assertEqual(run.train.k_s, 0.003)
        self.assertEqual(run.train.k_e, 0.0015)
        self.assertEqual(run.train.K, 400)
        self.assertEqual(run.train.code_length, 32)
        self.assertEqual(run.train.regularizer, 'simplified')
        self.assertEqual(run.radius, 2)
        self.assertEqual(run.test_fraction, 0.05)
        self.assertEqual(run.gamma, ())

    @override_settings(DMH_CODE_LENGTH=64, DMH_MAX_ITER=50)
    def test_settings_override_defaults(self):
        run = RunConfigForm({}).to_run_config()
        self.assertEqual(run.train.code_length, 64)
        self.assertEqual(run.train.K, 50)

    def test_list_flags(self):
        form = RunConfigForm({'alpha': '1,1,10', 'beta': 'auto, auto, 255', 'gamma': '0.001'}, view_count=3)
        run = form.to_run_config()
        self.assertEqual(run.alpha, (1.0, 1.0, 10.0))
        self.assertEqual(run.beta, ('auto', 'auto', 255.0))
        self.assertEqual(run.gamma, (0.001,))

    def test_first_step_below_last_step(self):
        form = RunConfigForm({'ks': 0.001, 'ke': 0.002})
        self.assertFalse(form.is_valid())
        self.assertIn('ks', form.errors)

    def test_non_positive_last_step(self):
        form = RunConfigForm({'ks': 0.001, 'ke': 0})
        self.assertFalse(form.is_valid())
        self.assertIn('ke', form.errors)

    def test_invalid_values(self):
        for data, field in (
            ({'beta': '0'}, 'beta'),
            ({'beta': 'auto,-1'}, 'beta'),
            ({'alpha': '0'}, 'alpha'),
            ({'alpha': 'x'}, 'alpha'),
            ({'gamma': '-0.1'}, 'gamma'),
            ({'max_iter': 0}, 'max_iter'),
            ({'convergence_rtol': -1}, 'convergence_rtol'),
            ({'test_fraction': 1.0}, 'test_fraction'),
            ({'regularizer': 'cubic'}, 'regularizer'),
        ):
            with self.subTest(data=data):
                form = RunConfigForm(data)
                self.assertFalse(form.is_valid())
                self.assertIn(field, form.errors)

    def test_list_length_must_match_views(self):
        form = RunConfigForm({'alpha': '1,2'}, view_count=3)
        self.assertFalse(form.is_valid())
        self.assertIn('alpha', form.errors)

    def test_invalid_form_raises_configuration_exception(self):
        with self.assertRaises(ConfigurationException) as context:
            RunConfigForm({'gamma': '-1'}).to_run_config()
        self.assertIn('gamma', context.exception.errors)


class GridAndSyntheticFormTests(SimpleTestCase):

    def test_grid(self):
        grid = AblationGridForm({'gamma_grid': '0.001,0.1', 'code_length_grid': '16,32', 'seeds': '1,2'}).to_grid()
        self.assertEqual(grid.gamma, (0.001, 0.1))
        self.assertEqual(grid.code_length, (16, 32))
        self.assertEqual(grid.seeds, (1, 2))

    def test_grid_defaults_to_run_seed(self):
        grid = AblationGridForm({}).to_grid(default_seed=7)
        self.assertTrue(grid.is_empty)
        self.assertEqual(grid.seeds, (7,))

    def test_fractional_code_length_rejected(self):
        self.assertFalse(AblationGridForm({'code_length_grid': '16.5'}).is_valid())

    def test_synthetic_defaults(self):
        self.assertEqual(SyntheticSpecForm({}).to_spec(), SyntheticSpec())

    def test_synthetic_dims(self):
        spec = SyntheticSpecForm({'dims': '3,4,5', 'n_classes': 2}).to_spec()
        self.assertEqual(spec.dims, (3, 4, 5))
        self.assertEqual(spec.n_classes, 2)


class ResolveHypersTests(SimpleTestCase):

    def setUp(self):
        self.views = generate_synthetic(SyntheticSpec()).views

    def test_defaults(self):
        hypers = resolve_hypers(self.views, RunConfig())
        self.assertEqual([h.alpha for h in hypers], [1.0, 1.0, 10.0])
        self.assertEqual(hypers[-1].beta, 255.0)
        self.assertEqual(hypers[0].beta, auto_beta(self.views[0]))
        self.assertEqual(hypers[1].beta, auto_beta(self.views[1]))
        self.assertEqual({h.gamma for h in hypers}, {0.001})

    def test_single_value_broadcasts(self):
        hypers = resolve_hypers(self.views, RunConfig(gamma=(0.0,), beta=(2.0,)))
        self.assertEqual([h.gamma for h in hypers], [0.0, 0.0, 0.0])
        self.assertEqual([h.beta for h in hypers], [2.0, 2.0, 2.0])

    def test_per_view_values(self):
        hypers = resolve_hypers(self.views, RunConfig(alpha=(2.0, 3.0, 4.0), beta=('auto', 1.0, 255.0)))
        self.assertEqual([h.alpha for h in hypers], [2.0, 3.0, 4.0])
        self.assertEqual(hypers[0].beta, auto_beta(self.views[0]))
        self.assertEqual(hypers[1].beta, 1.0)


class HashingModelTests(SimpleTestCase):

    def test_variant(self):
        self.assertEqual(_model().variant, 'decorrelated')
        self.assertEqual(_model(gammas=(0.0, 0.0, 0.001)).variant, 'unregularized')

    def test_feature_views_and_directions(self):
        model = _model()
        self.assertEqual(model.feature_view_ids, ['view0', 'view1'])
        self.assertEqual([d.task for d in model_directions(model)], ['view0->view1', 'view1->view0'])

    def test_misaligned_fields(self):
        model = _model()
        with self.assertRaises(ContractViolationException):
            HashingModel(model.params, ['a'], [False], model.config)


class ModelArtifactRepositoryTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.path = Path(self.directory.name) / 'model.dmhm'

    def tearDown(self):
        self.directory.cleanup()

    def test_round_trip(self):
        model = _model()
        ModelArtifactRepository.save(self.path, model)
        loaded = ModelArtifactRepository.load(self.path)
        self.assertEqual(loaded.view_ids, model.view_ids)
        self.assertEqual(loaded.label_views, model.label_views)
        self.assertEqual(loaded.config, model.config)
        self.assertEqual(loaded.provenance, model.provenance)
        self.assertEqual(loaded.variant, model.variant)
        for original, restored in zip(model.params, loaded.params):
            np.testing.assert_array_equal(restored.W, original.W)
            np.testing.assert_array_equal(restored.v, original.v)
            self.assertEqual((restored.alpha, restored.beta, restored.gamma), (original.alpha, original.beta, original.gamma))
            self.assertTrue(restored.prescaled)

    def test_layout(self):
        ModelArtifactRepository.save(self.path, _model())
        raw = self.path.read_bytes()
        self.assertEqual(raw[:4], MODEL_MAGIC)
        self.assertEqual(int.from_bytes(raw[4:8], 'little'), 1)
        header_length = int.from_bytes(raw[8:12], 'little')
        self.assertEqual(raw[12 + header_length:12 + header_length + 4], b'DMH1')

    def test_same_model_same_bytes(self):
        other = Path(self.directory.name) / 'other.dmhm'
        ModelArtifactRepository.save(self.path, _model())
        ModelArtifactRepository.save(other, _model())
        self.assertEqual(self.path.read_bytes(), other.read_bytes())

    def test_missing_file(self):
        with self.assertRaises(ArtifactNotFoundException):
            ModelArtifactRepository.load(self.path)

    def test_bad_magic(self):
        ModelArtifactRepository.save(self.path, _model())
        self.path.write_bytes(b'XXXX' + self.path.read_bytes()[4:])
        with self.assertRaises(DatasetFormatException):
            ModelArtifactRepository.load(self.path)

    def test_unknown_version(self):
        ModelArtifactRepository.save(self.path, _model())
        raw = self.path.read_bytes()
        self.path.write_bytes(raw[:4] + (2).to_bytes(4, 'little') + raw[8:])
        with self.assertRaises(DatasetFormatException):
            ModelArtifactRepository.load(self.path)

    def test_truncated(self):
        ModelArtifactRepository.save(self.path, _model())
        self.path.write_bytes(self.path.read_bytes()[:-3])
        with self.assertRaises(DatasetFormatException):
            ModelArtifactRepository.load(self.path)

    def test_trailing_bytes(self):
        ModelArtifactRepository.save(self.path, _model())
        self.path.write_bytes(self.path.read_bytes() + b'\x00')
        with self.assertRaises(DatasetFormatException):
            ModelArtifactRepository.load(self.path)

    def test_report_round_trip(self):
        path = ReportRepository.save(Path(self.directory.name) / 'report.json', {'a': 1, 'b': [0.1, 0.25]})
        self.assertEqual(ReportRepository.load(path), {'a': 1, 'b': [0.1, 0.25]})


class ExperimentServiceTests(SimpleTestCase):

    def test_train_records_split_and_views(self):
        dataset = generate_synthetic(SyntheticSpec())
        run = RunConfig(train=TrainConfig(K=20, code_length=16), test_fraction=0.2)
        model, result = ExperimentService().train(dataset, run)
        self.assertEqual(model.view_ids, ['view0', 'view1', 'labels'])
        self.assertEqual(model.label_views, [False, False, True])
        self.assertEqual(model.provenance['split'], {'test_fraction': 0.2, 'seed': 0})
        self.assertEqual(result.codes.bits.shape, (160, 16))

    def test_self_retrieval_is_perfect(self):
        dataset, model = _memorization_instance()
        reports = ExperimentService().evaluate(model, dataset, RunConfig(), query_split='train')
        self.assertEqual(len(reports), 2)
        for report in reports:
            self.assertAlmostEqual(report.map, 1.0, delta=1e-12)
            self.assertEqual(report.valid_queries, 24)

    def test_radius_equal_to_code_length_recalls_everything(self):
        dataset, model = _memorization_instance()
        for report in ExperimentService().evaluate(model, dataset, RunConfig(radius=4)):
            self.assertEqual(report.recall, 1.0)

    def test_needs_two_feature_views(self):
        dataset, model = _memorization_instance()
        single = HashingModel(model.params, model.view_ids, [False, True], model.config, model.provenance)
        with self.assertRaises(ConfigurationException):
            ExperimentService().evaluate(single, dataset, RunConfig())

    def test_unknown_query_split(self):
        dataset, model = _memorization_instance()
        with self.assertRaises(ConfigurationException):
            ExperimentService().evaluate(model, dataset, RunConfig(), query_split='database')


class AblationServiceTests(SimpleTestCase):

    def setUp(self):
        self.dataset = generate_synthetic(SyntheticSpec())
        self.run_config = RunConfig(train=TrainConfig(K=15, code_length=16), test_fraction=0.2)

    def test_gamma_sweep_has_seven_runs(self):
        rows = AblationService().run(self.dataset, self.run_config, AblationGrid(gamma=GAMMA_SWEEP))
        self.assertEqual([row.parameter for row in rows], ['reference'] + ['gamma'] * 7)
        self.assertEqual([row.value for row in rows[1:]], list(GAMMA_SWEEP))
        self.assertEqual(rows[0].delta_map, ())
        for row in rows[1:]:
            self.assertEqual(len(row.delta_map), 2)
            self.assertEqual(len(row.reports), 2)
            self.assertAlmostEqual(row.delta_map[0], row.reports[0].map - rows[0].reports[0].map, places=15)

    def test_empty_grid_pairs_default_gamma_with_reference(self):
        rows = AblationService().run(self.dataset, self.run_config, AblationGrid())
        self.assertEqual([(row.parameter, row.value) for row in rows], [('reference', 0.0), ('gamma', 0.001)])

    def test_code_length_grid_gets_own_references(self):
        rows = AblationService().run(self.dataset, self.run_config, AblationGrid(code_length=(8,), seeds=(0, 1)))
        self.assertEqual(
            [(row.parameter, row.seed, row.code_length) for row in rows],
            [('reference', 0, 16), ('reference', 0, 8), ('code_length', 0, 8),
             ('reference', 1, 16), ('reference', 1, 8), ('code_length', 1, 8)],
        )

    def test_alpha_and_beta_grids(self):
        rows = AblationService().run(self.dataset, self.run_config, AblationGrid(alpha=(5.0,), beta=(100.0,)))
        self.assertEqual([row.parameter for row in rows], ['reference', 'alpha', 'beta'])

    def test_identical_seeds_give_identical_reports(self):
        grid = AblationGrid(gamma=(0.001, 0.1))
        first = AblationRowSerializer(AblationService().run(self.dataset, self.run_config, grid), many=True).data
        second = AblationRowSerializer(AblationService().run(self.dataset, self.run_config, grid), many=True).data
        self.assertEqual(ReportRepository.render(first), ReportRepository.render(second))

    def test_decorrelation_penalty_lowers_embedding_correlation_and_keeps_accuracy(self):
        # Both runs of a seed take all K steps.
        run = RunConfig(train=TrainConfig(code_length=64, convergence_rtol=0.0), test_fraction=0.2)
        grid = AblationGrid(gamma=(0.001,), seeds=(0, 1, 2, 3, 4))
        rows = AblationService().run(self.dataset, run, grid)
        pairs = list(zip(rows[0::2], rows[1::2]))
        self.assertEqual(
            [(reference.parameter, row.parameter, row.seed) for reference, row in pairs],
            [('reference', 'gamma', seed) for seed in range(5)],
        )

        lower = sum(row.embedding_correlation < reference.embedding_correlation for reference, row in pairs)
        self.assertGreaterEqual(lower, 4)
        for _, row in pairs:
            self.assertEqual(row.iterations, 400)
            for delta in row.delta_map:
                self.assertGreaterEqual(delta, -0.02)

    def test_summary_rows_have_no_timings(self):
        rows = AblationService().run(self.dataset, self.run_config, AblationGrid())
        data = AblationRowSerializer(rows[0]).data
        self.assertEqual(list(data['reports'][0].keys()), list(EvalSummarySerializer().fields.keys()))


class CheckServiceTests(SimpleTestCase):

    def test_gradient_checks_cover_both_regularizer_forms(self):
        rows = run_gradient_checks(instances=3)
        self.assertEqual({row.regularizer for row in rows}, {'simplified', 'identity'})
        self.assertEqual(len(rows), 2 * 3 * 2)
        self.assertTrue(all(row.passed for row in rows))

    def test_wrong_sign_gradient_fails(self):
        def flipped(view, params, B, regularizer=None):
            return -grad_bias(view, params, B, regularizer)

        rows = run_gradient_checks(instances=3, service=GradientCheckService(bias_gradient=flipped))
        self.assertTrue(any(not row.passed for row in rows if row.target == 'bias'))


class CommandTests(SimpleTestCase):

    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def call(self, *args, **options):
        stdout = StringIO()
        call_command(*args, stdout=stdout, **options)
        return stdout.getvalue()

    def test_generate_writes_matrix_files(self):
        self.call('generate', '--dims', '3,4', '--out', str(self.out))
        self.assertEqual(MatrixFileRepository.load(self.out / 'view0.dmh').shape, (200, 3))
        self.assertEqual(MatrixFileRepository.load(self.out / 'view1.dmh').shape, (200, 4))
        self.assertEqual(MatrixFileRepository.load(self.out / 'labels.dmh').shape, (200, 4))

    def test_train_writes_model_and_trace(self):
        output = self.call('train', '--out', str(self.out))
        self.assertIn('final objective', output)
        self.assertTrue((self.out / 'model.dmhm').is_file())
        trace = ReportRepository.load(self.out / 'model_trace.json')['trace']
        self.assertLessEqual(trace['iterations_run'], 400)
        self.assertEqual(len(trace['objective_per_iteration']), trace['iterations_run'])

    def test_train_is_byte_identical_on_rerun(self):
        self.call('train', '--max-iter', '40', '--name', 'first', '--out', str(self.out))
        self.call('train', '--max-iter', '40', '--name', 'second', '--out', str(self.out))
        self.assertEqual((self.out / 'first.dmhm').read_bytes(), (self.out / 'second.dmhm').read_bytes())

    def test_trace_and_evaluation_reports_are_byte_identical_on_rerun(self):
        for name in ('first', 'second'):
            self.call('train', '--max-iter', '30', '--name', name, '--out', str(self.out))
        self.assertEqual(
            (self.out / 'first_trace.json').read_bytes(), (self.out / 'second_trace.json').read_bytes()
        )
        self.assertNotIn('seconds', ReportRepository.load(self.out / 'first_trace.json')['trace'])

        model = str(self.out / 'first.dmhm')
        for name in ('a', 'b'):
            self.call('evaluate', '--model', model, '--out', str(self.out / name))
        first = (self.out / 'a' / 'eval_c32.json').read_bytes()
        self.assertEqual(first, (self.out / 'b' / 'eval_c32.json').read_bytes())
        for direction in ReportRepository.load(self.out / 'a' / 'eval_c32.json')['directions']:
            self.assertNotIn('mean_query_seconds', direction)

    def test_gamma_zero_records_variant(self):
        self.call('train', '--gamma', '0', '--max-iter', '10', '--out', str(self.out))
        model = ModelArtifactRepository.load(self.out / 'model.dmhm')
        self.assertEqual(model.variant, 'unregularized')
        self.assertEqual([p.gamma for p in model.params], [0.0, 0.0, 0.0])

    def test_invalid_flags_exit_nonzero(self):
        with self.assertRaises(CommandError):
            self.call('train', '--ks', '0.001', '--ke', '0.002', '--out', str(self.out))

    def test_views_need_labels(self):
        with self.assertRaises(CommandError):
            self.call('train', '--views', str(self.out / 'a.dmh'), '--out', str(self.out))

    def test_missing_view_file(self):
        with self.assertRaises(CommandError):
            self.call('train', '--views', str(self.out / 'a.dmh'), '--labels', str(self.out / 'l.dmh'),
                      '--out', str(self.out))

    def test_train_on_files_and_encode(self):
        self.call('generate', '--out', str(self.out))
        self.call('train', '--views', str(self.out / 'view0.dmh'), str(self.out / 'view1.dmh'),
                  '--labels', str(self.out / 'labels.dmh'), '--max-iter', '20', '--code-length', '12',
                  '--out', str(self.out))
        self.call('encode', '--model', str(self.out / 'model.dmhm'), '--view', str(self.out / 'view1.dmh'),
                  '--view-id', 'view1', '--out', str(self.out))
        codes = PackedCodesRepository.load(self.out / 'view1.dmhc')
        self.assertEqual((codes.n, codes.c), (200, 12))

    def test_encode_unknown_view(self):
        self.call('train', '--max-iter', '5', '--out', str(self.out))
        self.call('generate', '--out', str(self.out))
        with self.assertRaises(CommandError):
            self.call('encode', '--model', str(self.out / 'model.dmhm'), '--view', str(self.out / 'view0.dmh'),
                      '--view-id', 'audio', '--out', str(self.out))

    def test_evaluate_one_report_per_code_length(self):
        models = []
        for c in (16, 32):
            self.call('train', '--code-length', str(c), '--max-iter', '30', '--name', f'c{c}', '--out', str(self.out))
            models.append(str(self.out / f'c{c}.dmhm'))
        self.call('evaluate', '--model', *models, '--out', str(self.out))
        for c in (16, 32):
            report = ReportRepository.load(self.out / f'eval_c{c}.json')
            self.assertEqual(report['code_length'], c)
            self.assertEqual([d['task'] for d in report['directions']], ['view0->view1', 'view1->view0'])
            for direction in report['directions']:
                self.assertEqual(direction['radius'], 2)
                self.assertTrue(0.0 <= direction['map'] <= 1.0)

    def test_evaluate_missing_model(self):
        with self.assertRaises(CommandError):
            self.call('evaluate', '--model', str(self.out / 'absent.dmhm'), '--out', str(self.out))

    def test_ablate_gamma_sweep(self):
        self.call('ablate', '--gamma-sweep', '--max-iter', '10', '--code-length', '8', '--name', 'first',
                  '--out', str(self.out))
        self.call('ablate', '--gamma-sweep', '--max-iter', '10', '--code-length', '8', '--name', 'second',
                  '--out', str(self.out))
        report = ReportRepository.load(self.out / 'first.json')
        self.assertEqual(sum(1 for row in report['rows'] if row['parameter'] == 'gamma'), 7)
        self.assertEqual((self.out / 'first.json').read_bytes(), (self.out / 'second.json').read_bytes())

    def test_gradcheck_passes(self):
        output = self.call('gradcheck', '--instances', '4', '--report', str(self.out / 'grad.json'))
        self.assertIn('gradient checks passed', output)
        report = ReportRepository.load(self.out / 'grad.json')
        self.assertTrue(report['passed'])
        self.assertEqual(len(report['rows']), 16)

    def test_gradcheck_detects_wrong_sign(self):
        def flipped(view, params, B, regularizer=None):
            return -grad_bias(view, params, B, regularizer)

        with mock.patch.object(gradcheck.Command, 'service', GradientCheckService(bias_gradient=flipped)):
            with self.assertRaises(CommandError):
                self.call('gradcheck', '--instances', '3')

    def test_propcheck_reports_equilateral_angles(self):
        output = self.call('propcheck', '--report', str(self.out / 'prop.json'))
        self.assertIn('equilateral_angles', output)
        self.assertIn('checks passed', output)
        report = ReportRepository.load(self.out / 'prop.json')
        self.assertTrue(report['passed'])
        self.assertEqual(report['failures'], 0)

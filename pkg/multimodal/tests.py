import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import (
    ArtifactNotFoundException,
    ConfigurationException,
    ContractViolationException,
    DatasetFormatException,
    EmptyLabelException,
    RowCountMismatchException,
)
from hashing.models import ViewMatrix
from .factories import generate_synthetic, synthetic_factory
from .models import DatasetSplit, MultimodalDataset, SyntheticSpec
from .repositories import MatrixFileRepository
from .services import (
    DatasetPaths,
    auto_beta,
    ground_truth_from_labels,
    label_relevance,
    label_view,
    load_dataset,
    rescale_views,
    save_dataset,
    split_dataset,
)


def _small_dataset(n=10, split=None):
    rng = np.random.default_rng(3)
    labels = np.eye(2, dtype=np.uint8)[np.arange(n) % 2]
    views = [ViewMatrix(rng.normal(size=(n, 3)), 'image'), ViewMatrix(rng.random((n, 4)), 'text'), label_view(labels)]
    return MultimodalDataset(views, labels, split=split)


class MatrixFileRepositoryTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_round_trip_is_bit_exact_for_float32_values(self):
        matrix = np.random.default_rng(0).normal(size=(7, 5)).astype(np.float32).astype(np.float64)
        path = MatrixFileRepository.save(self.root / 'm.dmh', matrix)
        np.testing.assert_array_equal(MatrixFileRepository.load(path), matrix)

    def test_header_layout(self):
        path = MatrixFileRepository.save(self.root / 'm.dmh', np.array([[1.0, 2.0, 3.0]]))
        raw = path.read_bytes()
        self.assertEqual(raw[:4], b'DMH1')
        self.assertEqual(raw[4:8], (1).to_bytes(4, 'little'))
        self.assertEqual(raw[8:12], (3).to_bytes(4, 'little'))
        self.assertEqual(len(raw), 12 + 3 * 4)
        self.assertEqual(raw[12:16], np.array([1.0], dtype='<f4').tobytes())

    def test_bad_magic(self):
        path = self.root / 'bad.dmh'
        path.write_bytes(b'XXXX' + bytes(8))
        with self.assertRaises(DatasetFormatException):
            MatrixFileRepository.load(path)

    def test_truncated_payload(self):
        path = MatrixFileRepository.save(self.root / 'm.dmh', np.ones((3, 3)))
        path.write_bytes(path.read_bytes()[:-4])
        with self.assertRaises(DatasetFormatException):
            MatrixFileRepository.load(path)

    def test_trailing_bytes(self):
        path = MatrixFileRepository.save(self.root / 'm.dmh', np.ones((2, 2)))
        path.write_bytes(path.read_bytes() + b'\x00')
        with self.assertRaises(DatasetFormatException):
            MatrixFileRepository.load(path)

    def test_missing_file(self):
        with self.assertRaises(ArtifactNotFoundException):
            MatrixFileRepository.load(self.root / 'absent.dmh')


class LoadDatasetTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_save_then_load_reproduces_matrices(self):
        dataset = generate_synthetic(SyntheticSpec(n_per_class=5, n_classes=3, dims=(4, 6), seed=1))
        loaded = load_dataset(save_dataset(dataset, self.root))
        self.assertEqual([v.view_id for v in loaded.views], [v.view_id for v in dataset.views])
        for original, restored in zip(dataset.views, loaded.views):
            np.testing.assert_array_equal(original.data, restored.data)
        np.testing.assert_array_equal(loaded.labels, dataset.labels)
        self.assertEqual(loaded.dropped_rows, 0)

    def test_label_empty_row_is_dropped_and_counted(self):
        labels = np.array([[1, 0], [0, 0], [0, 1], [1, 1]], dtype=float)
        features = np.arange(8, dtype=float).reshape(4, 2)
        paths = DatasetPaths(
            [MatrixFileRepository.save(self.root / 'x.dmh', features)],
            MatrixFileRepository.save(self.root / 'labels.dmh', labels),
        )
        dataset = load_dataset(paths)
        self.assertEqual(dataset.n, 3)
        self.assertEqual(dataset.dropped_rows, 1)
        np.testing.assert_array_equal(dataset.view('x').data, features[[0, 2, 3]])

    def test_row_count_mismatch(self):
        paths = DatasetPaths(
            [MatrixFileRepository.save(self.root / 'a.dmh', np.ones((4, 2))),
             MatrixFileRepository.save(self.root / 'b.dmh', np.ones((5, 2)))],
            MatrixFileRepository.save(self.root / 'labels.dmh', np.ones((4, 1))),
        )
        with self.assertRaises(RowCountMismatchException):
            load_dataset(paths)

    def test_all_rows_unlabeled(self):
        paths = DatasetPaths(
            [MatrixFileRepository.save(self.root / 'a.dmh', np.ones((3, 2)))],
            MatrixFileRepository.save(self.root / 'labels.dmh', np.zeros((3, 2))),
        )
        with self.assertRaises(EmptyLabelException):
            load_dataset(paths)

    def test_label_view_can_be_omitted(self):
        dataset = generate_synthetic(SyntheticSpec(n_per_class=3, n_classes=2, dims=(2,)))
        loaded = load_dataset(save_dataset(dataset, self.root), include_label_view=False)
        self.assertIsNone(loaded.label_view)
        self.assertEqual(len(loaded.views), 1)


class MultimodalDatasetTests(SimpleTestCase):

    def test_unsplit_dataset_trains_on_everything(self):
        dataset = _small_dataset()
        np.testing.assert_array_equal(dataset.split.train, np.arange(10))
        self.assertEqual(dataset.split.test.size, 0)

    def test_row_count_mismatch(self):
        labels = np.ones((3, 1))
        with self.assertRaises(RowCountMismatchException):
            MultimodalDataset([ViewMatrix(np.ones((4, 2)))], labels)

    def test_unlabeled_row_rejected(self):
        with self.assertRaises(EmptyLabelException):
            MultimodalDataset([ViewMatrix(np.ones((2, 2)))], np.array([[1], [0]]))

    def test_overlapping_split_rejected(self):
        with self.assertRaises(ContractViolationException):
            DatasetSplit(train=[0, 1, 2], test=[2, 3])

    def test_incomplete_split_rejected(self):
        with self.assertRaises(ContractViolationException):
            _small_dataset(split=DatasetSplit(train=[0, 1], test=[2]))

    def test_feature_and_label_views(self):
        dataset = _small_dataset()
        self.assertEqual([v.view_id for v in dataset.feature_views], ['image', 'text'])
        self.assertTrue(dataset.label_view.is_label_view)

    def test_unknown_view(self):
        with self.assertRaises(ConfigurationException):
            _small_dataset().view('audio')


class RescaleViewsTests(SimpleTestCase):

    def test_unit_beta_is_identity(self):
        dataset = _small_dataset()
        rescaled = rescale_views(dataset, [1.0, 1.0, 1.0])
        for before, after in zip(dataset.views, rescaled.views):
            np.testing.assert_array_equal(before.data, after.data)

    def test_binary_label_view_scaled_to_255(self):
        rescaled = rescale_views(_small_dataset(), [1.0, 1.0, 255.0])
        self.assertEqual(set(np.unique(rescaled.label_view.data)), {0.0, 255.0})

    def test_doubling_doubles_the_peak(self):
        dataset = _small_dataset()
        rescaled = rescale_views(dataset, [2.0, 2.0, 2.0])
        for before, after in zip(dataset.views, rescaled.views):
            self.assertEqual(np.abs(after.data).max(), 2 * np.abs(before.data).max())

    def test_non_positive_beta(self):
        with self.assertRaises(ConfigurationException):
            rescale_views(_small_dataset(), [1.0, 0.0, 1.0])

    def test_one_beta_per_view(self):
        with self.assertRaises(ContractViolationException):
            rescale_views(_small_dataset(), [1.0])

    def test_auto_beta_maps_peak_to_target(self):
        view = ViewMatrix(np.array([[0.5, -2.0], [1.0, 0.0]]))
        beta = auto_beta(view)
        self.assertEqual(beta, 255.0 / 2.0)
        self.assertEqual(np.abs(view.scaled(beta).data).max(), 255.0)

    def test_auto_beta_of_zero_view(self):
        self.assertEqual(auto_beta(ViewMatrix(np.zeros((2, 2)))), 1.0)


class SplitDatasetTests(SimpleTestCase):

    def test_five_percent_of_hundred(self):
        dataset = split_dataset(_small_dataset(n=100), 0.05, seed=0)
        self.assertEqual(dataset.split.test.size, 5)
        self.assertEqual(dataset.split.train.size, 95)

    def test_partition_covers_every_row(self):
        dataset = split_dataset(_small_dataset(n=37), 0.3, seed=4)
        rows = np.sort(np.concatenate([dataset.split.train, dataset.split.test]))
        np.testing.assert_array_equal(rows, np.arange(37))

    def test_same_seed_same_split(self):
        a = split_dataset(_small_dataset(n=50), 0.2, seed=9)
        b = split_dataset(_small_dataset(n=50), 0.2, seed=9)
        np.testing.assert_array_equal(a.split.test, b.split.test)

    def test_different_seed_different_split(self):
        a = split_dataset(_small_dataset(n=50), 0.2, seed=1)
        b = split_dataset(_small_dataset(n=50), 0.2, seed=2)
        self.assertFalse(np.array_equal(a.split.test, b.split.test))

    def test_fraction_out_of_range(self):
        for fraction in (0.0, 1.0, -0.1, 1.5):
            with self.assertRaises(ConfigurationException):
                split_dataset(_small_dataset(), fraction, seed=0)

    def test_train_views_take_training_rows(self):
        dataset = split_dataset(_small_dataset(n=20), 0.25, seed=0)
        self.assertEqual(dataset.train_views()[0].n, 15)
        self.assertEqual(dataset.split.test.size, 5)


class GroundTruthTests(SimpleTestCase):

    def test_identical_one_hot_labels_are_mutually_relevant(self):
        relevance = label_relevance([[0, 1, 0]], [[0, 1, 0]])
        self.assertTrue(relevance[0, 0])

    def test_disjoint_labels(self):
        self.assertFalse(label_relevance([[1, 0, 0]], [[0, 1, 1]])[0, 0])

    def test_single_shared_category(self):
        self.assertTrue(label_relevance([[1, 1, 0]], [[0, 1, 1]])[0, 0])

    def test_relation_is_symmetric(self):
        labels = (np.random.default_rng(5).random((12, 4)) < 0.3).astype(int)
        relevance = label_relevance(labels, labels)
        np.testing.assert_array_equal(relevance, relevance.T)

    def test_queries_are_test_rows_and_database_is_training_rows(self):
        labels = np.array([[1, 0], [0, 1], [1, 0], [0, 1], [1, 1]])
        dataset = MultimodalDataset(
            [ViewMatrix(np.zeros((5, 1)))], labels,
            split=DatasetSplit(train=[0, 1, 2], test=[3, 4]),
        )
        truth = ground_truth_from_labels(dataset)
        self.assertEqual((truth.n_queries, truth.n_database), (2, 3))
        np.testing.assert_array_equal(truth.relevant(0), [1])
        np.testing.assert_array_equal(truth.relevant(1), [0, 1, 2])


class SyntheticGeneratorTests(SimpleTestCase):

    def test_shapes_and_class_major_order(self):
        dataset = generate_synthetic(SyntheticSpec(n_per_class=5, n_classes=3, dims=(4, 6)))
        self.assertEqual(dataset.n, 15)
        self.assertEqual([v.d for v in dataset.feature_views], [4, 6])
        np.testing.assert_array_equal(dataset.labels.argmax(axis=1), np.repeat(np.arange(3), 5))
        np.testing.assert_array_equal(dataset.labels.sum(axis=1), np.ones(15))

    def test_zero_noise_makes_classes_identical(self):
        dataset = generate_synthetic(SyntheticSpec(n_per_class=4, n_classes=2, dims=(3, 5), noise_sigma=0.0))
        for view in dataset.feature_views:
            for start in (0, 4):
                block = view.data[start:start + 4]
                np.testing.assert_array_equal(block, np.broadcast_to(block[0], block.shape))

    def test_seeded_generation_is_deterministic(self):
        spec = SyntheticSpec(seed=11)
        a, b = generate_synthetic(spec), generate_synthetic(spec)
        for left, right in zip(a.views, b.views):
            np.testing.assert_array_equal(left.data, right.data)

    def test_views_use_independent_centroids(self):
        dataset = generate_synthetic(SyntheticSpec(dims=(10, 10), noise_sigma=0.0))
        self.assertFalse(np.array_equal(dataset.views[0].data, dataset.views[1].data))

    def test_classes_are_linearly_separable(self):
        dataset = generate_synthetic(SyntheticSpec(n_per_class=50, n_classes=4, dims=(10, 12), noise_sigma=0.1))
        classes = dataset.labels.argmax(axis=1)
        for view in dataset.feature_views:
            design = np.hstack([view.data, np.ones((view.n, 1))])
            weights, *_ = np.linalg.lstsq(design, dataset.labels.astype(float), rcond=None)
            accuracy = np.mean((design @ weights).argmax(axis=1) == classes)
            self.assertGreater(accuracy, 0.95)

    def test_invalid_spec(self):
        with self.assertRaises(ConfigurationException):
            SyntheticSpec(n_per_class=0)
        with self.assertRaises(ConfigurationException):
            SyntheticSpec(noise_sigma=-1.0)

    def test_unknown_generator_kind(self):
        with self.assertRaises(ConfigurationException):
            synthetic_factory.generate(SyntheticSpec(), kind='uniform')

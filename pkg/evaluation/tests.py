import numpy as np
from django.test import SimpleTestCase

from codes.services import encode_view, pack
from core.exceptions import ContractViolationException, EmptyEvaluationException, UndefinedAveragePrecisionException
from hashing.models import ViewHyper, ViewMatrix, ViewParams
from hashing.services import mcr_value, sigmoid_embed
from multimodal.factories import generate_synthetic
from multimodal.models import DatasetSplit, MultimodalDataset, SyntheticSpec
from multimodal.services import auto_beta, label_view, split_dataset
from training.models import TrainConfig
from training.services import train
from .models import EvalReport, GroundTruth
from .serializers import EvalReportSerializer, EvalSummarySerializer
from .strategies.retrieval import HammingRankingStrategy
from .services import (
    Direction,
    average_precision,
    decorrelation,
    embedding_correlation,
    encode_direction,
    evaluate_cross_modal,
    lookup_f1,
    mean_average_precision,
    per_query_average_precision,
)


def _codes_at_distances(distances, c):
    """Database codes whose distance to the all-zero query equals the given values."""
    bits = np.zeros((len(distances), c), dtype=np.uint8)
    for m, distance in enumerate(distances):
        bits[m, :distance] = 1
    return pack(np.zeros((1, c), dtype=np.uint8)), pack(bits)


def _naive_ap(query_bits, db_bits, relevant, R):
    distances = [int(np.sum(query_bits != row)) for row in db_bits]
    ranked = sorted(range(len(distances)), key=lambda m: (distances[m], m))[:R]
    hits, total = 0, 0.0
    for r, m in enumerate(ranked, start=1):
        if m in relevant:
            hits += 1
            total += hits / r
    return total / hits if hits else 0.0


def _naive_f1(query_bits, db_bits, relevant, radius):
    retrieved = {m for m, row in enumerate(db_bits) if np.sum(query_bits != row) <= radius}
    if not retrieved:
        return 0.0
    hits = len(retrieved & relevant)
    if not hits:
        return 0.0
    precision, recall = hits / len(retrieved), hits / len(relevant)
    return 2 * precision * recall / (precision + recall)


class AveragePrecisionTests(SimpleTestCase):

    def test_all_retrieved_relevant(self):
        query, db = _codes_at_distances([0, 1, 2, 3], 4)
        self.assertEqual(average_precision(query, db, [0, 1, 2], R=3), 1.0)

    def test_nothing_relevant_in_cutoff(self):
        query, db = _codes_at_distances([0, 1, 2, 3], 4)
        self.assertEqual(average_precision(query, db, [3], R=2), 0.0)

    def test_hand_computed_pattern(self):
        query, db = _codes_at_distances([0, 1, 2], 3)
        self.assertAlmostEqual(average_precision(query, db, {0, 2}, R=3), 5 / 6, places=15)

    def test_matches_naive_oracle_over_permutations(self):
        rng = np.random.default_rng(0)
        base = [0, 1, 2, 3, 4, 5]
        for _ in range(30):
            distances = rng.permutation(base)
            relevant = set(rng.choice(6, size=rng.integers(1, 6), replace=False).tolist())
            query, db = _codes_at_distances(distances, 6)
            for R in (1, 3, 6):
                expected = _naive_ap(np.zeros(6), [np.r_[np.ones(d), np.zeros(6 - d)] for d in distances], relevant, R)
                self.assertAlmostEqual(average_precision(query, db, relevant, R=R), expected, places=12)

    def test_ties_resolved_by_database_index(self):
        query, db = _codes_at_distances([1, 1, 1], 3)
        self.assertEqual(average_precision(query, db, [0], R=3), 1.0)
        self.assertEqual(average_precision(query, db, [2], R=3), 1 / 3)

    def test_full_cutoff_with_everything_relevant(self):
        query, db = _codes_at_distances([3, 0, 2, 1], 4)
        self.assertEqual(average_precision(query, db, [0, 1, 2, 3]), 1.0)

    def test_boolean_mask_accepted(self):
        query, db = _codes_at_distances([0, 1, 2], 3)
        self.assertAlmostEqual(average_precision(query, db, np.array([True, False, True])), 5 / 6)

    def test_empty_relevant_set(self):
        query, db = _codes_at_distances([0, 1], 2)
        with self.assertRaises(UndefinedAveragePrecisionException):
            average_precision(query, db, [])

    def test_cutoff_out_of_range(self):
        query, db = _codes_at_distances([0, 1], 2)
        with self.assertRaises(ContractViolationException):
            average_precision(query, db, [0], R=3)


class MeanAveragePrecisionTests(SimpleTestCase):

    def test_single_query_equals_its_ap(self):
        query, db = _codes_at_distances([0, 1, 2], 3)
        truth = GroundTruth.from_sets([{0, 2}], 3)
        self.assertAlmostEqual(mean_average_precision(query, db, truth), 5 / 6)

    def test_arithmetic_mean(self):
        _, db = _codes_at_distances([0, 2], 2)
        queries = pack(np.zeros((2, 2), dtype=np.uint8))
        truth = GroundTruth.from_sets([{0}, {1}], 2)
        self.assertEqual(mean_average_precision(queries, db, truth, R=1), 0.5)

    def test_random_instance_matches_naive_oracle(self):
        rng = np.random.default_rng(1)
        query_bits = rng.integers(0, 2, size=(5, 8), dtype=np.uint8)
        db_bits = rng.integers(0, 2, size=(20, 8), dtype=np.uint8)
        relevant = [set(rng.choice(20, size=rng.integers(1, 8), replace=False).tolist()) for _ in range(5)]
        truth = GroundTruth.from_sets(relevant, 20)
        for R in (5, 20):
            expected = np.mean([_naive_ap(query_bits[q], db_bits, relevant[q], R) for q in range(5)])
            self.assertAlmostEqual(mean_average_precision(pack(query_bits), pack(db_bits), truth, R=R), expected, places=12)

    def test_queries_without_relevant_items_are_excluded(self):
        query_bits = np.zeros((2, 3), dtype=np.uint8)
        _, db = _codes_at_distances([0, 1, 2], 3)
        truth = GroundTruth.from_sets([{0}, set()], 3)
        scores, excluded = per_query_average_precision(pack(query_bits), db, truth)
        self.assertEqual((scores, excluded), ([1.0], 1))

    def test_no_valid_query(self):
        query, db = _codes_at_distances([0], 1)
        with self.assertRaises(EmptyEvaluationException):
            mean_average_precision(query, db, GroundTruth.from_sets([set()], 1))

    def test_invariant_to_joint_database_permutation(self):
        rng = np.random.default_rng(2)
        distances = rng.permutation(13)
        query, db = _codes_at_distances(distances, 16)
        truth = GroundTruth.from_sets([set(rng.choice(13, size=5, replace=False).tolist())], 13)
        order = rng.permutation(13)
        self.assertAlmostEqual(
            mean_average_precision(query, db, truth),
            mean_average_precision(query, db.take(order), truth.permute_database(order)),
            places=15,
        )

    def test_ground_truth_rejects_bad_indices(self):
        with self.assertRaises(ContractViolationException):
            GroundTruth.from_sets([{5}], 3)


class LookupF1Tests(SimpleTestCase):

    def test_retrieved_equals_relevant(self):
        query, db = _codes_at_distances([0, 1, 3, 4], 4)
        scores = lookup_f1(query, db, GroundTruth.from_sets([{0, 1}], 4), radius=2)
        self.assertEqual((scores.precision, scores.recall, scores.f1), (1.0, 1.0, 1.0))

    def test_empty_retrieved_set_scores_zero(self):
        query, db = _codes_at_distances([3, 4], 4)
        scores = lookup_f1(query, db, GroundTruth.from_sets([{0}], 2), radius=2)
        self.assertEqual(scores.f1, 0.0)
        self.assertEqual(scores.valid_queries, 1)

    def test_radius_equal_to_code_length_retrieves_everything(self):
        rng = np.random.default_rng(3)
        queries = pack(rng.integers(0, 2, size=(4, 10), dtype=np.uint8))
        db = pack(rng.integers(0, 2, size=(15, 10), dtype=np.uint8))
        relevant = [set(rng.choice(15, size=k, replace=False).tolist()) for k in (1, 3, 5, 15)]
        scores = lookup_f1(queries, db, GroundTruth.from_sets(relevant, 15), radius=10)
        self.assertAlmostEqual(scores.precision, np.mean([len(r) / 15 for r in relevant]))
        self.assertEqual(scores.recall, 1.0)

    def test_matches_naive_enumeration(self):
        rng = np.random.default_rng(4)
        query_bits = rng.integers(0, 2, size=(6, 5), dtype=np.uint8)
        db_bits = rng.integers(0, 2, size=(12, 5), dtype=np.uint8)
        relevant = [set(rng.choice(12, size=rng.integers(1, 6), replace=False).tolist()) for _ in range(6)]
        scores = lookup_f1(pack(query_bits), pack(db_bits), GroundTruth.from_sets(relevant, 12), radius=2)
        expected = np.mean([_naive_f1(query_bits[q], db_bits, relevant[q], 2) for q in range(6)])
        self.assertAlmostEqual(scores.f1, expected, places=12)

    def test_scores_lie_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for radius in range(0, 7):
            queries = pack(rng.integers(0, 2, size=(3, 6), dtype=np.uint8))
            db = pack(rng.integers(0, 2, size=(9, 6), dtype=np.uint8))
            truth = GroundTruth.from_sets([{0, 1}, {2}, {3, 4, 5}], 9)
            scores = lookup_f1(queries, db, truth, radius)
            for value in (scores.precision, scores.recall, scores.f1):
                self.assertTrue(0.0 <= value <= 1.0)

    def test_negative_radius(self):
        query, db = _codes_at_distances([0], 2)
        with self.assertRaises(ContractViolationException):
            lookup_f1(query, db, GroundTruth.from_sets([{0}], 1), radius=-1)

    def test_invariant_to_joint_database_permutation(self):
        rng = np.random.default_rng(6)
        queries = pack(rng.integers(0, 2, size=(4, 8), dtype=np.uint8))
        db = pack(rng.integers(0, 2, size=(10, 8), dtype=np.uint8))
        truth = GroundTruth.from_sets([{0, 3}, {1}, {2, 5, 9}, {4}], 10)
        order = rng.permutation(10)
        self.assertAlmostEqual(
            lookup_f1(queries, db, truth, 3).f1,
            lookup_f1(queries, db.take(order), truth.permute_database(order), 3).f1,
            places=15,
        )


class CrossModalTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(7)
        labels = np.eye(3, dtype=np.uint8)[np.repeat(np.arange(3), 6)]
        shared = rng.normal(size=(18, 4))
        self.dataset = MultimodalDataset(
            [ViewMatrix(shared, 'image'), ViewMatrix(shared.copy(), 'text'), label_view(labels)],
            labels,
            split=DatasetSplit(train=np.arange(0, 18, 2), test=np.arange(1, 18, 2)),
        )
        W, v = rng.normal(size=(4, 12)), rng.normal(size=12)
        self.params = {'image': ViewParams(W, v), 'text': ViewParams(W.copy(), v.copy())}

    def test_identical_views_match_self_retrieval(self):
        cross = evaluate_cross_modal(self.params, self.dataset, Direction('image', 'text'))
        unimodal = evaluate_cross_modal(self.params, self.dataset, Direction('image', 'image'))
        self.assertEqual(cross.map, unimodal.map)
        self.assertEqual(cross.f1, unimodal.f1)

    def test_reversing_direction_exchanges_roles(self):
        direction = Direction('image', 'text')
        queries, _ = encode_direction(self.params, self.dataset, direction)
        _, db = encode_direction(self.params, self.dataset, direction.reversed())
        image = self.dataset.view('image')
        self.assertEqual(queries, encode_view(image.take(self.dataset.split.test), self.params['image']))
        self.assertEqual(db, encode_view(image.take(self.dataset.split.train), self.params['image']))
        self.assertEqual(direction.reversed().task, 'text->image')

    def test_report_fields(self):
        report = evaluate_cross_modal(self.params, self.dataset, Direction('image', 'text'), radius=3)
        self.assertEqual((report.code_length, report.R, report.radius), (12, 9, 3))
        self.assertEqual(report.valid_queries + report.excluded_queries, 9)
        self.assertEqual(len(report.per_query_ap), report.valid_queries)
        self.assertAlmostEqual(report.map, np.mean(report.per_query_ap))

    def test_thread_count_does_not_change_the_report(self):
        direction = Direction('image', 'text')
        single = evaluate_cross_modal(self.params, self.dataset, direction)
        threaded = evaluate_cross_modal(self.params, self.dataset, direction, workers=4)
        self.assertEqual(single.per_query_ap, threaded.per_query_ap)

    def test_missing_parameters(self):
        with self.assertRaises(ContractViolationException):
            evaluate_cross_modal({'image': self.params['image']}, self.dataset, Direction('image', 'text'))

    def test_trained_model_retrieves_across_modalities(self):
        dataset = split_dataset(generate_synthetic(SyntheticSpec(seed=0)), 0.2, seed=0)
        hypers = [
            ViewHyper(alpha=10.0, beta=255.0) if view.is_label_view else ViewHyper(alpha=1.0, beta=auto_beta(view))
            for view in dataset.views
        ]
        result = train(dataset.train_views(), TrainConfig(code_length=32), hypers)
        params = dict(zip(result.view_ids, result.params))
        for direction in (Direction('view0', 'view1'), Direction('view1', 'view0')):
            self.assertGreater(evaluate_cross_modal(params, dataset, direction).map, 0.9)


class DecorrelationTests(SimpleTestCase):

    def test_identical_columns(self):
        column = np.array([0, 1, 1, 0, 1])
        self.assertAlmostEqual(decorrelation(np.stack([column, column], axis=1)), 1.0)

    def test_uncorrelated_columns(self):
        bits = np.array([[0, 0], [0, 1], [1, 0], [1, 1]])
        self.assertAlmostEqual(decorrelation(bits), 0.0)

    def test_constant_columns_are_skipped(self):
        bits = np.array([[0, 0, 1], [0, 1, 1], [1, 0, 1], [1, 1, 1]])
        self.assertAlmostEqual(decorrelation(bits), 0.0)

    def test_fewer_than_two_varying_columns(self):
        self.assertEqual(decorrelation(np.array([[0, 1], [1, 1]])), 0.0)


class EmbeddingCorrelationTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(3)
        labels = np.eye(4, dtype=np.uint8)[np.arange(20) % 4]
        self.views = [
            ViewMatrix(rng.normal(size=(20, 3)), 'a'),
            ViewMatrix(rng.normal(size=(20, 2)), 'b'),
            label_view(labels),
        ]
        self.params = [ViewParams(rng.normal(size=(d, 6)), rng.normal(size=6)) for d in (3, 2, 4)]

    def test_mean_over_feature_views(self):
        expected = np.mean([mcr_value(sigmoid_embed(view, p)) for view, p in zip(self.views[:2], self.params[:2])])
        self.assertAlmostEqual(embedding_correlation(self.views, self.params), expected, places=12)

    def test_label_view_alone(self):
        self.assertEqual(embedding_correlation(self.views[2:], self.params[2:]), 0.0)

    def test_lower_bias_lowers_correlation(self):
        shifted = [p.with_weights(p.W, p.v - 1.0) for p in self.params]
        self.assertLess(embedding_correlation(self.views, shifted), embedding_correlation(self.views, self.params))


class EvalReportTests(SimpleTestCase):

    def test_metric_range_enforced(self):
        with self.assertRaises(ContractViolationException):
            EvalReport(task='a->b', map=1.5, f1=0.0, radius=2)

    def test_serialized_key_order(self):
        report = EvalReport(task='a->b', map=0.5, f1=0.25, radius=2, per_query_ap=[0.5], code_length=16, R=10)
        self.assertEqual(list(EvalReportSerializer(report).data)[:3], ['task', 'code_length', 'map'])
        self.assertNotIn('per_query_ap', EvalSummarySerializer(report).data)

    def test_timings_are_not_serialized(self):
        report = EvalReport(task='a->b', map=0.5, f1=0.25, radius=2, mean_query_seconds=0.125)
        self.assertNotIn('mean_query_seconds', EvalReportSerializer(report).data)


class HammingRankingStrategyTests(SimpleTestCase):

    def test_ties_keep_database_order_and_cutoff(self):
        ranking = HammingRankingStrategy()
        np.testing.assert_array_equal(ranking.execute(np.array([2, 0, 1, 0])), [1, 3, 2, 0])
        np.testing.assert_array_equal(ranking.execute(np.array([2, 0, 1, 0]), cutoff=2), [1, 3])

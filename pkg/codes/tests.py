import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ArtifactNotFoundException, ContractViolationException, DatasetFormatException, InputValidationException
from hashing.models import ViewMatrix, ViewParams
from hashing.services import update_code_matrix
from .models import PackedCodes
from .repositories import PackedCodesRepository
from .services import (
    distances_to_all,
    encode_bits,
    encode_view,
    hamming_distance,
    pack,
    rank_by_distance,
    unpack,
)


CODE_LENGTHS = (1, 7, 8, 9, 16, 31, 32, 33, 64, 96, 128)


def _random_bits(n, c, seed=0):
    return np.random.default_rng(seed).integers(0, 2, size=(n, c), dtype=np.uint8)


class PackTests(SimpleTestCase):

    def test_round_trip_for_every_code_length(self):
        for c in CODE_LENGTHS:
            with self.subTest(c=c):
                bits = _random_bits(13, c, seed=c)
                np.testing.assert_array_equal(unpack(pack(bits)).bits, bits)

    def test_padding_bits_are_zero(self):
        for c in (1, 7, 9, 33):
            with self.subTest(c=c):
                packed = pack(np.ones((4, c), dtype=np.uint8))
                spare = packed.words.shape[1] * 8 - c
                self.assertTrue(np.all(packed.words[:, -1] >> (8 - spare) == 0))

    def test_lsb_first_layout(self):
        bits = np.zeros((1, 10), dtype=np.uint8)
        bits[0, [0, 9]] = 1
        np.testing.assert_array_equal(pack(bits).words, [[0b00000001, 0b00000010]])

    def test_non_zero_padding_rejected(self):
        with self.assertRaises(InputValidationException):
            PackedCodes(np.array([[0b10000000]], dtype=np.uint8), c=7)

    def test_word_count_must_fit_code_length(self):
        with self.assertRaises(ContractViolationException):
            PackedCodes(np.zeros((2, 2), dtype=np.uint8), c=8)


class HammingDistanceTests(SimpleTestCase):

    def test_identical_codes(self):
        code = pack(_random_bits(1, 32))
        self.assertEqual(hamming_distance(code, code), 0)

    def test_complement(self):
        for c in (16, 33, 128):
            bits = _random_bits(1, c, seed=c)
            self.assertEqual(hamming_distance(pack(bits), pack(1 - bits)), c)

    def test_matches_per_bit_comparison(self):
        rng = np.random.default_rng(1)
        for c in (16, 32, 64, 96, 128):
            for _ in range(200):
                a, b = rng.integers(0, 2, size=(2, 1, c), dtype=np.uint8)
                self.assertEqual(hamming_distance(pack(a), pack(b)), int(np.sum(a != b)))

    def test_metric_axioms(self):
        rng = np.random.default_rng(2)
        for _ in range(200):
            a, b, c = (pack(bits) for bits in rng.integers(0, 2, size=(3, 1, 24), dtype=np.uint8))
            ab, ba = hamming_distance(a, b), hamming_distance(b, a)
            self.assertEqual(ab, ba)
            self.assertEqual(ab == 0, a == b)
            self.assertLessEqual(hamming_distance(a, c), ab + hamming_distance(b, c))

    def test_length_mismatch(self):
        with self.assertRaises(ContractViolationException):
            hamming_distance(pack(_random_bits(1, 16)), pack(_random_bits(1, 17)))

    def test_multi_code_argument_rejected(self):
        with self.assertRaises(ContractViolationException):
            hamming_distance(pack(_random_bits(2, 8)), pack(_random_bits(1, 8)))


class DistancesToAllTests(SimpleTestCase):

    def test_matches_row_loop(self):
        db = pack(_random_bits(100, 32, seed=3))
        query = pack(_random_bits(1, 32, seed=4))
        expected = [hamming_distance(query, db.row(m)) for m in range(db.n)]
        np.testing.assert_array_equal(distances_to_all(query, db), expected)

    def test_query_in_database_reports_zero(self):
        db = pack(_random_bits(10, 20, seed=5))
        self.assertEqual(distances_to_all(db.row(6), db)[6], 0)

    def test_single_item_database(self):
        a, b = pack(_random_bits(1, 12, seed=6)), pack(_random_bits(1, 12, seed=7))
        np.testing.assert_array_equal(distances_to_all(a, b), [hamming_distance(a, b)])

    def test_ranking_breaks_ties_by_index(self):
        db = pack(np.array([[1, 1, 0], [0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=np.uint8))
        query = pack(np.array([[0, 0, 0]], dtype=np.uint8))
        np.testing.assert_array_equal(rank_by_distance(distances_to_all(query, db)), [1, 2, 3, 0])


class EncodeViewTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(10)
        self.view = ViewMatrix(rng.normal(size=(30, 5)))
        self.params = ViewParams(rng.normal(size=(5, 12)), rng.normal(size=12), gamma=0.0)

    def test_zero_parameters_give_all_ones(self):
        params = ViewParams(np.zeros((5, 12)), np.zeros(12))
        np.testing.assert_array_equal(encode_bits(self.view, params).bits, np.ones((30, 12)))

    def test_negative_pre_activation_gives_all_zeros(self):
        view = ViewMatrix(np.abs(self.view.data))
        params = ViewParams(-np.abs(self.params.W), -np.ones(12))
        np.testing.assert_array_equal(encode_bits(view, params).bits, np.zeros((30, 12)))

    def test_single_view_encoding_matches_code_update(self):
        np.testing.assert_array_equal(
            encode_bits(self.view, self.params).bits,
            update_code_matrix([self.view], [self.params]).bits,
        )

    def test_invariant_to_positive_rescaling(self):
        reference = encode_view(self.view, self.params)
        for factor in (0.01, 3.0, 250.0):
            scaled = self.params.with_weights(self.params.W * factor, self.params.v * factor)
            self.assertEqual(encode_view(self.view, scaled), reference)

    def test_dimension_mismatch(self):
        with self.assertRaises(ContractViolationException):
            encode_view(ViewMatrix(np.ones((3, 4))), self.params)


class PackedCodesRepositoryTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_save_and_load(self):
        codes = pack(_random_bits(17, 33))
        loaded = PackedCodesRepository.load(PackedCodesRepository.save(self.root / 'c.dmhc', codes))
        self.assertEqual(loaded, codes)

    def test_file_layout(self):
        path = PackedCodesRepository.save(self.root / 'c.dmhc', pack(np.ones((2, 9), dtype=np.uint8)))
        raw = path.read_bytes()
        self.assertEqual(raw[:4], b'DMHC')
        self.assertEqual(raw[4:12], (2).to_bytes(4, 'little') + (9).to_bytes(4, 'little'))
        self.assertEqual(raw[12:], bytes([0xFF, 0x01, 0xFF, 0x01]))

    def test_wrong_size(self):
        path = PackedCodesRepository.save(self.root / 'c.dmhc', pack(_random_bits(3, 16)))
        path.write_bytes(path.read_bytes()[:-1])
        with self.assertRaises(DatasetFormatException):
            PackedCodesRepository.load(path)

    def test_dirty_padding(self):
        path = self.root / 'c.dmhc'
        path.write_bytes(b'DMHC' + (1).to_bytes(4, 'little') + (4).to_bytes(4, 'little') + bytes([0xF0]))
        with self.assertRaises(DatasetFormatException):
            PackedCodesRepository.load(path)

    def test_missing(self):
        with self.assertRaises(ArtifactNotFoundException):
            PackedCodesRepository.load(self.root / 'absent.dmhc')

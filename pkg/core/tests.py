import numpy as np
from django.test import SimpleTestCase

from .design_patterns import BaseBuilder, BaseFactory
from .exceptions import (
    ConfigurationException,
    ContractViolationException,
    HashingToolkitException,
    InputValidationException,
    TrainingDivergedException,
)
from .utils import (
    as_finite_matrix,
    as_finite_vector,
    expand_per_view,
    format_duration,
    relative_change,
)


class FiniteArrayTests(SimpleTestCase):

    def test_matrix_is_float64(self):
        array = as_finite_matrix([[1, 2], [3, 4]])
        self.assertEqual(array.dtype, np.float64)
        self.assertEqual(array.shape, (2, 2))

    def test_matrix_rejects_wrong_rank(self):
        with self.assertRaises(ContractViolationException):
            as_finite_matrix([1.0, 2.0])

    def test_non_finite_entries(self):
        with self.assertRaises(InputValidationException):
            as_finite_matrix([[1.0, np.nan]])
        with self.assertRaises(InputValidationException):
            as_finite_vector([np.inf])

    def test_vector_rejects_matrix(self):
        with self.assertRaises(ContractViolationException):
            as_finite_vector([[1.0]])


class RelativeChangeTests(SimpleTestCase):

    def test_relative_to_previous(self):
        self.assertAlmostEqual(relative_change(9.0, 10.0), 0.1)

    def test_zero_previous_uses_floor(self):
        self.assertEqual(relative_change(1e-12, 0.0), 1.0)


class ExpandPerViewTests(SimpleTestCase):

    def test_single_value_broadcasts(self):
        self.assertEqual(expand_per_view([0.5], 3, 'gamma'), [0.5, 0.5, 0.5])

    def test_full_list_kept(self):
        self.assertEqual(expand_per_view((1, 2, 3), 3, 'alpha'), [1, 2, 3])

    def test_wrong_length(self):
        with self.assertRaises(ContractViolationException):
            expand_per_view([1, 2], 3, 'alpha')


class FormatDurationTests(SimpleTestCase):

    def test_short(self):
        self.assertEqual(format_duration(61.5), '01:01.500')

    def test_long(self):
        self.assertEqual(format_duration(3725), '01:02:05')


class ExceptionTests(SimpleTestCase):

    def test_codes(self):
        self.assertEqual(ContractViolationException().code, 'CONTRACT_VIOLATION')
        self.assertEqual(ConfigurationException().code, 'CONFIG_ERROR')
        self.assertEqual(TrainingDivergedException(7).code, 'TRAINING_DIVERGED')

    def test_diverged_carries_iteration(self):
        exc = TrainingDivergedException(12)
        self.assertEqual(exc.iteration, 12)
        self.assertIn('12', str(exc))

    def test_hierarchy(self):
        self.assertIsInstance(InputValidationException('bad', {'x': 'nan'}), HashingToolkitException)
        self.assertEqual(InputValidationException('bad', {'x': 'nan'}).errors, {'x': 'nan'})


class DesignPatternTests(SimpleTestCase):

    def test_factory_creates_registered_products(self):
        factory = BaseFactory()
        factory.register_product('list', list)
        self.assertEqual(factory.create('list'), [])
        self.assertEqual(factory.get_registered_types(), ['list'])

    def test_factory_rejects_unknown_type(self):
        with self.assertRaises(ConfigurationException):
            BaseFactory().create('missing')

    def test_builder_collects_and_resets(self):
        class PairBuilder(BaseBuilder):
            def with_left(self, value):
                return self._set('left', value)

            def build(self):
                product = dict(self._product)
                self.reset()
                return product

        builder = PairBuilder()
        self.assertEqual(builder.with_left(1).build(), {'left': 1})
        self.assertEqual(builder.build(), {})

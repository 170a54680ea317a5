"""
Shared plumbing for the toolkit's management commands.
"""

import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import HashingToolkitException
from multimodal.factories import generate_synthetic
from multimodal.models import MultimodalDataset
from multimodal.services import DatasetPaths, load_dataset
from ..forms import RunConfigForm, SyntheticSpecForm
from ..models import RunConfig


logger = logging.getLogger(__name__)

RUN_FLAGS = (
    'code_length', 'alpha', 'beta', 'gamma', 'ks', 'ke', 'max_iter', 'convergence_rtol',
    'seed', 'radius', 'test_fraction', 'regularizer', 'workers', 'cutoff',
)


class ToolkitCommand(BaseCommand):
    """
    Base command: toolkit errors become CommandError so the process exits nonzero.

    Subclasses implement run() instead of handle().
    """

    def run(self, **options):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            return self.run(**options)
        except HashingToolkitException as exc:
            details = getattr(exc, 'errors', None)
            message = f"{exc.code}: {exc.message}"
            if details:
                message += f" {details}"
            raise CommandError(message) from exc

    # Argument groups

    @staticmethod
    def add_dataset_arguments(parser):
        group = parser.add_argument_group('dataset')
        group.add_argument('--views', nargs='+', metavar='PATH',
                           help='One DMH1 matrix file per feature view; the synthetic dataset when omitted')
        group.add_argument('--labels', metavar='PATH', help='DMH1 label matrix file')
        group.add_argument('--view-ids', nargs='+', metavar='ID',
                           help='Names of the views, the file stems by default')

    @staticmethod
    def add_run_arguments(parser):
        group = parser.add_argument_group('training and evaluation')
        group.add_argument('--code-length', type=int, help='Code length c')
        group.add_argument('--alpha', help='Comma separated alpha, one value or one per view')
        group.add_argument('--beta', help="Comma separated beta or 'auto', one value or one per view")
        group.add_argument('--gamma', help='Comma separated gamma, one value or one per view')
        group.add_argument('--ks', type=float, help='First step size')
        group.add_argument('--ke', type=float, help='Last step size')
        group.add_argument('--max-iter', type=int, help='Iteration cap K')
        group.add_argument('--rtol', dest='convergence_rtol', type=float, help='Convergence threshold')
        group.add_argument('--seed', type=int, help='Seed for initialization and the split')
        group.add_argument('--radius', type=int, help='Hash lookup radius')
        group.add_argument('--test-fraction', type=float, help='Share of rows used as queries')
        group.add_argument('--regularizer', help='Regularizer form: simplified or identity')
        group.add_argument('--workers', type=int, help='Threads for gradients and queries')
        group.add_argument('--cutoff', type=int, help='Ranking cutoff R, the whole database by default')

    @staticmethod
    def add_output_argument(parser):
        parser.add_argument('--out', metavar='DIR', help='Output directory, DMH_OUTPUT_DIR by default')

    # Option handling

    @staticmethod
    def output_dir(options) -> Path:
        return Path(options.get('out') or settings.DMH_OUTPUT_DIR)

    @staticmethod
    def dataset_from_options(options) -> MultimodalDataset:
        views = options.get('views')
        if not views:
            spec = SyntheticSpecForm({}).to_spec()
            logger.info("No view files given; using the synthetic dataset %s", spec.to_dict())
            return generate_synthetic(spec)
        if not options.get('labels'):
            raise CommandError('--labels is required with --views')
        return load_dataset(DatasetPaths(views, options['labels'], options.get('view_ids') or []))

    @staticmethod
    def run_config_from_options(options, view_count: int = None) -> RunConfig:
        data = {name: options.get(name) for name in RUN_FLAGS if options.get(name) is not None}
        return RunConfigForm(data, view_count=view_count).to_run_config()

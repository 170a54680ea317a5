"""
Service layer for experiments.

Ties datasets, training, encoding and evaluation together for the
management commands: resolving per-view hyperparameters, training and
packaging models, evaluating every retrieval direction, ablation sweeps
and the self-check tables.
"""

import logging
from dataclasses import replace
from itertools import permutations
from typing import Dict, List, Optional, Sequence, Tuple

from django.conf import settings

from codes.models import PackedCodes
from codes.services import encode_view
from core.exceptions import ConfigurationException
from core.utils import expand_per_view
from evaluation.models import EvalReport
from evaluation.services import Direction, as_trained, decorrelation, embedding_correlation, evaluate_cross_modal
from geometry.diagnostics import PropositionCheckService
from geometry.models import PropositionCheckResult
from hashing.diagnostics import GradientCheckResult, GradientCheckService
from hashing.models import ViewHyper, ViewMatrix
from hashing.strategies.regularizers import regularizer_factory
from multimodal.models import MultimodalDataset
from multimodal.services import auto_beta, split_dataset
from training.models import TrainingResult
from training.services import TrainingService
from .forms import AUTO
from .models import AblationGrid, AblationRow, HashingModel, RunConfig


logger = logging.getLogger(__name__)

# Powers of ten from 1e-5 to 10.
GAMMA_SWEEP = tuple(10.0 ** exponent for exponent in range(-5, 2))
CODE_LENGTH_SWEEP = (16, 32, 64, 96, 128)

QUERY_SPLITS = ('test', 'train')


def resolve_hypers(views: Sequence[ViewMatrix], run: RunConfig) -> List[ViewHyper]:
    """
    alpha, beta and gamma for every view.

    Unset values take the configured defaults: label views get the label
    alpha and beta, feature views the view alpha and an automatic beta
    that scales the view's largest magnitude to the beta target.

    Raises:
        ContractViolationException: If a list has neither one entry nor one per view
        ConfigurationException: If a resolved value is out of range
    """
    views = list(views)
    count = len(views)
    if run.alpha:
        alphas = expand_per_view(run.alpha, count, 'alpha')
    else:
        alphas = [settings.DMH_LABEL_ALPHA if view.is_label_view else settings.DMH_VIEW_ALPHA for view in views]
    if run.beta:
        betas = expand_per_view(run.beta, count, 'beta')
    else:
        betas = [settings.DMH_LABEL_BETA if view.is_label_view else AUTO for view in views]
    betas = [
        auto_beta(view, settings.DMH_BETA_TARGET) if beta == AUTO else float(beta)
        for view, beta in zip(views, betas)
    ]
    gammas = expand_per_view(run.gamma, count, 'gamma') if run.gamma else [settings.DMH_GAMMA] * count
    return [ViewHyper(float(a), float(b), float(g)) for a, b, g in zip(alphas, betas, gammas)]


def model_directions(model: HashingModel) -> List[Direction]:
    """Every ordered pair of distinct feature views."""
    return [Direction(query, database) for query, database in permutations(model.feature_view_ids, 2)]


def encode_with_model(model: HashingModel, view: ViewMatrix, view_id: str) -> PackedCodes:
    """
    Codes of raw rows of one view.

    Raises:
        ConfigurationException: If the model has no view with that id
    """
    params = model.params_by_view()
    if view_id not in params:
        raise ConfigurationException(f"model has no view '{view_id}'; available: {model.view_ids}")
    return encode_view(as_trained(view, params[view_id]), params[view_id])


class ExperimentService:
    """
    Trains and evaluates models on one dataset.
    """

    def __init__(self, training_service: TrainingService = None):
        self.training_service = training_service or TrainingService()

    def train(self, dataset: MultimodalDataset, run: RunConfig) -> Tuple[HashingModel, TrainingResult]:
        """
        Split the dataset with the run's seed and train on the training rows.

        Automatic betas are computed from the training rows only.

        Returns:
            tuple: (HashingModel, TrainingResult)
        """
        dataset = split_dataset(dataset, run.test_fraction, run.train.seed)
        views = dataset.train_views()
        hypers = resolve_hypers(views, run)
        result = self.training_service.train(views, run.train, hypers)
        model = HashingModel(
            params=result.params,
            view_ids=result.view_ids,
            label_views=[view.is_label_view for view in views],
            config=run.train,
            provenance={
                'dataset': dict(dataset.provenance),
                'dropped_rows': dataset.dropped_rows,
                'split': {'test_fraction': run.test_fraction, 'seed': run.train.seed},
            },
        )
        return model, result

    @staticmethod
    def split_of(model: HashingModel, dataset: MultimodalDataset, run: Optional[RunConfig] = None) -> MultimodalDataset:
        """The split recorded in the model; the run supplies the fraction only when none is recorded."""
        split = model.provenance.get('split', {})
        fraction = split.get('test_fraction', run.test_fraction if run else settings.DMH_TEST_FRACTION)
        seed = split.get('seed', model.config.seed)
        return split_dataset(dataset, fraction, seed)

    def evaluate(self, model: HashingModel, dataset: MultimodalDataset, run: RunConfig,
                 query_split: str = 'test') -> List[EvalReport]:
        """
        Evaluate every retrieval direction between the model's feature views.

        Args:
            model: Trained model
            dataset: Unsplit dataset; it is split as recorded in the model
            run: Supplies radius, cutoff and workers
            query_split: 'test' for held-out queries, 'train' for self-retrieval

        Raises:
            ConfigurationException: If query_split is unknown or the model has fewer than two feature views
        """
        if query_split not in QUERY_SPLITS:
            raise ConfigurationException(f"query split must be one of {QUERY_SPLITS}, got '{query_split}'")
        directions = model_directions(model)
        if not directions:
            raise ConfigurationException("cross-modal evaluation needs at least two feature views")
        dataset = self.split_of(model, dataset, run)
        query_rows = dataset.split.train if query_split == 'train' else None
        params = model.params_by_view()
        return [
            evaluate_cross_modal(
                params, dataset, direction, R=run.cutoff, radius=run.radius,
                workers=run.train.workers, query_rows=query_rows,
            )
            for direction in directions
        ]


class AblationService:
    """
    Paired training runs against a gamma=0 reference.

    Every (seed, code length) gets one reference run with gamma=0 on all
    views; each grid value is trained with the same seed and split and
    compared against it. Rows come out in a fixed order: seeds, then the
    references, then the alpha, beta, gamma and code-length grids.
    """

    def __init__(self, experiment_service: ExperimentService = None):
        self.experiment_service = experiment_service or ExperimentService()

    def _row(self, dataset: MultimodalDataset, run: RunConfig, parameter: str, value: float,
             reference: Optional[AblationRow]) -> AblationRow:
        model, result = self.experiment_service.train(dataset, run)
        reports = tuple(self.experiment_service.evaluate(model, dataset, run))
        training_views = self.experiment_service.split_of(model, dataset, run).train_views()
        if reference is None:
            delta_map, delta_f1 = (), ()
        else:
            delta_map = tuple(r.map - ref.map for r, ref in zip(reports, reference.reports))
            delta_f1 = tuple(r.f1 - ref.f1 for r, ref in zip(reports, reference.reports))
        row = AblationRow(
            parameter=parameter,
            value=float(value),
            seed=run.train.seed,
            code_length=run.train.code_length,
            reports=reports,
            decorrelation=decorrelation(result.codes),
            embedding_correlation=embedding_correlation(training_views, result.params),
            iterations=result.trace.iterations_run,
            final_objective=result.trace.final_objective,
            delta_map=delta_map,
            delta_f1=delta_f1,
        )
        logger.info(
            "Ablation %s=%g seed=%d c=%d: MAP %s, decorrelation %.4f, embedding correlation %.6f",
            parameter, value, row.seed, row.code_length,
            ', '.join(f'{r.task} {r.map:.4f}' for r in reports), row.decorrelation, row.embedding_correlation,
        )
        return row

    @staticmethod
    def _label_flags(dataset: MultimodalDataset) -> List[bool]:
        return [view.is_label_view for view in dataset.views]

    def run(self, dataset: MultimodalDataset, run: RunConfig, grid: AblationGrid) -> List[AblationRow]:
        """
        Train and evaluate every grid value plus the references.

        An empty grid compares the configured gamma against the reference.
        """
        if grid.is_empty:
            grid = replace(grid, gamma=(run.gamma[0] if run.gamma else settings.DMH_GAMMA,))
        labels = self._label_flags(dataset)
        base_c = run.train.code_length
        code_lengths = [base_c] + [c for c in dict.fromkeys(grid.code_length) if c != base_c]

        rows: List[AblationRow] = []
        for seed in grid.seeds:
            seeded = replace(run, train=replace(run.train, seed=seed))
            references: Dict[int, AblationRow] = {}
            for c in code_lengths:
                reference_run = replace(seeded, train=replace(seeded.train, code_length=c), gamma=(0.0,))
                references[c] = self._row(dataset, reference_run, 'reference', 0.0, None)
                rows.append(references[c])

            for alpha in grid.alpha:
                alphas = tuple(
                    alpha if is_label else settings.DMH_VIEW_ALPHA for is_label in labels
                )
                rows.append(self._row(dataset, replace(seeded, alpha=alphas), 'alpha', alpha, references[base_c]))
            for beta in grid.beta:
                betas = tuple(settings.DMH_LABEL_BETA if is_label else beta for is_label in labels)
                rows.append(self._row(dataset, replace(seeded, beta=betas), 'beta', beta, references[base_c]))
            for gamma in grid.gamma:
                rows.append(self._row(dataset, replace(seeded, gamma=(gamma,)), 'gamma', gamma, references[base_c]))
            for c in grid.code_length:
                sized = replace(seeded, train=replace(seeded.train, code_length=c))
                rows.append(self._row(dataset, sized, 'code_length', c, references[c]))
        return rows


def run_gradient_checks(instances: int = 20, base_seed: int = 0,
                        service: GradientCheckService = None) -> List[GradientCheckResult]:
    """Finite-difference checks for every registered regularizer form."""
    if service is None:
        regularizers = [regularizer_factory.create(name) for name in regularizer_factory.get_registered_types()]
        service = GradientCheckService(regularizers=regularizers)
    return service.run(instances=instances, base_seed=base_seed)


def run_proposition_checks(base_seed: int = 0) -> List[PropositionCheckResult]:
    return PropositionCheckService(base_seed).run()


def check_table(rows) -> dict:
    """Rows plus the overall verdict; informational rows never fail."""
    failures = sum(1 for row in rows if row.passed is False)
    return {'passed': failures == 0, 'failures': failures, 'rows': list(rows)}

"""
Service layer for multimodal datasets.

Loading, beta rescaling, train/test splitting and label ground truth.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from core.exceptions import ConfigurationException, ContractViolationException, EmptyLabelException, RowCountMismatchException
from evaluation.models import GroundTruth
from hashing.models import ViewMatrix
from .models import LABEL_VIEW_ID, DatasetSplit, MultimodalDataset
from .repositories import MatrixFileRepository


logger = logging.getLogger(__name__)

LABELS_FILENAME = 'labels.dmh'


@dataclass(frozen=True)
class DatasetPaths:
    """Matrix files of one dataset: one per feature view plus the labels."""

    view_paths: List[Path]
    labels_path: Path
    view_ids: List[str] = field(default_factory=list)

    def __post_init__(self):
        object.__setattr__(self, 'view_paths', [Path(p) for p in self.view_paths])
        object.__setattr__(self, 'labels_path', Path(self.labels_path))
        ids = list(self.view_ids) or [Path(p).stem for p in self.view_paths]
        if len(ids) != len(self.view_paths):
            raise ConfigurationException(f"{len(ids)} view ids for {len(self.view_paths)} view files")
        if len(set(ids)) != len(ids) or LABEL_VIEW_ID in ids:
            raise ConfigurationException(f"view ids must be unique and not '{LABEL_VIEW_ID}': {ids}")
        object.__setattr__(self, 'view_ids', ids)


def label_view(labels: np.ndarray) -> ViewMatrix:
    """The label matrix as a view flagged for training only."""
    return ViewMatrix(np.asarray(labels, dtype=np.float64), view_id=LABEL_VIEW_ID, is_label_view=True)


def load_dataset(paths: DatasetPaths, include_label_view: bool = True) -> MultimodalDataset:
    """
    Load and validate a dataset from matrix files.

    Rows whose label vector is all zero are dropped from every view; the
    number dropped is logged and kept on the dataset.

    Args:
        paths: Feature view files and the label file
        include_label_view: Append the labels as a training view

    Returns:
        MultimodalDataset: Unsplit dataset

    Raises:
        ArtifactNotFoundException: If a file is missing
        DatasetFormatException: If a file is malformed
        RowCountMismatchException: If the files disagree on the row count
        EmptyLabelException: If no row has a label
    """
    matrices = [MatrixFileRepository.load(path) for path in paths.view_paths]
    labels = MatrixFileRepository.load(paths.labels_path)
    counts = [matrix.shape[0] for matrix in matrices] + [labels.shape[0]]
    if len(set(counts)) != 1:
        raise RowCountMismatchException(counts)

    keep = np.any(labels != 0, axis=1)
    dropped = int(keep.size - keep.sum())
    if not keep.any():
        raise EmptyLabelException()
    if dropped:
        logger.warning("Dropped %d of %d rows with an empty label vector", dropped, keep.size)

    labels = (labels[keep] != 0).astype(np.uint8)
    views = [
        ViewMatrix(matrix[keep], view_id=view_id)
        for matrix, view_id in zip(matrices, paths.view_ids)
    ]
    if include_label_view:
        views.append(label_view(labels))
    logger.info("Loaded %d rows, %d feature views, %d label categories", labels.shape[0], len(matrices), labels.shape[1])
    provenance = {'views': [str(p) for p in paths.view_paths], 'labels': str(paths.labels_path)}
    return MultimodalDataset(views, labels, dropped_rows=dropped, provenance=provenance)


def save_dataset(dataset: MultimodalDataset, directory) -> DatasetPaths:
    """
    Write every feature view and the labels as matrix files.

    Returns:
        DatasetPaths: Paths that load_dataset reads back
    """
    directory = Path(directory)
    view_paths = []
    for view in dataset.feature_views:
        view_paths.append(MatrixFileRepository.save(directory / f'{view.view_id}.dmh', view.data))
    labels_path = MatrixFileRepository.save(directory / LABELS_FILENAME, dataset.labels)
    logger.info("Saved dataset with %d rows to %s", dataset.n, directory)
    return DatasetPaths(view_paths, labels_path, [view.view_id for view in dataset.feature_views])


def auto_beta(view: ViewMatrix, target: float = 255.0) -> float:
    """
    Scale that maps the view's largest absolute entry to ``target``.

    An all-zero view gets 1.0.
    """
    peak = float(np.max(np.abs(view.data)))
    if peak == 0.0:
        logger.warning("View '%s' is all zero; using beta=1", view.view_id)
        return 1.0
    return target / peak


def rescale_views(dataset: MultimodalDataset, betas: Sequence[float]) -> MultimodalDataset:
    """
    Multiply each view by its beta.

    Raises:
        ContractViolationException: If the number of betas differs from the number of views
        ConfigurationException: If a beta is not positive
    """
    betas = [float(beta) for beta in betas]
    if len(betas) != len(dataset.views):
        raise ContractViolationException(f"{len(betas)} betas for {len(dataset.views)} views")
    bad = {view.view_id: beta for view, beta in zip(dataset.views, betas) if not (np.isfinite(beta) and beta > 0)}
    if bad:
        raise ConfigurationException("beta must be positive", bad)
    return dataset.with_views([view.scaled(beta) for view, beta in zip(dataset.views, betas)])


def split_dataset(dataset: MultimodalDataset, test_fraction: float, seed: int) -> MultimodalDataset:
    """
    Seeded uniform train/test split without replacement.

    round(n * test_fraction) rows go to the test split, at least one and
    at most n - 1; both index lists are ascending.

    Raises:
        ConfigurationException: If test_fraction is outside (0, 1)
    """
    if not 0.0 < test_fraction < 1.0:
        raise ConfigurationException(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n = dataset.n
    if n < 2:
        raise ContractViolationException(f"cannot split a dataset with {n} rows")
    n_test = min(max(int(round(n * test_fraction)), 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    split = DatasetSplit(train=np.sort(order[n_test:]), test=np.sort(order[:n_test]))
    logger.info("Split %d rows: %d train, %d test (seed=%d)", n, split.train.size, split.test.size, seed)
    return replace(dataset, split=split)


def label_relevance(query_labels: np.ndarray, database_labels: np.ndarray) -> np.ndarray:
    """Boolean matrix: True where the two label vectors share a positive category."""
    query_labels = (np.asarray(query_labels) != 0).astype(np.int64)
    database_labels = (np.asarray(database_labels) != 0).astype(np.int64)
    return (query_labels @ database_labels.T) > 0


def ground_truth_from_labels(dataset: MultimodalDataset, queries: Optional[np.ndarray] = None,
                             database: Optional[np.ndarray] = None) -> GroundTruth:
    """
    Relevance of training rows (database) to test rows (queries).

    Args:
        dataset: Split dataset
        queries: Row indices used as queries, test split by default
        database: Row indices used as database, training split by default

    Returns:
        GroundTruth: Database indices are positions within ``database``
    """
    queries = dataset.split.test if queries is None else np.asarray(queries, dtype=np.int64)
    database = dataset.split.train if database is None else np.asarray(database, dtype=np.int64)
    relevance = label_relevance(dataset.labels[queries], dataset.labels[database])
    empty = int(np.sum(~relevance.any(axis=1)))
    if empty:
        logger.info("%d of %d queries have no relevant database item", empty, relevance.shape[0])
    return GroundTruth(relevance)

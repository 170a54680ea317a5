"""
Domain models for multimodal datasets.

A dataset is a list of aligned views (feature views plus the label matrix
treated as one more view), the binary label matrix itself and a train/test
partition of the rows.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from core.exceptions import ConfigurationException, ContractViolationException, EmptyLabelException, RowCountMismatchException
from hashing.models import ViewMatrix


LABEL_VIEW_ID = 'labels'


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    """Disjoint train and test row indices covering every row."""

    train: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        train = np.asarray(self.train, dtype=np.int64)
        test = np.asarray(self.test, dtype=np.int64)
        if np.intersect1d(train, test).size:
            raise ContractViolationException("train and test indices overlap")
        for array in (train, test):
            array.setflags(write=False)
        object.__setattr__(self, 'train', train)
        object.__setattr__(self, 'test', test)

    @classmethod
    def all_train(cls, n: int) -> 'DatasetSplit':
        return cls(np.arange(n), np.arange(0))


@dataclass(frozen=True, eq=False)
class MultimodalDataset:
    """Aligned views, labels and split."""

    views: List[ViewMatrix]
    labels: np.ndarray
    split: Optional[DatasetSplit] = None
    dropped_rows: int = 0
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise ContractViolationException(f"labels must be 2-D, got shape {labels.shape}")
        labels = (labels != 0).astype(np.uint8)
        counts = [view.n for view in self.views] + [labels.shape[0]]
        if len(set(counts)) != 1:
            raise RowCountMismatchException(counts)
        if not np.all(labels.sum(axis=1) > 0):
            raise EmptyLabelException("every sample needs at least one positive label")
        split = self.split or DatasetSplit.all_train(labels.shape[0])
        covered = np.sort(np.concatenate([split.train, split.test]))
        if not np.array_equal(covered, np.arange(labels.shape[0])):
            raise ContractViolationException("split indices do not cover every row exactly once")
        labels.setflags(write=False)
        object.__setattr__(self, 'labels', labels)
        object.__setattr__(self, 'split', split)
        object.__setattr__(self, 'views', list(self.views))

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @property
    def feature_views(self) -> List[ViewMatrix]:
        return [view for view in self.views if not view.is_label_view]

    @property
    def label_view(self) -> Optional[ViewMatrix]:
        return next((view for view in self.views if view.is_label_view), None)

    def view(self, view_id: str) -> ViewMatrix:
        for view in self.views:
            if view.view_id == view_id:
                return view
        raise ConfigurationException(f"no view named '{view_id}'; available: {[v.view_id for v in self.views]}")

    def train_views(self) -> List[ViewMatrix]:
        return [view.take(self.split.train) for view in self.views]

    def with_views(self, views: List[ViewMatrix]) -> 'MultimodalDataset':
        return replace(self, views=views)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the Gaussian-centroid generator."""

    n_per_class: int = 50
    n_classes: int = 4
    dims: Tuple[int, ...] = (10, 12)
    noise_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'dims', tuple(int(d) for d in self.dims))
        if self.n_per_class < 1 or self.n_classes < 1 or not self.dims or min(self.dims) < 1:
            raise ConfigurationException(f"synthetic sizes must be positive: {self}")
        if not self.noise_sigma >= 0:
            raise ConfigurationException(f"noise_sigma must be non-negative, got {self.noise_sigma}")

    def to_dict(self) -> dict:
        return {
            'n_per_class': self.n_per_class,
            'n_classes': self.n_classes,
            'dims': list(self.dims),
            'noise_sigma': self.noise_sigma,
            'seed': self.seed,
        }

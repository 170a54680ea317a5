"""
Domain models for retrieval evaluation.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from core.exceptions import ContractViolationException


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """
    Relevance of every database item to every query.

    Stored as a boolean matrix (queries x database); ``relevant(q)`` gives
    the ascending database indices sharing a label with query q.
    """

    relevance: np.ndarray

    def __post_init__(self):
        relevance = np.asarray(self.relevance)
        if relevance.ndim != 2:
            raise ContractViolationException(f"relevance must be 2-D, got shape {relevance.shape}")
        relevance = np.array(relevance, dtype=bool, copy=True)
        relevance.setflags(write=False)
        object.__setattr__(self, 'relevance', relevance)

    @classmethod
    def from_sets(cls, relevant_sets, n_database: int) -> 'GroundTruth':
        """Build from one iterable of database indices per query."""
        matrix = np.zeros((len(relevant_sets), n_database), dtype=bool)
        for q, indices in enumerate(relevant_sets):
            indices = np.asarray(sorted(indices), dtype=np.int64)
            if indices.size and (indices.min() < 0 or indices.max() >= n_database):
                raise ContractViolationException(
                    f"query {q} references database indices outside [0, {n_database})"
                )
            matrix[q, indices] = True
        return cls(matrix)

    @property
    def n_queries(self) -> int:
        return self.relevance.shape[0]

    @property
    def n_database(self) -> int:
        return self.relevance.shape[1]

    def relevant(self, q: int) -> np.ndarray:
        return np.flatnonzero(self.relevance[q])

    def relevant_counts(self) -> np.ndarray:
        return self.relevance.sum(axis=1)

    def permute_database(self, order) -> 'GroundTruth':
        """Ground truth for a database whose row i is the old row order[i]."""
        return GroundTruth(self.relevance[:, np.asarray(order, dtype=np.int64)])


@dataclass(frozen=True)
class LookupScores:
    """Hash lookup metrics averaged over valid queries."""

    precision: float
    recall: float
    f1: float
    valid_queries: int
    excluded_queries: int


@dataclass(frozen=True)
class EvalReport:
    """Metrics of one retrieval direction."""

    task: str
    map: float
    f1: float
    radius: int
    per_query_ap: Tuple[float, ...] = field(default_factory=tuple)
    precision: float = 0.0
    recall: float = 0.0
    valid_queries: int = 0
    excluded_queries: int = 0
    code_length: int = 0
    R: int = 0
    mean_query_seconds: float = 0.0

    def __post_init__(self):
        for name in ('map', 'f1', 'precision', 'recall'):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractViolationException(f"{name} must lie in [0, 1], got {value}")
        object.__setattr__(self, 'per_query_ap', tuple(float(ap) for ap in self.per_query_ap))

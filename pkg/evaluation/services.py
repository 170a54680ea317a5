"""
Service layer for retrieval evaluation.

Hamming ranking is scored with average precision at a cutoff R, hash
lookup with precision, recall and F1 at a Hamming radius. Queries whose
relevant set is empty are excluded from every average and counted.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from codes.models import PackedCodes
from codes.services import distances_to_all, encode_view
from core.exceptions import ContractViolationException, EmptyEvaluationException, UndefinedAveragePrecisionException
from hashing.models import CodeMatrix, ViewMatrix, ViewParams
from hashing.services import mcr_value, sigmoid_embed
from multimodal.models import MultimodalDataset
from multimodal.services import ground_truth_from_labels
from .models import EvalReport, GroundTruth, LookupScores
from .strategies.retrieval import HammingRankingStrategy, HashLookupStrategy


logger = logging.getLogger(__name__)

_ranking = HammingRankingStrategy()


@dataclass(frozen=True)
class Direction:
    """Query modality and database modality of one cross-modal task."""

    query_view: str
    database_view: str

    @property
    def task(self) -> str:
        return f"{self.query_view}->{self.database_view}"

    def reversed(self) -> 'Direction':
        return Direction(self.database_view, self.query_view)


def _resolve_cutoff(R: Optional[int], n: int) -> int:
    R = n if R is None else int(R)
    if not 1 <= R <= n:
        raise ContractViolationException(f"cutoff R={R} outside [1, {n}]")
    return R


def _relevance_mask(relevant, n: int) -> np.ndarray:
    relevant = np.asarray(relevant)
    if relevant.dtype == bool:
        if relevant.shape != (n,):
            raise ContractViolationException(f"relevance mask has shape {relevant.shape}, expected ({n},)")
        return relevant
    mask = np.zeros(n, dtype=bool)
    indices = relevant.astype(np.int64).ravel()
    if indices.size and (indices.min() < 0 or indices.max() >= n):
        raise ContractViolationException(f"relevant indices outside [0, {n})")
    mask[indices] = True
    return mask


def ap_from_distances(distances: np.ndarray, relevant: np.ndarray, R: int) -> float:
    """
    AP = (1/N) sum_{r<=R} P(r) delta(r) for one ranked query.

    N is the number of relevant items among the top R; AP is 0 when N is 0.
    """
    hits = relevant[_ranking.execute(distances, R)]
    found = int(hits.sum())
    if found == 0:
        return 0.0
    precision_at = np.cumsum(hits) / np.arange(1, hits.size + 1)
    return float(np.sum(precision_at[hits]) / found)


def average_precision(query_code: PackedCodes, db_codes: PackedCodes, relevant_set, R: Optional[int] = None) -> float:
    """
    Average precision of one query under Hamming ranking.

    Args:
        query_code: Single query code
        db_codes: Database codes
        relevant_set: Relevant database indices, or a boolean mask
        R: Ranking cutoff, the whole database by default

    Raises:
        UndefinedAveragePrecisionException: If the relevant set is empty
        ContractViolationException: If R is outside [1, n]
    """
    R = _resolve_cutoff(R, db_codes.n)
    relevant = _relevance_mask(relevant_set, db_codes.n)
    if not relevant.any():
        raise UndefinedAveragePrecisionException()
    return ap_from_distances(distances_to_all(query_code, db_codes), relevant, R)


def lookup_from_distances(distances: np.ndarray, relevant: np.ndarray, lookup: HashLookupStrategy) -> Tuple[float, float, float]:
    """(precision, recall, F1) of one query; an empty retrieved set scores 0."""
    retrieved = lookup.execute(distances)
    n_retrieved = int(retrieved.sum())
    if n_retrieved == 0:
        return 0.0, 0.0, 0.0
    hits = int(np.sum(retrieved & relevant))
    precision = hits / n_retrieved
    recall = hits / int(relevant.sum())
    f1 = 2 * precision * recall / (precision + recall) if hits else 0.0
    return precision, recall, f1


def _check_codes(queries: PackedCodes, db: PackedCodes, ground_truth: GroundTruth) -> None:
    if (queries.n, db.n) != (ground_truth.n_queries, ground_truth.n_database):
        raise ContractViolationException(
            f"ground truth covers {ground_truth.n_queries}x{ground_truth.n_database}, "
            f"codes are {queries.n}x{db.n}"
        )


def _valid_queries(ground_truth: GroundTruth) -> np.ndarray:
    valid = np.flatnonzero(ground_truth.relevant_counts() > 0)
    if valid.size == 0:
        raise EmptyEvaluationException()
    return valid


def per_query_average_precision(queries: PackedCodes, db: PackedCodes, ground_truth: GroundTruth,
                                R: Optional[int] = None) -> Tuple[List[float], int]:
    """
    AP of every query with a non-empty relevant set.

    Returns:
        tuple: (AP values in query order, number of excluded queries)
    """
    _check_codes(queries, db, ground_truth)
    R = _resolve_cutoff(R, db.n)
    valid = _valid_queries(ground_truth)
    scores = [
        ap_from_distances(distances_to_all(queries.row(q), db), ground_truth.relevance[q], R)
        for q in valid
    ]
    return scores, ground_truth.n_queries - valid.size


def mean_average_precision(queries: PackedCodes, db: PackedCodes, ground_truth: GroundTruth,
                           R: Optional[int] = None) -> float:
    """
    Mean of the per-query AP over queries with a relevant item.

    Raises:
        EmptyEvaluationException: If no query has a relevant item
    """
    scores, _ = per_query_average_precision(queries, db, ground_truth, R)
    return float(np.mean(scores))


def lookup_f1(queries: PackedCodes, db: PackedCodes, ground_truth: GroundTruth, radius: int) -> LookupScores:
    """
    Hash lookup within a Hamming radius, averaged over queries with a relevant item.

    Raises:
        ContractViolationException: If radius is negative
        EmptyEvaluationException: If no query has a relevant item
    """
    _check_codes(queries, db, ground_truth)
    lookup = HashLookupStrategy(radius)
    valid = _valid_queries(ground_truth)
    rows = np.array([
        lookup_from_distances(distances_to_all(queries.row(q), db), ground_truth.relevance[q], lookup)
        for q in valid
    ])
    precision, recall, f1 = rows.mean(axis=0)
    return LookupScores(float(precision), float(recall), float(f1), int(valid.size), ground_truth.n_queries - int(valid.size))


def as_trained(view: ViewMatrix, params: ViewParams) -> ViewMatrix:
    """Apply the training-time beta to raw rows when the parameters expect scaled input."""
    return view.scaled(params.beta) if params.prescaled else view


def encode_direction(params: Mapping[str, ViewParams], dataset: MultimodalDataset,
                     direction: Direction, query_rows: Optional[np.ndarray] = None) -> Tuple[PackedCodes, PackedCodes]:
    """
    Codes of the query rows (test split by default) of the query view and the training rows of the database view.

    Raises:
        ConfigurationException: If a view is unknown to the dataset
        ContractViolationException: If a view has no trained parameters
    """
    codes = []
    query_rows = dataset.split.test if query_rows is None else np.asarray(query_rows, dtype=np.int64)
    for view_id, rows in ((direction.query_view, query_rows), (direction.database_view, dataset.split.train)):
        if view_id not in params:
            raise ContractViolationException(f"no trained parameters for view '{view_id}'")
        view = dataset.view(view_id).take(rows)
        codes.append(encode_view(as_trained(view, params[view_id]), params[view_id]))
    return codes[0], codes[1]


def _score_query(args):
    query, db, relevant, R, lookup = args
    started = time.perf_counter()
    distances = distances_to_all(query, db)
    ap = ap_from_distances(distances, relevant, R)
    lookup_scores = lookup_from_distances(distances, relevant, lookup)
    return ap, lookup_scores, time.perf_counter() - started


def evaluate_cross_modal(params: Mapping[str, ViewParams], dataset: MultimodalDataset, direction: Direction,
                         R: Optional[int] = None, radius: int = 2, workers: int = 1,
                         query_rows: Optional[np.ndarray] = None) -> EvalReport:
    """
    Evaluate one retrieval direction: test rows of one view query training rows of another.

    Args:
        params: Trained parameters keyed by view id
        dataset: Split dataset
        direction: Query and database views
        R: Ranking cutoff, the whole training split by default
        radius: Hash lookup radius
        workers: Threads scoring queries
        query_rows: Rows used as queries, the test split by default

    Returns:
        EvalReport: MAP and lookup scores with per-query AP
    """
    started = time.perf_counter()
    queries, db = encode_direction(params, dataset, direction, query_rows)
    encode_seconds = time.perf_counter() - started
    ground_truth = ground_truth_from_labels(dataset, queries=query_rows)
    _check_codes(queries, db, ground_truth)
    R = _resolve_cutoff(R, db.n)
    lookup = HashLookupStrategy(radius)
    valid = _valid_queries(ground_truth)

    jobs = [(queries.row(q), db, ground_truth.relevance[q], R, lookup) for q in valid]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_score_query, jobs))

    per_query_ap = [ap for ap, _, _ in results]
    lookup_rows = np.array([scores for _, scores, _ in results])
    precision, recall, f1 = lookup_rows.mean(axis=0)
    query_seconds = (encode_seconds + sum(seconds for _, _, seconds in results)) / queries.n
    report = EvalReport(
        task=direction.task,
        map=float(np.mean(per_query_ap)),
        f1=float(f1),
        radius=radius,
        per_query_ap=per_query_ap,
        precision=float(precision),
        recall=float(recall),
        valid_queries=int(valid.size),
        excluded_queries=ground_truth.n_queries - int(valid.size),
        code_length=queries.c,
        R=R,
        mean_query_seconds=query_seconds,
    )
    logger.info(
        "%s: MAP=%.4f F1=%.4f (radius %d, %d queries, %d excluded, %.3g s per query)",
        report.task, report.map, report.f1, radius, report.valid_queries, report.excluded_queries,
        query_seconds,
    )
    return report


def decorrelation(B) -> float:
    """
    Mean absolute Pearson correlation between distinct code columns.

    Constant columns take no part; 0 when fewer than two columns vary.
    """
    bits = (B.bits if isinstance(B, CodeMatrix) else np.asarray(B)).astype(np.float64)
    varying = bits[:, bits.std(axis=0) > 0]
    if varying.shape[1] < 2:
        return 0.0
    correlation = np.corrcoef(varying, rowvar=False)
    off_diagonal = correlation[~np.eye(correlation.shape[0], dtype=bool)]
    return float(np.mean(np.abs(off_diagonal)))


def embedding_correlation(views: Sequence[ViewMatrix], params: Sequence[ViewParams]) -> float:
    """
    Mean correlation penalty ||C^T C / n||_F over the feature-view embeddings.

    Views are raw rows matching ``params``; label views take no part. 0 when
    no feature view is given.
    """
    values = [
        mcr_value(sigmoid_embed(as_trained(view, view_params), view_params))
        for view, view_params in zip(views, params)
        if not view.is_label_view
    ]
    return float(np.mean(values)) if values else 0.0

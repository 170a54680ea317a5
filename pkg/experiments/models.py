"""
Domain models for experiment runs.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

from core.exceptions import ContractViolationException
from evaluation.models import EvalReport
from hashing.models import ViewParams
from training.models import TrainConfig


MODEL_FORMAT_VERSION = 1

BetaValue = Union[float, str]


@dataclass(frozen=True)
class RunConfig:
    """
    Everything one command needs besides its paths.

    alpha, beta and gamma hold either one value for every view or one
    value per view in dataset order; an empty tuple means the configured
    defaults. A beta may be 'auto' (scale the view's peak to the target).
    """

    train: TrainConfig = field(default_factory=TrainConfig)
    alpha: Tuple[float, ...] = ()
    beta: Tuple[BetaValue, ...] = ()
    gamma: Tuple[float, ...] = ()
    radius: int = 2
    test_fraction: float = 0.05
    cutoff: Optional[int] = None


@dataclass(frozen=True, eq=False)
class HashingModel:
    """Trained parameters of every view plus what produced them."""

    params: List[ViewParams]
    view_ids: List[str]
    label_views: List[bool]
    config: TrainConfig
    provenance: Dict = field(default_factory=dict)
    format_version: int = MODEL_FORMAT_VERSION

    def __post_init__(self):
        if not len(self.params) == len(self.view_ids) == len(self.label_views):
            raise ContractViolationException("params, view ids and label flags must align")

    @property
    def code_length(self) -> int:
        return self.params[0].c

    @property
    def regularizer(self) -> str:
        return self.config.regularizer

    @property
    def variant(self) -> str:
        """'decorrelated' when any feature view is regularized, else 'unregularized'."""
        gammas = [p.gamma for p, is_label in zip(self.params, self.label_views) if not is_label]
        return 'decorrelated' if any(g > 0 for g in gammas) else 'unregularized'

    @property
    def feature_view_ids(self) -> List[str]:
        return [view_id for view_id, is_label in zip(self.view_ids, self.label_views) if not is_label]

    def params_by_view(self) -> Dict[str, ViewParams]:
        return dict(zip(self.view_ids, self.params))

    def view_entries(self) -> List[Dict]:
        """Per-view header entries in view order."""
        return [
            {
                'view_id': view_id,
                'is_label_view': is_label,
                'd': p.d,
                'c': p.c,
                'alpha': float(p.alpha),
                'beta': float(p.beta),
                'gamma': float(p.gamma),
                'prescaled': p.prescaled,
            }
            for view_id, is_label, p in zip(self.view_ids, self.label_views, self.params)
        ]


@dataclass(frozen=True)
class AblationGrid:
    """
    Values swept by an ablation; each grid varies alone with the others at defaults.

    alpha applies to the label view, beta to the feature views.
    """

    alpha: Tuple[float, ...] = ()
    beta: Tuple[float, ...] = ()
    gamma: Tuple[float, ...] = ()
    code_length: Tuple[int, ...] = ()
    seeds: Tuple[int, ...] = (0,)

    def __post_init__(self):
        if not self.seeds:
            raise ContractViolationException("an ablation needs at least one seed")

    @property
    def is_empty(self) -> bool:
        return not (self.alpha or self.beta or self.gamma or self.code_length)


@dataclass(frozen=True)
class AblationRow:
    """One trained model of an ablation and its comparison with the gamma=0 reference."""

    parameter: str
    value: float
    seed: int
    code_length: int
    reports: Tuple[EvalReport, ...]
    decorrelation: float
    embedding_correlation: float
    iterations: int
    final_objective: float
    delta_map: Tuple[float, ...] = ()
    delta_f1: Tuple[float, ...] = ()

"""
Domain models for the hashing model.

Plain value objects; nothing here is persisted through the ORM. Arrays are
stored read-only so that a constructed object cannot change under a caller.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import ConfigurationException, ContractViolationException, InputValidationException
from core.utils import as_finite_matrix, as_finite_vector


def _freeze(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ViewMatrix:
    """
    One modality's feature matrix: n samples (rows) by d features (columns).
    Row m of every view in a dataset describes the same sample m.
    """

    data: np.ndarray
    view_id: str = 'view'
    is_label_view: bool = False

    def __post_init__(self):
        data = as_finite_matrix(self.data, name=f"view '{self.view_id}'")
        if data.shape[0] < 1 or data.shape[1] < 1:
            raise ContractViolationException(f"view '{self.view_id}' is empty: shape {data.shape}")
        object.__setattr__(self, 'data', _freeze(data))

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]

    def take(self, rows) -> 'ViewMatrix':
        """Return a view restricted to the given row indices."""
        return replace(self, data=self.data[np.asarray(rows, dtype=np.int64)])

    def scaled(self, factor: float) -> 'ViewMatrix':
        """Return the view multiplied by a scalar."""
        return replace(self, data=self.data * factor)


@dataclass(frozen=True)
class ViewHyper:
    """Fixed per-view scalars: weight alpha, rescale beta, regularization gamma."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.001

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ConfigurationException(f"alpha must be positive, got {self.alpha}")
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise ConfigurationException(f"beta must be positive, got {self.beta}")
        if not np.isfinite(self.gamma) or self.gamma < 0:
            raise ConfigurationException(f"gamma must be non-negative, got {self.gamma}")


@dataclass(frozen=True, eq=False)
class ViewParams:
    """
    Learnable weights W (d x c) and bias v (c) of one view, plus its fixed scalars.

    When ``prescaled`` is set the view matrix was already multiplied by beta
    before training; beta is then kept for provenance only and the
    embedding uses a unit scale.
    """

    W: np.ndarray
    v: np.ndarray
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 0.001
    prescaled: bool = False

    def __post_init__(self):
        W = as_finite_matrix(self.W, name='W')
        v = as_finite_vector(self.v, name='v')
        if v.shape[0] != W.shape[1]:
            raise ContractViolationException(
                f"bias length {v.shape[0]} does not match code length {W.shape[1]}"
            )
        ViewHyper(self.alpha, self.beta, self.gamma)
        object.__setattr__(self, 'W', _freeze(W))
        object.__setattr__(self, 'v', _freeze(v))

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def c(self) -> int:
        return self.W.shape[1]

    @property
    def effective_beta(self) -> float:
        return 1.0 if self.prescaled else float(self.beta)

    @property
    def hyper(self) -> ViewHyper:
        return ViewHyper(self.alpha, self.beta, self.gamma)

    def with_weights(self, W: np.ndarray, v: np.ndarray) -> 'ViewParams':
        """Return a copy carrying new W and v."""
        return replace(self, W=W, v=v)


@dataclass(frozen=True, eq=False)
class CodeMatrix:
    """Binary code matrix B in {0,1}^(n x c), shared by all views."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2:
            raise ContractViolationException(f"code matrix must be 2-D, got shape {bits.shape}")
        if not np.all((bits == 0) | (bits == 1)):
            raise InputValidationException("code matrix entries must be 0 or 1")
        object.__setattr__(self, 'bits', _freeze(bits.astype(np.uint8)))

    @property
    def n(self) -> int:
        return self.bits.shape[0]

    @property
    def c(self) -> int:
        return self.bits.shape[1]

    def __eq__(self, other) -> bool:
        return isinstance(other, CodeMatrix) and np.array_equal(self.bits, other.bits)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class EmbeddingMatrix:
    """Real-valued relaxation C of the code matrix, every entry in (0,1)."""

    values: np.ndarray
    view_id: str = field(default='view')

    def __post_init__(self):
        values = as_finite_matrix(self.values, name='embedding')
        if not np.all((values > 0.0) & (values < 1.0)):
            raise InputValidationException("embedding entries must lie strictly inside (0,1)")
        object.__setattr__(self, 'values', _freeze(values))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def c(self) -> int:
        return self.values.shape[1]

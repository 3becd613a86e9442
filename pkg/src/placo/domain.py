"""Core types shared across the package.

Confusion matrices are indexed ``phi[given][true]``: entry ``(s, t)`` is the
probability that a human reports ``s`` when the truth is ``t``, so every
column is a distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SIMPLEX_TOL = 1e-9
RENORMALIZE_TOL = 1e-6
# Confusion entries are kept inside [PHI_CLAMP, 1 - PHI_CLAMP] wherever a log
# or an odds ratio is taken.
PHI_CLAMP = 1e-9


class ValidationError(ValueError):
    """Input violates a type invariant. ``field`` names the offending field."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class DimensionMismatch(ValidationError):
    pass


class NonSimplexProbabilities(ValidationError):
    pass


class LabelOutOfRange(ValidationError):
    pass


class EmptyPoolError(ValueError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def as_array(x) -> np.ndarray:
    """Unwrap a ProbVector/ConfusionMatrix, or coerce an array-like."""
    if isinstance(x, ProbVector):
        return x.probs
    if isinstance(x, ConfusionMatrix):
        return x.entries
    return np.asarray(x, dtype=float)


def clamp_phi(x):
    return np.clip(x, PHI_CLAMP, 1.0 - PHI_CLAMP)


def check_label(label, k: int, field: str = "label") -> int:
    if isinstance(label, (bool, np.bool_)) or not float(label).is_integer():
        raise LabelOutOfRange(f"{field}: {label!r} is not an integer label", field)
    label = int(label)
    if not 0 <= label < k:
        raise LabelOutOfRange(f"{field}: label {label} outside [0, {k})", field)
    return label


def check_simplex(p, field: str = "probs", renormalize: bool = False) -> np.ndarray:
    """Return ``p`` as a float array after checking it lies on the simplex.

    With ``renormalize`` a sum deviating by less than ``RENORMALIZE_TOL`` is
    rescaled instead of rejected (text-format rounding).
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise DimensionMismatch(f"{field}: expected a non-empty vector, got shape {p.shape}", field)
    if not np.all(np.isfinite(p)) or np.any(p < 0):
        raise NonSimplexProbabilities(f"{field}: entries must be finite and non-negative", field)
    dev = abs(p.sum() - 1.0)
    if dev <= SIMPLEX_TOL:
        return p
    if renormalize and dev < RENORMALIZE_TOL:
        return p / p.sum()
    raise NonSimplexProbabilities(f"{field}: entries sum to {p.sum():.12g}, not 1", field)


@dataclass(frozen=True)
class ProbVector:
    probs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "probs", _frozen(check_simplex(self.probs)))

    def __len__(self) -> int:
        return self.probs.size


@dataclass(frozen=True)
class ConfusionMatrix:
    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=float)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] == 0:
            raise DimensionMismatch(f"confusion matrix must be square, got shape {e.shape}", "phi")
        if not np.all(np.isfinite(e)) or np.any(e < 0) or np.any(e > 1):
            raise ValidationError("confusion matrix entries must lie in [0, 1]", "phi")
        bad = np.abs(e.sum(axis=0) - 1.0) > SIMPLEX_TOL
        if np.any(bad):
            raise NonSimplexProbabilities(
                f"confusion matrix columns {np.flatnonzero(bad).tolist()} do not sum to 1", "phi"
            )
        object.__setattr__(self, "entries", _frozen(e))

    @property
    def k(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, k: int) -> "ConfusionMatrix":
        return cls(np.eye(k))

    @classmethod
    def uniform(cls, k: int) -> "ConfusionMatrix":
        return cls(np.full((k, k), 1.0 / k))


@dataclass(frozen=True)
class HumanProfile:
    id: int
    phi: ConfusionMatrix
    accuracy: float
    cost: float
    diag_min: float = field(init=False)
    diag_max: float = field(init=False)

    def __post_init__(self):
        if not isinstance(self.phi, ConfusionMatrix):
            object.__setattr__(self, "phi", ConfusionMatrix(self.phi))
        if not 0.0 <= self.accuracy <= 1.0:
            raise ValidationError(f"accuracy {self.accuracy} outside [0, 1]", "accuracy")
        if not self.cost > 0:
            raise ValidationError(f"cost must be positive, got {self.cost}", "cost")
        d = np.diag(self.phi.entries)
        object.__setattr__(self, "diag_min", float(d.min()))
        object.__setattr__(self, "diag_max", float(d.max()))

    @property
    def k(self) -> int:
        return self.phi.k


@dataclass(frozen=True)
class InstanceRecord:
    """One task. Arrays are frozen but not checked here; see ``validate_instance``."""

    id: str
    model_probs: np.ndarray
    ground_truth: Optional[int] = None
    true_human_labels: Optional[tuple[int, ...]] = None
    annotation_freqs: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "model_probs", _frozen(as_array(self.model_probs)))
        if self.annotation_freqs is not None:
            object.__setattr__(self, "annotation_freqs", _frozen(self.annotation_freqs))
        if self.true_human_labels is not None:
            object.__setattr__(self, "true_human_labels", tuple(self.true_human_labels))


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of subset selection for one instance.

    ``fallback`` is set when the selector's own optimum was replaced by a
    fallback rule (singleton best human, or an empty team under a budget).
    """

    selected: tuple[int, ...]
    y_star: int
    values: np.ndarray
    total_cost: float
    fallback: bool = False


def validate_instance(rec: InstanceRecord, k: int, pool_size: int) -> None:
    """Raise a ValidationError if ``rec`` is inconsistent with ``k`` classes and the pool."""
    m = rec.model_probs
    if m.shape != (k,):
        raise DimensionMismatch(f"model_probs: expected {k} entries, got {m.size}", "model_probs")
    check_simplex(m, "model_probs")
    if rec.ground_truth is not None:
        check_label(rec.ground_truth, k, "ground_truth")
    if rec.annotation_freqs is not None:
        g = np.asarray(rec.annotation_freqs)
        if g.shape != (k,):
            raise DimensionMismatch(
                f"annotation_freqs: expected {k} entries, got {g.size}", "annotation_freqs"
            )
        check_simplex(g, "annotation_freqs")
    if rec.true_human_labels is not None:
        labels: Sequence = rec.true_human_labels
        if len(labels) != pool_size:
            raise DimensionMismatch(
                f"true_human_labels: expected {pool_size} labels, got {len(labels)}",
                "true_human_labels",
            )
        for lab in labels:
            check_label(lab, k, "true_human_labels")

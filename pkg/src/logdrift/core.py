"""Shared domain types and vector utilities.

Count vectors hold per-template line frequencies for one time window: one
slot per mined template, then two reserved "unknown" slots (unmatched line
with an error keyword, unmatched line without). Storage order is template
id order followed by unk_error, unk_normal.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from .errors import AllZeroVector, EmptySample, LengthMismatch

DEFAULT_ERROR_KEYWORDS = (
    "error",
    "exception",
    "fail",
    "failed",
    "failure",
    "fatal",
    "panic",
)


def _frozen_array(values, *, name: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must not be empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class CountVector:
    """Per-window frequency vector plus its window index.

    Elements are stored as doubles even for raw integer counts: both
    normalization and drift simulation produce fractional values.
    """

    values: np.ndarray
    t: int = 0

    def __post_init__(self):
        arr = _frozen_array(self.values, name="count vector")
        if np.any(arr < 0):
            raise ValueError("count vector elements must be nonnegative")
        if self.t < 0:
            raise ValueError("window index must be nonnegative")
        object.__setattr__(self, "values", arr)

    @property
    def total(self) -> float:
        return float(self.values.sum())

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ProbabilityVector:
    """Vector of slot probabilities summing to one."""

    probs: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.probs, name="probability vector")
        if np.any(arr < 0) or np.any(arr > 1):
            raise ValueError("probabilities must lie in [0, 1]")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValueError(f"probabilities must sum to 1, got {arr.sum()!r}")
        object.__setattr__(self, "probs", arr)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True, eq=False)
class DirichletState:
    """Strictly positive concentration vector of a Dirichlet distribution."""

    alpha: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.alpha, name="concentration vector")
        if np.any(arr <= 0):
            raise ValueError("concentration parameters must be strictly positive")
        object.__setattr__(self, "alpha", arr)

    def __len__(self) -> int:
        return len(self.alpha)


@dataclass(frozen=True)
class Template:
    id: int
    pattern: str


@dataclass(frozen=True)
class TemplateSet:
    """Ordered template patterns plus the error-keyword list.

    A set of size K implies count vectors of length K + 2; indices K + 1
    and K + 2 (1-based) are the unk_error and unk_normal slots.
    """

    templates: tuple[Template, ...]
    error_keywords: tuple[str, ...] = field(default=DEFAULT_ERROR_KEYWORDS)

    def __post_init__(self):
        templates = tuple(
            t if isinstance(t, Template) else Template(*t) for t in self.templates
        )
        object.__setattr__(self, "templates", templates)
        object.__setattr__(
            self, "error_keywords", tuple(str(k).lower() for k in self.error_keywords)
        )
        if not templates:
            raise ValueError("template set must contain at least one template")
        ids = [t.id for t in templates]
        if ids != list(range(1, len(templates) + 1)):
            raise ValueError("template ids must be contiguous from 1 to K")
        if any(not t.pattern for t in templates):
            raise ValueError("template patterns must be non-empty")

    @property
    def size(self) -> int:
        return len(self.templates)

    @property
    def vector_length(self) -> int:
        return self.size + 2

    @cached_property
    def _token_lists(self) -> tuple[tuple[str, ...], ...]:
        return tuple(tuple(t.pattern.split()) for t in self.templates)


def normalize(c: CountVector, kappa_count: float = 1.0) -> CountVector:
    """Rescale a count vector to sum to ``kappa_count``.

    Raises AllZeroVector for an empty window (zero total); callers decide
    whether to skip such windows.
    """
    if kappa_count <= 0:
        raise ValueError("kappa_count must be positive")
    total = float(c.values.sum())
    if total == 0.0:
        raise AllZeroVector(f"window {c.t}: cannot normalize an all-zero count vector")
    # Divide before scaling: the ratios are bounded by 1, so a tiny total
    # cannot overflow intermediate values.
    return replace(c, values=(c.values / total) * kappa_count)


def elementwise_mean(cs: list[CountVector]) -> ProbabilityVector:
    """Elementwise average of normalized count vectors.

    Inputs are expected to each sum to one (normalized); the mean of such
    vectors is again a probability vector.
    """
    if not cs:
        raise EmptySample("elementwise_mean requires at least one vector")
    lengths = {len(c) for c in cs}
    if len(lengths) > 1:
        raise LengthMismatch(f"mixed vector lengths {sorted(lengths)}")
    mean = np.mean([c.values for c in cs], axis=0)
    return ProbabilityVector(mean)

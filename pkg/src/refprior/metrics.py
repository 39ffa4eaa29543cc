"""Grid-level accuracy measures: EARP, AMRP and empirical coverage."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from refprior.errors import DomainError


@dataclass(frozen=True)
class GridEntry:
    theta: float
    estimate: float
    half_width: float
    scaled_ref: float  # fitted constant times the reference prior at theta

    @property
    def lo(self) -> float:
        return self.estimate - self.half_width

    @property
    def hi(self) -> float:
        return self.estimate + self.half_width


@dataclass(frozen=True)
class GridEvaluation:
    entries: tuple[GridEntry, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if not self.entries:
            raise DomainError("a grid evaluation needs at least one entry")

    @property
    def R(self) -> int:
        return len(self.entries)

    @classmethod
    def from_arrays(cls, theta, estimate, half_width, scaled_ref) -> "GridEvaluation":
        return cls(tuple(
            GridEntry(float(t), float(e), float(h), float(s))
            for t, e, h, s in zip(theta, estimate, half_width, scaled_ref, strict=True)
        ))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.entries], dtype=float)


def _ref(grid: GridEvaluation) -> np.ndarray:
    ref = grid.column("scaled_ref")
    if not np.all(ref > 0):
        raise DomainError("scaled reference values must be positive")
    return ref


def earp(grid: GridEvaluation) -> float:
    """Mean of |scaled_ref - estimate| / scaled_ref."""
    ref = _ref(grid)
    return float(np.mean(np.abs(ref - grid.column("estimate")) / ref))


def amrp(grid: GridEvaluation) -> float:
    """Mean of half_width / scaled_ref."""
    ref = _ref(grid)
    return float(np.mean(grid.column("half_width") / ref))


def coverage(grid: GridEvaluation) -> float:
    """Fraction of points whose open interval (lo, hi) contains scaled_ref."""
    ref = grid.column("scaled_ref")
    lo = grid.column("estimate") - grid.column("half_width")
    hi = grid.column("estimate") + grid.column("half_width")
    return float(np.mean((lo < ref) & (ref < hi)))


def summarize(grid: GridEvaluation) -> dict[str, float]:
    return {"CE": coverage(grid), "AMRP": amrp(grid), "EARP": earp(grid)}


def grid_from_records(theta: Sequence[float], estimate, half_width, constant: float, reference) -> GridEvaluation:
    """GridEvaluation with scaled_ref = constant * reference(theta)."""
    theta = np.asarray(theta, dtype=float)
    ref = constant * np.asarray(reference(theta), dtype=float)
    return GridEvaluation.from_arrays(theta, estimate, half_width, ref)

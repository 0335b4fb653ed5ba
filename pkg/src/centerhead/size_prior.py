"""Ship-length prior: rescore detections by how plausible their length is.

Each class has a mean length in meters; the detected length is assumed
normal around it with standard deviation proportional to the mean.  The
prior probability is the two-sided Gaussian tail beyond the observed
deviation, so it is exactly 1 for an on-prior length and falls off
symmetrically.  Multiplying it into the detector score never increases a
score and sharpens class confidence on GSD-normalized imagery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

__all__ = [
    "ClassLengthTable",
    "size_prior_probability",
    "refine_scores",
    "gaussian_tail_quadrature",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class ClassLengthTable:
    """Per-class mean ship lengths plus the shared variance coefficient.

    ``names[i]`` and ``mean_lengths_m[i]`` describe class id ``i``.
    ``coeff`` scales the mean into the standard deviation; ``gsd`` converts
    detected pixel lengths into meters.
    """

    names: tuple
    mean_lengths_m: tuple
    coeff: float = 0.2
    gsd: float = 1.0

    def __post_init__(self):
        if len(self.names) != len(self.mean_lengths_m):
            raise ValueError("names and mean_lengths_m must have equal length")
        if len(self.names) == 0:
            raise ValueError("class table must not be empty")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate class names")
        if any(length <= 0 for length in self.mean_lengths_m):
            raise ValueError("mean lengths must be positive")
        if self.coeff <= 0:
            raise ValueError(f"variance coefficient must be positive, got {self.coeff}")
        if self.gsd <= 0:
            raise ValueError(f"gsd must be positive, got {self.gsd}")

    @property
    def num_classes(self) -> int:
        return len(self.names)

    def id_of(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown class name: {name!r}") from None

    def mean_length(self, class_id: int) -> float:
        if not 0 <= class_id < len(self.mean_lengths_m):
            raise KeyError(f"unknown class id: {class_id}")
        return self.mean_lengths_m[class_id]


def size_prior_probability(length_m: float, mean_length_m: float, coeff: float = 0.2) -> float:
    """Probability of drawing a deviation at least as large as observed.

    Two-sided tail of a normal with mean ``mean_length_m`` and standard
    deviation ``coeff * mean_length_m``, evaluated at ``length_m``:
    1 at the mean, strictly decreasing in the deviation, never 0.
    """
    if length_m < 0:
        raise ValueError(f"length must be non-negative, got {length_m}")
    delta = mean_length_m * coeff
    z = abs(length_m - mean_length_m) / delta
    return math.erfc(z / _SQRT2)


def gaussian_tail_quadrature(z: float, upper: float = 12.0, steps: int = 100000) -> float:
    """Two-sided standard-normal tail mass beyond |z|, by trapezoid rule.

    Independent numerical oracle for :func:`size_prior_probability`; slow
    and only used by tests and the selftest command.
    """
    z = abs(z)
    if z >= upper:
        return 0.0
    xs = [z + (upper - z) * i / steps for i in range(steps + 1)]
    ys = [math.exp(-0.5 * x * x) / _SQRT2PI for x in xs]
    one_sided = sum((ys[i] + ys[i + 1]) * 0.5 for i in range(steps)) * (upper - z) / steps
    return 2.0 * one_sided


def refine_scores(detections, table: ClassLengthTable):
    """Multiply every detection score by its class length prior.

    Length in meters is the box's long side times the table's GSD.  Order
    and geometry are untouched; scores can only stay or shrink.  Raises
    ``KeyError`` for a detection whose class is not in the table.
    """
    out = []
    for det in detections:
        if not 0 <= det.class_id < table.num_classes:
            raise KeyError(f"unknown class id: {det.class_id}")
        p = size_prior_probability(det.h * table.gsd, table.mean_lengths_m[det.class_id], table.coeff)
        out.append(replace(det, score=det.score * p))
    return out

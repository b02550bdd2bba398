"""Sample and population trimmed/winsorized moments.

The sample side works on order statistics with floor-based trimming
counts; the population side integrates the composite H over the retained
probability window, with edge atoms in the winsorized case.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, EmptyWindowError, SampleFormatError
from .models import CompositeH, HTransform
from .quadrature import integrate

__all__ = [
    "Mode",
    "MomentSpec",
    "floor_count",
    "sample_moment",
    "sample_trimmed_moment",
    "sample_winsorized_moment",
    "population_moment",
    "population_trimmed_moment",
    "population_winsorized_moment",
    "load_sample",
]

# Slack absorbing float artifacts like 10 * 0.1 != 1 in n*a.
_FLOOR_SLACK = 1e-12


class Mode(str, enum.Enum):
    MTM = "mtm"
    MWM = "mwm"


@dataclass(frozen=True)
class MomentSpec:
    """One coordinate of the estimator: transform + trimming proportions."""

    transform: HTransform
    a: float = 0.0
    b: float = 0.0
    mode: Mode = Mode.MTM

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise DomainError(f"proportions must be >= 0, got a={self.a}, b={self.b}")
        if self.a + self.b >= 1:
            raise DomainError(f"a+b must be < 1, got a={self.a}, b={self.b}")

    @property
    def b_bar(self) -> float:
        return 1.0 - self.b

    @property
    def retained(self) -> float:
        return 1.0 - self.a - self.b


def floor_count(n: int, proportion: float) -> int:
    """Largest integer m with m <= n * proportion, stable against float
    representation of the product."""
    return int(math.floor(n * proportion + _FLOOR_SLACK))


def _window(n: int, spec: MomentSpec) -> tuple[int, int]:
    """Zero-based half-open slice [lo, hi) of retained order statistics."""
    lo = floor_count(n, spec.a)
    hi = n - floor_count(n, spec.b)
    if hi - lo < 1:
        raise EmptyWindowError(
            f"trimming (a={spec.a}, b={spec.b}) leaves no observations of n={n}"
        )
    return lo, hi


def sample_trimmed_moment(values: Sequence[float], spec: MomentSpec) -> float:
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 1:
        raise EmptyWindowError("empty sample")
    lo, hi = _window(n, spec)
    h = spec.transform.value
    return sum(h(v) for v in x[lo:hi]) / (hi - lo)


def sample_winsorized_moment(values: Sequence[float], spec: MomentSpec) -> float:
    x = np.sort(np.asarray(values, dtype=float))
    n = x.size
    if n < 1:
        raise EmptyWindowError("empty sample")
    lo, hi = _window(n, spec)
    h = spec.transform.value
    core = sum(h(v) for v in x[lo:hi])
    return (lo * h(x[lo]) + core + (n - hi) * h(x[hi - 1])) / n


def sample_moment(values: Sequence[float], spec: MomentSpec) -> float:
    if spec.mode is Mode.MTM:
        return sample_trimmed_moment(values, spec)
    return sample_winsorized_moment(values, spec)


def population_trimmed_moment(ch: CompositeH, spec: MomentSpec) -> float:
    return integrate(ch.value, spec.a, spec.b_bar) / spec.retained


def population_winsorized_moment(ch: CompositeH, spec: MomentSpec) -> float:
    # Atom weight 0 contributes exactly 0; do not evaluate H there, the
    # endpoint may be unbounded.
    total = integrate(ch.value, spec.a, spec.b_bar)
    if spec.a > 0:
        total += spec.a * ch.value(spec.a)
    if spec.b > 0:
        total += spec.b * ch.value(spec.b_bar)
    return total


def population_moment(ch: CompositeH, spec: MomentSpec) -> float:
    if spec.mode is Mode.MTM:
        return population_trimmed_moment(ch, spec)
    return population_winsorized_moment(ch, spec)


def load_sample(path: str | Path) -> np.ndarray:
    """Read a single-column CSV or whitespace-delimited text file.

    Blank lines and '#' comment lines are skipped; anything else that
    fails to parse as one number per row is rejected with its line number.
    """
    path = Path(path)
    values: list[float] = []
    bad: list[int] = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            token = line.split(",")[0].strip() if "," in line else line.split()[0]
            try:
                values.append(float(token))
            except ValueError:
                bad.append(lineno)
    if bad:
        raise SampleFormatError(
            f"{path}: non-numeric rows at lines {bad}"
        )
    return np.asarray(values, dtype=float)

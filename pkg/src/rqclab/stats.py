from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binomtest


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error."""

    estimate: float
    stderr: float
    trials: int

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - target) <= sigmas * self.stderr + 1e-12

    def __iter__(self):
        # allows ``est, err = mc_moment(...)``
        yield self.estimate
        yield self.stderr


def mean_stderr(samples: np.ndarray) -> Estimate:
    samples = np.asarray(samples, dtype=float)
    k = samples.size
    if k == 0:
        raise ValueError("no samples")
    mean = float(np.mean(samples))
    err = float(np.std(samples, ddof=1) / np.sqrt(k)) if k > 1 else 0.0
    return Estimate(mean, err, k)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)

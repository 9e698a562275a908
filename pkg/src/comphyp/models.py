"""Gaussian distribution models used for data generation and as oracles."""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class Gaussian:
    """Isotropic Gaussian ``N(mean, variance * I)``.

    ``mean`` is stored as a tuple so instances are hashable and can be used
    as canonical keys by the simulator.
    """

    mean: Tuple[float, ...]
    variance: float = 1.0

    def __init__(self, mean, variance=1.0):
        m = np.atleast_1d(np.asarray(mean, dtype=float))
        if m.ndim != 1 or m.size == 0:
            raise ValueError("mean must be a scalar or a non-empty vector")
        if not np.isfinite(m).all():
            raise ValueError("mean must be finite")
        if not (np.isfinite(variance) and variance > 0):
            raise ValueError(f"variance must be positive, got {variance!r}")
        object.__setattr__(self, "mean", tuple(float(v) for v in m))
        object.__setattr__(self, "variance", float(variance))

    @property
    def dim(self) -> int:
        return len(self.mean)

    @property
    def std(self) -> float:
        return float(np.sqrt(self.variance))

    @property
    def mean_array(self) -> np.ndarray:
        return np.asarray(self.mean, dtype=float)

    def key(self):
        return (self.mean, self.variance)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw ``n`` points as an ``(n, d)`` array."""
        return self.mean_array + self.std * rng.standard_normal((n, self.dim))

    def logpdf(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1, self.dim)
        sq = np.sum((y - self.mean_array) ** 2, axis=1)
        return -0.5 * self.dim * np.log(2 * np.pi * self.variance) - sq / (2 * self.variance)

    def cdf(self, a):
        if self.dim != 1:
            raise ValueError("cdf is only defined for scalar Gaussians")
        return stats.norm.cdf(a, loc=self.mean[0], scale=self.std)

    def __repr__(self):
        mu = self.mean[0] if self.dim == 1 else list(self.mean)
        return f"Gaussian(mean={mu!r}, variance={self.variance!r})"


def check_same_dim(models: Sequence[Gaussian]) -> int:
    dims = {m.dim for m in models}
    if len(dims) != 1:
        raise ValueError(f"models have mixed dimensions {sorted(dims)}")
    return dims.pop()

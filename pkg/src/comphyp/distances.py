"""Kernels, the unbiased MMD^2 estimator, empirical CDFs and the KS statistic.

Sample sequences are plain numpy arrays. A sequence of ``n`` scalar
observations may be passed as shape ``(n,)``; vector observations use shape
``(n, d)``. :func:`as_sequence` normalizes both to ``(n, d)``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ._golden import golden_max
from .models import Gaussian


def as_sequence(x, min_len=1, name="sequence") -> np.ndarray:
    """Return ``x`` as a float ``(n, d)`` array, validating its length."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr[:, None]
    elif arr.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise ValueError(f"{name} has zero dimension")
    if arr.shape[0] < min_len:
        raise ValueError(f"{name} needs at least {min_len} points, got {arr.shape[0]}")
    return arr


def _check_dims(x, y):
    if x.shape[-1] != y.shape[-1]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {y.shape[-1]}")


# -- kernels -----------------------------------------------------------------

@dataclass(frozen=True)
class GaussianRBF:
    """``k(x, y) = exp(-||x - y||^2 / (2 h^2))``; bounded by 1."""

    bandwidth: float = 1.0

    def __post_init__(self):
        if not (self.bandwidth > 0 and np.isfinite(self.bandwidth)):
            raise ValueError(f"bandwidth must be positive, got {self.bandwidth!r}")

    @property
    def bound(self) -> float:
        return 1.0

    def gram(self, x, y):
        """Kernel matrix over the last two axes: ``(..., n, d), (..., m, d) -> (..., n, m)``."""
        if x.shape[-1] == 1:
            sq = x[..., :, None, 0] - y[..., None, :, 0]
            np.square(sq, out=sq)
        else:
            diff = x[..., :, None, :] - y[..., None, :, :]
            sq = np.einsum("...k,...k->...", diff, diff)
        sq *= -0.5 / self.bandwidth ** 2
        return np.exp(sq, out=sq)


@dataclass(frozen=True)
class Constant:
    """``k(x, y) = level`` everywhere."""

    level: float = 1.0

    def __post_init__(self):
        if not (self.level >= 0 and np.isfinite(self.level)):
            raise ValueError(f"level must be nonnegative, got {self.level!r}")

    @property
    def bound(self) -> float:
        return float(self.level)

    def gram(self, x, y):
        shape = np.broadcast_shapes(x.shape[:-2], y.shape[:-2]) + (x.shape[-2], y.shape[-2])
        return np.full(shape, float(self.level))


def kernel_eval(k, x, y) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(k.gram(x[None, :], y[None, :])[0, 0])


# -- MMD ---------------------------------------------------------------------

def mmd2_unbiased(k, x, y) -> float:
    """Unbiased u-statistic estimate of MMD^2 between two sequences.

    Within-sequence terms average the off-diagonal Gram entries, the cross
    term averages the full ``n x m`` cross-Gram with weight ``2/(nm)``, so
    sequences of different lengths are fine. Sums are correctly rounded
    (``math.fsum``), which makes the value exactly symmetric in ``x, y`` and
    exactly invariant under reordering of the points.
    """
    x = as_sequence(x, 2, "x")
    y = as_sequence(y, 2, "y")
    _check_dims(x, y)
    n, m = len(x), len(y)
    kxx = k.gram(x, x)
    kyy = k.gram(y, y)
    kxy = k.gram(x, y)
    xx = (math.fsum(kxx[~np.eye(n, dtype=bool)])) / (n * (n - 1))
    yy = (math.fsum(kyy[~np.eye(m, dtype=bool)])) / (m * (m - 1))
    xy = math.fsum(kxy.ravel()) / (n * m)
    return (xx + yy) - 2.0 * xy


def _offdiag_sum(k, x):
    """Sum of off-diagonal Gram entries over the last two axes (upper triangle, doubled)."""
    iu, ju = np.triu_indices(x.shape[-2], 1)
    return 2.0 * k.gram(x[..., iu, None, :], x[..., ju, None, :])[..., 0, 0].sum(axis=-1)


def mmd2_stack(k, x, y) -> np.ndarray:
    """Vectorized MMD^2 over leading batch axes.

    ``x`` has shape ``(..., n, d)`` and ``y`` shape ``(..., m, d)``; the
    batch axes broadcast. Uses ordinary floating-point sums, so it agrees
    with :func:`mmd2_unbiased` to rounding error only.
    """
    n, m = x.shape[-2], y.shape[-2]
    if n < 2 or m < 2:
        raise ValueError("MMD^2 needs sequences of length >= 2")
    _check_dims(x, y)
    xx = _offdiag_sum(k, x) / (n * (n - 1))
    yy = _offdiag_sum(k, y) / (m * (m - 1))
    xy = k.gram(x, y).sum(axis=(-2, -1)) / (n * m)
    return xx + yy - 2.0 * xy


def _expected_rbf(h, p: Gaussian, q: Gaussian, same=False):
    """E k(X, Y) for independent X ~ p, Y ~ q under a Gaussian RBF kernel."""
    s2 = h * h + p.variance + q.variance
    d = p.dim
    delta = 0.0 if same else float(np.sum((p.mean_array - q.mean_array) ** 2))
    return (h * h / s2) ** (d / 2.0) * math.exp(-delta / (2.0 * s2))


def mmd2_population(k, p, q, mc_draws=None, rng=None) -> float:
    """Population MMD^2 between two distributions.

    Closed form for Gaussian models under a Gaussian RBF kernel; a constant
    kernel gives exactly 0. Any other combination needs ``mc_draws`` (and
    optionally ``rng``) for Monte Carlo integration.
    """
    if isinstance(p, Gaussian) and isinstance(q, Gaussian):
        if p.dim != q.dim:
            raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
        if isinstance(k, GaussianRBF):
            h = k.bandwidth
            return (_expected_rbf(h, p, p, same=True) + _expected_rbf(h, q, q, same=True)
                    - 2.0 * _expected_rbf(h, p, q))
        if isinstance(k, Constant):
            return 0.0
    if mc_draws is None:
        raise ValueError(
            f"no closed form for {type(k).__name__} with {type(p).__name__}/{type(q).__name__}; "
            "pass mc_draws for Monte Carlo integration")
    return mmd2_monte_carlo(k, p, q, mc_draws, rng)[0]


def mmd2_monte_carlo(k, p, q, draws, rng=None, chunk=100_000):
    """Monte Carlo estimate of population MMD^2 and its standard error.

    Each draw uses fresh independent pairs ``(x, x')``, ``(y, y')``, ``(x, y)``
    so the per-draw summand ``k(x,x') + k(y,y') - 2 k(x,y)`` is an unbiased
    sample of MMD^2.
    """
    rng = np.random.default_rng(rng)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < draws:
        b = min(chunk, draws - done)
        x1, x2, x3 = (p.sample(rng, b) for _ in range(3))
        y1, y2, y3 = (q.sample(rng, b) for _ in range(3))
        vals = (_pairwise(k, x1, x2) + _pairwise(k, y1, y2) - 2.0 * _pairwise(k, x3, y3))
        total += vals.sum()
        total_sq += np.square(vals).sum()
        done += b
    mean = total / draws
    var = max(total_sq / draws - mean * mean, 0.0)
    return mean, math.sqrt(var / draws)


def _pairwise(k, a, b):
    return k.gram(a[:, None, :], b[:, None, :])[:, 0, 0]


# -- empirical CDF and KS ----------------------------------------------------

def _scalar(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"{name} must be scalar data, got dimension {arr.shape[1]}")
        arr = arr[:, 0]
    elif arr.ndim == 0:
        arr = arr.reshape(1)
    elif arr.ndim != 1:
        raise ValueError(f"{name} must be a 1-D sequence")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    return arr


class EmpiricalCdf:
    """Right-continuous step function ``F(a) = #{x_i <= a} / n``."""

    def __init__(self, values):
        self.sorted_values = np.sort(_scalar(values, "values"))
        self.n = self.sorted_values.size

    def __call__(self, a):
        return np.searchsorted(self.sorted_values, a, side="right") / self.n

    def __repr__(self):
        return f"EmpiricalCdf(n={self.n})"


def ks_distance(x, y) -> float:
    """Exact two-sample KS statistic ``sup_a |F_x(a) - F_y(a)|``.

    Both CDFs are step functions, so the supremum is attained at a sample
    point. We merge the two sorted samples and evaluate the difference at
    every distinct value after all tied points have been counted.
    """
    fx, fy = EmpiricalCdf(x), EmpiricalCdf(y)
    grid = np.unique(np.concatenate([fx.sorted_values, fy.sorted_values]))
    return float(np.max(np.abs(fx(grid) - fy(grid))))


def ks_stack(x, y) -> np.ndarray:
    """Vectorized KS statistic for scalar data.

    ``x`` has shape ``(..., n)`` and ``y`` shape ``(..., m)`` with
    broadcastable batch axes. Works on integer counts after a joint sort, so
    the result equals :func:`ks_distance` bit for bit.
    """
    n, m = x.shape[-1], y.shape[-1]
    if n == 0 or m == 0:
        raise ValueError("KS needs nonempty sequences")
    batch = np.broadcast_shapes(x.shape[:-1], y.shape[:-1])
    z = np.concatenate([np.broadcast_to(x, batch + (n,)), np.broadcast_to(y, batch + (m,))], axis=-1)
    order = np.argsort(z, axis=-1, kind="stable")
    zs = np.take_along_axis(z, order, axis=-1)
    cx = np.cumsum(order < n, axis=-1)
    cy = np.arange(1, n + m + 1) - cx
    diff = np.abs(cx / n - cy / m)
    # only the last point of each run of ties is a valid evaluation point
    tied = np.zeros(zs.shape, dtype=bool)
    tied[..., :-1] = zs[..., :-1] == zs[..., 1:]
    diff[tied] = 0.0
    return diff.max(axis=-1)


def ks_population(p: Gaussian, q: Gaussian, tol=1e-10, grid_points=2049) -> float:
    """``sup_a |F_p(a) - F_q(a)|`` for two scalar Gaussians.

    A coarse grid over ``[min mu - 6 max sigma, max mu + 6 max sigma]``
    locates the peak of ``|F_p - F_q|``; golden-section search then refines
    it inside the neighbouring grid cells.
    """
    if p.dim != 1 or q.dim != 1:
        raise ValueError("population KS needs scalar models")
    if p == q:
        return 0.0
    mu = (p.mean[0], q.mean[0])
    sd = max(p.std, q.std)
    lo, hi = min(mu) - 6 * sd, max(mu) + 6 * sd
    f = lambda a: abs(float(stats.norm.cdf(a, mu[0], p.std) - stats.norm.cdf(a, mu[1], q.std)))
    grid = np.linspace(lo, hi, grid_points)
    vals = np.abs(stats.norm.cdf(grid, mu[0], p.std) - stats.norm.cdf(grid, mu[1], q.std))
    i = int(np.argmax(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, grid_points - 1)]
    _, best = golden_max(f, a, b, tol=tol)
    return max(best, float(vals[i]))

"""Closed-form theory: separations, Chernoff information, discrimination
rates, finite-n error bounds and the Fano ceiling.

Chernoff information and KL divergences are computed in nats; every rate,
capacity or ceiling returned to callers is in bits per sample.
"""

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ._golden import golden_max
from .distances import GaussianRBF, ks_population, mmd2_population
from .models import Gaussian

LOG2E = math.log2(math.e)

MMD2 = "mmd2"
KS = "ks"


@dataclass(frozen=True)
class SeparationPair:
    """Largest within-cluster diameter and smallest between-cluster distance."""

    d_inner: float
    d_outer: float
    metric: str

    @property
    def gap(self) -> float:
        return self.d_outer - self.d_inner

    @property
    def premise_holds(self) -> bool:
        return self.d_inner < self.d_outer


def cluster_separations(clusters: Sequence[Sequence[Gaussian]], metric=MMD2, kernel=None) -> SeparationPair:
    """Population ``(D_I, D_O)`` for a finite set of Gaussian clusters.

    A violated separation premise (``D_I >= D_O``) is reported through
    :attr:`SeparationPair.premise_holds`; the values are never clamped.
    """
    if len(clusters) < 2:
        raise ValueError("cluster separations need at least 2 clusters")
    if any(len(c) == 0 for c in clusters):
        raise ValueError("every cluster needs at least one model")
    if metric == MMD2:
        k = kernel if kernel is not None else GaussianRBF(1.0)
        dist = lambda p, q: mmd2_population(k, p, q)
    elif metric == KS:
        dist = ks_population
    else:
        raise ValueError(f"unknown metric {metric!r}")

    d_inner = 0.0
    for members in clusters:
        for p, q in itertools.combinations(members, 2):
            d_inner = max(d_inner, dist(p, q))
    d_outer = math.inf
    for a, b in itertools.combinations(range(len(clusters)), 2):
        for p in clusters[a]:
            for q in clusters[b]:
                d_outer = min(d_outer, dist(p, q))
    return SeparationPair(d_inner, d_outer, metric)


def _log_bhattacharyya(p: Gaussian, q: Gaussian, t: float) -> float:
    """``log int p^(1-t) q^t`` for isotropic Gaussians (nats)."""
    v1, v2 = p.variance, q.variance
    mix = (1.0 - t) * v2 + t * v1
    delta = float(np.sum((p.mean_array - q.mean_array) ** 2))
    d = p.dim
    return (0.5 * d * (t * math.log(v1) + (1.0 - t) * math.log(v2) - math.log(mix))
            - t * (1.0 - t) * delta / (2.0 * mix))


def chernoff_information(p: Gaussian, q: Gaussian, tol=1e-8) -> float:
    """``max_t -log int p^(1-t) q^t`` in nats, by golden-section search on t."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    if p == q:
        return 0.0
    _, best = golden_max(lambda t: -_log_bhattacharyya(p, q, t), 0.0, 1.0, tol=tol)
    return max(best, 0.0)


def rate_parametric(models: Sequence[Gaussian]) -> float:
    if len(models) < 2:
        raise ValueError("need at least 2 models")
    c = min(chernoff_information(p, q) for p, q in itertools.combinations(models, 2))
    return LOG2E * c


def rate_mmd(sep: SeparationPair, kernel_bound=1.0, length_ratio=1.0) -> float:
    if sep.metric != MMD2:
        raise ValueError("rate_mmd needs an MMD^2 separation pair")
    if kernel_bound <= 0:
        raise ValueError("kernel bound must be positive")
    if not sep.premise_holds:
        return 0.0
    return length_ratio * LOG2E / (96.0 * kernel_bound ** 2) * sep.gap ** 2


def rate_ks(sep: SeparationPair, length_ratio=1.0) -> float:
    if sep.metric != KS:
        raise ValueError("rate_ks needs a KS separation pair")
    if not sep.premise_holds:
        return 0.0
    return length_ratio * LOG2E / 8.0 * sep.gap ** 2


def length_ratio(n, gamma_min) -> float:
    return min(1.0, gamma_min / n)


def log2_error_bound(test, n, rate, sep: SeparationPair, kernel_bound=1.0, gamma_min=None) -> float:
    """Base-2 log of the unclamped error bound; see :func:`error_bound`."""
    n_eff = n if gamma_min is None else min(n, gamma_min)
    gap2 = sep.gap ** 2 if sep.premise_holds else 0.0
    if test == "mmd":
        if sep.metric != MMD2:
            raise ValueError("MMD bound needs an MMD^2 separation pair")
        return n * rate - n_eff * gap2 * LOG2E / (96.0 * kernel_bound ** 2)
    if test == "ks":
        if sep.metric != KS:
            raise ValueError("KS bound needs a KS separation pair")
        return math.log2(6.0) + n * rate - n_eff * gap2 * LOG2E / 8.0
    raise ValueError(f"unknown test {test!r}")


def error_bound(test, n, rate, sep: SeparationPair, kernel_bound=1.0, gamma_min=None) -> float:
    """Upper bound on the average error probability, clamped to 1.

    ``rate`` is the discrimination rate D (so there are ``2^(nD)``
    hypotheses). When ``gamma_min`` is given, the exponential term uses
    ``min(n, gamma_min)`` samples.
    """
    lg = log2_error_bound(test, n, rate, sep, kernel_bound, gamma_min)
    return 1.0 if lg >= 0 else 2.0 ** lg


# -- KL divergence and the Fano ceiling ---------------------------------------

def kl_gaussian(p: Gaussian, q: Gaussian) -> float:
    """KL(p || q) in nats for isotropic Gaussians."""
    if p.dim != q.dim:
        raise ValueError(f"dimension mismatch: {p.dim} vs {q.dim}")
    r = p.variance / q.variance
    delta = float(np.sum((p.mean_array - q.mean_array) ** 2))
    return 0.5 * p.dim * (r - 1.0 - math.log(r)) + delta / (2.0 * q.variance)


def kl_partition(x, y, cells=None) -> float:
    """Data-dependent partition estimate of KL(P || Q) in nats.

    The real line is cut into ``cells`` (default ``ceil(sqrt(len(y)))``)
    equal-mass intervals at the order statistics of the ``y`` sample, and
    the KL divergence between the two histograms is returned. A cell that
    holds no ``y`` point (possible only with ties) has one pseudo-count added
    to both histograms. Negative estimates are clamped to 0.
    """
    x = np.sort(np.asarray(x, dtype=float).ravel())
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if x.size == 0 or y.size == 0:
        raise ValueError("KL estimation needs nonempty samples")
    m = y.size
    t = cells if cells is not None else math.ceil(math.sqrt(m))
    t = max(1, min(int(t), m))
    # interior edges at the order statistics splitting y into t groups
    pos = (np.arange(1, t) * m) // t
    edges = 0.5 * (y[pos - 1] + y[pos])
    kx = np.bincount(np.searchsorted(edges, x, side="right"), minlength=t).astype(float)
    ky = np.bincount(np.searchsorted(edges, y, side="right"), minlength=t).astype(float)
    empty = ky == 0
    kx[empty] += 1.0
    ky[empty] += 1.0
    px = kx / kx.sum()
    py = ky / ky.sum()
    nz = px > 0
    est = float(np.sum(px[nz] * np.log(px[nz] / py[nz])))
    return max(est, 0.0)


def fano_ceiling(models: Sequence[Gaussian]) -> float:
    """Mean pairwise KL divergence over ordered hypothesis pairs, in bits.

    The pairs ``(h, h')`` range over all ``H^2`` ordered pairs, diagonal
    included.
    """
    if len(models) < 2:
        raise ValueError("the Fano ceiling needs at least 2 hypotheses")
    total = math.fsum(kl_gaussian(p, q) for p in models for q in models)
    return LOG2E * total / len(models) ** 2


def fano_ceiling_empirical(sequences: Sequence, cells=None) -> float:
    """Fano ceiling from one sample sequence per hypothesis, in bits."""
    if len(sequences) < 2:
        raise ValueError("the Fano ceiling needs at least 2 hypotheses")
    total = 0.0
    for a in range(len(sequences)):
        for b in range(len(sequences)):
            if a != b:
                total += kl_partition(sequences[a], sequences[b], cells)
    return LOG2E * total / len(sequences) ** 2


# -- report -------------------------------------------------------------------

@dataclass
class BoundsReport:
    sep_mmd: SeparationPair
    sep_ks: Optional[SeparationPair]
    chernoff_min: float  # nats
    rate_mmd: float
    rate_ks: float
    rate_parametric: float
    fano_ceiling: float
    length_ratio: float
    kernel_bound: float
    warnings: List[str] = field(default_factory=list)


def bounds_report(clusters: Sequence[Sequence[Gaussian]], kernel=None, ratio=1.0) -> BoundsReport:
    """Population-level bounds for a clustered Gaussian problem.

    The parametric rate and the Fano ceiling treat each member distribution
    as its own hypothesis; Chernoff information is minimized over member
    pairs drawn from different clusters.
    """
    kernel = kernel if kernel is not None else GaussianRBF(1.0)
    members = [p for c in clusters for p in c]
    scalar = all(p.dim == 1 for p in members)
    sep_mmd = cluster_separations(clusters, MMD2, kernel)
    sep_ks = cluster_separations(clusters, KS) if scalar else None
    warnings = []
    if not sep_mmd.premise_holds:
        warnings.append(f"MMD^2 separation premise violated: D_I={sep_mmd.d_inner:.6g} >= D_O={sep_mmd.d_outer:.6g}")
    if sep_ks is not None and not sep_ks.premise_holds:
        warnings.append(f"KS separation premise violated: D_I={sep_ks.d_inner:.6g} >= D_O={sep_ks.d_outer:.6g}")
    cross = [(p, q) for a, b in itertools.combinations(range(len(clusters)), 2)
             for p in clusters[a] for q in clusters[b]]
    c_min = min(chernoff_information(p, q) for p, q in cross)
    k_bound = kernel.bound
    return BoundsReport(
        sep_mmd=sep_mmd,
        sep_ks=sep_ks,
        chernoff_min=c_min,
        rate_mmd=rate_mmd(sep_mmd, k_bound, ratio) if k_bound > 0 else 0.0,
        rate_ks=rate_ks(sep_ks, ratio) if sep_ks is not None else 0.0,
        rate_parametric=LOG2E * c_min,
        fano_ceiling=fano_ceiling(members),
        length_ratio=ratio,
        kernel_bound=k_bound,
        warnings=warnings,
    )


def bound_curves(report: BoundsReport, n_grid, train_length=None, rate=0.0):
    """``{test: [(n, bound, log2_bound), ...]}`` for the MMD and KS rules.

    ``train_length`` maps ``n`` to the training length; when given, the
    exponential term uses ``min(n, train_length(n))`` samples.
    """
    out = {}
    seps = {"mmd": report.sep_mmd, "ks": report.sep_ks}
    for test, sep in seps.items():
        if sep is None or (test == "mmd" and report.kernel_bound <= 0):
            continue
        points = []
        for n in n_grid:
            gamma = None if train_length is None else train_length(n)
            lg = log2_error_bound(test, n, rate, sep, report.kernel_bound, gamma)
            points.append((n, 1.0 if lg >= 0 else 2.0 ** lg, lg))
        out[test] = points
    return out

"""Seeded Monte Carlo estimation of error probabilities.

Each trial draws its own random stream from ``SeedSequence([seed, n,
trial_index])``, so a trial's data depend only on those three numbers and
never on how trials are split among workers. Inside a trial, member
distributions draw their training sequences in a canonical order given by
their parameters, not their position in the config, and score ties are
broken in that same order. Relabeling the clusters therefore changes
neither the generated data nor any verdict.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .classify import TrainingSet, loglik_stack
from .distances import GaussianRBF, ks_stack, mmd2_stack
from .models import Gaussian

log = logging.getLogger(__name__)

TESTS = ("mmd", "ks", "likelihood")
Z95 = float(stats.norm.ppf(0.975))


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class TrainLengths:
    """Training-sequence length as a function of the test length ``n``."""

    rule: str = "equal"  # equal | fixed | proportional
    value: float = 1.0

    def __post_init__(self):
        if self.rule not in ("equal", "fixed", "proportional"):
            raise ConfigError("train_lengths.rule", f"unknown rule {self.rule!r}")
        if self.rule != "equal" and not self.value > 0:
            raise ConfigError("train_lengths.value", "must be positive")

    def length(self, n: int) -> int:
        if self.rule == "equal":
            return n
        if self.rule == "fixed":
            return int(self.value)
        # round first so that e.g. 0.1 * 30 does not become 3.0000000000000004
        return math.ceil(round(self.value * n, 9))


@dataclass(frozen=True)
class ExperimentConfig:
    clusters: Tuple[Tuple[Gaussian, ...], ...]
    n_grid: Tuple[int, ...]
    trials: int = 10_000
    tests: Tuple[str, ...] = TESTS
    kernel: object = GaussianRBF(1.0)
    seed: int = 0
    train_lengths: TrainLengths = TrainLengths()
    prior: str = "member"  # member | cluster
    name: str = "experiment"

    def __post_init__(self):
        clusters = tuple(tuple(c) for c in self.clusters)
        object.__setattr__(self, "clusters", clusters)
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "tests", tuple(self.tests))
        if len(clusters) < 2:
            raise ConfigError("clusters", f"need clusters ≥ 2, got {len(clusters)}")
        for m, c in enumerate(clusters, 1):
            if not c:
                raise ConfigError("clusters", f"cluster {m} has no members")
        if len({p.dim for c in clusters for p in c}) != 1:
            raise ConfigError("clusters", "members have mixed dimensions")
        if not self.n_grid:
            raise ConfigError("n_grid", "must be nonempty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ConfigError("n_grid", "must be strictly ascending")
        if self.n_grid[0] < 1:
            raise ConfigError("n_grid", "sample sizes must be positive")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if not self.tests or any(t not in TESTS for t in self.tests):
            raise ConfigError("tests", f"must be a nonempty subset of {list(TESTS)}")
        if len(set(self.tests)) != len(self.tests):
            raise ConfigError("tests", "duplicate entries")
        if "likelihood" in self.tests and any(len(c) > 1 for c in clusters):
            raise ConfigError("tests", "likelihood requires singleton clusters")
        if "ks" in self.tests and self.dim != 1:
            raise ConfigError("tests", "ks requires scalar data")
        if self.prior not in ("member", "cluster"):
            raise ConfigError("prior", f"unknown prior {self.prior!r}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed", "must be an unsigned 64-bit integer")
        if "mmd" in self.tests:
            short = [n for n in self.n_grid if min(n, self.train_lengths.length(n)) < 2]
            if short:
                raise ConfigError("n_grid", f"mmd needs sequences of length >= 2 (n={short[0]})")

    @property
    def members(self) -> Tuple[Gaussian, ...]:
        return tuple(p for c in self.clusters for p in c)

    @property
    def dim(self) -> int:
        return self.clusters[0][0].dim

    def replace(self, **changes) -> "ExperimentConfig":
        import dataclasses
        return dataclasses.replace(self, **changes)


class _Layout:
    """Flat member bookkeeping and canonical draw order for a config."""

    def __init__(self, cfg: ExperimentConfig):
        self.members = cfg.members
        self.member_cluster = np.array([m for m, c in enumerate(cfg.clusters) for _ in c])
        keys = [p.key() for p in self.members]
        self.canon = sorted(range(len(keys)), key=lambda j: keys[j])
        offsets = np.cumsum([0] + [len(c) for c in cfg.clusters])
        # per cluster: flat indices of its members in canonical order
        self.cluster_members = [sorted(range(offsets[m], offsets[m + 1]), key=lambda j: keys[j])
                                for m in range(len(cfg.clusters))]
        ckeys = [tuple(sorted(p.key() for p in c)) for c in cfg.clusters]
        self.cluster_canon = sorted(range(len(ckeys)), key=lambda m: ckeys[m])
        self.mu = np.stack([p.mean_array for p in self.members])
        self.sd = np.array([p.std for p in self.members])


def _draw(cfg, layout, n, trial_index, out_x, out_y):
    """Fill ``out_x`` (K, L, d) and ``out_y`` (n, d); return the true 0-based cluster."""
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, n, trial_index]))
    k, length, d = out_x.shape
    z = rng.standard_normal((k, length, d))
    canon = layout.canon
    out_x[canon] = layout.mu[canon, None, :] + layout.sd[canon, None, None] * z
    if cfg.prior == "member":
        j = canon[int(rng.integers(k))]
    else:
        m = layout.cluster_canon[int(rng.integers(len(layout.cluster_canon)))]
        cands = layout.cluster_members[m]
        j = cands[int(rng.integers(len(cands)))]
    out_y[...] = layout.mu[j] + layout.sd[j] * rng.standard_normal((n, d))
    return int(layout.member_cluster[j])


def generate_trial(cfg: ExperimentConfig, n: int, trial_index: int):
    """Return ``(train, y, truth)`` for one trial; ``truth`` is 1-based."""
    layout = _Layout(cfg)
    length = cfg.train_lengths.length(n)
    x = np.empty((len(layout.members), length, cfg.dim))
    y = np.empty((n, cfg.dim))
    truth = _draw(cfg, layout, n, trial_index, x, y)
    groups = []
    j = 0
    for c in cfg.clusters:
        groups.append([x[j + i] for i in range(len(c))])
        j += len(c)
    return TrainingSet(groups), y, truth + 1


def _chunk_size(k, length, n):
    # keeps the largest Gram tensor near 4e6 entries; depends only on shapes
    per_trial = k * max(length, n) * max(length, n)
    return int(max(1, min(1000, 4_000_000 // per_trial)))


def _count_errors(job):
    """Misclassification counts for trials ``start..stop-1`` at sample size ``n``."""
    cfg, n, start, stop = job
    layout = _Layout(cfg)
    length = cfg.train_lengths.length(n)
    k, d = len(layout.members), cfg.dim
    t = stop - start
    x = np.empty((t, k, length, d))
    y = np.empty((t, n, d))
    truth = np.empty(t, dtype=int)
    for i in range(t):
        truth[i] = _draw(cfg, layout, n, start + i, x[i], y[i])
    # ties (frequent for KS) go to the first member in canonical order, so
    # the verdict does not depend on how clusters are listed
    canon = np.asarray(layout.canon)
    counts = {}
    for test in cfg.tests:
        if test == "mmd":
            scores = mmd2_stack(cfg.kernel, x, y[:, None])
        elif test == "ks":
            scores = ks_stack(x[..., 0], y[:, None, :, 0])
        else:
            scores = -loglik_stack(layout.members, y)
        best = canon[np.argmin(scores[:, canon], axis=-1)]
        counts[test] = int(np.count_nonzero(layout.member_cluster[best] != truth))
    return n, counts


def wilson_half_width(errors, trials, z=Z95):
    """Half-width of the Wilson score interval for a binomial proportion."""
    errors = np.asarray(errors, dtype=float)
    p = errors / trials
    denom = 1.0 + z * z / trials
    return z / denom * np.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials))


@dataclass(frozen=True)
class ExponentFit:
    slope: float  # bits per sample
    r2: float
    points: int
    lower_bound: bool = False  # True when reported as a ">=" sentinel


def fit_exponent(n, estimate) -> ExponentFit:
    """Least-squares slope of ``-log2 P_e(n)`` against ``n``.

    Grid points with zero estimated error are dropped; at least three
    positive points are required.
    """
    n = np.asarray(n, dtype=float)
    p = np.asarray(estimate, dtype=float)
    keep = p > 0
    if keep.sum() < 3:
        raise ValueError(f"need >= 3 grid points with positive error, got {int(keep.sum())}")
    res = stats.linregress(n[keep], -np.log2(p[keep]))
    r2 = float(res.rvalue ** 2) if np.isfinite(res.rvalue) else 1.0
    return ExponentFit(float(res.slope), r2, int(keep.sum()))


def _sentinel_fit(n, estimate, trials) -> ExponentFit:
    n = np.asarray(n, dtype=float)
    p = np.asarray(estimate, dtype=float)
    pos = np.flatnonzero(p > 0)
    if pos.size:
        i = pos[-1]
        return ExponentFit(float(-np.log2(p[i]) / n[i]), math.nan, int(pos.size), True)
    # no errors at all: P_e is below the 1/trials resolution at the smallest n
    return ExponentFit(float(np.log2(trials) / n[0]), math.nan, 0, True)


@dataclass
class ErrorCurve:
    test: str
    n: Tuple[int, ...]
    errors: Tuple[int, ...]
    trials: int
    fit: ExponentFit = field(init=False)

    def __post_init__(self):
        try:
            self.fit = fit_exponent(self.n, self.estimate)
        except ValueError:
            self.fit = _sentinel_fit(self.n, self.estimate, self.trials)

    @property
    def estimate(self) -> np.ndarray:
        return np.asarray(self.errors, dtype=float) / self.trials

    @property
    def half_width(self) -> np.ndarray:
        return wilson_half_width(self.errors, self.trials)

    @property
    def exponent(self) -> float:
        return self.fit.slope

    def at(self, n):
        i = self.n.index(n)
        return self.estimate[i], self.half_width[i]


def _jobs(cfg):
    k = len(cfg.members)
    for n in cfg.n_grid:
        size = _chunk_size(k, cfg.train_lengths.length(n), n)
        for start in range(0, cfg.trials, size):
            yield (cfg, n, start, min(cfg.trials, start + size))


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> Dict[str, ErrorCurve]:
    """Estimate the error probability of every enabled test on every grid point.

    Results are identical for any ``workers`` value: trials are independent
    and aggregation is plain counting.
    """
    totals = {n: {t: 0 for t in cfg.tests} for n in cfg.n_grid}
    jobs = list(_jobs(cfg))
    log.info("%s: %d trials x %d sizes in %d jobs", cfg.name, cfg.trials, len(cfg.n_grid), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_count_errors, jobs))
    else:
        results = map(_count_errors, jobs)
    for n, counts in results:
        for t, c in counts.items():
            totals[n][t] += c
    return {
        t: ErrorCurve(t, cfg.n_grid, tuple(totals[n][t] for n in cfg.n_grid), cfg.trials)
        for t in cfg.tests
    }

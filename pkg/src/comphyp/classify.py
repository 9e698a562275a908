"""Decision rules over composite training sets.

Every rule picks the training sequence (or model) closest to the test
sequence and reports the cluster it belongs to. Ties go to the smallest
``(cluster, member)`` pair, which is what ``np.argmin`` / ``np.argmax``
return on the flattened member order.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .distances import as_sequence, ks_stack, mmd2_stack
from .models import Gaussian


@dataclass(frozen=True)
class Verdict:
    cluster_index: int  # 1-based
    member_index: int  # 1-based, within the cluster
    score: float


class TrainingSet:
    """Training sequences grouped by hypothesis.

    ``clusters[m][i]`` is the sequence generated by member ``i`` of
    hypothesis ``m``. Sequences are stored as read-only ``(n, d)`` arrays;
    lengths may differ between sequences.
    """

    def __init__(self, clusters: Sequence[Sequence]):
        if len(clusters) < 1:
            raise ValueError("a training set needs at least one cluster")
        built = []
        dims = set()
        for m, members in enumerate(clusters, start=1):
            if len(members) < 1:
                raise ValueError(f"cluster {m} has no training sequences")
            seqs = []
            for i, x in enumerate(members, start=1):
                arr = as_sequence(x, 1, f"training sequence ({m}, {i})").copy()
                arr.setflags(write=False)
                dims.add(arr.shape[1])
                seqs.append(arr)
            built.append(tuple(seqs))
        if len(dims) != 1:
            raise ValueError(f"training sequences have mixed dimensions {sorted(dims)}")
        self.clusters: Tuple[Tuple[np.ndarray, ...], ...] = tuple(built)
        self.dim = dims.pop()
        self._labels = [(m, i) for m, seqs in enumerate(self.clusters, 1)
                        for i in range(1, len(seqs) + 1)]

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def flat(self) -> List[np.ndarray]:
        return [x for seqs in self.clusters for x in seqs]

    def label(self, flat_index: int) -> Tuple[int, int]:
        return self._labels[flat_index]

    def __len__(self):
        return len(self._labels)

    def __repr__(self):
        sizes = [len(c) for c in self.clusters]
        return f"TrainingSet(clusters={sizes}, dim={self.dim})"


def _by_length(seqs):
    groups = {}
    for j, x in enumerate(seqs):
        groups.setdefault(len(x), []).append(j)
    return groups


def _verdict(train, scores, best):
    m, i = train.label(best)
    return Verdict(m, i, float(scores[best]))


def mmd_scores(k, train: TrainingSet, y) -> np.ndarray:
    """MMD^2 of ``y`` against every training sequence, in flat member order."""
    y = as_sequence(y, 2, "test sequence")
    if y.shape[1] != train.dim:
        raise ValueError(f"dimension mismatch: {y.shape[1]} vs {train.dim}")
    seqs = train.flat()
    out = np.empty(len(seqs))
    for length, idx in _by_length(seqs).items():
        if length < 2:
            raise ValueError("MMD^2 needs training sequences of length >= 2")
        out[idx] = mmd2_stack(k, np.stack([seqs[j] for j in idx]), y)
    return out


def ks_scores(train: TrainingSet, y) -> np.ndarray:
    y = as_sequence(y, 1, "test sequence")
    if train.dim != 1 or y.shape[1] != 1:
        raise ValueError("the KS rule needs scalar data")
    seqs = train.flat()
    out = np.empty(len(seqs))
    for _, idx in _by_length(seqs).items():
        out[idx] = ks_stack(np.stack([seqs[j][:, 0] for j in idx]), y[:, 0])
    return out


def classify_mmd(train: TrainingSet, y, k) -> Verdict:
    scores = mmd_scores(k, train, y)
    return _verdict(train, scores, int(np.argmin(scores)))


def classify_ks(train: TrainingSet, y) -> Verdict:
    scores = ks_scores(train, y)
    return _verdict(train, scores, int(np.argmin(scores)))


def loglik_stack(models: Sequence[Gaussian], y) -> np.ndarray:
    """Log-likelihoods ``(..., K)`` of test batches ``y`` with shape ``(..., n, d)``."""
    means = np.stack([mdl.mean_array for mdl in models])
    var = np.array([mdl.variance for mdl in models])
    d = means.shape[1]
    if y.shape[-1] != d:
        raise ValueError(f"dimension mismatch: {y.shape[-1]} vs {d}")
    n = y.shape[-2]
    # sum_t ||y_t - mu||^2 = S2 - 2 mu.S1 + n ||mu||^2
    s1 = y.sum(axis=-2)
    s2 = np.einsum("...td,...td->...", y, y)
    sq = s2[..., None] - 2.0 * s1 @ means.T + n * np.sum(means ** 2, axis=1)
    return -0.5 * n * d * np.log(2 * np.pi * var) - sq / (2.0 * var)


def classify_likelihood(models: Sequence[Gaussian], y) -> Verdict:
    """Maximum-likelihood choice among fully known Gaussian models.

    ``cluster_index`` is the 1-based position in ``models``; there is one
    member per hypothesis, so ``member_index`` is always 1.
    """
    if len(models) < 1:
        raise ValueError("need at least one model")
    for mdl in models:
        if not isinstance(mdl, Gaussian):
            raise TypeError(f"unsupported model {mdl!r}")
    y = as_sequence(y, 1, "test sequence")
    ll = np.array([mdl.logpdf(y).sum() for mdl in models])
    best = int(np.argmax(ll))
    return Verdict(best + 1, 1, float(ll[best]))

"""Agglomerative sense induction and the sense-constrained clustering method.

The expensive merge loops live in a compiled kernel with a pure-Python
fallback (see _backend).  Everything here is deterministic: merge ties are
broken toward the lexicographically smallest pair of cluster
representatives after usage ids are put in sorted order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from ..corpus import TargetWordRecord
from ..geometry import EmbeddingTable, cosine_distance_matrix
from . import _backend
from ._backend import BACKEND

__all__ = [
    "BACKEND",
    "AgglomConfig",
    "Clustering",
    "agglom_scm",
    "average_linkage",
    "calinski_harabasz",
    "wsi_cluster",
]


@dataclass
class Clustering:
    """A partition: labels maps each item to a cluster index in 0..k-1."""

    labels: dict
    k: int

    def groups(self) -> list[list]:
        out: list[list] = [[] for _ in range(self.k)]
        for item, c in self.labels.items():
            out[c].append(item)
        return out


@dataclass(frozen=True)
class AgglomConfig:
    """k_extra = how many clusters beyond the old senses survive merging."""

    k_extra: int = 0

    def __post_init__(self):
        if self.k_extra < 0:
            raise ValueError(f"k_extra must be >= 0, got {self.k_extra}")


def _check_distance_matrix(dist) -> np.ndarray:
    d = np.ascontiguousarray(dist, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    if not np.array_equal(d, d.T):
        raise ValueError("distance matrix is asymmetric")
    if np.any(np.diag(d) != 0.0):
        raise ValueError("distance matrix diagonal must be zero")
    return d


def _labels_after_merges(n: int, merges: np.ndarray, n_apply: int) -> list[int]:
    """Replay the first n_apply merges and number clusters by min member."""
    lab = list(range(n))
    for t in range(n_apply):
        ra, rb = int(merges[t, 0]), int(merges[t, 1])
        for i in range(n):
            if lab[i] == rb:
                lab[i] = ra
    remap = {r: c for c, r in enumerate(sorted(set(lab)))}
    return [remap[r] for r in lab]


def average_linkage(dist, k: int) -> Clustering:
    """Cluster an n x n distance matrix down to k clusters by average linkage.

    Starts from singletons and repeatedly merges the pair of clusters with
    the minimum average pairwise distance.  Keys of the result are the row
    indices 0..n-1.
    """
    d = _check_distance_matrix(dist)
    n = d.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    merges = _backend.average_linkage_merges(d)
    labels = _labels_after_merges(n, merges, n - k)
    return Clustering(labels={i: c for i, c in enumerate(labels)}, k=k)


def calinski_harabasz(vectors, labels) -> float:
    """Variance-ratio cluster validity score; +inf when within-scatter is zero.

    Requires n >= 3 points, contiguous labels 0..k-1 with every cluster
    non-empty, and 2 <= k <= n-1.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"vectors must be 2-d, got shape {x.shape}")
    lab = np.asarray(labels)
    n = x.shape[0]
    if lab.shape != (n,):
        raise ValueError(f"labels must have length {n}, got shape {lab.shape}")
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    k = int(lab.max()) + 1 if n else 0
    present = set(int(c) for c in lab)
    if present != set(range(k)):
        raise ValueError("labels must be contiguous 0..k-1 with every cluster non-empty")
    if not 2 <= k <= n - 1:
        raise ValueError(f"number of clusters must be in [2, {n - 1}], got {k}")

    mu = x.mean(axis=0)
    between = 0.0
    within = 0.0
    for c in range(k):
        xc = x[lab == c]
        mu_c = xc.mean(axis=0)
        diff = mu_c - mu
        between += xc.shape[0] * float(diff @ diff)
        within += float(((xc - mu_c) ** 2).sum())
    if within == 0.0:
        return float("inf")
    return (between / (k - 1)) / (within / (n - k))


def wsi_cluster(usage_vectors: Mapping) -> Clustering:
    """Induce senses by average-linkage clustering over cosine distances.

    The cluster count ranges over 2..min(9, n-1) and the clustering with
    the highest variance-ratio score wins, smaller counts winning ties.
    One or two usages yield a single cluster.  Keys are sorted before the
    distance matrix is built, so the result does not depend on input order.
    """
    ids = sorted(usage_vectors)
    n = len(ids)
    if n == 0:
        raise ValueError("need at least one usage vector")
    if n <= 2:
        return Clustering(labels={u: 0 for u in ids}, k=1)
    x = np.vstack([np.asarray(usage_vectors[u], dtype=np.float64) for u in ids])
    d = cosine_distance_matrix(x)
    merges = _backend.average_linkage_merges(d)
    best_labels: list[int] | None = None
    best_score = -np.inf
    best_k = 1
    for k in range(2, min(9, n - 1) + 1):
        labels = _labels_after_merges(n, merges, n - k)
        score = calinski_harabasz(x, labels)
        if score > best_score:  # strict: ties keep the smaller k
            best_score = score
            best_labels = labels
            best_k = k
    assert best_labels is not None
    return Clustering(labels=dict(zip(ids, best_labels)), k=best_k)


def agglom_scm(
    word: TargetWordRecord,
    table: EmbeddingTable,
    cfg: AgglomConfig = AgglomConfig(),
) -> dict[str, str]:
    """Distribute new usages between old senses and k_extra novel clusters.

    Old usages start out grouped by their annotated sense, each new usage
    starts as a singleton, and single-linkage (min pairwise cosine) merges
    where one side holds only new usages run until #old senses + k_extra
    clusters remain.  Returns a label per new usage: the sense id of the
    seeded cluster it lands in, or ``novel:<i>`` with novel clusters
    numbered by creation order.

    Old usages without an embedding are skipped; an old sense with no
    embedded usages at all is an error, as is a missing new-usage vector.
    """
    senses = word.old_senses
    if not senses:
        raise ValueError(f"word {word.word!r} has no old senses")
    if not word.new_usages:
        return {}

    sense_members: dict[str, list[str]] = {s.sense_id: [] for s in senses}
    for u in word.old_usages:
        if u.gold_sense in sense_members and table.has("usage", u.usage_id):
            sense_members[u.gold_sense].append(u.usage_id)
    for s in senses:
        if not sense_members[s.sense_id]:
            raise ValueError(
                f"old sense {s.sense_id!r} of word {word.word!r} has no embedded old usages"
            )

    new_ids = sorted(u.usage_id for u in word.new_usages)
    participating = sorted(
        [uid for ms in sense_members.values() for uid in ms] + new_ids
    )
    index = {uid: i for i, uid in enumerate(participating)}
    x = np.vstack([table.usage(uid) for uid in participating])
    d = cosine_distance_matrix(x)

    # slots: senses in inventory order, then new usages in sorted-id order
    n_senses = len(senses)
    slot_of_sense = {s.sense_id: slot for slot, s in enumerate(senses)}
    slot_of_new = {uid: n_senses + i for i, uid in enumerate(new_ids)}
    init_labels = np.empty(len(participating), dtype=np.intp)
    for sid, ms in sense_members.items():
        for uid in ms:
            init_labels[index[uid]] = slot_of_sense[sid]
    for uid in new_ids:
        init_labels[index[uid]] = slot_of_new[uid]
    n_slots = n_senses + len(new_ids)
    new_only = np.zeros(n_slots, dtype=np.uint8)
    new_only[n_senses:] = 1

    n_merges = max(0, len(new_ids) - cfg.k_extra)
    merges = _backend.constrained_single_linkage_merges(d, init_labels, new_only, n_merges)

    # replay, tracking which representative carries which sense seed and
    # when each surviving cluster was created
    repr_of_slot: dict[int, int] = {}
    for i, uid in enumerate(participating):
        slot = int(init_labels[i])
        repr_of_slot.setdefault(slot, i)
    sense_of_repr = {repr_of_slot[slot_of_sense[s.sense_id]]: s.sense_id for s in senses}
    created = {repr_of_slot[slot]: slot for slot in range(n_slots) if slot in repr_of_slot}
    lab = [repr_of_slot[int(init_labels[i])] for i in range(len(participating))]
    for t in range(n_merges):
        ra, rb = int(merges[t, 0]), int(merges[t, 1])
        lab = [ra if r == rb else r for r in lab]
        if rb in sense_of_repr:
            assert ra not in sense_of_repr, "two sense-seeded clusters merged"
            sense_of_repr[ra] = sense_of_repr.pop(rb)
        created.pop(rb, None)
        created[ra] = n_slots + t

    novel_reprs = sorted(
        (r for r in set(lab) if r not in sense_of_repr), key=lambda r: created[r]
    )
    novel_index = {r: i for i, r in enumerate(novel_reprs)}

    out: dict[str, str] = {}
    for uid in new_ids:
        r = lab[index[uid]]
        out[uid] = sense_of_repr[r] if r in sense_of_repr else f"novel:{novel_index[r]}"
    return out

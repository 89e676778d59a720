"""Composite semantic change methods built from WSD, WSI and NSD parts.

Each method labels the new-period usages of one word with either an old
sense id or a per-word novel id of the form ``novel:<idx>``:

* Cluster2Sense induces clusters, then transfers sense names onto them
  through mutual-best Jaccard matching against the WSD groups.
* Outlier2Cluster keeps WSD labels except for usages the outlier model
  flags, which are regrouped either as one novel cluster or along the
  WSI partition.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .clustering import AgglomConfig, Clustering, agglom_scm, wsi_cluster
from .corpus import TargetWordRecord
from .disambiguation import WsdAssignment, assign_senses
from .geometry import EmbeddingTable
from .nsd import NsdModel, extract_features, predict_outlier

PROVENANCES = ("wsd", "wsi", "agglom", "cluster2sense")


class RelabelMode(str, Enum):
    WITH_WSI = "with_wsi"
    WITHOUT_WSI = "without_wsi"


@dataclass(frozen=True)
class Prediction:
    usage_id: str
    label: str
    provenance: str

    def __post_init__(self):
        if not self.label:
            raise ValueError("empty prediction label")
        if self.provenance not in PROVENANCES:
            raise ValueError(f"unknown provenance {self.provenance!r}")


def jaccard(a: set, b: set) -> float:
    """Set overlap |a∩b| / |a∪b|, with 0 for two empty sets."""
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def _usage_vectors(record: TargetWordRecord, table: EmbeddingTable):
    return {u.usage_id: table.usage(u.usage_id) for u in record.new_usages}


def predict_wsd(record: TargetWordRecord, table_a: EmbeddingTable) -> list[Prediction]:
    """Label every new usage with its nearest-gloss sense."""
    return [
        Prediction(a.usage_id, a.chosen_sense_id, "wsd")
        for a in sorted(assign_senses(record, table_a), key=lambda a: a.usage_id)
    ]


def predict_wsi(record: TargetWordRecord, table_b: EmbeddingTable) -> list[Prediction]:
    """Label every new usage with its induced cluster as a novel id."""
    clustering = wsi_cluster(_usage_vectors(record, table_b))
    return [
        Prediction(uid, f"novel:{idx}", "wsi")
        for uid, idx in sorted(clustering.labels.items())
    ]


def predict_agglom(
    record: TargetWordRecord,
    table: EmbeddingTable,
    cfg: AgglomConfig = AgglomConfig(),
) -> list[Prediction]:
    labels = agglom_scm(record, table, cfg)
    return [Prediction(uid, label, "agglom") for uid, label in sorted(labels.items())]


def cluster2sense(wsi: Clustering, wsd: list[WsdAssignment]) -> list[Prediction]:
    """Transfer sense names onto induced clusters by mutual-best Jaccard.

    A cluster takes a sense's name only when each is the other's highest
    Jaccard counterpart; remaining clusters get contiguous novel ids in
    cluster-index order.  The output partition is exactly the WSI one,
    only renamed.
    """
    wsi_ids = set(wsi.labels)
    wsd_ids = {a.usage_id for a in wsd}
    if wsi_ids != wsd_ids:
        raise ValueError(
            f"wsi and wsd cover different usages: "
            f"{sorted(wsi_ids ^ wsd_ids)} present in only one"
        )
    if not wsd:
        return []

    sense_order = list(wsd[0].per_sense_scores)
    sense_groups: dict[str, set[str]] = {s: set() for s in sense_order}
    for a in wsd:
        sense_groups[a.chosen_sense_id].add(a.usage_id)
    cluster_groups = [set(g) for g in wsi.groups()]

    # first maximum wins in both scans, so ties resolve toward the lower
    # inventory index and the lower cluster index
    best_sense_of = [
        max(sense_order, key=lambda s: jaccard(cluster_groups[c], sense_groups[s]))
        for c in range(wsi.k)
    ]
    best_cluster_of = {
        s: max(range(wsi.k), key=lambda c: jaccard(cluster_groups[c], sense_groups[s]))
        for s in sense_order
    }

    label_of_cluster: dict[int, str] = {}
    next_novel = 0
    for c in range(wsi.k):
        s = best_sense_of[c]
        if best_cluster_of[s] == c:
            label_of_cluster[c] = s
        else:
            label_of_cluster[c] = f"novel:{next_novel}"
            next_novel += 1
    return [
        Prediction(uid, label_of_cluster[idx], "cluster2sense")
        for uid, idx in sorted(wsi.labels.items())
    ]


def predict_cluster2sense(
    record: TargetWordRecord,
    table_a: EmbeddingTable,
    table_b: EmbeddingTable,
) -> list[Prediction]:
    """WSD in the fine-tuned space, WSI in the base space, then match."""
    wsd = assign_senses(record, table_a)
    wsi = wsi_cluster(_usage_vectors(record, table_b))
    return cluster2sense(wsi, wsd)


def outlier2cluster(
    record: TargetWordRecord,
    tables: tuple[EmbeddingTable, EmbeddingTable],
    nsd: NsdModel,
    mode: RelabelMode = RelabelMode.WITH_WSI,
) -> list[Prediction]:
    """Gate WSD labels through the outlier model, regrouping the flagged.

    Non-outliers keep their WSD sense (provenance ``wsd``).  Outliers are
    relabelled (provenance ``wsi``): in ``without_wsi`` mode all of them
    share ``novel:0``; in ``with_wsi`` mode each gets a novel id derived
    from its WSI cluster, with the flagged clusters renumbered to
    contiguous novel ids.
    """
    mode = RelabelMode(mode)
    chosen = {
        a.usage_id: a.chosen_sense_id for a in assign_senses(record, tables[0])
    }
    outliers = {
        uid for uid in chosen
        if predict_outlier(nsd, extract_features(uid, chosen[uid], tables, record.counts))[1]
    }

    novel_label: dict[str, str] = {}
    if outliers and mode is RelabelMode.WITH_WSI:
        clustering = wsi_cluster(_usage_vectors(record, tables[1]))
        flagged_clusters = sorted({clustering.labels[uid] for uid in outliers})
        rank = {c: i for i, c in enumerate(flagged_clusters)}
        novel_label = {
            uid: f"novel:{rank[clustering.labels[uid]]}" for uid in outliers
        }
    elif outliers:
        novel_label = {uid: "novel:0" for uid in outliers}

    return [
        Prediction(uid, novel_label[uid], "wsi") if uid in outliers
        else Prediction(uid, chosen[uid], "wsd")
        for uid in sorted(chosen)
    ]

"""Sense disambiguation: match each new usage to its most similar gloss."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import TargetWordRecord
from .geometry import EmbeddingTable, dot


@dataclass(frozen=True)
class WsdAssignment:
    usage_id: str
    chosen_sense_id: str
    score: float
    per_sense_scores: dict[str, float]


def assign_senses(word: TargetWordRecord, table: EmbeddingTable) -> list[WsdAssignment]:
    """Assign each new usage the old sense whose gloss has the highest dot
    product with the usage vector.  Ties go to the sense listed first in the
    inventory.  Raises MissingEmbeddingError for an absent usage or gloss
    vector.
    """
    if not word.old_senses:
        raise ValueError(f"word {word.word!r} has no old senses")
    gloss_vecs = [(s.sense_id, table.gloss(s.sense_id)) for s in word.old_senses]
    out = []
    for usage in word.new_usages:
        u = table.usage(usage.usage_id)
        scores = {sid: dot(u, g) for sid, g in gloss_vecs}
        chosen = max(scores, key=lambda sid: scores[sid])  # max keeps the first on ties
        out.append(
            WsdAssignment(
                usage_id=usage.usage_id,
                chosen_sense_id=chosen,
                score=scores[chosen],
                per_sense_scores=scores,
            )
        )
    return out

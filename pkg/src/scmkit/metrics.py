"""Evaluation metrics: ARI, the per-word sense F1, AP and PR curves.

The adjusted Rand index evaluates predictions as bare partitions, so
induced clusters score well if they split usages correctly no matter how
they are named.  The F1 score evaluates the sense names themselves,
restricted to usages whose gold sense is part of the old inventory, with
all novel predictions pooled into one auxiliary class.  Words whose new
usages carry no old sense at all are scored by a 1-or-0 rule instead.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from .corpus import Dataset, TargetWordRecord
from .scm import Prediction

LabelMap = Mapping[str, str]
PredictionsLike = Union[Sequence[Prediction], LabelMap]


@dataclass(frozen=True)
class WordScores:
    ari: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    per_word: dict[str, WordScores]
    aggregate: WordScores
    edge_case_words: int


def _pairwise_labels(gold, pred) -> tuple[list, list]:
    if isinstance(gold, Mapping) or isinstance(pred, Mapping):
        if not (isinstance(gold, Mapping) and isinstance(pred, Mapping)):
            raise ValueError("gold and pred must both be mappings or both sequences")
        if set(gold) != set(pred):
            raise ValueError("gold and pred cover different usages")
        keys = sorted(gold)
        return [gold[k] for k in keys], [pred[k] for k in keys]
    gold, pred = list(gold), list(pred)
    if len(gold) != len(pred):
        raise ValueError("gold and pred have different lengths")
    return gold, pred


def adjusted_rand_index(gold, pred) -> float:
    """Hubert-Arabie ARI from the contingency table, in exact integers.

    Accepts two equal-length label sequences or two mappings over the
    same keys.  The degenerate case (both partitions trivial, zero
    denominator) returns 1.0.
    """
    gold, pred = _pairwise_labels(gold, pred)
    if not gold:
        raise ValueError("cannot compute ARI of empty partitions")
    contingency = Counter(zip(gold, pred))
    row_sums = Counter(gold)
    col_sums = Counter(pred)
    index = sum(math.comb(v, 2) for v in contingency.values())
    a = sum(math.comb(v, 2) for v in row_sums.values())
    b = sum(math.comb(v, 2) for v in col_sums.values())
    total = math.comb(len(gold), 2)
    denom = total * (a + b) - 2 * a * b
    if denom == 0:
        return 1.0
    return 2 * (index * total - a * b) / denom


def _as_label_map(pred: PredictionsLike) -> dict[str, str]:
    if isinstance(pred, Mapping):
        return dict(pred)
    return {p.usage_id: p.label for p in pred}


def axolotl_f1(record: TargetWordRecord, pred: PredictionsLike) -> float:
    """Macro F1 over the word's old senses with a zero-scoring novel class.

    Only new usages whose gold sense is in the old inventory enter the
    score; on them every non-inventory prediction counts as one "novel"
    class.  The average runs over k classes, or k+1 when any such usage
    was predicted novel.  If the word has no such usages at all, the
    score is 1.0 when nothing was predicted as an old sense and 0.0
    otherwise.
    """
    labels = _as_label_map(pred)
    old_ids = set(record.old_sense_ids())
    for usage in record.new_usages:
        if usage.gold_sense is None:
            raise ValueError(f"usage {usage.usage_id!r} has no gold label")
        if usage.usage_id not in labels:
            raise ValueError(f"no prediction for usage {usage.usage_id!r}")

    restricted = [u for u in record.new_usages if u.gold_sense in old_ids]
    if not restricted:
        any_old = any(labels[u.usage_id] in old_ids for u in record.new_usages)
        return 0.0 if any_old else 1.0

    def pred_class(uid: str) -> str:
        return labels[uid] if labels[uid] in old_ids else "novel"

    novel_predicted = any(pred_class(u.usage_id) == "novel" for u in restricted)
    per_sense = []
    for sense_id in record.old_sense_ids():
        tp = sum(
            1 for u in restricted
            if u.gold_sense == sense_id and pred_class(u.usage_id) == sense_id
        )
        fp = sum(
            1 for u in restricted
            if u.gold_sense != sense_id and pred_class(u.usage_id) == sense_id
        )
        fn = sum(
            1 for u in restricted
            if u.gold_sense == sense_id and pred_class(u.usage_id) != sense_id
        )
        denom = 2 * tp + fp + fn
        per_sense.append(2 * tp / denom if denom else 0.0)

    k = len(per_sense)
    return sum(per_sense) / (k + 1 if novel_predicted else k)


def _score_blocks(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) after each distinct-score block, best first."""
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length 1-d sequences")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise ValueError("need at least one positive and one negative label")

    order = np.argsort(-s, kind="stable")
    s, y = s[order], y[order]
    points = []
    tp = fp = 0
    i = 0
    while i < len(s):
        j = i
        while j < len(s) and s[j] == s[i]:
            j += 1
        tp += int(y[i:j].sum())
        fp += (j - i) - int(y[i:j].sum())
        points.append((tp / n_pos, tp / (tp + fp)))
        i = j
    return points


def average_precision(scores, labels) -> float:
    """Step-interpolated AP with tied scores handled as one block."""
    points = _score_blocks(scores, labels)
    ap = 0.0
    prev_recall = 0.0
    for recall, precision in points:
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def pr_curve(scores, labels) -> list[tuple[float, float]]:
    """(recall, precision) points in increasing recall order."""
    return _score_blocks(scores, labels)


def format_pr_curve(points: Iterable[tuple[float, float]]) -> str:
    lines = ["recall\tprecision"]
    lines.extend(f"{r!r}\t{p!r}" for r, p in points)
    return "\n".join(lines) + "\n"


def evaluate(dataset: Dataset, predictions: Mapping[str, PredictionsLike]) -> EvalReport:
    """Per-word ARI and F1 plus their unweighted means across words.

    ``predictions`` maps each word to its labels (a usage_id-to-label
    mapping or a prediction list).  Words without new usages are skipped.
    """
    per_word: dict[str, WordScores] = {}
    edge_cases = 0
    for word in sorted(dataset.records):
        record = dataset.records[word]
        if not record.new_usages:
            continue
        if word not in predictions:
            raise ValueError(f"no predictions for word {word!r}")
        labels = _as_label_map(predictions[word])
        gold = {}
        for usage in record.new_usages:
            if usage.gold_sense is None:
                raise ValueError(f"usage {usage.usage_id!r} has no gold label")
            gold[usage.usage_id] = usage.gold_sense
        missing = set(gold) - set(labels)
        if missing:
            raise ValueError(f"missing predictions for usages {sorted(missing)}")
        pred_labels = {uid: labels[uid] for uid in gold}
        old_ids = set(record.old_sense_ids())
        if not any(g in old_ids for g in gold.values()):
            edge_cases += 1
        per_word[word] = WordScores(
            ari=adjusted_rand_index(gold, pred_labels),
            f1=axolotl_f1(record, pred_labels),
        )
    if not per_word:
        raise ValueError("no words with new usages to evaluate")
    aggregate = WordScores(
        ari=sum(s.ari for s in per_word.values()) / len(per_word),
        f1=sum(s.f1 for s in per_word.values()) / len(per_word),
    )
    return EvalReport(per_word=per_word, aggregate=aggregate, edge_case_words=edge_cases)


def format_report(report: EvalReport) -> str:
    lines = ["word\tari\tf1"]
    for word in sorted(report.per_word):
        s = report.per_word[word]
        lines.append(f"{word}\t{s.ari!r}\t{s.f1!r}")
    lines.append(f"#aggregate\t{report.aggregate.ari!r}\t{report.aggregate.f1!r}")
    return "\n".join(lines) + "\n"

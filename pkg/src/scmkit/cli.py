"""Command line front end: predict, train-nsd, evaluate, ablate, positions.

Per-word work is independent, so `predict` can fan out over a process
pool (`--jobs`, or the SCMKIT_JOBS environment variable).  Outputs are
written atomically and sorted, and are byte-identical for any degree of
parallelism.  Flags can also be given in a `key=value` config file via
`--config`; explicit flags win over config values.
"""

from __future__ import annotations

import argparse
import dataclasses
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

from . import metrics, nsd
from .clustering import AgglomConfig
from .corpus import (
    Dataset,
    escape_field,
    find_target_position,
    parse_dataset,
    parse_word_forms,
    serialize_dataset,
    unescape_field,
)
from .disambiguation import assign_senses
from .geometry import EmbeddingTable, load_embeddings
from .scm import (
    RelabelMode,
    outlier2cluster,
    predict_agglom,
    predict_cluster2sense,
    predict_wsd,
    predict_wsi,
)

METHODS = ("wsd", "wsi", "agglom", "cluster2sense", "outlier2cluster")

# flags each prediction method cannot run without
_METHOD_NEEDS = {
    "wsd": ("emb_a",),
    "wsi": ("emb_b",),
    "agglom": ("emb_b",),
    "cluster2sense": ("emb_a", "emb_b"),
    "outlier2cluster": ("emb_a", "emb_b", "nsd_model"),
}


class CliError(Exception):
    """User-facing configuration or input error."""


def _atomic_write(path, text: str) -> None:
    target = Path(path)
    tmp = target.with_name(target.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, target)


def _read_lines(path):
    try:
        with open(path, "r", encoding="utf-8") as fp:
            return fp.readlines()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None


def _load_dataset(path) -> Dataset:
    return parse_dataset(_read_lines(path))


def _load_table(path) -> EmbeddingTable:
    return load_embeddings(_read_lines(path))


def _require(args, names: tuple[str, ...]) -> None:
    missing = [n.replace("_", "-") for n in names if getattr(args, n) is None]
    if missing:
        raise CliError(
            f"missing required flags for this command/method: "
            + ", ".join(f"--{n}" for n in missing)
        )


def _apply_config(args: argparse.Namespace) -> None:
    """Fill unset flags from a key=value config file; flags win."""
    if getattr(args, "config", None) is None:
        return
    for lineno, raw in enumerate(_read_lines(args.config), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{args.config}:{lineno}: expected key=value, got {line!r}")
        key, value = line.split("=", 1)
        dest = key.strip().replace("-", "_")
        if dest == "config" or dest not in vars(args):
            raise CliError(f"{args.config}:{lineno}: unknown config key {key.strip()!r}")
        if getattr(args, dest) is None:
            setattr(args, dest, value.strip())


def _resolve_jobs(args: argparse.Namespace) -> int:
    jobs = getattr(args, "jobs", None)
    if jobs is None:
        jobs = os.environ.get("SCMKIT_JOBS", "1")
    jobs = int(jobs)
    if jobs < 1:
        raise CliError(f"--jobs must be >= 1, got {jobs}")
    return jobs


# --- predict --------------------------------------------------------------

# per-process state for the worker pool; populated before fork so that
# children inherit it
_STATE: dict = {}


def _predict_word(word: str) -> list[tuple[str, str, str, str]]:
    record = _STATE["dataset"].records[word]
    method = _STATE["method"]
    if method == "wsd":
        preds = predict_wsd(record, _STATE["table_a"])
    elif method == "wsi":
        preds = predict_wsi(record, _STATE["table_b"])
    elif method == "agglom":
        preds = predict_agglom(record, _STATE["table_b"], _STATE["agglom_cfg"])
    elif method == "cluster2sense":
        preds = predict_cluster2sense(record, _STATE["table_a"], _STATE["table_b"])
    else:
        preds = outlier2cluster(
            record,
            (_STATE["table_a"], _STATE["table_b"]),
            _STATE["nsd_model"],
            _STATE["mode"],
        )
    return [(word, p.usage_id, p.label, p.provenance) for p in preds]


def _run_words(words: list[str], jobs: int) -> list[tuple[str, str, str, str]]:
    if jobs > 1 and len(words) > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(processes=min(jobs, len(words))) as pool:
            chunks = pool.map(_predict_word, words)
    else:
        chunks = [_predict_word(w) for w in words]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def cmd_predict(args: argparse.Namespace) -> None:
    _require(args, ("dataset", "method", "out"))
    if args.method not in METHODS:
        raise CliError(f"unknown method {args.method!r}, expected one of {METHODS}")
    _require(args, _METHOD_NEEDS[args.method])

    _STATE.clear()
    _STATE["dataset"] = _load_dataset(args.dataset)
    _STATE["method"] = args.method
    if args.emb_a is not None:
        _STATE["table_a"] = _load_table(args.emb_a)
    if args.emb_b is not None:
        _STATE["table_b"] = _load_table(args.emb_b)
    if args.method == "agglom":
        _STATE["agglom_cfg"] = AgglomConfig(k_extra=int(args.k_extra or 0))
    if args.method == "outlier2cluster":
        model = nsd.load_model(args.nsd_model)
        if args.threshold is not None:
            model = model.with_threshold(float(args.threshold))
        _STATE["nsd_model"] = model
        _STATE["mode"] = RelabelMode((args.mode or "with-wsi").replace("-", "_"))

    rows = _run_words(sorted(_STATE["dataset"].records), _resolve_jobs(args))
    text = "".join(
        "\t".join(escape_field(cell) for cell in row) + "\n" for row in rows
    )
    _atomic_write(args.out, text)


# --- train-nsd ------------------------------------------------------------


def cmd_train_nsd(args: argparse.Namespace) -> None:
    _require(args, ("dataset", "emb_a", "emb_b", "out"))
    threshold = float(args.threshold) if args.threshold is not None else nsd.DEFAULT_THRESHOLD
    model = nsd.train_nsd_model(
        _load_dataset(args.dataset),
        _load_table(args.emb_a),
        _load_table(args.emb_b),
        threshold=threshold,
    )
    _atomic_write(args.out, nsd.serialize_model(model))


# --- evaluate -------------------------------------------------------------


def _load_predictions(path) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for lineno, raw in enumerate(_read_lines(path), start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line:
            continue
        cells = line.split("\t")
        if len(cells) != 4:
            raise CliError(f"{path}:{lineno}: expected 4 fields, got {len(cells)}")
        word, usage_id, label, _provenance = (unescape_field(c) for c in cells)
        out.setdefault(word, {})[usage_id] = label
    return out


def cmd_evaluate(args: argparse.Namespace) -> None:
    _require(args, ("dataset", "pred", "out"))
    report = metrics.evaluate(_load_dataset(args.dataset), _load_predictions(args.pred))
    _atomic_write(args.out, metrics.format_report(report))
    print(
        f"words {len(report.per_word)} "
        f"(edge-case {report.edge_case_words}) "
        f"ari {report.aggregate.ari:.4f} f1 {report.aggregate.f1:.4f}"
    )


# --- ablate ---------------------------------------------------------------

_SHORT = ("cos", "euclid", "manh", "manh_l1", "euclid_l2")
_SPACE_BASE = {"space_a": 0, "space_b": 5}
_COUNT_IDX = {"n_old_usages": 10, "n_old_senses": 11, "n_new_usages": 12}


def _classifier_scores(cols: np.ndarray, labels) -> np.ndarray:
    scaler = nsd.fit_scaler(cols)
    x = scaler.transform(cols)
    w, b = nsd.train_logreg(x, labels)
    return nsd.sigmoid(x @ w + b)


def _softmax_prob_of_chosen(per_sense_scores: dict[str, float], chosen: str) -> float:
    values = np.array(list(per_sense_scores.values()), dtype=np.float64)
    values -= values.max()
    exps = np.exp(values)
    return float(exps[list(per_sense_scores).index(chosen)] / exps.sum())


def cmd_ablate(args: argparse.Namespace) -> None:
    _require(args, ("dataset", "emb_a", "emb_b", "out_dir"))
    dataset = _load_dataset(args.dataset)
    table_a = _load_table(args.emb_a)
    table_b = _load_table(args.emb_b)
    data = nsd.build_training_data(dataset, table_a, table_b)
    rows, labels = data.rows, data.labels
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    report = ["section\tspace\tfeatures\tap"]

    def add(section: str, space: str, features: str, scores) -> None:
        ap = metrics.average_precision(scores, labels)
        report.append(f"{section}\t{space}\t{features}\t{ap!r}")

    for space, base in _SPACE_BASE.items():
        for i, short in enumerate(_SHORT):
            add("single", space, short, rows[:, base + i])

    for space, base in _SPACE_BASE.items():
        for i in range(len(_SHORT)):
            for j in range(i + 1, len(_SHORT)):
                cols = rows[:, [base + i, base + j]]
                add(
                    "pair_wo_extra",
                    space,
                    f"{_SHORT[i]}+{_SHORT[j]}",
                    _classifier_scores(cols, labels),
                )

    # pairs that involve the extra (count) features; count+count pairs are
    # space-independent but reported under both spaces, as in the table
    for space, base in _SPACE_BASE.items():
        members = [(s, base + i) for i, s in enumerate(_SHORT)]
        members += list(_COUNT_IDX.items())
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                name_i, col_i = members[i]
                name_j, col_j = members[j]
                if col_i < 10 and col_j < 10:
                    continue  # distance-only pairs are the w/o-extra block
                add(
                    "pair_w_extra",
                    space,
                    f"{name_i}+{name_j}",
                    _classifier_scores(rows[:, [col_i, col_j]], labels),
                )

    full_scores = _classifier_scores(rows, labels)
    wo_extra_scores = _classifier_scores(rows[:, :10], labels)
    add("classifier", "both", "w_extra", full_scores)
    add("classifier", "both", "wo_extra", wo_extra_scores)

    _atomic_write(out_dir / "ablation.tsv", "\n".join(report) + "\n")

    # baseline scores for the PR curves need the WSD picks in space A
    assignment_of = {}
    for record in dataset.records.values():
        if record.old_senses and record.new_usages:
            for a in assign_senses(record, table_a):
                assignment_of[a.usage_id] = a
    dot_scores = [-assignment_of[uid].score for uid in data.usage_ids]
    prob_scores = [
        -_softmax_prob_of_chosen(
            assignment_of[uid].per_sense_scores, assignment_of[uid].chosen_sense_id
        )
        for uid in data.usage_ids
    ]

    curves = {
        "pr_classifier_w_extra.tsv": full_scores,
        "pr_classifier_wo_extra.tsv": wo_extra_scores,
        "pr_manh_l1.tsv": rows[:, 3],
        "pr_dot.tsv": dot_scores,
        "pr_probability.tsv": prob_scores,
    }
    for filename, scores in curves.items():
        points = metrics.pr_curve(scores, labels)
        _atomic_write(out_dir / filename, metrics.format_pr_curve(points))


# --- positions ------------------------------------------------------------


def cmd_positions(args: argparse.Namespace) -> None:
    _require(args, ("dataset", "forms", "out"))
    dataset = _load_dataset(args.dataset)
    forms = parse_word_forms(_read_lines(args.forms))

    filled = 0
    unmatched = 0
    for record in dataset.records.values():
        for usages in (record.old_usages, record.new_usages):
            for i, usage in enumerate(usages):
                if usage.span is not None:
                    continue
                span = None
                if record.word in forms:
                    span = find_target_position(usage.text, forms[record.word])
                if span is None:
                    unmatched += 1
                else:
                    usages[i] = dataclasses.replace(usage, span=span)
                    filled += 1

    _atomic_write(args.out, serialize_dataset(dataset))
    print(f"filled {filled} spans, {unmatched} usages left without a span", file=sys.stderr)


# --- argument parsing -----------------------------------------------------


def _add_common(sub: argparse.ArgumentParser, *names: str) -> None:
    specs = {
        "dataset": dict(help="dataset TSV path"),
        "emb-a": dict(help="embedding TSV for space A (fine-tuned encoder)"),
        "emb-b": dict(help="embedding TSV for space B (base encoder)"),
        "method": dict(help=f"prediction method: {', '.join(METHODS)}"),
        "mode": dict(
            choices=("with-wsi", "without-wsi"),
            help="outlier relabeling mode (default with-wsi)",
        ),
        "nsd-model": dict(help="trained outlier model file"),
        "k-extra": dict(type=int, help="extra novel clusters for agglom (default 0)"),
        "threshold": dict(type=float, help="outlier probability threshold"),
        "forms": dict(help="word-form file: lemma<TAB>form1,form2,..."),
        "out": dict(help="output file path"),
        "out-dir": dict(help="output directory"),
        "pred": dict(help="prediction TSV to evaluate"),
        "jobs": dict(type=int, help="worker processes (default $SCMKIT_JOBS or 1)"),
        "config": dict(help="key=value config file; explicit flags win"),
    }
    for name in names:
        sub.add_argument(f"--{name}", **specs[name])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scmkit",
        description="Semantic change modeling over precomputed usage and gloss embeddings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="label new usages with senses or novel clusters")
    _add_common(
        p, "dataset", "emb-a", "emb-b", "method", "mode", "nsd-model",
        "k-extra", "threshold", "out", "jobs", "config",
    )
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("train-nsd", help="train the novel sense detection model")
    _add_common(p, "dataset", "emb-a", "emb-b", "threshold", "out", "config")
    p.set_defaults(func=cmd_train_nsd)

    p = sub.add_parser("evaluate", help="score a prediction file against gold")
    _add_common(p, "dataset", "pred", "out", "config")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("ablate", help="feature ablation: APs and PR curves")
    _add_common(p, "dataset", "emb-a", "emb-b", "out-dir", "config")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("positions", help="fill missing target spans from word forms")
    _add_common(p, "dataset", "forms", "out", "config")
    p.set_defaults(func=cmd_positions)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _apply_config(args)
        args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

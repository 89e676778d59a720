"""Command line behaviour: files in, files out, deterministic bytes."""

import re

import pytest

from scmkit import cli, nsd
from synthdata import dataset_text, embeddings_text, make_synthetic


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    dataset, table_a, table_b = make_synthetic(
        n_words=6, n_old=8, n_new=12, dim=12, seed=3
    )
    paths = {
        "dataset": root / "dataset.tsv",
        "emb_a": root / "emb_a.tsv",
        "emb_b": root / "emb_b.tsv",
        "model": root / "model.tsv",
    }
    paths["dataset"].write_text(dataset_text(dataset))
    paths["emb_a"].write_text(embeddings_text(table_a))
    paths["emb_b"].write_text(embeddings_text(table_b))
    rc = cli.main([
        "train-nsd",
        "--dataset", str(paths["dataset"]),
        "--emb-a", str(paths["emb_a"]),
        "--emb-b", str(paths["emb_b"]),
        "--out", str(paths["model"]),
    ])
    assert rc == 0
    return paths


def run_predict(corpus, out, *extra):
    return cli.main([
        "predict",
        "--dataset", str(corpus["dataset"]),
        "--emb-a", str(corpus["emb_a"]),
        "--emb-b", str(corpus["emb_b"]),
        "--out", str(out),
        *extra,
    ])


def read_rows(path):
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert all(len(r) == 4 for r in rows)
    return rows


def test_predict_wsd_rows_sorted_and_labeled(corpus, tmp_path):
    out = tmp_path / "wsd.tsv"
    assert run_predict(corpus, out, "--method", "wsd") == 0
    rows = read_rows(out)
    assert len(rows) == 6 * 12
    assert rows == sorted(rows, key=lambda r: (r[0], r[1]))
    for word, uid, label, provenance in rows:
        assert label in (f"{word}:s0", f"{word}:s1")
        assert provenance == "wsd"


def test_predict_wsi_emits_novel_labels(corpus, tmp_path):
    out = tmp_path / "wsi.tsv"
    assert run_predict(corpus, out, "--method", "wsi") == 0
    for _, _, label, provenance in read_rows(out):
        assert label.startswith("novel:")
        assert provenance == "wsi"


def test_agglom_k_extra_zero_stays_in_inventory(corpus, tmp_path):
    out = tmp_path / "agglom0.tsv"
    assert run_predict(corpus, out, "--method", "agglom", "--k-extra", "0") == 0
    for word, _, label, provenance in read_rows(out):
        assert label in (f"{word}:s0", f"{word}:s1")
        assert provenance == "agglom"


def test_agglom_k_extra_two_adds_two_clusters(corpus, tmp_path):
    out = tmp_path / "agglom2.tsv"
    assert run_predict(corpus, out, "--method", "agglom", "--k-extra", "2") == 0
    by_word = {}
    for word, _, label, _ in read_rows(out):
        by_word.setdefault(word, set()).add(label)
    for word, labels in by_word.items():
        assert labels == {f"{word}:s0", f"{word}:s1", "novel:0", "novel:1"}


def test_outlier_threshold_one_equals_wsd_bytes(corpus, tmp_path):
    wsd_out = tmp_path / "wsd.tsv"
    o2c_out = tmp_path / "o2c.tsv"
    assert run_predict(corpus, wsd_out, "--method", "wsd") == 0
    rc = run_predict(
        corpus, o2c_out,
        "--method", "outlier2cluster",
        "--nsd-model", str(corpus["model"]),
        "--threshold", "1.0",
    )
    assert rc == 0
    assert o2c_out.read_bytes() == wsd_out.read_bytes()


def test_trained_model_round_trips(corpus, tmp_path):
    model = nsd.load_model(str(corpus["model"]))
    assert model.threshold == 0.65
    assert list(model.feature_names) == list(nsd.FEATURE_NAMES)

    out = tmp_path / "model2.tsv"
    rc = cli.main([
        "train-nsd",
        "--dataset", str(corpus["dataset"]),
        "--emb-a", str(corpus["emb_a"]),
        "--emb-b", str(corpus["emb_b"]),
        "--threshold", "0.8",
        "--out", str(out),
    ])
    assert rc == 0
    assert nsd.load_model(str(out)).threshold == 0.8


def test_train_nsd_needs_both_classes(tmp_path, capsys):
    dataset, table_a, table_b = make_synthetic(
        n_words=3, n_old=6, n_new=2, dim=8, seed=4
    )  # two new usages per word, both of stable senses: no gained labels
    (tmp_path / "d.tsv").write_text(dataset_text(dataset))
    (tmp_path / "a.tsv").write_text(embeddings_text(table_a))
    (tmp_path / "b.tsv").write_text(embeddings_text(table_b))
    rc = cli.main([
        "train-nsd",
        "--dataset", str(tmp_path / "d.tsv"),
        "--emb-a", str(tmp_path / "a.tsv"),
        "--emb-b", str(tmp_path / "b.tsv"),
        "--out", str(tmp_path / "m.tsv"),
    ])
    assert rc == 1
    err = capsys.readouterr().err
    assert "error:" in err
    assert "both classes" in err


def test_predict_then_evaluate_scores_high(corpus, tmp_path, capsys):
    pred = tmp_path / "pred.tsv"
    rc = run_predict(
        corpus, pred,
        "--method", "outlier2cluster",
        "--nsd-model", str(corpus["model"]),
    )
    assert rc == 0
    report = tmp_path / "report.tsv"
    rc = cli.main([
        "evaluate",
        "--dataset", str(corpus["dataset"]),
        "--pred", str(pred),
        "--out", str(report),
    ])
    assert rc == 0
    summary = capsys.readouterr().out.strip()
    assert re.fullmatch(
        r"words 6 \(edge-case \d+\) ari [0-9.]+ f1 [0-9.]+", summary
    )
    last = report.read_text().strip().split("\n")[-1]
    tag, ari, f1 = last.split("\t")
    assert tag == "#aggregate"
    assert float(ari) >= 0.9
    assert float(f1) >= 0.9


def test_jobs_do_not_change_bytes(corpus, tmp_path):
    one = tmp_path / "jobs1.tsv"
    eight = tmp_path / "jobs8.tsv"
    assert run_predict(corpus, one, "--method", "cluster2sense", "--jobs", "1") == 0
    assert run_predict(corpus, eight, "--method", "cluster2sense", "--jobs", "8") == 0
    assert one.read_bytes() == eight.read_bytes()


def test_jobs_env_variable(corpus, tmp_path, monkeypatch):
    baseline = tmp_path / "base.tsv"
    assert run_predict(corpus, baseline, "--method", "wsi", "--jobs", "1") == 0
    monkeypatch.setenv("SCMKIT_JOBS", "3")
    via_env = tmp_path / "env.tsv"
    assert run_predict(corpus, via_env, "--method", "wsi") == 0
    assert via_env.read_bytes() == baseline.read_bytes()


def test_rerun_is_idempotent(corpus, tmp_path):
    first = tmp_path / "first.tsv"
    second = tmp_path / "second.tsv"
    assert run_predict(corpus, first, "--method", "wsd") == 0
    assert run_predict(corpus, second, "--method", "wsd") == 0
    assert first.read_bytes() == second.read_bytes()


def test_config_file_supplies_defaults_but_flags_win(corpus, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# paths live in the config\n"
        f"dataset={corpus['dataset']}\n"
        f"emb-a={corpus['emb_a']}\n"
        f"emb-b={corpus['emb_b']}\n"
        "method=wsd\n"
    )
    out = tmp_path / "out.tsv"
    rc = cli.main([
        "predict", "--config", str(cfg), "--method", "wsi", "--out", str(out),
    ])
    assert rc == 0
    labels = {r[2] for r in read_rows(out)}
    assert all(l.startswith("novel:") for l in labels)  # the flag overrode wsd


def test_config_unknown_key_rejected(corpus, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("methodd=wsd\n")
    out = tmp_path / "out.tsv"
    rc = cli.main([
        "predict", "--config", str(cfg), "--out", str(out),
    ])
    assert rc == 1
    assert "methodd" in capsys.readouterr().err


def test_missing_required_flag_fails(corpus, tmp_path, capsys):
    rc = cli.main(["predict", "--method", "wsd", "--out", str(tmp_path / "x.tsv")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_method_fails(corpus, tmp_path, capsys):
    rc = run_predict(corpus, tmp_path / "x.tsv", "--method", "bogus")
    assert rc == 1
    assert "bogus" in capsys.readouterr().err


def test_outlier_method_requires_model(corpus, tmp_path, capsys):
    rc = run_predict(corpus, tmp_path / "x.tsv", "--method", "outlier2cluster")
    assert rc == 1
    assert "nsd" in capsys.readouterr().err.lower()


def test_ablate_report_and_curves(corpus, tmp_path):
    out_dir = tmp_path / "ablation"
    rc = cli.main([
        "ablate",
        "--dataset", str(corpus["dataset"]),
        "--emb-a", str(corpus["emb_a"]),
        "--emb-b", str(corpus["emb_b"]),
        "--out-dir", str(out_dir),
    ])
    assert rc == 0

    lines = (out_dir / "ablation.tsv").read_text().strip().split("\n")
    assert lines[0] == "section\tspace\tfeatures\tap"
    sections = {}
    for line in lines[1:]:
        section, space, features, ap = line.split("\t")
        sections.setdefault(section, []).append((space, features))
        assert 0.0 <= float(ap) <= 1.0
    assert len(sections["single"]) == 10
    assert len(sections["pair_wo_extra"]) == 20
    assert len(sections["pair_w_extra"]) == 36
    assert sections["classifier"] == [("both", "w_extra"), ("both", "wo_extra")]

    for name in (
        "pr_classifier_w_extra.tsv",
        "pr_classifier_wo_extra.tsv",
        "pr_manh_l1.tsv",
        "pr_dot.tsv",
        "pr_probability.tsv",
    ):
        text = (out_dir / name).read_text()
        assert text.startswith("recall\tprecision\n")
        assert len(text.strip().split("\n")) >= 2


def test_positions_fills_spans(corpus, tmp_path, capsys):
    forms = tmp_path / "forms.tsv"
    forms.write_text("w000\tw000\nw001\tw001\nw002\tw002\n")
    out = tmp_path / "filled.tsv"
    rc = cli.main([
        "positions",
        "--dataset", str(corpus["dataset"]),
        "--forms", str(forms),
        "--out", str(out),
    ])
    assert rc == 0
    err = capsys.readouterr().err.strip()
    assert err == "filled 60 spans, 60 usages left without a span"

    from scmkit.corpus import parse_dataset

    filled = parse_dataset(out.read_text().splitlines())
    for word in ("w000", "w001", "w002"):
        record = filled.records[word]
        for usage in record.old_usages + record.new_usages:
            start, end = usage.span
            assert usage.text[start:end] == word
    for usage in filled.records["w003"].new_usages:
        assert usage.span is None

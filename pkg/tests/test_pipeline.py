"""End-to-end training pipeline tests on small deterministic datasets."""

import json
import random
import string

import numpy as np
import pytest

from secretsweep.detectors import Finding, candidate_hash
from secretsweep.entropy import shannon_entropy
from secretsweep.features import CodeFeatureSpec, TfIdfModel, tokenize
from secretsweep.pipeline import (
    PipelineError,
    featurizer_from_dict,
    fill_unlabeled,
    load_bundle,
    row_id,
    score_items,
    train_code_model,
    train_docs_model,
)
from secretsweep.textprep import Row

BASE64_ALPHABET = string.ascii_letters + string.digits + "+/"


def code_finding(value, label="unlabeled", path="src/cfg.py", line=1,
                 detector="keyword"):
    return Finding(
        path=path,
        line_number=line,
        detector=detector,
        candidate=value,
        candidate_hash=candidate_hash(value),
        entropy_bits=shannon_entropy(value),
        label=label,
    )


def code_dataset(n_secret=40, n_benign=80, seed=7):
    rng = random.Random(seed)
    findings = []
    for i in range(n_secret):
        value = "".join(rng.choice(BASE64_ALPHABET) for _ in range(28))
        findings.append(code_finding(value, "secret", line=i + 1))
    words = ["alpha", "beta", "gamma", "delta", "omega", "sigma"]
    for i in range(n_benign):
        value = f"{rng.choice(words)}-{rng.choice(words)}-{rng.randrange(100)}"
        findings.append(
            code_finding(value, "not_secret", path="src/other.py", line=i + 1)
        )
    return findings


def docs_rows(n_benign=120, n_secret=6, seed=3):
    rng = random.Random(seed)
    words = ("deploy rollback guide cluster page step restart backup "
             "service checklist oncall runbook").split()
    rows = []
    for i in range(n_benign):
        raw = " ".join(rng.choice(words) for _ in range(8))
        rows.append(Row(page_id=f"p{i % 9}", line_number=i + 1, raw=raw,
                        tokens=tokenize(raw), label="not_secret"))
    for i in range(n_secret):
        value = "".join(rng.choice(BASE64_ALPHABET) for _ in range(24))
        raw = f"password: {value}"
        rows.append(Row(page_id="leaky", line_number=i + 1, raw=raw,
                        tokens=tokenize(raw), label="secret"))
    return rows


class TestRowId:
    def test_format(self):
        row = Row(page_id="12345", line_number=7, raw="text",
                  tokens=["text"], label="not_secret")
        assert row_id(row) == "12345:7"


class TestFillUnlabeled:
    def test_fills_only_unlabeled(self):
        rows = [
            Row("p", 1, "alpha", ["alpha"], "secret"),
            Row("p", 2, "beta", ["beta"]),
            Row("p", 3, "gamma", ["gamma"], "not_secret"),
        ]
        out = fill_unlabeled(rows)
        assert [r.label for r in out] == ["secret", "not_secret", "not_secret"]
        assert rows[1].label == "unlabeled"


class TestTrainCodeModel:
    def test_requires_gold_labels(self):
        with pytest.raises(PipelineError, match="gold-labeled"):
            train_code_model([code_finding("abc12345xyz")])

    def test_requires_plaintext(self):
        finding = code_finding("abc12345xyz", "secret")
        stripped = Finding(
            path=finding.path, line_number=finding.line_number,
            detector=finding.detector, candidate=None,
            candidate_hash=finding.candidate_hash,
            entropy_bits=finding.entropy_bits, label=finding.label,
        )
        with pytest.raises(PipelineError, match="keep-plaintext"):
            train_code_model([stripped, code_finding("zzz", "not_secret")])

    def test_split_sizes_recorded(self):
        result = train_code_model(code_dataset())
        split = result.model.metadata["split"]
        assert split == {"train": len(result.train), "val": len(result.val),
                         "test": len(result.test)}
        assert split["train"] + split["val"] + split["test"] == 120
        assert split["train"] == 28 + 56

    def test_no_split_fallback(self):
        findings = code_dataset(n_secret=2, n_benign=3)
        result = train_code_model(findings, ratios=None)
        assert result.train == result.val == result.test
        assert len(result.train) == 5

    def test_threshold_tuned_on_val(self):
        result = train_code_model(code_dataset(), target_recall=0.99)
        tuning = result.model.metadata["threshold_tuning"]
        assert tuning["target_recall"] == 0.99
        assert tuning["recall"] >= 0.75
        assert 0.0 < result.model.threshold <= 1.0

    def test_separable_data_scores_separate(self):
        result = train_code_model(code_dataset())
        test_items = [f for f, _ in result.test]
        scores = score_items(result.model, result.featurizer, test_items)
        golds = [label for _, label in result.test]
        secret_scores = [s for s, g in zip(scores, golds) if g == "secret"]
        benign_scores = [s for s, g in zip(scores, golds) if g == "not_secret"]
        assert min(secret_scores) > max(benign_scores)

    def test_deterministic(self, tmp_path):
        a = train_code_model(code_dataset(), seed=11)
        b = train_code_model(code_dataset(), seed=11)
        a.save(tmp_path / "a.json")
        b.save(tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

    def test_seed_changes_split(self):
        a = train_code_model(code_dataset(), seed=1)
        b = train_code_model(code_dataset(), seed=2)
        assert [f.candidate for f, _ in a.test] != [f.candidate for f, _ in b.test]


class TestScoreItems:
    def test_empty(self):
        result = train_code_model(code_dataset(n_secret=5, n_benign=10))
        out = score_items(result.model, result.featurizer, [])
        assert out.shape == (0,) and out.dtype == np.float64

    def test_order_follows_items(self):
        result = train_code_model(code_dataset())
        items = [f for f, _ in result.test]
        forward = score_items(result.model, result.featurizer, items)
        backward = score_items(result.model, result.featurizer, items[::-1])
        assert np.array_equal(forward, backward[::-1])


class TestBundleRoundTrip:
    def test_save_load_scores_identical(self, tmp_path):
        result = train_code_model(code_dataset())
        path = tmp_path / "model.json"
        result.save(path)
        model, featurizer = load_bundle(path)
        assert isinstance(featurizer, CodeFeatureSpec)
        assert model.threshold == result.model.threshold
        items = [f for f, _ in result.test]
        assert np.array_equal(
            score_items(result.model, result.featurizer, items),
            score_items(model, featurizer, items),
        )

    def test_missing_featurizer(self, tmp_path):
        result = train_code_model(code_dataset(n_secret=5, n_benign=10))
        path = tmp_path / "model.json"
        result.save(path)
        doc = json.loads(path.read_text())
        del doc["metadata"]["featurizer"]
        path.write_text(json.dumps(doc))
        with pytest.raises(PipelineError, match="featurizer"):
            load_bundle(path)

    def test_tampered_featurizer(self, tmp_path):
        result = train_code_model(code_dataset(n_secret=5, n_benign=10))
        path = tmp_path / "model.json"
        result.save(path)
        doc = json.loads(path.read_text())
        doc["metadata"]["featurizer"]["min_len"] = 999
        path.write_text(json.dumps(doc))
        with pytest.raises(PipelineError, match="fingerprint"):
            load_bundle(path)


class TestFeaturizerFromDict:
    def test_code_round_trip(self):
        spec = train_code_model(code_dataset(n_secret=5, n_benign=10)).featurizer
        again = featurizer_from_dict(spec.to_dict())
        assert isinstance(again, CodeFeatureSpec)
        assert again.to_dict() == spec.to_dict()

    def test_tfidf_round_trip(self):
        tfidf = train_docs_model(docs_rows(), synth_count=20).featurizer
        again = featurizer_from_dict(tfidf.to_dict())
        assert isinstance(again, TfIdfModel)
        assert again.to_dict() == tfidf.to_dict()

    def test_unknown_kind(self):
        with pytest.raises(PipelineError, match="kind"):
            featurizer_from_dict({"kind": "mystery"})


class TestTrainDocsModel:
    def test_requires_full_labels(self):
        rows = docs_rows()
        rows.append(Row("p", 999, "stray line", ["stray", "line"]))
        with pytest.raises(PipelineError, match="fill_unlabeled"):
            train_docs_model(rows)

    def test_synthetic_augmentation_recorded(self):
        result = train_docs_model(docs_rows(), synth_count=60)
        assert result.model.metadata["synthetic_positives"] == 60
        split = result.model.metadata["split"]
        assert split["train"] + split["val"] + split["test"] == 126 + 60

    def test_synthetic_rows_enter_split(self):
        result = train_docs_model(docs_rows(), synth_count=60)
        test_pages = {r.page_id for r, _ in result.test}
        assert "synthetic" in test_pages

    def test_e2e_separates_secrets(self, tmp_path):
        result = train_docs_model(docs_rows(), synth_count=60)
        scores = score_items(result.model, result.featurizer,
                             [r for r, _ in result.test])
        golds = [label for _, label in result.test]
        flagged = scores >= result.model.threshold
        tp = sum(1 for f, g in zip(flagged, golds) if f and g == "secret")
        fn = sum(1 for f, g in zip(flagged, golds) if not f and g == "secret")
        assert tp + fn > 0
        assert tp / (tp + fn) >= 0.8
        path = tmp_path / "docs.json"
        result.save(path)
        model, featurizer = load_bundle(path)
        assert isinstance(featurizer, TfIdfModel)
        assert np.array_equal(
            scores, score_items(model, featurizer, [r for r, _ in result.test])
        )

    def test_deterministic(self, tmp_path):
        a = train_docs_model(docs_rows(), synth_count=30, seed=5)
        b = train_docs_model(docs_rows(), synth_count=30, seed=5)
        a.save(tmp_path / "a.json")
        b.save(tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()

import json
import os
import pathlib

import numpy as np
import pytest

import dualq

SOURCE_DIR = pathlib.Path(os.environ.get("DUALQ_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def test_labels_and_kinds():
    assert dualq.labels() == ["dual quality", "other problems", "standard"]
    assert "pl_chars" in dualq.perturbation_kinds()


def test_fixture_stats_match_bundled_file():
    path = SOURCE_DIR / "data" / "dq_synthetic.jsonl"
    assert dualq.generate_fixture() == path.read_text(encoding="utf-8")
    stats = dualq.dataset_stats(str(path))
    assert stats["total"] == 1957
    assert stats["labels"]["dual quality"]["all"] == 540
    reviews = dualq.load_reviews(str(path))
    assert len(reviews) == 1957
    assert {"id", "text", "label"} <= set(reviews[0])


def test_parse_errors_carry_line_numbers():
    good = json.dumps({"id": "a", "text": "ok", "label": "standard"})
    with pytest.raises(dualq.ParseError, match="line 2"):
        dualq.parse_reviews(good + "\n{not json\n")
    assert issubclass(dualq.LabelParseError, dualq.ParseError)
    assert issubclass(dualq.ParseError, dualq.Error)


def test_evaluate_hand_counted():
    gold = ["dual quality", "dual quality", "standard", "other problems", "standard"]
    pred = ["dual quality", "standard", "standard", "other problems", "dual quality"]
    report = dualq.evaluate(gold, pred)
    assert report["accuracy"] == pytest.approx(0.6)
    with pytest.raises(dualq.ArgumentError):
        dualq.evaluate(gold, pred[:-1])


def test_perturbations():
    assert dualq.perturb("żółć", "pl_chars") == "zolc"
    assert dualq.perturb(dualq.perturb("Dobry produkt", "period"), "period") == "Dobry produkt"
    with pytest.raises(dualq.ParseError):
        dualq.perturb("x", "shout")


def test_disagreement_with_python_predictor():
    texts = [f"{'R' if i % 3 == 0 else 'r'}ecenzja {i}" for i in range(100)]

    def case_sensitive(text, seed):
        return "dual quality" if any(c.isupper() for c in text) else "standard"

    report = dualq.disagreement(case_sensitive, texts, "lower", runs=5)
    assert report["mean"] == pytest.approx(34.0)
    assert report["std"] == 0.0


def test_prompts_and_label_parsing():
    fixture = (SOURCE_DIR / "tests" / "fixtures" / "prompts" / "en_zero_shot.txt").read_text(encoding="utf-8")
    assert dualq.build_prompt("zero_shot", "en", "Great.") == fixture.replace("<review>", "Great.", 1)
    assert dualq.parse_label(' "Other problems".') == "other problems"
    with pytest.raises(dualq.LabelParseError):
        dualq.parse_label("dual quality or standard")


def _toy_data():
    texts, labels = [], []
    for i in range(12):
        texts.append(f"w Niemczech ten proszek jest lepszy {i}")
        labels.append("dual quality")
        texts.append(f"zwykły produkt, wszystko w porządku {i}")
        labels.append("standard")
    return texts, labels


def test_probe_with_hashing_backend_round_trips():
    texts, labels = _toy_data()
    model = dualq.train_probe(texts, labels, dualq.HashingEmbedding(dim=128))
    preds = model.predict(["w Niemczech lepszy proszek", "wszystko w porządku"])
    assert [p["label"] for p in preds] == ["dual quality", "standard"]
    reloaded = dualq.load_classifier(model.snapshot())
    assert reloaded.predict(texts) == model.predict(texts)


class KeywordBackend(dualq.EmbeddingBackend):
    """Two features: mentions a foreign market, mentions nothing special."""

    def embed(self, texts):
        return np.array([[1.0, 0.0] if "Niemczech" in t else [0.0, 1.0] for t in texts])

    def dim(self):
        return 2


def test_python_embedding_backend():
    texts, labels = _toy_data()
    model = dualq.train_probe(texts, labels, KeywordBackend(), contrastive_iterations=0)
    assert model.predict(["kupiony w Niemczech"])[0]["label"] == "dual quality"
    assert model.snapshot()["backend"]["kind"] == "python"


class BrokenBackend(dualq.EmbeddingBackend):
    def embed(self, texts):
        return np.zeros((len(texts), 3))

    def dim(self):
        return 2


def test_python_backend_shape_is_checked():
    texts, labels = _toy_data()
    with pytest.raises(dualq.BackendError, match="expected"):
        dualq.train_probe(texts, labels, BrokenBackend(), contrastive_iterations=0)


def test_simulate_small_pool():
    report = dualq.simulate(pool_size=1000, k=50, iterations=3)
    assert len(report["iterations"]) == 3
    assert report["annotations"] == 150
    assert report["enrichment"] > 1.0

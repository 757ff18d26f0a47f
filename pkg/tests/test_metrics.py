import numpy as np
import pytest

from helpers import tiny_spec
from huruf import data, metrics, training
from huruf.errors import LabelError, ShapeError
from huruf.metrics import (ClassReport, ConfusionMatrix, class_metrics,
                           confusion, evaluate_model, render_report)


def brute_force_metrics(true, pred, k):
    """Independent recount straight from the raw label pairs."""
    pairs = list(zip(true, pred))
    out = []
    for c in range(k):
        tp = sum(1 for t, p in pairs if t == c and p == c)
        fp = sum(1 for t, p in pairs if t != c and p == c)
        fn = sum(1 for t, p in pairs if t == c and p != c)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out.append((precision, recall, f1, sum(1 for t, _ in pairs if t == c)))
    return out


class TestConfusion:
    def test_perfect_is_diagonal(self):
        cm = confusion([0, 1, 2, 1], [0, 1, 2, 1], 3)
        assert np.array_equal(cm.counts, np.diag([1, 2, 1]))

    def test_hand_count(self):
        cm = confusion([0, 0, 1], [0, 1, 1], 2)
        assert np.array_equal(cm.counts, [[1, 1], [0, 1]])

    def test_empty(self):
        cm = confusion([], [], 3)
        assert cm.total == 0
        assert not cm.counts.any()

    def test_range_violation(self):
        with pytest.raises(LabelError):
            confusion([0, 3], [0, 1], 3)

    def test_csv_roundtrip(self, tmp_path):
        cm = confusion([0, 0, 1], [0, 1, 1], 2)
        path = str(tmp_path / "cm.csv")
        cm.to_csv(path)
        assert np.array_equal(np.loadtxt(path, delimiter=","), cm.counts)


class TestClassMetrics:
    def test_za_row_reconstruction(self):
        # 120 test samples of the class, 105 recognized, none falsely claimed:
        # precision 1.00, recall 105/120 = 0.875 -> 0.88, F1 0.9333 -> 0.93
        counts = np.array([[105, 15], [0, 120]])
        r = class_metrics(ConfusionMatrix(counts))
        assert f"{r.precision[0]:.2f}" == "1.00"
        assert f"{r.recall[0]:.2f}" == "0.88"
        assert f"{r.f1[0]:.2f}" == "0.93"

    def test_perfect_classifier(self):
        r = class_metrics(ConfusionMatrix(np.diag([5, 3, 2])))
        assert r.accuracy == 1.0
        assert np.all(r.precision == 1.0) and np.all(r.recall == 1.0) and np.all(r.f1 == 1.0)

    def test_absent_class_convention(self):
        counts = np.array([[3, 0, 0], [0, 2, 0], [0, 0, 0]])
        r = class_metrics(ConfusionMatrix(counts))
        assert r.precision[2] == r.recall[2] == r.f1[2] == 0.0
        assert r.support[2] == 0

    def test_matches_brute_force_exactly(self):
        rng = np.random.default_rng(0)
        true = rng.integers(0, 6, 1000)
        pred = rng.integers(0, 6, 1000)
        r = class_metrics(confusion(true, pred, 6))
        for c, (p, rec, f1, sup) in enumerate(brute_force_metrics(true, pred, 6)):
            assert r.precision[c] == p
            assert r.recall[c] == rec
            assert r.f1[c] == f1
            assert r.support[c] == sup

    def test_accuracy_is_support_weighted_recall(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            counts = rng.integers(0, 30, size=(5, 5))
            if counts.sum() == 0:
                continue
            r = class_metrics(ConfusionMatrix(counts))
            assert np.isclose(r.accuracy, r.weighted_recall)

    def test_macro_f1_bounds(self):
        rng = np.random.default_rng(2)
        counts = rng.integers(0, 50, size=(4, 4))
        r = class_metrics(ConfusionMatrix(counts))
        assert r.f1.min() <= r.macro_f1 <= r.f1.max()

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        true = rng.integers(0, 4, 200)
        pred = rng.integers(0, 4, 200)
        perm = rng.permutation(200)
        a = class_metrics(confusion(true, pred, 4))
        b = class_metrics(confusion(true[perm], pred[perm], 4))
        assert np.array_equal(a.precision, b.precision)
        assert np.array_equal(a.f1, b.f1)


class TestEvaluateModel:
    def test_head_mismatch(self):
        model = training.init_params(tiny_spec(classes=3), "uniform", 0)
        ds = data.synthetic_blobs(n_per_class=2, side=8, classes=4, seed=0)
        with pytest.raises(ShapeError):
            evaluate_model(model, ds)

    def test_memorization(self, memorized_letters):
        model, ds, _path = memorized_letters
        report, cm = evaluate_model(model, ds)
        assert report.accuracy == 1.0
        assert len(report.precision) == 28
        assert cm.total == len(ds.labels)

    def test_report_render_and_json(self, tmp_path, memorized_letters):
        model, ds, _path = memorized_letters
        report, _cm = evaluate_model(model, ds)
        text = render_report(report)
        assert "alef" in text and "accuracy" in text
        out = str(tmp_path / "report.json")
        report.save_json(out)
        import json
        loaded = json.load(open(out))
        assert len(loaded["classes"]) == 28
        assert loaded["accuracy"] == report.accuracy

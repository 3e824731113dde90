import numpy as np
import pytest

from spectral_vae.classifier import (
    REFERENCE_TABLE,
    EvalReport,
    MlpModel,
    MlpTrainConfig,
    compare_report,
    confusion_matrix,
    evaluate,
    train_mlp,
)
from spectral_vae.errors import DimMismatch, EmptyDataset
from spectral_vae.features import FeatureFile, write_feature_file
from spectral_vae.nn import softmax_xent

from gradcheck import check_array


def blobs(n_per_class, dim, n_classes, rng, spread=0.3):
    centres = rng.standard_normal((n_classes, dim)) * 2
    labels = np.repeat(np.arange(n_classes), n_per_class)
    values = centres[labels] + spread * rng.standard_normal((len(labels), dim))
    return FeatureFile("mfcc", values.astype(np.float32), labels, n_classes)


class TestModel:
    def test_reference_architecture(self):
        model = MlpModel(320, 30)
        assert model.is_reference_config
        shapes = [p.weights.shape for p in model.parameters()]
        assert shapes == [(100, 320), (100, 100), (30, 100)]
        assert not MlpModel(320, 30, hidden=50).is_reference_config

    def test_eval_is_deterministic(self, rng):
        model = MlpModel(10, 4)
        x = rng.standard_normal((5, 10))
        np.testing.assert_array_equal(model.logits(x), model.logits(x))
        np.testing.assert_allclose(model.predict_proba(x).sum(axis=1), 1.0)

    def test_ties_to_lower_index(self):
        model = MlpModel(2, 3)
        for p in model.parameters():
            p.weights[...] = 0.0
            p.bias[...] = 0.0
        assert model.predict(np.ones((4, 2))).tolist() == [0, 0, 0, 0]

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            MlpModel(10, 3).predict(np.zeros((2, 9)))

    def test_gradients_without_dropout(self, rng):
        model = MlpModel(12, 5, dropout=0.0, seed=3)
        x = rng.standard_normal((6, 12))
        y = rng.integers(0, 5, 6)

        def loss():
            return softmax_xent(model.logits(x), y)[0]

        for p in model.parameters():
            p.zero_grad()
        model.net.backward(softmax_xent(model.logits(x, train=True), y)[1])
        for p in model.parameters():
            for value, grad in p.arrays():
                check_array(loss, value, grad.copy(), rng, n=15)


class TestEvaluate:
    def test_single_correct_record(self):
        model = MlpModel(3, 4)
        x = np.array([[0.5, -1.0, 2.0]], dtype=np.float32)
        label = int(model.predict(x.astype(np.float64))[0])
        acc, cm = evaluate(model, FeatureFile("vae", x, np.array([label]), 4))
        assert acc == 1.0
        assert cm.sum() == 1 and cm[label, label] == 1

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            evaluate(MlpModel(3, 2), FeatureFile("vae", np.zeros((0, 3), np.float32), np.zeros(0), 2))

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatch):
            evaluate(MlpModel(3, 2), FeatureFile("vae", np.zeros((1, 4), np.float32), np.zeros(1), 2))

    def test_trace_identity_and_order_invariance(self, rng):
        ff = blobs(20, 6, 5, rng, spread=3.0)
        model = MlpModel(6, 5, seed=1)
        acc, cm = evaluate(model, ff)
        assert acc == np.trace(cm) / cm.sum()
        assert cm.sum(axis=1).tolist() == [20] * 5
        perm = rng.permutation(len(ff))
        shuffled = FeatureFile("mfcc", ff.values[perm], ff.labels[perm], 5)
        acc2, cm2 = evaluate(model, shuffled)
        assert acc2 == acc
        np.testing.assert_array_equal(cm2, cm)

    def test_untrained_near_chance(self):
        rng = np.random.default_rng(11)
        ff = FeatureFile("mfcc", rng.standard_normal((3000, 20)).astype(np.float32),
                         rng.integers(0, 30, 3000), 30)
        acc, _ = evaluate(MlpModel(20, 30, seed=2), ff)
        assert abs(acc - 1 / 30) < 0.025

    def test_confusion_matrix(self):
        cm = confusion_matrix(np.array([0, 1, 1, 2]), np.array([0, 2, 1, 2]), 3)
        assert cm.tolist() == [[1, 0, 0], [0, 1, 1], [0, 0, 1]]


class TestTraining:
    def test_separable_reaches_full_accuracy(self, rng):
        train, test = blobs(40, 8, 2, np.random.default_rng(5)), blobs(20, 8, 2, np.random.default_rng(5))
        model, report = train_mlp(train, test, MlpTrainConfig(epochs=50, batch_size=16, seed=0))
        assert max(report.test_acc) == 1.0
        assert report.best_epoch == report.test_acc.index(1.0) + 1
        assert evaluate(model, test)[0] == 1.0
        assert all(0 <= a <= 1 for a in report.train_acc + report.test_acc + report.train_acc_eval)
        cm = np.array(report.confusion)
        assert cm.sum(axis=1).tolist() == [20, 20]

    def test_deterministic(self, rng):
        train, test = blobs(30, 8, 3, rng, 1.5), blobs(10, 8, 3, rng, 1.5)
        cfg = MlpTrainConfig(epochs=5, batch_size=16, seed=4)
        a = train_mlp(train, test, cfg)[1]
        b = train_mlp(train, test, cfg)[1]
        assert a.history_csv() == b.history_csv()
        assert a.test_acc == b.test_acc and a.confusion == b.confusion

    def test_zero_lr_constant_eval_accuracy(self, rng):
        train, test = blobs(30, 8, 3, rng, 1.5), blobs(10, 8, 3, rng, 1.5)
        report = train_mlp(train, test, MlpTrainConfig(epochs=4, lr=0.0))[1]
        assert len(set(report.test_acc)) == 1
        assert len(set(report.train_acc_eval)) == 1
        assert report.best_epoch == 1

    def test_best_epoch_is_first_maximum(self, rng):
        train, test = blobs(30, 8, 3, rng, 2.0), blobs(10, 8, 3, rng, 2.0)
        report = train_mlp(train, test, MlpTrainConfig(epochs=10, batch_size=8))[1]
        assert report.best_epoch == int(np.argmax(report.test_acc)) + 1

    def test_reads_files_and_records_size(self, tmp_path, rng):
        train, test = blobs(10, 4, 2, rng), blobs(5, 4, 2, rng)
        size = write_feature_file(tmp_path / "tr.sfea", train)
        write_feature_file(tmp_path / "te.sfea", test)
        report = train_mlp(tmp_path / "tr.sfea", tmp_path / "te.sfea", MlpTrainConfig(epochs=1))[1]
        assert report.feature_bytes == size == 21 + 20 * (4 + 16)
        assert report.kind == "mfcc"

    def test_standardize_flag(self, rng):
        train, test = blobs(20, 4, 2, rng), blobs(5, 4, 2, rng)
        model = train_mlp(train, test, MlpTrainConfig(epochs=1, standardize=True))[0]
        np.testing.assert_allclose(model.shift, train.values.astype(np.float64).mean(axis=0))

    def test_mismatched_files(self, rng):
        with pytest.raises(DimMismatch):
            train_mlp(blobs(5, 4, 2, rng), blobs(5, 3, 2, rng))
        with pytest.raises(DimMismatch):
            train_mlp(blobs(5, 4, 2, rng), blobs(5, 4, 3, rng))

    def test_empty(self, rng):
        empty = FeatureFile("vae", np.zeros((0, 4), np.float32), np.zeros(0), 2)
        with pytest.raises(EmptyDataset):
            train_mlp(empty, blobs(5, 4, 2, rng))

    def test_json_round_trip(self, rng):
        report = train_mlp(blobs(10, 4, 2, rng), blobs(5, 4, 2, rng), MlpTrainConfig(epochs=2))[1]
        back = EvalReport.from_json(report.to_json())
        assert back == report


class TestCompare:
    def test_reference_values(self):
        text, csv = compare_report(REFERENCE_TABLE["vae"], REFERENCE_TABLE["mfcc"])
        lines = csv.splitlines()
        assert lines[1].startswith("Train accuracy,0.45,0.41,")
        assert float(lines[1].rsplit(",", 1)[1]) == pytest.approx(0.41 / 0.45, rel=1e-15)
        assert lines[2].startswith("Test accuracy,0.49,0.49,1.0")
        assert lines[3].startswith("MLP training time (s),42.0,63.0,1.5")
        assert lines[4].startswith("Best epoch,12.0,17.0,")
        assert lines[5].startswith("Train size (bytes),204000000.0,668000000.0,")
        ratio = float(lines[6].split(",")[-1])
        assert ratio == pytest.approx(668 / 204)
        for token in ("0.4500", "0.4100", "42", "63", "12", "17", "204000000", "668000000"):
            assert token in text

    def test_identical_reports(self, rng):
        report = train_mlp(blobs(10, 4, 2, rng), blobs(5, 4, 2, rng), MlpTrainConfig(epochs=2))[1]
        _, csv = compare_report(report, report)
        ratios = [line.rsplit(",", 1)[1] for line in csv.splitlines()[1:]]
        assert ratios == ["1.0"] * 6

    def test_summary_at_best_epoch(self):
        report = EvalReport("vae", 2, 100, train_loss=[1, 1], train_acc=[0.1, 0.2],
                            train_acc_eval=[0.1, 0.2], test_loss=[1, 1], test_acc=[0.3, 0.6],
                            epoch_seconds=[1.5, 2.5], best_epoch=2)
        assert report.summary() == {"train_accuracy": 0.2, "test_accuracy": 0.6,
                                    "training_seconds": 4.0, "best_epoch": 2, "train_bytes": 100}

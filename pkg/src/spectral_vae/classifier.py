"""MLP command classifier over fixed-length feature vectors.

Architecture: dense(dim -> 100) -> ReLU -> dropout(0.2) -> dense(100 -> 100)
-> ReLU -> dropout(0.2) -> dense(100 -> n_classes) -> softmax.
"""

from __future__ import annotations

import copy
import io
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DimMismatch, EmptyDataset
from .features.formats import FeatureFile, encode_feature_file, read_feature_file
from .nn import Adam, make_rng
from .nn.functional import softmax, softmax_xent
from .nn.layers import Dense, Dropout, ReLU, Sequential

log = logging.getLogger(__name__)

HIDDEN = 100
DROPOUT = 0.2


class MlpModel:
    def __init__(self, input_dim, n_classes, hidden=HIDDEN, dropout=DROPOUT, seed=0):
        self.input_dim, self.n_classes = int(input_dim), int(n_classes)
        self.hidden, self.dropout = hidden, dropout
        rng = make_rng(seed, "mlp/init")
        self.net = Sequential(
            Dense(self.input_dim, hidden, rng=rng), ReLU(), Dropout(dropout),
            Dense(hidden, hidden, rng=rng), ReLU(), Dropout(dropout),
            Dense(hidden, self.n_classes, rng=rng),
        )
        # optional per-dimension standardization fitted on the training set
        self.shift = np.zeros(self.input_dim)
        self.scale = np.ones(self.input_dim)

    @property
    def is_reference_config(self):
        return self.hidden == HIDDEN and self.dropout == DROPOUT

    def parameters(self):
        return self.net.parameters()

    def _prep(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise DimMismatch(f"features of shape {x.shape}, model expects dim {self.input_dim}")
        return (x - self.shift) / self.scale

    def logits(self, x, train=False, rng=None):
        return self.net.forward(self._prep(x), train=train, rng=rng)

    def predict_proba(self, x):
        return softmax(self.logits(x))

    def predict(self, x):
        # np.argmax returns the first maximum, i.e. ties go to the lower class index
        return np.argmax(self.logits(x), axis=1)


@dataclass
class MlpTrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3
    seed: int = 0
    standardize: bool = False


@dataclass
class EvalReport:
    kind: str
    n_classes: int
    feature_bytes: int
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)       # running, dropout active
    train_acc_eval: list = field(default_factory=list)  # full pass, dropout off
    test_loss: list = field(default_factory=list)
    test_acc: list = field(default_factory=list)
    epoch_seconds: list = field(default_factory=list)
    best_epoch: int | None = None
    confusion: list = field(default_factory=list)

    @property
    def training_seconds(self):
        return float(sum(self.epoch_seconds))

    def summary(self):
        """The five comparison quantities, taken at the best epoch."""
        i = self.best_epoch - 1 if self.best_epoch else None
        return {
            "train_accuracy": self.train_acc[i] if i is not None else float("nan"),
            "test_accuracy": self.test_acc[i] if i is not None else float("nan"),
            "training_seconds": self.training_seconds,
            "best_epoch": self.best_epoch or 0,
            "train_bytes": self.feature_bytes,
        }

    def history_csv(self):
        """Per-epoch metrics without timings, so reruns are byte-identical."""
        lines = ["epoch,train_loss,train_acc,train_acc_eval,test_loss,test_acc"]
        for i in range(len(self.train_loss)):
            vals = [self.train_loss[i], self.train_acc[i], self.train_acc_eval[i],
                    self.test_loss[i], self.test_acc[i]]
            lines.append(",".join([str(i + 1)] + [repr(float(v)) for v in vals]))
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _load(ff):
    if isinstance(ff, FeatureFile):
        return ff, None
    return read_feature_file(ff), os.path.getsize(ff)


def _xent_eval(model, x, y, batch=1024):
    total = 0.0
    correct = 0
    for s in range(0, len(y), batch):
        logits = model.logits(x[s:s + batch])
        loss, _ = softmax_xent(logits, y[s:s + batch])
        total += loss * len(logits)
        correct += int(np.sum(np.argmax(logits, axis=1) == y[s:s + batch]))
    return total / len(y), correct / len(y)


def confusion_matrix(y_true, y_pred, n_classes):
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def evaluate(model, features):
    """Accuracy and confusion matrix (rows: true class, columns: predicted)."""
    ff, _ = _load(features)
    if len(ff) == 0:
        raise EmptyDataset("feature file has no records")
    if ff.dim != model.input_dim:
        raise DimMismatch(f"feature dim {ff.dim} != model input dim {model.input_dim}")
    y = ff.labels.astype(np.intp)
    pred = model.predict(ff.values)
    cm = confusion_matrix(y, pred, model.n_classes)
    return float(np.trace(cm) / cm.sum()), cm


def train_mlp(train, test, config=None):
    """Minibatch cross-entropy training with per-epoch held-out evaluation.

    Returns the model restored to the best epoch (first maximum of test
    accuracy) and the full EvalReport.
    """
    config = config or MlpTrainConfig()
    train_ff, train_bytes = _load(train)
    test_ff, _ = _load(test)
    if len(train_ff) == 0 or len(test_ff) == 0:
        raise EmptyDataset("train and test feature files must both have records")
    if train_ff.dim != test_ff.dim or train_ff.n_classes != test_ff.n_classes:
        raise DimMismatch(
            f"train (dim {train_ff.dim}, {train_ff.n_classes} classes) vs "
            f"test (dim {test_ff.dim}, {test_ff.n_classes} classes)")
    if train_bytes is None:
        train_bytes = len(encode_feature_file(train_ff))

    x = train_ff.values.astype(np.float64)
    y = train_ff.labels.astype(np.intp)
    xt = test_ff.values.astype(np.float64)
    yt = test_ff.labels.astype(np.intp)
    model = MlpModel(train_ff.dim, train_ff.n_classes, seed=config.seed)
    if config.standardize:
        model.shift = x.mean(axis=0)
        model.scale = np.where(x.std(axis=0) > 0, x.std(axis=0), 1.0)

    report = EvalReport(train_ff.kind, train_ff.n_classes, int(train_bytes))
    opt = Adam(model.parameters(), lr=config.lr)
    shuffle_rng = make_rng(config.seed, "mlp/shuffle")
    dropout_rng = make_rng(config.seed, "mlp/dropout")
    best_acc, best_state = -1.0, None
    n = len(y)
    for epoch in range(1, config.epochs + 1):
        t0 = time.perf_counter()
        order = shuffle_rng.permutation(n)
        loss_sum, correct = 0.0, 0
        for s in range(0, n, config.batch_size):
            idx = order[s:s + config.batch_size]
            opt.zero_grad()
            logits = model.logits(x[idx], train=True, rng=dropout_rng)
            loss, dlogits = softmax_xent(logits, y[idx])
            model.net.backward(dlogits)
            opt.step()
            loss_sum += loss * len(idx)
            correct += int(np.sum(np.argmax(logits, axis=1) == y[idx]))
        report.epoch_seconds.append(time.perf_counter() - t0)
        report.train_loss.append(loss_sum / n)
        report.train_acc.append(correct / n)
        report.train_acc_eval.append(_xent_eval(model, x, y)[1])
        t_loss, t_acc = _xent_eval(model, xt, yt)
        report.test_loss.append(t_loss)
        report.test_acc.append(t_acc)
        log.info("epoch %d: train acc %.3f test acc %.3f", epoch, correct / n, t_acc)
        if t_acc > best_acc:
            best_acc = t_acc
            best_state = copy.deepcopy(model)
            report.best_epoch = epoch
    if best_state is not None:
        model = best_state
    report.confusion = confusion_matrix(yt, model.predict(xt), model.n_classes).tolist()
    return model, report


TABLE_ROWS = (
    ("Train accuracy", "train_accuracy"),
    ("Test accuracy", "test_accuracy"),
    ("MLP training time (s)", "training_seconds"),
    ("Best epoch", "best_epoch"),
    ("Train size (bytes)", "train_bytes"),
)

# Values reported for the full-scale run; "training time" and sizes are
# machine- and format-dependent.
REFERENCE_TABLE = {
    "vae": {"train_accuracy": 0.45, "test_accuracy": 0.49, "training_seconds": 42.0,
            "best_epoch": 12, "train_bytes": 204e6},
    "mfcc": {"train_accuracy": 0.41, "test_accuracy": 0.49, "training_seconds": 63.0,
             "best_epoch": 17, "train_bytes": 668e6},
}


def _ratio(a, b):
    return float(a) / float(b) if b else float("nan")


def comparison_rows(vae, mfcc):
    """(label, vae value, mfcc value, mfcc/vae) per comparison row."""
    return [(label, vae[key], mfcc[key], _ratio(mfcc[key], vae[key])) for label, key in TABLE_ROWS]


def _fmt(v):
    if isinstance(v, (int, np.integer)) or float(v).is_integer():
        return f"{int(v)}"
    return f"{v:.4f}"


def compare_report(vae_report, mfcc_report):
    """Return (aligned text table, CSV) comparing two EvalReports (or summary dicts)."""
    vae = vae_report.summary() if isinstance(vae_report, EvalReport) else vae_report
    mfcc = mfcc_report.summary() if isinstance(mfcc_report, EvalReport) else mfcc_report
    rows = comparison_rows(vae, mfcc)
    size_ratio = _ratio(mfcc["train_bytes"], vae["train_bytes"])

    header = ("Results", "VAE", "MFCC", "MFCC/VAE")
    cells = [header] + [(label, _fmt(a), _fmt(b), f"{r:.4f}") for label, a, b, r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(4)]
    text = io.StringIO()
    for j, row in enumerate(cells):
        text.write("  ".join(c.ljust(widths[i]) if i == 0 else c.rjust(widths[i])
                             for i, c in enumerate(row)).rstrip() + "\n")
        if j == 0:
            text.write("  ".join("-" * w for w in widths) + "\n")
    text.write(f"Size ratio MFCC/VAE: {size_ratio:.4f}\n")
    text.write("Training time is wall-clock and machine-dependent.\n")

    csv = io.StringIO()
    csv.write("row,vae,mfcc,mfcc_over_vae\n")
    for label, a, b, r in rows:
        csv.write(f"{label},{float(a)!r},{float(b)!r},{r!r}\n")
    csv.write(f"Size ratio,,,{size_ratio!r}\n")
    return text.getvalue(), csv.getvalue()

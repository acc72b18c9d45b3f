"""Per-sentence SGD with early stopping on dev F1, grid search, and run orchestration."""

from __future__ import annotations

import itertools
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Mapping, Sequence

import numpy as np

from .autodiff import Param, Tape
from .corpus import Corpus, Scores, evaluate_f1, merge_shuffle
from .lexicon import Embeddings
from .model import Hyperparams, Model, SharingConfig, build_model, rng_stream

log = logging.getLogger(__name__)


class DivergenceError(FloatingPointError):
    def __init__(self, epoch: int, sentence: int, what: str = "loss"):
        super().__init__(f"{what} became non-finite at epoch {epoch}, sentence {sentence}")
        self.epoch = epoch
        self.sentence = sentence


@dataclass
class EpochRecord:
    epoch: int
    nll: float  # mean per training sentence
    dev_f1: float
    seconds: float = field(default=0.0, compare=False)


@dataclass
class TrainReport:
    hyperparams: dict
    sharing: dict
    languages: list[str]
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_dev_f1: float = float("-inf")
    test_f1: dict[str, float] = field(default_factory=dict)
    status: str = "ok"

    def records(self) -> list[str]:
        """Line-oriented key=value form (no timings, so it is reproducible)."""
        lines = ["kind=config " + " ".join(f"{k}={_fmt(v)}" for k, v in self.hyperparams.items()),
                 "kind=sharing " + " ".join(f"{k}={_fmt(v)}" for k, v in self.sharing.items()),
                 f"kind=languages languages={','.join(self.languages)}"]
        for e in self.epochs:
            lines.append(f"kind=epoch epoch={e.epoch} nll={e.nll!r} dev_f1={e.dev_f1!r}")
        lines.append(f"kind=result status={self.status} best_epoch={self.best_epoch} "
                     f"best_dev_f1={self.best_dev_f1!r}")
        for lang, f1 in self.test_f1.items():
            lines.append(f"kind=test lang={lang} test_f1={f1!r}")
        return lines

    def text(self, timings: bool = False) -> str:
        out = [f"languages: {', '.join(self.languages)}",
               "sharing:   " + ", ".join(f"{k}={v}" for k, v in self.sharing.items()),
               "epoch      nll   dev F1" + ("   seconds" if timings else "")]
        for e in self.epochs:
            row = f"{e.epoch:5d} {e.nll:8.4f} {e.dev_f1:8.2f}"
            if timings:
                row += f" {e.seconds:9.2f}"
            out.append(row)
        out.append(f"best epoch {self.best_epoch} (dev F1 {self.best_dev_f1:.2f}), status {self.status}")
        for lang, f1 in self.test_f1.items():
            out.append(f"test F1 [{lang}]: {f1:.2f}")
        return "\n".join(out) + "\n"


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    return repr(v) if isinstance(v, float) else str(v)


def evaluate(model: Model, corpus: Corpus) -> Scores:
    return evaluate_f1(corpus, model.tag_corpus(corpus))


def token_accuracy(model: Model, corpus: Corpus) -> float:
    pred = model.tag_corpus(corpus)
    total = correct = 0
    for g, p in zip(corpus.sentences, pred.sentences):
        total += len(g)
        correct += sum(a == b for a, b in zip(g.tags, p.tags))
    return correct / total if total else 0.0


def sgd_step(params: Sequence[Param], lr: float, clip_norm: float | None) -> float:
    """Clip the joint gradient norm to ``clip_norm`` and update in place; returns the norm."""
    sq = 0.0
    for p in params:
        if p.sparse:
            rows = sorted(p.touched)
            sq += float(np.sum(p.grad[rows] ** 2))
        else:
            sq += float(np.sum(p.grad ** 2))
    norm = math.sqrt(sq)
    if not math.isfinite(norm):
        return norm
    factor = clip_norm / norm if clip_norm and norm > clip_norm else 1.0
    step = lr * factor
    for p in params:
        if p.sparse:
            rows = sorted(p.touched)
            p.value[rows] -= step * p.grad[rows]
        else:
            p.value -= step * p.grad
    return norm


def snapshot(model: Model) -> dict[str, np.ndarray]:
    return {name: p.value.copy() for name, p in model.registry().items()}


def restore(model: Model, snap: Mapping[str, np.ndarray]) -> None:
    for name, p in model.registry().items():
        p.value[...] = snap[name]


def train(model: Model, train_set: Corpus, dev: Corpus, hp: Hyperparams | None = None,
          test: Mapping[str, Corpus] | None = None) -> TrainReport:
    """SGD over sentences; keeps the parameters of the best dev-F1 epoch.

    Stops after ``patience`` epochs without dev improvement or at
    ``max_epochs``. Dev F1 ties keep the earlier epoch.
    """
    hp = hp or model.hp
    report = TrainReport(asdict(hp), asdict(model.sharing), list(model.languages))
    rng = rng_stream(hp.seed, "shuffle")
    params = model.params()
    for p in params:
        p.zero_grad()
    best = None
    sentences = train_set.sentences
    for epoch in range(1, hp.max_epochs + 1):
        t0 = time.perf_counter()
        total = 0.0
        for k in rng.permutation(len(sentences)):
            with Tape() as tape:
                loss = model.sentence_loss(sentences[k])
            value = float(loss.value[0])
            if not math.isfinite(value):
                raise DivergenceError(epoch, int(k))
            tape.backward(loss)
            used = tape.used_params()
            norm = sgd_step(used, hp.learning_rate, hp.clip_norm)
            if not math.isfinite(norm):
                raise DivergenceError(epoch, int(k), "gradient")
            for p in used:
                p.zero_grad()
            total += value
        nll = total / max(len(sentences), 1)
        dev_f1 = evaluate(model, dev).f1 if len(dev.sentences) else 0.0
        rec = EpochRecord(epoch, nll, dev_f1, time.perf_counter() - t0)
        report.epochs.append(rec)
        log.info("epoch %d nll=%.4f dev_f1=%.2f (%.1fs)", epoch, nll, dev_f1, rec.seconds)
        if best is None or dev_f1 > report.best_dev_f1:
            report.best_epoch, report.best_dev_f1 = epoch, dev_f1
            best = snapshot(model)
        elif epoch - report.best_epoch >= hp.patience:
            break
    if best is not None:
        restore(model, best)
    for lang, corpus in (test or {}).items():
        report.test_f1[lang] = evaluate(model, corpus).f1
    return report


def run_training(hp: Hyperparams, train_corpora: Sequence[Corpus],
                 dev_corpora: Sequence[Corpus] = (),
                 embeddings: Mapping[str, Embeddings | None] | None = None,
                 sharing: SharingConfig = SharingConfig(),
                 test: Mapping[str, Corpus] | None = None) -> tuple[Model, TrainReport]:
    """Build, merge+shuffle the training (and dev) corpora, and train."""
    model = build_model(hp, train_corpora, embeddings, sharing)
    shuffle = rng_stream(hp.seed, "merge")
    joint_train = merge_shuffle(train_corpora, shuffle)
    dev_corpora = [d for d in dev_corpora if len(d.sentences)]
    if dev_corpora:
        joint_dev = merge_shuffle(dev_corpora, shuffle)
    else:
        joint_dev = Corpus(joint_train.language, joint_train.scheme, ())
    report = train(model, joint_train, joint_dev, hp, test)
    return model, report


@dataclass
class GridPoint:
    hyperparams: Hyperparams
    report: TrainReport


def grid_points(grid: Mapping[str, Sequence], base: Hyperparams) -> list[Hyperparams]:
    if not grid:
        return [base]
    keys = list(grid)
    return [replace(base, **dict(zip(keys, values)))
            for values in itertools.product(*(grid[k] for k in keys))]


def grid_search(grid: Mapping[str, Sequence], train_corpora: Sequence[Corpus],
                dev_corpora: Sequence[Corpus], *, base: Hyperparams = Hyperparams(),
                embeddings: Mapping[str, Embeddings | None] | None = None,
                sharing: SharingConfig = SharingConfig()) -> tuple[Hyperparams, list[GridPoint]]:
    """Train every grid point; the best dev F1 wins (earliest point on ties)."""
    points = []
    best_hp, best_f1 = None, float("-inf")
    for hp in grid_points(grid, base):
        try:
            _, report = run_training(hp, train_corpora, dev_corpora, embeddings, sharing)
        except DivergenceError as e:
            log.warning("grid point %s diverged: %s", hp, e)
            report = TrainReport(asdict(hp), asdict(sharing),
                                 [c.language for c in train_corpora], status="diverged")
        points.append(GridPoint(hp, report))
        if report.status == "ok" and report.best_dev_f1 > best_f1:
            best_hp, best_f1 = hp, report.best_dev_f1
    if best_hp is None:
        raise DivergenceError(0, 0, "every grid point")
    return best_hp, points

"""Training loop, evaluation, voting ensemble and question-type analysis."""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .attention import dump_attention
from .config import Config
from .data import Instance, Vocab, load_corpus
from .errors import ContractError, FormatError, HMAError
from .model import HMAModel
from .tensor_core import AdamState, GradientTape, adam_step

log = logging.getLogger(__name__)

QUESTION_TYPES = ("what", "who", "why", "how", "where", "when", "which", "yes/no", "other")
_YES_NO_LEADS = frozenset("did do does is was were are can could would will had has have".split())


def question_type(tokens: Sequence[str]) -> str:
    if not tokens:
        return "other"
    first = tokens[0]
    if first in QUESTION_TYPES:
        return first
    if first in _YES_NO_LEADS:
        return "yes/no"
    return "other"


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

@dataclass
class Prediction:
    id: str
    scores: list[float]
    predicted: int

    def to_json(self) -> str:
        return json.dumps({"id": self.id, "scores": self.scores, "predicted": self.predicted})


@dataclass
class EvalReport:
    total: int
    labeled: int
    correct: int
    accuracy: Optional[float]
    by_type: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"total": self.total, "labeled": self.labeled, "correct": self.correct,
               "by_type": self.by_type}
        if self.accuracy is not None:
            out["accuracy"] = self.accuracy
        return out


def predict_all(model: HMAModel, instances: Iterable[Instance],
                dump_dir: Optional[str] = None) -> list[Prediction]:
    preds = []
    for inst in instances:
        res = model.forward(inst)
        if dump_dir:
            dump_attention(res.aspects, dump_dir, inst.id)
        preds.append(Prediction(inst.id, [float(x) for x in res.scores.combined.data.reshape(-1)],
                                res.predicted))
    return preds


def score_predictions(instances: Sequence[Instance], preds: Sequence[Prediction]) -> EvalReport:
    by_type: dict[str, dict] = {}
    labeled = correct = 0
    for inst, pred in zip(instances, preds):
        qtype = question_type(inst.question.tokens)
        row = by_type.setdefault(qtype, {"count": 0, "labeled": 0, "correct": 0})
        row["count"] += 1
        if inst.label is None:
            continue
        labeled += 1
        row["labeled"] += 1
        if pred.predicted == inst.label:
            correct += 1
            row["correct"] += 1
    for row in by_type.values():
        if row["labeled"]:
            row["accuracy"] = row["correct"] / row["labeled"]
    accuracy = correct / labeled if labeled else None
    return EvalReport(len(preds), labeled, correct, accuracy,
                      {k: by_type[k] for k in QUESTION_TYPES if k in by_type})


def evaluate(model: HMAModel, instances: Sequence[Instance],
             dump_dir: Optional[str] = None) -> tuple[EvalReport, list[Prediction]]:
    preds = predict_all(model, instances, dump_dir)
    return score_predictions(instances, preds), preds


def write_predictions(path, preds: Iterable[Prediction]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in preds:
            fh.write(p.to_json() + "\n")


def read_predictions(path) -> list[dict]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None
            if not isinstance(row, dict) or "id" not in row or row.get("predicted") not in (0, 1):
                raise FormatError(f"{path}: line {lineno}: expected an object with id and predicted 0|1")
            rows.append(row)
    return rows


# --------------------------------------------------------------------------
# training
# --------------------------------------------------------------------------

@dataclass
class TraceRow:
    epoch: int
    train_loss: float
    dev_acc: float


@dataclass
class TrainResult:
    model: HMAModel
    trace: list[TraceRow]
    best_epoch: int
    best_dev_acc: float
    checkpoint: Path


def _check_paths(cfg: Config) -> None:
    for name in ("train_path", "dev_path"):
        val = getattr(cfg, name)
        if not val:
            raise FormatError(f"config: {name} is required for training")
        if not Path(val).is_file():
            raise FormatError(f"config: {name} {val!r} is not a readable file")
    if cfg.word_vectors and not Path(cfg.word_vectors).is_file():
        raise FormatError(f"config: word_vectors {cfg.word_vectors!r} is not a readable file")


def mean_loss(model: HMAModel, instances: Sequence[Instance]) -> float:
    return float(np.mean([model.loss(inst).item() for inst in instances]))


def train_step(model: HMAModel, inst: Instance, adam: AdamState) -> float:
    model.params.zero_grad()
    with GradientTape() as tape:
        loss = model.loss(inst)
    tape.backward(loss)
    adam_step(model.params, adam)
    return loss.item()


def fit(model: HMAModel, train: Sequence[Instance], dev: Sequence[Instance],
        checkpoint, trace_path=None) -> TrainResult:
    """Run the configured epochs, keeping the best-dev checkpoint on disk.

    Epoch 0 is the initialization: its row reports the mean loss before any
    update and the initial checkpoint is always written.  Later epochs
    replace the checkpoint only on a strict dev improvement, so ties keep
    the earlier epoch.
    """
    cfg = model.cfg
    if any(inst.label is None for inst in train):
        raise ContractError("training corpus must be fully labeled")
    adam = AdamState(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
    order_rng = np.random.default_rng([cfg.seed, 1])
    checkpoint = Path(checkpoint)

    dev_report, _ = evaluate(model, dev)
    best_acc = dev_report.accuracy or 0.0
    trace = [TraceRow(0, mean_loss(model, train), best_acc)]
    best_epoch = 0
    model.save(checkpoint)
    log.info("epoch 0: train_loss %.6f dev_acc %.4f", trace[0].train_loss, best_acc)

    for epoch in range(1, cfg.epochs + 1):
        if cfg.early_stop_acc is not None and best_acc >= cfg.early_stop_acc:
            break
        losses = [train_step(model, train[i], adam) for i in order_rng.permutation(len(train))]
        dev_report, _ = evaluate(model, dev)
        acc = dev_report.accuracy or 0.0
        trace.append(TraceRow(epoch, float(np.mean(losses)), acc))
        log.info("epoch %d: train_loss %.6f dev_acc %.4f", epoch, trace[-1].train_loss, acc)
        if acc > best_acc:
            best_acc, best_epoch = acc, epoch
            model.save(checkpoint)

    if trace_path is not None:
        write_trace(trace_path, trace)
    return TrainResult(model, trace, best_epoch, best_acc, checkpoint)


def write_trace(path, trace: Sequence[TraceRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["epoch", "train_loss", "dev_acc"])
        for row in trace:
            w.writerow([row.epoch, repr(row.train_loss), repr(row.dev_acc)])


def train(cfg: Config) -> TrainResult:
    """Load corpora and vectors as configured, then :func:`fit`."""
    _check_paths(cfg)
    train_set, vocab = load_corpus(cfg.train_path, "build", limits=cfg.limits,
                                   min_fuzzy_len=cfg.fuzzy_min_len)
    dev_set, vocab = load_corpus(cfg.dev_path, "build", vocab, limits=cfg.limits,
                                 min_fuzzy_len=cfg.fuzzy_min_len)
    model = HMAModel.initialize(cfg, vocab)
    checkpoint = Path(cfg.checkpoint or "hma.ckpt")
    trace_path = cfg.trace or str(checkpoint) + ".trace.csv"
    return fit(model, train_set, dev_set, checkpoint, trace_path)


def load_eval_corpus(model: HMAModel, path) -> list[Instance]:
    instances, _ = load_corpus(path, "frozen", model.vocab, limits=model.cfg.limits,
                               min_fuzzy_len=model.cfg.fuzzy_min_len)
    return instances


# --------------------------------------------------------------------------
# ensemble, analysis
# --------------------------------------------------------------------------

def majority_vote(votes: Sequence[int]) -> int:
    if len(votes) % 2 == 0:
        raise ContractError(f"majority vote needs an odd number of voters, got {len(votes)}")
    ones = sum(1 for v in votes if v == 1)
    return 1 if ones > len(votes) - ones else 0


def ensemble(prediction_sets: Sequence[Sequence[dict]]) -> list[dict]:
    """Merge member predictions by per-id majority vote.

    Output keeps the id order of the first member; every member must cover
    exactly the same ids.
    """
    if len(prediction_sets) % 2 == 0:
        raise ContractError(f"ensemble needs an odd number of members, got {len(prediction_sets)}")
    maps = []
    for k, rows in enumerate(prediction_sets):
        m = {}
        for r in rows:
            if r["id"] in m:
                raise FormatError(f"member {k}: duplicate id {r['id']!r}")
            m[r["id"]] = int(r["predicted"])
        maps.append(m)
    reference = set(maps[0])
    for k, m in enumerate(maps[1:], start=1):
        if set(m) != reference:
            missing = sorted(reference - set(m))
            extra = sorted(set(m) - reference)
            raise FormatError(f"member {k}: id sets differ; missing {missing}, unexpected {extra}")
    merged = []
    for r in prediction_sets[0]:
        votes = [m[r["id"]] for m in maps]
        ones = sum(votes)
        merged.append({"id": r["id"], "votes": [len(votes) - ones, ones],
                       "predicted": majority_vote(votes)})
    return merged


def ensemble_files(paths: Sequence, out) -> list[dict]:
    merged = ensemble([read_predictions(p) for p in paths])
    with open(out, "w", encoding="utf-8") as fh:
        for row in merged:
            fh.write(json.dumps(row) + "\n")
    return merged


def analyze(instances: Sequence[Instance]) -> dict[str, float]:
    """Proportion of each question type; values sum to 1 on a non-empty corpus."""
    counts = Counter(question_type(inst.question.tokens) for inst in instances)
    total = len(instances)
    return {k: (counts[k] / total if total else 0.0) for k in QUESTION_TYPES}


def question_type_counts(instances: Sequence[Instance]) -> dict[str, int]:
    counts = Counter(question_type(inst.question.tokens) for inst in instances)
    return {k: counts[k] for k in QUESTION_TYPES}


__all__ = [
    "EvalReport", "HMAError", "Prediction", "QUESTION_TYPES", "TraceRow", "TrainResult",
    "analyze", "ensemble", "ensemble_files", "evaluate", "fit", "majority_vote",
    "predict_all", "question_type", "read_predictions", "score_predictions", "train",
    "write_predictions", "write_trace",
]

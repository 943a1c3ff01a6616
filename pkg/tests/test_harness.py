import json
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hma.config import Config
from hma.data import load_corpus, parse_example
from hma.errors import ContractError, FormatError
from hma.harness import (
    QUESTION_TYPES,
    Prediction,
    analyze,
    ensemble,
    ensemble_files,
    evaluate,
    fit,
    majority_vote,
    question_type,
    read_predictions,
    train,
    write_predictions,
)
from hma.model import HMAModel
from hma.synthetic import separable_examples, write_jsonl, write_vectors
from hma.tensor_core.checkpoint import load_arrays

from helpers import TINY, tiny_config


def synthetic_setup(tmp_path, n=8, **overrides):
    write_jsonl(tmp_path / "train.jsonl", separable_examples(n, seed=0))
    write_jsonl(tmp_path / "dev.jsonl", separable_examples(4, seed=1))
    cfg = tiny_config(train_path=str(tmp_path / "train.jsonl"), dev_path=str(tmp_path / "dev.jsonl"),
                      checkpoint=str(tmp_path / "m.ckpt"), trace=str(tmp_path / "trace.csv"),
                      **overrides)
    return cfg


def count_oracle(votes):
    c = Counter(votes)
    return 1 if c[1] > c[0] else 0


class TestConfig:
    def test_defaults_match_table(self):
        cfg = Config()
        assert (cfg.t, cfg.q, cfg.c, cfg.cn, cfg.e, cfg.h) == (300, 20, 10, 2, 218, 200)
        assert cfg.word_dim + cfg.char_out + cfg.pos_dim + 2 == 218
        assert cfg.epochs == 30

    def test_text_round_trip(self, tmp_path):
        cfg = tiny_config(seed=9, lr=0.002, early_stop_acc=1.0)
        cfg.save(tmp_path / "c.cfg")
        assert Config.from_file(tmp_path / "c.cfg") == cfg

    def test_relative_paths_resolve_against_file(self, tmp_path):
        (tmp_path / "c.cfg").write_text("# comment\ntrain_path = data/train.jsonl\nepochs = 3\n")
        cfg = Config.from_file(tmp_path / "c.cfg")
        assert cfg.train_path == str(tmp_path / "data" / "train.jsonl") and cfg.epochs == 3

    @pytest.mark.parametrize("text, msg", [
        ("bogus = 1\n", "bogus"),
        ("t = many\n", "t"),
        ("cn = 3\n", "cn"),
        ("e = 200\n", "e"),
        ("h = 7\n", "h"),
        ("t = 0\n", "t"),
        ("no equals sign\n", "line 1"),
    ])
    def test_invalid(self, text, msg):
        with pytest.raises(FormatError, match=msg):
            Config.from_text(text)


class TestQuestionType:
    @pytest.mark.parametrize("q, kind", [
        ("did he wash the car", "yes/no"),
        ("what did he do next", "what"),
        ("Why was the car dirty?", "why"),
        ("Could she see it", "yes/no"),
        ("after that, what", "other"),
        ("", "other"),
    ])
    def test_examples(self, q, kind):
        from hma.data import preprocess
        assert question_type(preprocess(q)) == kind

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from(["what did", "did it", "how many", "so", "when", "is it", "which"]),
                    min_size=1, max_size=15))
    def test_proportions_partition(self, questions):
        insts = [parse_example({"id": str(i), "text": "x", "question": q, "choices": ["a", "b"]}, i + 1)
                 for i, q in enumerate(questions)]
        props = analyze(insts)
        assert set(props) == set(QUESTION_TYPES)
        assert abs(sum(props.values()) - 1.0) < 1e-9


class TestEnsemble:
    def test_four_three(self):
        assert majority_vote([0, 0, 0, 1, 1, 0, 1]) == 0

    def test_unanimous(self):
        assert majority_vote([1] * 7) == 1

    def test_random_against_counter(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            votes = [int(v) for v in rng.integers(0, 2, size=int(rng.choice([1, 3, 5, 7, 9])))]
            assert majority_vote(votes) == count_oracle(votes)

    def test_even_count(self):
        with pytest.raises(ContractError):
            majority_vote([0, 1])
        with pytest.raises(ContractError):
            ensemble([[{"id": "a", "predicted": 0}]] * 2)

    def test_id_mismatch_lists_missing(self):
        a = [{"id": "x", "predicted": 0}, {"id": "y", "predicted": 1}]
        b = [{"id": "x", "predicted": 0}]
        with pytest.raises(FormatError, match=r"missing \['y'\]"):
            ensemble([a, a, b])

    def test_seven_copies(self, tmp_path):
        preds = [Prediction(f"i{k}", [1.2, 0.8], k % 2) for k in range(6)]
        write_predictions(tmp_path / "p.jsonl", preds)
        merged = ensemble_files([tmp_path / "p.jsonl"] * 7, tmp_path / "out.jsonl")
        assert [m["predicted"] for m in merged] == [p.predicted for p in preds]
        assert [m["id"] for m in read_predictions(tmp_path / "out.jsonl")] == [p.id for p in preds]

    def test_per_id_vote(self):
        rng = np.random.default_rng(1)
        ids = [f"q{i}" for i in range(20)]
        members = [[{"id": i, "predicted": int(rng.integers(2))} for i in ids] for _ in range(7)]
        members[3] = members[3][::-1]
        merged = ensemble(members)
        for row in merged:
            votes = [next(r["predicted"] for r in m if r["id"] == row["id"]) for m in members]
            assert row["predicted"] == count_oracle(votes)
            assert row["votes"] == [votes.count(0), votes.count(1)]


class TestEvaluate:
    def _model_and_data(self, tmp_path, labeled=True):
        rows = separable_examples(4, seed=3)
        if not labeled:
            rows = [{k: v for k, v in r.items() if k != "label"} for r in rows]
        write_jsonl(tmp_path / "d.jsonl", rows)
        insts, vocab = load_corpus(tmp_path / "d.jsonl")
        return HMAModel.initialize(tiny_config(), vocab), insts

    def test_accuracy_one_when_all_correct(self, tmp_path):
        model, insts = self._model_and_data(tmp_path)
        _, preds = evaluate(model, insts)
        relabeled = [parse_example({"id": i.id, "text": " ".join(i.text.tokens),
                                    "question": " ".join(i.question.tokens),
                                    "choices": [" ".join(c.tokens) for c in i.choices],
                                    "label": p.predicted}, 1, model.cfg.limits)
                     for i, p in zip(insts, preds)]
        report, _ = evaluate(model, relabeled)
        assert report.accuracy == 1.0 and report.correct == 4

    def test_unlabeled(self, tmp_path):
        model, insts = self._model_and_data(tmp_path, labeled=False)
        report, preds = evaluate(model, insts)
        assert len(preds) == 4 and "accuracy" not in report.to_dict()

    def test_recount_matches(self, tmp_path):
        model, insts = self._model_and_data(tmp_path)
        report, preds = evaluate(model, insts)
        write_predictions(tmp_path / "p.jsonl", preds)
        gold = {json.loads(l)["id"]: json.loads(l)["label"]
                for l in (tmp_path / "d.jsonl").read_text().splitlines()}
        rows = [json.loads(l) for l in (tmp_path / "p.jsonl").read_text().splitlines()]
        assert report.accuracy == sum(r["predicted"] == gold[r["id"]] for r in rows) / len(rows)
        assert sum(v["count"] for v in report.by_type.values()) == report.total

    def test_pure(self, tmp_path):
        model, insts = self._model_and_data(tmp_path)
        (r1, p1), (r2, p2) = evaluate(model, insts), evaluate(model, insts)
        assert r1 == r2 and [p.to_json() for p in p1] == [p.to_json() for p in p2]


class TestTraining:
    def test_trace_deterministic(self, tmp_path):
        (tmp_path / "a").mkdir(), (tmp_path / "b").mkdir()
        write_jsonl(tmp_path / "train.jsonl", separable_examples(8, seed=0))
        write_jsonl(tmp_path / "dev.jsonl", separable_examples(4, seed=1))
        traces = []
        for d in ("a", "b"):
            cfg = tiny_config(train_path=str(tmp_path / "train.jsonl"),
                              dev_path=str(tmp_path / "dev.jsonl"), epochs=2,
                              checkpoint=str(tmp_path / d / "m.ckpt"), trace=str(tmp_path / d / "t.csv"))
            train(cfg)
            traces.append((tmp_path / d / "t.csv").read_bytes())
        assert traces[0] == traces[1]
        assert traces[0].decode().splitlines()[0] == "epoch,train_loss,dev_acc"
        assert (tmp_path / "a" / "m.ckpt").read_bytes() == (tmp_path / "b" / "m.ckpt").read_bytes()

    def test_zero_epochs(self, tmp_path):
        cfg = synthetic_setup(tmp_path, epochs=0)
        result = train(cfg)
        assert [r.epoch for r in result.trace] == [0] and result.best_epoch == 0
        init = HMAModel.initialize(cfg, result.model.vocab)
        saved = load_arrays(cfg.checkpoint)
        for name in init.params:
            np.testing.assert_array_equal(saved[name], init.params[name].data)

    def test_loss_drops_by_epoch_five(self, tmp_path):
        result = train(synthetic_setup(tmp_path, epochs=5))
        assert result.trace[5].train_loss < result.trace[0].train_loss

    def test_best_checkpoint_kept(self, tmp_path):
        result = train(synthetic_setup(tmp_path, epochs=3))
        best = max(r.dev_acc for r in result.trace)
        assert result.best_dev_acc == best
        assert result.best_epoch == min(r.epoch for r in result.trace if r.dev_acc == best)

    def test_early_stop(self, tmp_path):
        result = train(synthetic_setup(tmp_path, epochs=50, early_stop_acc=0.0))
        assert len(result.trace) == 1

    def test_missing_path(self, tmp_path):
        cfg = synthetic_setup(tmp_path).replace(dev_path=str(tmp_path / "nope.jsonl"))
        with pytest.raises(FormatError, match="dev_path"):
            train(cfg)

    def test_vector_width_mismatch_before_training(self, tmp_path):
        write_vectors(tmp_path / "v.txt", ["soap", "bucket"], dim=TINY["word_dim"] + 1)
        cfg = synthetic_setup(tmp_path, word_vectors=str(tmp_path / "v.txt"))
        with pytest.raises(FormatError, match="line 1"):
            train(cfg)
        assert not (tmp_path / "m.ckpt").exists()

    def test_unlabeled_train_rejected(self, tmp_path):
        write_jsonl(tmp_path / "u.jsonl", [{"id": "a", "text": "x", "question": "y", "choices": ["a", "b"]}])
        insts, vocab = load_corpus(tmp_path / "u.jsonl")
        with pytest.raises(ContractError):
            fit(HMAModel.initialize(tiny_config(), vocab), insts, insts, tmp_path / "m.ckpt")


class TestPersistence:
    def test_round_trip_bitwise(self, tmp_path):
        cfg = synthetic_setup(tmp_path, epochs=1)
        result = train(cfg)
        dev, _ = load_corpus(cfg.dev_path, "frozen", result.model.vocab, limits=cfg.limits)
        before = HMAModel.load(cfg.checkpoint)
        _, p1 = evaluate(before, dev)
        before.save(tmp_path / "copy.ckpt")
        _, p2 = evaluate(HMAModel.load(tmp_path / "copy.ckpt"), dev)
        assert [p.to_json() for p in p1] == [p.to_json() for p in p2]

    def test_shape_mismatch(self, tmp_path):
        cfg = synthetic_setup(tmp_path, epochs=0)
        train(cfg)
        with pytest.raises(FormatError, match="does not fit the config"):
            HMAModel.load(cfg.checkpoint, cfg.replace(h=10, e=26))

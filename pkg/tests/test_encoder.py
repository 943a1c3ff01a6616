import numpy as np
import pytest

from hma.config import Config
from hma.data import Vocab, parse_example
from hma.embedding import embed_instance
from hma.encoder import LSTM_NAMES, bilstm, encode, highway, lstm_weights
from hma.errors import RangeError
from hma.model import HMAModel
from hma.tensor_core import (
    GradientTape,
    LSTMWeights,
    ModelParams,
    Tensor,
    lstm_cell,
    sum_all,
)

from helpers import EXAMPLE, max_rel_err, numeric_grad, tiny_model


def hw_params(rng, e, gate_bias=None):
    p = ModelParams()
    p.add("hw.w_transform", rng.normal(size=(e, e)) * 0.5)
    p.add("hw.b_transform", rng.normal(size=e) * 0.5)
    p.add("hw.w_gate", rng.normal(size=(e, e)) * 0.5)
    p.add("hw.b_gate", np.full(e, gate_bias) if gate_bias is not None else rng.normal(size=e))
    return p


def rand_lstm(rng, d_in, hidden):
    return LSTMWeights(Tensor(rng.normal(size=(d_in, 4 * hidden)) * 0.5, requires_grad=True),
                       Tensor(rng.normal(size=(hidden, 4 * hidden)) * 0.5, requires_grad=True),
                       Tensor(rng.normal(size=4 * hidden) * 0.5, requires_grad=True))


class TestHighway:
    def test_carry_saturation(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(3, 5))
        p = hw_params(rng, 5, gate_bias=-50.0)
        p["hw.w_gate"].data = np.zeros((5, 5))
        np.testing.assert_allclose(highway(Tensor(x), p).data, np.tanh(x), atol=1e-12)

    def test_transform_saturation(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(3, 5))
        p = hw_params(rng, 5, gate_bias=50.0)
        p["hw.w_gate"].data = np.zeros((5, 5))
        expected = np.tanh(x @ p["hw.w_transform"].data + p["hw.b_transform"].data)
        np.testing.assert_allclose(highway(Tensor(x), p).data, expected, atol=1e-12)

    def test_gradients_all_four_arrays(self):
        rng = np.random.default_rng(2)
        x = Tensor(rng.normal(size=(4, 6)))
        p = hw_params(rng, 6)
        p.zero_grad()
        with GradientTape() as tape:
            s = sum_all(highway(x, p))
        tape.backward(s)
        f = lambda: float(np.sum(highway(x, p).data))
        for name in p:
            assert max_rel_err(p[name].grad, numeric_grad(f, p[name].data)) < 1e-4, name

    def test_init_gate_bias(self):
        model, _ = tiny_model()
        np.testing.assert_array_equal(model.params["hw.b_gate"].data, -1.0)


class TestBiLSTM:
    def test_zero_valid(self):
        rng = np.random.default_rng(0)
        out = bilstm(Tensor(rng.normal(size=(4, 3))), rand_lstm(rng, 3, 2), rand_lstm(rng, 3, 2), 0)
        assert out.shape == (4, 4)
        np.testing.assert_array_equal(out.data, 0)

    def test_valid_too_long(self):
        rng = np.random.default_rng(0)
        with pytest.raises(RangeError):
            bilstm(Tensor(np.zeros((2, 3))), rand_lstm(rng, 3, 2), rand_lstm(rng, 3, 2), 3)

    def test_palindrome_symmetry(self):
        rng = np.random.default_rng(1)
        a, b, c = rng.normal(size=(3, 3))
        x = np.stack([a, b, c, b, a, np.zeros(3)])
        w = rand_lstm(rng, 3, 2)
        out = bilstm(Tensor(x), w, w, 5).data
        for i in range(5):
            np.testing.assert_allclose(out[i, :2], out[4 - i, 2:], atol=1e-14)
        np.testing.assert_array_equal(out[5], 0)

    def test_unrolled_trace(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(3, 4))
        fw, bw = rand_lstm(rng, 4, 1), rand_lstm(rng, 4, 1)
        out = bilstm(Tensor(x), fw, bw, 3).data

        def unroll(rows, w):
            h = c = Tensor(np.zeros((1, 1)))
            hs = []
            for r in rows:
                h, c = lstm_cell(Tensor(r[None, :]), h, c, w)
                hs.append(h.data[0])
            return hs

        f = unroll(x, fw)
        b = unroll(x[::-1], bw)[::-1]
        np.testing.assert_array_equal(out, np.hstack([np.array(f), np.array(b)]))

    def test_padding_independence(self):
        rng = np.random.default_rng(3)
        x = rng.normal(size=(4, 3))
        fw, bw = rand_lstm(rng, 3, 2), rand_lstm(rng, 3, 2)
        short = bilstm(Tensor(np.vstack([x, np.zeros((1, 3))])), fw, bw, 4).data
        longer = bilstm(Tensor(np.vstack([x, rng.normal(size=(6, 3))])), fw, bw, 4).data
        assert short[:4].tobytes() == longer[:4].tobytes()


class TestEncode:
    def test_full_size_shapes(self):
        cfg = Config()
        inst = parse_example(EXAMPLE, 1, cfg.limits)
        vocab = Vocab(t for s in inst.sequences() for t in s.tokens)
        model = HMAModel.initialize(cfg, vocab)
        r = encode(embed_instance(inst, vocab, model.params, cfg), model.params)
        assert r.text.shape == (300, 200) and r.question.shape == (20, 200)
        assert [c.shape for c in r.choices] == [(10, 200), (10, 200)]

    def test_choice_swap_permutes(self):
        model, inst = tiny_model()
        swapped = parse_example({**EXAMPLE, "choices": EXAMPLE["choices"][::-1]}, 1, model.cfg.limits)
        enc = lambda i: encode(embed_instance(i, model.vocab, model.params, model.cfg), model.params)
        a, b = enc(inst), enc(swapped)
        np.testing.assert_array_equal(a.choices[0].data, b.choices[1].data)
        np.testing.assert_array_equal(a.choices[1].data, b.choices[0].data)
        np.testing.assert_array_equal(a.text.data, b.text.data)

    def test_three_distinct_weight_sets(self):
        model, _ = tiny_model()
        names = model.params.names()
        for lstm in LSTM_NAMES:
            assert f"{lstm}.fwd.w_x" in names and f"{lstm}.bwd.w_h" in names
        assert not np.array_equal(model.params["lstm_text.fwd.w_x"].data,
                                  model.params["lstm_q.fwd.w_x"].data)

    def test_forget_bias_and_orthogonal_recurrent(self):
        model, _ = tiny_model()
        H = model.cfg.h // 2
        b = model.params["lstm_c.fwd.b"].data
        np.testing.assert_array_equal(b[H:2 * H], 1.0)
        w_h = model.params["lstm_c.fwd.w_h"].data
        block = w_h[:, :H]
        np.testing.assert_allclose(block.T @ block, np.eye(H), atol=1e-12)

    def test_end_to_end_gradient(self):
        model, inst = tiny_model()
        p = model.params

        def f():
            r = encode(embed_instance(inst, model.vocab, p, model.cfg), p)
            return float(np.sum(r.text.data * R) + np.sum(r.question.data))

        R = np.random.default_rng(0).normal(size=(model.cfg.t, model.cfg.h))
        p.zero_grad()
        with GradientTape() as tape:
            r = encode(embed_instance(inst, model.vocab, p, model.cfg), p)
            s = sum_all(r.text * Tensor(R)) + sum_all(r.question)
        tape.backward(s)
        for name in ("hw.w_gate", "lstm_text.bwd.w_h", "emb.pos"):
            idx = [tuple(i) for i in np.argwhere(np.ones(p[name].shape, bool))[:40]]
            num = numeric_grad(f, p[name].data, indices=idx)
            assert max_rel_err(p[name].grad, num) < 1e-4, name

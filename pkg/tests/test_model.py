"""Network forward/backward correctness against independent oracles."""

import json
import math
from decimal import Decimal, getcontext

import numpy as np
import pytest

from seqattr.data import EncodedDataset
from seqattr.model import (
    AttentionRecord,
    ModelCheckpoint,
    TrainConfig,
    TrainingDiverged,
    accuracy,
    extract_attentions,
    forward,
    init_params,
    loss_and_grads,
    mean_loss,
    predict,
    train,
    _forward_full,
)

getcontext().prec = 50


def sigm(z):
    return 1.0 / (1.0 + math.exp(-z))


def lstm_oracle(params, xs):
    """Pure-Python per-element LSTM for one unpadded sequence."""
    h_dim = len(params["b"]) // 4
    d = len(xs[0])
    h = [0.0] * h_dim
    c = [0.0] * h_dim
    hs, cs = [], []
    for x in xs:
        z = []
        for r in range(4 * h_dim):
            s = params["b"][r]
            for k in range(d):
                s += params["w_x"][r][k] * x[k]
            for k in range(h_dim):
                s += params["w_h"][r][k] * h[k]
            z.append(s)
        i = [sigm(z[r]) for r in range(h_dim)]
        f = [sigm(z[h_dim + r]) for r in range(h_dim)]
        g = [math.tanh(z[2 * h_dim + r]) for r in range(h_dim)]
        o = [sigm(z[3 * h_dim + r]) for r in range(h_dim)]
        c = [f[r] * c[r] + i[r] * g[r] for r in range(h_dim)]
        h = [o[r] * math.tanh(c[r]) for r in range(h_dim)]
        hs.append(list(h))
        cs.append(list(c))
    return hs, cs


def softmax_oracle(scores):
    """Softmax at 50 significant digits via Decimal."""
    es = [Decimal(float(s)).exp() for s in scores]
    tot = sum(es)
    return [float(e / tot) for e in es]


def random_batch(rng, b, t, d, lengths=None):
    x = rng.normal(size=(b, t, d))
    if lengths is None:
        lengths = rng.integers(1, t + 1, size=b)
    lengths = np.asarray(lengths)
    for i in range(b):
        x[i, lengths[i]:] = 0.0
    labels = rng.integers(0, 2, size=b)
    return x, lengths, labels


class TestForwardOracles:
    def test_hidden_states_match_scalar_oracle(self):
        rng = np.random.default_rng(42)
        d, h, t = 4, 3, 5
        params = init_params(d, h, rng)
        x = rng.normal(size=(1, t, d))
        full = _forward_full(params, x, np.array([t]))
        hs_exp, cs_exp = lstm_oracle(
            {k: v.tolist() for k, v in params.items()}, x[0].tolist()
        )
        np.testing.assert_allclose(full["hs"][1:, 0], hs_exp, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(full["cs"][1:, 0], cs_exp, rtol=1e-12, atol=1e-12)

    def test_attention_matches_decimal_softmax(self):
        rng = np.random.default_rng(7)
        d, h, t = 5, 4, 6
        params = init_params(d, h, rng)
        x, lengths, _ = random_batch(rng, 4, t, d)
        full = _forward_full(params, x, lengths)
        for i in range(4):
            n = lengths[i]
            scores = full["h_seq"][i, :n] @ params["w_att"].T + params["b_att"]
            scores = np.tanh(scores) @ params["u_att"]
            expected = softmax_oracle(scores)
            got = full["alpha"][i, :n]
            np.testing.assert_allclose(got, expected, rtol=1e-12, atol=1e-15)
            assert (full["alpha"][i, n:] == 0.0).all()

    def test_class_probs_match_decimal_softmax(self):
        rng = np.random.default_rng(19)
        params = init_params(3, 4, rng)
        x, lengths, _ = random_batch(rng, 3, 4, 3)
        full = _forward_full(params, x, lengths)
        for i in range(3):
            logits = full["context"][i] @ params["w_out"].T + params["b_out"]
            np.testing.assert_allclose(full["probs"][i], softmax_oracle(logits),
                                       rtol=1e-12, atol=1e-15)

    def test_alpha_sums_to_one(self):
        rng = np.random.default_rng(3)
        params = init_params(6, 5, rng)
        x, lengths, _ = random_batch(rng, 8, 7, 6)
        out = forward(params, x, lengths)
        np.testing.assert_allclose(out.alpha.sum(axis=1), 1.0, rtol=0, atol=1e-12)
        assert (out.alpha >= 0).all()


def fd_gradient(params, x, lengths, labels, name, eps=1e-5):
    """Central finite differences of the mean loss wrt one parameter tensor."""
    work = {k: v.copy() for k, v in params.items()}
    arr = work[name]
    grad = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        orig = arr[idx]
        arr[idx] = orig + eps
        lp = mean_loss(forward(work, x, lengths).probs, labels)
        arr[idx] = orig - eps
        lm = mean_loss(forward(work, x, lengths).probs, labels)
        arr[idx] = orig
        grad[idx] = (lp - lm) / (2.0 * eps)
    return grad


def max_relative_error(analytic, fd):
    return float(np.max(np.abs(analytic - fd) / (np.abs(analytic) + 1e-8)))


class TestGradients:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_all_parameter_gradients_match_finite_differences(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(2, 7))
        h = int(rng.integers(2, 6))
        t = int(rng.integers(2, 5))
        params = init_params(d, h, rng)
        x, lengths, labels = random_batch(rng, 3, t, d)
        _, grads, _ = loss_and_grads(params, x, lengths, labels)
        for name in grads:
            fd = fd_gradient(params, x, lengths, labels, name)
            err = max_relative_error(grads[name], fd)
            assert err < 1e-4, f"{name}: max relative error {err:.3e}"

    def test_gradients_respect_padding(self):
        # every instance shorter than T, so masked-BPTT pass-through is exercised
        rng = np.random.default_rng(123)
        params = init_params(4, 3, rng)
        x, lengths, labels = random_batch(rng, 4, 6, 4, lengths=[2, 5, 1, 3])
        _, grads, _ = loss_and_grads(params, x, lengths, labels)
        for name in grads:
            fd = fd_gradient(params, x, lengths, labels, name)
            assert max_relative_error(grads[name], fd) < 1e-4, name

    def test_loss_gradient_direction(self):
        # one gradient step along -grad lowers the loss
        rng = np.random.default_rng(5)
        params = init_params(5, 4, rng)
        x, lengths, labels = random_batch(rng, 6, 5, 5)
        loss0, grads, _ = loss_and_grads(params, x, lengths, labels)
        stepped = {k: v - 1e-3 * grads[k] for k, v in params.items()}
        loss1 = mean_loss(forward(stepped, x, lengths).probs, labels)
        assert loss1 < loss0


class TestPaddingInvariance:
    def test_extra_padding_is_bit_invariant(self):
        rng = np.random.default_rng(17)
        d, h = 5, 4
        params = init_params(d, h, rng)
        x, lengths, _ = random_batch(rng, 6, 5, d)
        narrow = forward(params, x, lengths)
        wide_x = np.concatenate([x, np.zeros((6, 3, d))], axis=1)
        wide = forward(params, wide_x, lengths)
        assert np.array_equal(narrow.alpha, wide.alpha[:, :5])
        assert (wide.alpha[:, 5:] == 0.0).all()
        assert np.array_equal(narrow.probs, wide.probs)
        assert np.array_equal(narrow.context, wide.context)

    def test_batch_matches_single_instance(self):
        rng = np.random.default_rng(29)
        d, h = 4, 3
        params = init_params(d, h, rng)
        x, lengths, _ = random_batch(rng, 5, 6, d)
        batched = forward(params, x, lengths)
        for i in range(5):
            single = forward(params, x[i:i + 1], lengths[i:i + 1])
            np.testing.assert_allclose(single.alpha[0], batched.alpha[i],
                                       rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose(single.probs[0], batched.probs[i],
                                       rtol=1e-12, atol=1e-15)


def toy_encoded(rng, n=40, t=6, d=5, planted=True):
    """Separable toy set: positives carry a 3.0 spike on feature 0."""
    x = rng.normal(scale=0.3, size=(n, t, d))
    lengths = rng.integers(3, t + 1, size=n)
    labels = np.array([0, 1] * (n // 2))
    for i in range(n):
        x[i, lengths[i]:] = 0.0
        if planted and labels[i] == 0:
            spot = int(rng.integers(0, lengths[i]))
            x[i, spot, 0] = 3.0
    return EncodedDataset(x=x, lengths=lengths, labels=labels,
                          ids=tuple(f"i{k:03d}" for k in range(n)))


class TestTraining:
    def test_loss_decreases_and_fits_separable_data(self):
        rng = np.random.default_rng(0)
        enc = toy_encoded(rng)
        cfg = TrainConfig(hidden_size=8, epochs=40, batch_size=8,
                          learning_rate=5e-3, seed=1, holdout_fraction=0.0)
        result = train(encoded=enc, config=cfg)
        assert result.history[-1].loss < result.history[0].loss
        assert result.final.train_accuracy >= 0.95

    def test_same_seed_reproduces_exactly(self):
        rng = np.random.default_rng(8)
        enc = toy_encoded(rng, n=20)
        cfg = TrainConfig(hidden_size=4, epochs=5, batch_size=8, seed=42,
                          holdout_fraction=0.0)
        r1 = train(encoded=enc, config=cfg)
        r2 = train(encoded=enc, config=cfg)
        assert [s.loss for s in r1.history] == [s.loss for s in r2.history]
        for k in r1.params:
            assert np.array_equal(r1.params[k], r2.params[k])

    def test_different_seed_differs(self):
        rng = np.random.default_rng(8)
        enc = toy_encoded(rng, n=20)
        r1 = train(encoded=enc, config=TrainConfig(hidden_size=4, epochs=3, seed=1, holdout_fraction=0.0))
        r2 = train(encoded=enc, config=TrainConfig(hidden_size=4, epochs=3, seed=2, holdout_fraction=0.0))
        assert any(not np.array_equal(r1.params[k], r2.params[k]) for k in r1.params)

    def test_checkpoint_cadence(self):
        rng = np.random.default_rng(2)
        enc = toy_encoded(rng, n=16)
        cfg = TrainConfig(hidden_size=4, epochs=10, batch_size=8, seed=0,
                          checkpoint_every=4, holdout_fraction=0.0)
        result = train(encoded=enc, config=cfg)
        assert [cp.epoch for cp in result.checkpoints] == [0, 4, 8, 10]
        assert result.checkpoint_at(8).epoch == 8
        with pytest.raises(KeyError):
            result.checkpoint_at(7)

    def test_epoch_zero_checkpoint_is_untrained(self):
        rng = np.random.default_rng(2)
        enc = toy_encoded(rng, n=16)
        cfg = TrainConfig(hidden_size=4, epochs=3, seed=9, holdout_fraction=0.0)
        result = train(encoded=enc, config=cfg)
        fresh = init_params(enc.input_dim, 4, np.random.default_rng(9))
        for k in fresh:
            assert np.array_equal(result.checkpoints[0].params[k], fresh[k])

    def test_holdout_split_disjoint_and_scored(self):
        rng = np.random.default_rng(4)
        enc = toy_encoded(rng, n=40)
        cfg = TrainConfig(hidden_size=4, epochs=2, seed=3, holdout_fraction=0.25)
        result = train(encoded=enc, config=cfg)
        assert len(result.holdout_indices) == 10
        assert len(result.train_indices) == 30
        assert not set(result.holdout_indices) & set(result.train_indices)
        assert result.history[-1].test_accuracy is not None

    def test_stop_accuracy_halts_early(self):
        rng = np.random.default_rng(0)
        enc = toy_encoded(rng)
        cfg = TrainConfig(hidden_size=8, epochs=200, batch_size=8, learning_rate=5e-3,
                          seed=1, stop_accuracy=0.9, holdout_fraction=0.0)
        result = train(encoded=enc, config=cfg)
        assert result.stopped_early
        assert result.history[-1].epoch < 200
        assert result.final.epoch == result.history[-1].epoch

    def test_callback_can_stop_training(self):
        rng = np.random.default_rng(6)
        enc = toy_encoded(rng, n=16)
        seen = []

        def cb(stats):
            seen.append(stats.epoch)
            return stats.epoch < 3

        cfg = TrainConfig(hidden_size=4, epochs=50, seed=0, holdout_fraction=0.0)
        result = train(encoded=enc, config=cfg, callback=cb)
        assert seen == [1, 2, 3]
        assert result.stopped_early
        assert result.final.epoch == 3

    def test_nan_input_aborts_with_last_checkpoint(self):
        rng = np.random.default_rng(6)
        enc = toy_encoded(rng, n=8)
        enc.x[0, 0, 0] = np.nan
        with pytest.raises(TrainingDiverged) as exc:
            train(encoded=enc,
                  config=TrainConfig(hidden_size=4, epochs=5, seed=0, holdout_fraction=0.0))
        assert exc.value.last_checkpoint.epoch == 0

    def test_single_class_dataset_rejected(self):
        rng = np.random.default_rng(1)
        enc = toy_encoded(rng, n=8)
        all_pos = EncodedDataset(x=enc.x, lengths=enc.lengths,
                                 labels=np.zeros(8, dtype=np.int64), ids=enc.ids)
        with pytest.raises(ValueError, match="both classes"):
            train(encoded=all_pos, config=TrainConfig(hidden_size=4, epochs=2))

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(hidden_size=0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(holdout_fraction=1.0)
        with pytest.raises(ValueError):
            TrainConfig(attention_normalization="nope")


class TestAttentionRecords:
    def build(self):
        rng = np.random.default_rng(12)
        enc = toy_encoded(rng, n=12)
        params = init_params(enc.input_dim, 4, rng)
        return params, enc

    def test_per_instance_normalization_peaks_at_one(self):
        params, enc = self.build()
        records = extract_attentions(params, enc)
        assert len(records) == 12
        for rec, inst_id, n in zip(records, enc.ids, enc.lengths):
            assert rec.instance_id == inst_id
            assert rec.length == n
            assert abs(sum(rec.alpha) - 1.0) < 1e-9
            assert max(rec.normalized) == 1.0
            assert all(0.0 <= a <= 1.0 for a in rec.normalized)

    def test_global_normalization_peaks_once(self):
        params, enc = self.build()
        records = extract_attentions(params, enc, normalization="global")
        peak = max(max(r.normalized) for r in records)
        assert peak == 1.0
        per_instance_peaks = [max(r.normalized) for r in records]
        assert sum(1 for p in per_instance_peaks if p < 1.0) > 0

    def test_raw_and_normalized_are_proportional(self):
        params, enc = self.build()
        for rec in extract_attentions(params, enc):
            m = max(rec.alpha)
            np.testing.assert_allclose(rec.normalized,
                                       [a / m for a in rec.alpha], rtol=1e-12)

    def test_predictions_match_predict(self):
        params, enc = self.build()
        preds, probs = predict(params, enc)
        records = extract_attentions(params, enc)
        for i, rec in enumerate(records):
            assert rec.predicted == ("pos", "neg")[preds[i]]
            assert abs(rec.p_pos - probs[i, 0]) < 1e-15

    def test_unknown_normalization_rejected(self):
        params, enc = self.build()
        with pytest.raises(ValueError):
            extract_attentions(params, enc, normalization="minmax")


class TestCheckpointIO:
    def test_save_load_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(33)
        params = init_params(5, 3, rng)
        cp = ModelCheckpoint(epoch=7, params=params, input_dim=5, hidden_size=3,
                             loss=0.5432, train_accuracy=0.875, test_accuracy=0.75)
        path = tmp_path / "cp.json"
        cp.save(path)
        back = ModelCheckpoint.load(path)
        assert back.epoch == 7
        assert back.loss == 0.5432
        assert back.test_accuracy == 0.75
        for k in params:
            assert np.array_equal(back.params[k], params[k])  # repr round-trip

    def test_save_leaves_no_temp_files(self, tmp_path):
        rng = np.random.default_rng(1)
        cp = ModelCheckpoint(epoch=0, params=init_params(3, 2, rng), input_dim=3,
                             hidden_size=2, loss=1.0, train_accuracy=0.5)
        cp.save(tmp_path / "cp.json")
        assert sorted(p.name for p in tmp_path.iterdir()) == ["cp.json"]

    def test_load_rejects_wrong_shapes(self, tmp_path):
        rng = np.random.default_rng(1)
        cp = ModelCheckpoint(epoch=0, params=init_params(3, 2, rng), input_dim=3,
                             hidden_size=2, loss=1.0, train_accuracy=0.5)
        path = tmp_path / "cp.json"
        cp.save(path)
        payload = json.loads(path.read_text())
        payload["params"]["u_att"] = [0.0, 0.0, 0.0, 0.0, 0.0]  # wrong width
        path.write_text(json.dumps(payload))
        with pytest.raises(ValueError, match="u_att"):
            ModelCheckpoint.load(path)

    def test_load_rejects_unknown_version(self, tmp_path):
        path = tmp_path / "cp.json"
        path.write_text('{"v": 99}')
        with pytest.raises(ValueError, match="version"):
            ModelCheckpoint.load(path)

    def test_train_writes_checkpoint_files(self, tmp_path):
        rng = np.random.default_rng(2)
        enc = toy_encoded(rng, n=16)
        cfg = TrainConfig(hidden_size=4, epochs=4, seed=0, checkpoint_every=2,
                          holdout_fraction=0.0)
        train(encoded=enc, config=cfg, checkpoint_dir=tmp_path)
        names = sorted(p.name for p in tmp_path.iterdir())
        assert names == ["epoch_00000.json", "epoch_00002.json", "epoch_00004.json"]
        cp = ModelCheckpoint.load(tmp_path / "epoch_00004.json")
        assert cp.epoch == 4


class TestClosedFormCases:
    def zero_params(self, d=3, h=2):
        params = init_params(d, h, np.random.default_rng(0))
        return {k: np.zeros_like(v) for k, v in params.items()}

    def test_zero_parameters_give_zero_hiddens_and_uniform_attention(self):
        params = self.zero_params()
        x = np.random.default_rng(1).normal(size=(2, 4, 3))
        lengths = np.array([4, 2])
        full = _forward_full(params, x, lengths)
        assert (full["hs"] == 0.0).all()
        assert (full["cs"] == 0.0).all()
        np.testing.assert_allclose(full["alpha"][0], [0.25] * 4)
        np.testing.assert_allclose(full["alpha"][1], [0.5, 0.5, 0.0, 0.0])

    def test_length_one_sequence_gets_full_attention(self):
        rng = np.random.default_rng(2)
        params = init_params(3, 4, rng)
        x = rng.normal(size=(1, 3, 3))
        out = _forward_full(params, x, np.array([1]))
        assert out["alpha"][0, 0] == 1.0
        np.testing.assert_array_equal(out["context"][0], out["h_seq"][0, 0])

    def test_known_logits_give_three_quarters(self):
        # logits (ln 3, 0) must softmax to (0.75, 0.25)
        params = self.zero_params()
        params["b_out"] = np.array([math.log(3.0), 0.0])
        x = np.zeros((1, 2, 3))
        out = forward(params, x, np.array([2]))
        np.testing.assert_allclose(out.probs[0], [0.75, 0.25], rtol=1e-12)

    def test_probability_tie_predicts_positive(self):
        params = self.zero_params()
        enc = EncodedDataset(x=np.zeros((1, 2, 3)), lengths=np.array([2]),
                             labels=np.array([1]), ids=("a",))
        preds, probs = predict(params, enc)
        np.testing.assert_allclose(probs[0], [0.5, 0.5])
        assert preds[0] == 0

    def test_duplicated_instance_gradients_are_additive(self):
        rng = np.random.default_rng(9)
        params = init_params(4, 3, rng)
        x, lengths, labels = random_batch(rng, 2, 4, 4)
        _, g_pair, _ = loss_and_grads(params, x, lengths, labels)
        _, g_a, _ = loss_and_grads(params, x[:1], lengths[:1], labels[:1])
        _, g_b, _ = loss_and_grads(params, x[1:], lengths[1:], labels[1:])
        for k in g_pair:  # mean over the pair = half the summed per-instance grads
            np.testing.assert_allclose(2.0 * g_pair[k], g_a[k] + g_b[k],
                                       rtol=1e-12, atol=1e-14)


def test_forget_gate_bias_starts_at_one():
    params = init_params(4, 3, np.random.default_rng(0))
    h = 3
    assert (params["b"][h:2 * h] == 1.0).all()
    assert (params["b"][:h] == 0.0).all()
    assert (params["b_out"] == 0.0).all()


def test_accuracy_helper_counts_correct_fraction():
    rng = np.random.default_rng(10)
    enc = toy_encoded(rng, n=10)
    params = init_params(enc.input_dim, 4, rng)
    preds, _ = predict(params, enc)
    assert accuracy(params, enc) == float(np.mean(preds == enc.labels))

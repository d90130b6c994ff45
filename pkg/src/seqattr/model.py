"""Attention-equipped LSTM binary classifier with handwritten backprop.

One LSTM layer reads the encoded event sequence; an additive scorer
turns each hidden state into an attention weight via a masked softmax;
the attention-weighted sum of hidden states feeds a two-class softmax
head trained with cross-entropy.  Forward and backward passes are plain
numpy over (batch, time, feature) arrays, with padded timesteps masked
so that arbitrary-length batches give bit-identical results to
one-by-one processing.

Per-event attention weights are the raw material for every attribution
view downstream.  `extract_attentions` returns them both raw (softmax
output, sums to 1 per instance) and normalized (divided by the maximum,
per instance by default) so the two scales stay available side by side.
"""

from __future__ import annotations

import json
import logging
import os
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from .data import Dataset, EncodedDataset, LABEL_NEG, LABEL_POS, encode_dataset

logger = logging.getLogger(__name__)

# class indices used throughout: 0 = pos, 1 = neg
CLASS_LABELS = (LABEL_POS, LABEL_NEG)

PARAM_NAMES = ("w_x", "w_h", "b", "w_att", "b_att", "u_att", "w_out", "b_out")

PER_INSTANCE = "per_instance"
GLOBAL_MAX = "global"

LOSS_CLAMP = 1e-12


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries the last finite-loss checkpoint."""

    def __init__(self, epoch: int, last_checkpoint):
        super().__init__(f"non-finite loss at epoch {epoch}")
        self.epoch = epoch
        self.last_checkpoint = last_checkpoint


@dataclass
class TrainConfig:
    hidden_size: int = 32
    epochs: int = 100
    batch_size: int = 32
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0
    checkpoint_every: int = 25         # 0 keeps epoch 0 and the final epoch only
    holdout_fraction: float = 0.1      # held out of training, scored each epoch
    stop_accuracy: float = None        # stop once holdout (or train) accuracy reaches this
    attention_normalization: str = PER_INSTANCE

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ValueError(f"hidden_size must be positive, got {self.hidden_size}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if not 0.0 <= self.holdout_fraction < 1.0:
            raise ValueError(f"holdout_fraction must be in [0, 1), got {self.holdout_fraction}")
        if self.checkpoint_every < 0:
            raise ValueError(f"checkpoint_every must be >= 0, got {self.checkpoint_every}")
        if self.attention_normalization not in (PER_INSTANCE, GLOBAL_MAX):
            raise ValueError(
                f"attention_normalization must be {PER_INSTANCE!r} or {GLOBAL_MAX!r}, "
                f"got {self.attention_normalization!r}"
            )


def init_params(input_dim: int, hidden_size: int, rng: np.random.Generator) -> dict:
    """Uniform +-1/sqrt(H) weights, zero biases, forget-gate bias 1."""
    h = hidden_size
    k = 1.0 / np.sqrt(h)
    params = {
        "w_x": rng.uniform(-k, k, size=(4 * h, input_dim)),
        "w_h": rng.uniform(-k, k, size=(4 * h, h)),
        "b": np.zeros(4 * h),
        "w_att": rng.uniform(-k, k, size=(h, h)),
        "b_att": np.zeros(h),
        "u_att": rng.uniform(-k, k, size=h),
        "w_out": rng.uniform(-k, k, size=(2, h)),
        "b_out": np.zeros(2),
    }
    params["b"][h:2 * h] = 1.0  # forget gate opens at init so early gradients reach back
    return params


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _lengths_mask(lengths: np.ndarray, t_max: int) -> np.ndarray:
    return np.arange(t_max)[None, :] < np.asarray(lengths)[:, None]


def _forward_full(params: Mapping, x: np.ndarray, lengths: np.ndarray) -> dict:
    """Run the whole network and keep every intermediate the backward pass needs."""
    b_sz, t_max, _ = x.shape
    h_dim = params["w_h"].shape[1]
    mask = _lengths_mask(lengths, t_max)

    gi = np.zeros((t_max, b_sz, h_dim))
    gf = np.zeros((t_max, b_sz, h_dim))
    gg = np.zeros((t_max, b_sz, h_dim))
    go = np.zeros((t_max, b_sz, h_dim))
    cs = np.zeros((t_max + 1, b_sz, h_dim))
    hs = np.zeros((t_max + 1, b_sz, h_dim))

    for t in range(t_max):
        z = x[:, t] @ params["w_x"].T + hs[t] @ params["w_h"].T + params["b"]
        i = _sigmoid(z[:, :h_dim])
        f = _sigmoid(z[:, h_dim:2 * h_dim])
        g = np.tanh(z[:, 2 * h_dim:3 * h_dim])
        o = _sigmoid(z[:, 3 * h_dim:])
        c_new = f * cs[t] + i * g
        h_new = o * np.tanh(c_new)
        m = mask[:, t][:, None]
        # padded steps carry state through untouched
        cs[t + 1] = np.where(m, c_new, cs[t])
        hs[t + 1] = np.where(m, h_new, hs[t])
        gi[t], gf[t], gg[t], go[t] = i, f, g, o

    h_seq = hs[1:].transpose(1, 0, 2)                       # (B, T, H)
    act = np.tanh(h_seq @ params["w_att"].T + params["b_att"])
    scores = act @ params["u_att"]                          # (B, T)
    masked = np.where(mask, scores, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    alpha = expd / expd.sum(axis=1, keepdims=True)          # 0 at padded steps
    context = np.einsum("bt,bth->bh", alpha, h_seq)

    logits = context @ params["w_out"].T + params["b_out"]
    logits_shift = logits - logits.max(axis=1, keepdims=True)
    exp_logits = np.exp(logits_shift)
    probs = exp_logits / exp_logits.sum(axis=1, keepdims=True)

    return {
        "x": x, "mask": mask, "lengths": np.asarray(lengths),
        "gi": gi, "gf": gf, "gg": gg, "go": go, "cs": cs, "hs": hs,
        "h_seq": h_seq, "act": act, "alpha": alpha,
        "context": context, "logits": logits, "probs": probs,
    }


@dataclass(frozen=True)
class ForwardResult:
    alpha: np.ndarray     # (B, T), zero past each length
    context: np.ndarray   # (B, H)
    logits: np.ndarray    # (B, 2)
    probs: np.ndarray     # (B, 2)


def forward(params: Mapping, x: np.ndarray, lengths: np.ndarray) -> ForwardResult:
    full = _forward_full(params, x, lengths)
    return ForwardResult(alpha=full["alpha"], context=full["context"],
                         logits=full["logits"], probs=full["probs"])


def mean_loss(probs: np.ndarray, labels: np.ndarray) -> float:
    p = probs[np.arange(len(labels)), labels]
    return float(np.mean(-np.log(np.maximum(p, LOSS_CLAMP))))


def loss_and_grads(params: Mapping, x: np.ndarray, lengths: np.ndarray,
                   labels: np.ndarray) -> tuple:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    cache = _forward_full(params, x, lengths)
    b_sz, t_max, _ = x.shape
    h_dim = params["w_h"].shape[1]
    mask, alpha, h_seq = cache["mask"], cache["alpha"], cache["h_seq"]
    probs = cache["probs"]
    loss = mean_loss(probs, labels)

    dlogits = probs.copy()
    dlogits[np.arange(b_sz), labels] -= 1.0
    dlogits /= b_sz

    grads = {
        "w_out": dlogits.T @ cache["context"],
        "b_out": dlogits.sum(axis=0),
    }
    dcontext = dlogits @ params["w_out"]                    # (B, H)

    # context = sum_t alpha_t h_t splits the gradient two ways
    dalpha = np.einsum("bh,bth->bt", dcontext, h_seq)
    dh_seq = alpha[:, :, None] * dcontext[:, None, :]

    # masked softmax: padded entries have alpha 0, so dscores vanishes there
    dscores = alpha * (dalpha - np.sum(alpha * dalpha, axis=1, keepdims=True))
    act = cache["act"]
    grads["u_att"] = np.einsum("bt,bth->h", dscores, act)
    dact = dscores[:, :, None] * params["u_att"][None, None, :]
    dpre = dact * (1.0 - act * act)                         # (B, T, H)
    grads["w_att"] = np.einsum("bth,btk->hk", dpre, h_seq)
    grads["b_att"] = dpre.sum(axis=(0, 1))
    dh_seq = dh_seq + dpre @ params["w_att"]

    grads["w_x"] = np.zeros_like(params["w_x"])
    grads["w_h"] = np.zeros_like(params["w_h"])
    grads["b"] = np.zeros_like(params["b"])

    gi, gf, gg, go, cs, hs = (cache[k] for k in ("gi", "gf", "gg", "go", "cs", "hs"))
    dh_next = np.zeros((b_sz, h_dim))
    dc_next = np.zeros((b_sz, h_dim))
    for t in range(t_max - 1, -1, -1):
        m = mask[:, t][:, None]
        dh = dh_seq[:, t] + dh_next
        tanh_c = np.tanh(cs[t + 1])
        dc = dc_next + dh * go[t] * (1.0 - tanh_c * tanh_c)
        do = dh * tanh_c
        di = dc * gg[t]
        df = dc * cs[t]
        dg = dc * gi[t]
        dz = np.concatenate([
            di * gi[t] * (1.0 - gi[t]),
            df * gf[t] * (1.0 - gf[t]),
            dg * (1.0 - gg[t] * gg[t]),
            do * go[t] * (1.0 - go[t]),
        ], axis=1)
        dz = np.where(m, dz, 0.0)  # padded steps contribute nothing to the gates
        grads["w_x"] += dz.T @ cache["x"][:, t]
        grads["w_h"] += dz.T @ hs[t]
        grads["b"] += dz.sum(axis=0)
        # padded steps pass both carries through unchanged
        dh_next = dz @ params["w_h"] + np.where(m, 0.0, dh)
        dc_next = np.where(m, dc * gf[t], dc)

    return loss, grads, cache


def predict(params: Mapping, encoded: EncodedDataset) -> tuple:
    """Class indices (0 = pos, 1 = neg) and (N, 2) probabilities.

    An exact probability tie resolves to the positive class (argmax
    takes the first index).
    """
    out = forward(params, encoded.x, encoded.lengths)
    return out.probs.argmax(axis=1), out.probs


def accuracy(params: Mapping, encoded: EncodedDataset) -> float:
    preds, _ = predict(params, encoded)
    return float(np.mean(preds == encoded.labels))


@dataclass(frozen=True)
class AttentionRecord:
    """Per-instance attention: raw softmax weights plus the normalized view."""

    instance_id: str
    label: str
    alpha: tuple        # raw weights over valid steps, sums to 1
    normalized: tuple   # alpha / max, per instance or global per `normalization`
    predicted: str
    p_pos: float

    @property
    def length(self) -> int:
        return len(self.alpha)


def extract_attentions(params: Mapping, encoded: EncodedDataset,
                       normalization: str = PER_INSTANCE) -> list:
    if normalization not in (PER_INSTANCE, GLOBAL_MAX):
        raise ValueError(f"unknown normalization {normalization!r}")
    out = forward(params, encoded.x, encoded.lengths)
    records = []
    if normalization == GLOBAL_MAX:
        global_max = max(
            float(out.alpha[i, :encoded.lengths[i]].max())
            for i in range(len(encoded.lengths))
        )
    for i, inst_id in enumerate(encoded.ids):
        n = int(encoded.lengths[i])
        raw = out.alpha[i, :n]
        denom = global_max if normalization == GLOBAL_MAX else float(raw.max())
        records.append(AttentionRecord(
            instance_id=inst_id,
            label=CLASS_LABELS[int(encoded.labels[i])],
            alpha=tuple(float(a) for a in raw),
            normalized=tuple(float(a / denom) for a in raw),
            predicted=CLASS_LABELS[int(out.probs[i].argmax())],
            p_pos=float(out.probs[i, 0]),
        ))
    return records


@dataclass(frozen=True)
class ModelCheckpoint:
    """Parameters frozen at one epoch, with the metrics observed there."""

    epoch: int
    params: dict
    input_dim: int
    hidden_size: int
    loss: float
    train_accuracy: float
    test_accuracy: float = None
    seed: int = None

    def save(self, path) -> None:
        """Write canonical JSON atomically (temp file then rename)."""
        payload = {
            "v": 1,
            "epoch": self.epoch,
            "input_dim": self.input_dim,
            "hidden_size": self.hidden_size,
            "loss": self.loss,
            "train_accuracy": self.train_accuracy,
            "test_accuracy": self.test_accuracy,
            "seed": self.seed,
            "params": {k: v.tolist() for k, v in self.params.items()},
        }
        path = Path(path)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, sort_keys=True, indent=2)
                fh.write("\n")
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    @classmethod
    def load(cls, path) -> "ModelCheckpoint":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("v") != 1:
            raise ValueError(f"{path}: unsupported checkpoint version {payload.get('v')!r}")
        params = {k: np.asarray(v, dtype=np.float64) for k, v in payload["params"].items()}
        if set(params) != set(PARAM_NAMES):
            raise ValueError(f"{path}: checkpoint params {sorted(params)} != expected")
        h, d = payload["hidden_size"], payload["input_dim"]
        shapes = {
            "w_x": (4 * h, d), "w_h": (4 * h, h), "b": (4 * h,),
            "w_att": (h, h), "b_att": (h,), "u_att": (h,),
            "w_out": (2, h), "b_out": (2,),
        }
        for name, want in shapes.items():
            if params[name].shape != want:
                raise ValueError(
                    f"{path}: param {name} has shape {params[name].shape}, expected {want}"
                )
        return cls(epoch=payload["epoch"], params=params, input_dim=d, hidden_size=h,
                   loss=payload["loss"], train_accuracy=payload["train_accuracy"],
                   test_accuracy=payload.get("test_accuracy"),
                   seed=payload.get("seed"))


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    loss: float
    train_accuracy: float
    test_accuracy: float = None


@dataclass
class TrainResult:
    checkpoints: list
    history: list = field(default_factory=list)
    train_indices: np.ndarray = None
    holdout_indices: np.ndarray = None
    stopped_early: bool = False

    @property
    def final(self) -> ModelCheckpoint:
        return self.checkpoints[-1]

    @property
    def params(self) -> dict:
        return self.final.params

    def checkpoint_at(self, epoch: int) -> ModelCheckpoint:
        for cp in self.checkpoints:
            if cp.epoch == epoch:
                return cp
        raise KeyError(f"no checkpoint at epoch {epoch}; have {[c.epoch for c in self.checkpoints]}")


def _adam_update(params, grads, m, v, step, cfg: TrainConfig):
    b1c = 1.0 - cfg.beta1 ** step
    b2c = 1.0 - cfg.beta2 ** step
    for name in PARAM_NAMES:
        g = grads[name]
        m[name] = cfg.beta1 * m[name] + (1.0 - cfg.beta1) * g
        v[name] = cfg.beta2 * v[name] + (1.0 - cfg.beta2) * (g * g)
        params[name] -= cfg.learning_rate * (m[name] / b1c) / (np.sqrt(v[name] / b2c) + cfg.adam_eps)


def train(dataset: Dataset = None, config: TrainConfig = None, *,
          encoded: EncodedDataset = None,
          callback: Callable = None,
          checkpoint_dir=None) -> TrainResult:
    """Train from scratch, returning per-epoch stats and parameter checkpoints.

    Checkpoints always cover epoch 0 (initial parameters) and the final
    epoch; `config.checkpoint_every` > 0 adds every k-th epoch between.
    A non-finite loss aborts with TrainingDiverged carrying the last
    good checkpoint.  `callback(stats)` runs after each epoch; returning
    False stops training at that epoch.
    """
    if config is None:
        config = TrainConfig()
    if encoded is None:
        if dataset is None:
            raise ValueError("train needs a Dataset or an EncodedDataset")
        encoded = encode_dataset(dataset)
    n = len(encoded.ids)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if len(np.unique(encoded.labels)) < 2:
        raise ValueError("training requires instances of both classes")

    rng = np.random.default_rng(config.seed)
    params = init_params(encoded.input_dim, config.hidden_size, rng)

    holdout = None
    train_idx = np.arange(n)
    holdout_idx = None
    if config.holdout_fraction > 0.0:
        perm = rng.permutation(n)
        n_hold = int(round(n * config.holdout_fraction))
        n_hold = min(max(n_hold, 1), n - 1)
        holdout_idx = np.sort(perm[:n_hold])
        train_idx = np.sort(perm[n_hold:])
        holdout = EncodedDataset(
            x=encoded.x[holdout_idx], lengths=encoded.lengths[holdout_idx],
            labels=encoded.labels[holdout_idx],
            ids=tuple(encoded.ids[i] for i in holdout_idx),
        )
    x_tr = encoded.x[train_idx]
    len_tr = encoded.lengths[train_idx]
    lab_tr = encoded.labels[train_idx]
    n_tr = len(train_idx)

    checkpoint_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    if checkpoint_dir is not None:
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def snapshot(epoch, loss, train_acc, test_acc) -> ModelCheckpoint:
        cp = ModelCheckpoint(
            epoch=epoch,
            params={k: v.copy() for k, v in params.items()},
            input_dim=encoded.input_dim, hidden_size=config.hidden_size,
            loss=loss, train_accuracy=train_acc, test_accuracy=test_acc,
            seed=config.seed,
        )
        if checkpoint_dir is not None:
            cp.save(checkpoint_dir / f"epoch_{epoch:05d}.json")
        return cp

    init_probs = forward(params, x_tr, len_tr).probs
    init_loss = mean_loss(init_probs, lab_tr)
    init_acc = float(np.mean(init_probs.argmax(axis=1) == lab_tr))
    init_test = accuracy(params, holdout) if holdout is not None else None
    checkpoints = [snapshot(0, init_loss, init_acc, init_test)]

    m = {k: np.zeros_like(val) for k, val in params.items()}
    v = {k: np.zeros_like(val) for k, val in params.items()}
    step = 0
    history = []
    stopped = False

    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(n_tr)
        loss_sum = 0.0
        correct = 0
        for lo in range(0, n_tr, config.batch_size):
            idx = order[lo:lo + config.batch_size]
            loss, grads, cache = loss_and_grads(params, x_tr[idx], len_tr[idx], lab_tr[idx])
            if not np.isfinite(loss):
                logger.error("loss diverged at epoch %d; keeping checkpoint from epoch %d",
                             epoch, checkpoints[-1].epoch)
                raise TrainingDiverged(epoch, checkpoints[-1])
            loss_sum += loss * len(idx)
            correct += int(np.sum(cache["probs"].argmax(axis=1) == lab_tr[idx]))
            step += 1
            _adam_update(params, grads, m, v, step, config)

        epoch_loss = loss_sum / n_tr
        train_acc = correct / n_tr
        test_acc = accuracy(params, holdout) if holdout is not None else None
        stats = EpochStats(epoch=epoch, loss=epoch_loss, train_accuracy=train_acc,
                           test_accuracy=test_acc)
        history.append(stats)

        is_last = epoch == config.epochs
        reached = config.stop_accuracy is not None and (
            (test_acc if test_acc is not None else train_acc) >= config.stop_accuracy
        )
        keep = is_last or reached or (
            config.checkpoint_every > 0 and epoch % config.checkpoint_every == 0
        )
        if keep:
            checkpoints.append(snapshot(epoch, epoch_loss, train_acc, test_acc))
        if callback is not None and callback(stats) is False:
            stopped = True
        if reached:
            stopped = True
        if stopped:
            if not keep:
                checkpoints.append(snapshot(epoch, epoch_loss, train_acc, test_acc))
            break

    return TrainResult(checkpoints=checkpoints, history=history,
                       train_indices=train_idx, holdout_indices=holdout_idx,
                       stopped_early=stopped)


def config_to_dict(config: TrainConfig) -> dict:
    return asdict(config)

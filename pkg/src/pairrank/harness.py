"""Training orchestration: pairwise loop, optimizer, checkpoints, history.

Each step forwards the positive and negative arms of a triple batch through
the same parameters as one fused batch of 2 * batch_size pairs, applies the
composite loss to the two score halves, backpropagates both arms jointly,
and takes a single optimizer step. Everything is deterministic given the
config and data.
"""

from __future__ import annotations

import json
import struct
import time
from dataclasses import dataclass, field, replace
from typing import IO

import numpy as np

from .corpus import Dataset
from .metrics import evaluate
from .model import ModelConfig, ModelParams, backward, forward, init_params
from .objective import LossConfig, batch_loss
from .rng import _mix64
from .sampling import SamplingConfig, generate_triples, shuffle_triples
from .textenc import Vocab, build_vocab, encode_pair

OPTIMIZERS = ("adam", "sgd")

CHECKPOINT_MAGIC = b"PRCKPT\n"
CHECKPOINT_VERSION = 1


class NumericalAbort(RuntimeError):
    """Raised when the loss goes non-finite; carries the failing step."""

    def __init__(self, step: int):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


class CheckpointError(ValueError):
    """Bad magic, version, or truncated checkpoint data."""


@dataclass(frozen=True)
class TrainConfig:
    model: ModelConfig
    loss: LossConfig = LossConfig()
    sampling: SamplingConfig = SamplingConfig()
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    batch_size: int = 16
    num_epochs: int = 3
    eval_every: int = 0  # steps between dev evaluations; 0 = once per epoch end
    base_seed: int = 0
    filter_mode: str = "require_positive"

    def __post_init__(self):
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1 or self.num_epochs < 1:
            raise ValueError("batch_size and num_epochs must be >= 1")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "loss": dict(self.loss.__dict__),
            "sampling": dict(self.sampling.__dict__),
            "optimizer": self.optimizer,
            "learning_rate": self.learning_rate,
            "adam_beta1": self.adam_beta1,
            "adam_beta2": self.adam_beta2,
            "adam_epsilon": self.adam_epsilon,
            "batch_size": self.batch_size,
            "num_epochs": self.num_epochs,
            "eval_every": self.eval_every,
            "base_seed": self.base_seed,
            "filter_mode": self.filter_mode,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "TrainConfig":
        obj = dict(obj)
        model = ModelConfig.from_dict({"vocab_size": 4, **obj.pop("model", {})})
        loss = LossConfig(**obj.pop("loss", {}))
        sampling = SamplingConfig(**obj.pop("sampling", {}))
        return cls(model=model, loss=loss, sampling=sampling, **obj)


@dataclass
class TrainHistory:
    steps: list[tuple[int, float]] = field(default_factory=list)          # (step, mean loss)
    evals: list[tuple[int, float, float]] = field(default_factory=list)   # (step, dev MRR, dev MAP)
    epoch_seconds: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "steps": [[s, loss] for s, loss in self.steps],
            "evals": [[s, mrr, map_] for s, mrr, map_ in self.evals],
            "epoch_seconds": self.epoch_seconds,
        }


@dataclass
class OptimizerState:
    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def optimizer_step(params: ModelParams, grads: ModelParams,
                   state: OptimizerState, config: TrainConfig) -> None:
    """In-place parameter update (adam with bias correction, or plain sgd)."""
    if grads.flat.shape != params.flat.shape:
        raise ValueError("gradient/parameter shape mismatch")
    state.step += 1
    if config.optimizer == "sgd":
        params.flat -= config.learning_rate * grads.flat
        return
    if state.m is None:
        state.m = np.zeros_like(params.flat)
        state.v = np.zeros_like(params.flat)
    b1, b2 = config.adam_beta1, config.adam_beta2
    state.m = b1 * state.m + (1 - b1) * grads.flat
    state.v = b2 * state.v + (1 - b2) * grads.flat ** 2
    m_hat = state.m / (1 - b1 ** state.step)
    v_hat = state.v / (1 - b2 ** state.step)
    params.flat -= config.learning_rate * m_hat / (np.sqrt(v_hat) + config.adam_epsilon)


def save_checkpoint(params: ModelParams, stream: IO[bytes]) -> None:
    """magic, version, JSON config header, flat params as little-endian float32."""
    header = json.dumps(params.config.to_dict(), sort_keys=True).encode("utf-8")
    stream.write(CHECKPOINT_MAGIC)
    stream.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
    stream.write(header)
    stream.write(params.flat.astype("<f4").tobytes())


def load_checkpoint(stream: IO[bytes]) -> ModelParams:
    magic = stream.read(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    head = stream.read(8)
    if len(head) != 8:
        raise CheckpointError("truncated checkpoint header")
    version, header_len = struct.unpack("<II", head)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = stream.read(header_len)
    if len(header) != header_len:
        raise CheckpointError("truncated checkpoint config")
    config = ModelConfig.from_dict(json.loads(header.decode("utf-8")))
    from .model import num_params
    expected = num_params(config)
    raw = stream.read(expected * 4)
    if len(raw) != expected * 4:
        raise CheckpointError("truncated checkpoint parameters")
    flat = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return ModelParams(config, flat)


def build_training_vocab(train_set: Dataset, min_freq: int = 1) -> Vocab:
    def texts():
        for q in train_set.questions:
            yield q.text
            for c in q.candidates:
                yield c.text
    return build_vocab(texts(), min_freq=min_freq)


def train(config: TrainConfig, train_set: Dataset, dev_set: Dataset | None = None,
          vocab: Vocab | None = None) -> tuple[ModelParams, Vocab, TrainHistory]:
    """Run the full pairwise training loop; returns (params, vocab, history)."""
    if vocab is None:
        vocab = build_training_vocab(train_set)
    model_cfg = replace(config.model, vocab_size=len(vocab))
    params = init_params(model_cfg)
    triples = generate_triples(train_set, config.sampling)
    if not triples:
        raise ValueError("no training triples (every question lacks a positive or a negative)")

    # encode each (question, candidate) pair once
    encoded: dict[tuple[str, str], object] = {}
    q_text = {q.question_id: q.text for q in train_set.questions}
    cand_text = {(q.question_id, c.answer_id): c.text
                 for q in train_set.questions for c in q.candidates}
    def enc(qid: str, aid: str):
        key = (qid, aid)
        if key not in encoded:
            encoded[key] = encode_pair(vocab, q_text[qid], cand_text[key],
                                       max_len=model_cfg.max_len)
        return encoded[key]

    state = OptimizerState()
    history = TrainHistory()
    step = 0
    for epoch in range(config.num_epochs):
        t0 = time.monotonic()
        order = shuffle_triples(triples, config.base_seed + epoch)
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            pos_pairs = [enc(t.question_id, t.positive_id) for t in batch]
            neg_pairs = [enc(t.question_id, t.negative_id) for t in batch]
            dropout_seed = _mix64(config.base_seed ^ _mix64(step + 1))
            scores, cache = forward(params, pos_pairs + neg_pairs,
                                    train_mode=True, dropout_seed=dropout_seed)
            n = len(batch)
            loss, d_yp, d_yn = batch_loss(scores[:n], scores[n:], config.loss)
            if not np.isfinite(loss):
                raise NumericalAbort(step)
            grads = backward(params, cache, np.concatenate([d_yp, d_yn]))
            optimizer_step(params, grads, state, config)
            params.assert_finite()
            step += 1
            history.steps.append((step, float(loss)))
            if dev_set is not None and config.eval_every > 0 and step % config.eval_every == 0:
                report = evaluate(params, vocab, dev_set, filter_mode=config.filter_mode)
                history.evals.append((step, report.mrr, report.map))
        history.epoch_seconds.append(time.monotonic() - t0)
        if dev_set is not None and config.eval_every == 0:
            report = evaluate(params, vocab, dev_set, filter_mode=config.filter_mode)
            history.evals.append((step, report.mrr, report.map))
    return params, vocab, history

"""Small transformer encoder with [CLS] pooling and a sigmoid scoring head.

Pure numpy, float64, with hand-written reverse-mode gradients so that
training needs no framework and gradient checking is exact up to floating
point. Parameters live in a single flat vector; named tensors are numpy
views into it, in the documented order (see ``param_layout``), which is
also the checkpoint order.

Block structure per layer (post-layer-norm, as in the original deep
bidirectional encoder this is modeled after): multi-head self-attention
with padding masked before the softmax, residual, layer norm, then a GELU
feed-forward, residual, layer norm. The score is sigmoid(w . h_cls + b) on
the raw hidden state at position 0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .rng import DeterministicRng
from .textenc import EncodedPair, Vocab, encode_pair

_INIT_STREAM = 201
_DROPOUT_STREAM = 202

_LN_EPS = 1e-12
_GELU_C = 0.7978845608028654  # sqrt(2/pi)
_GELU_A = 0.044715


@dataclass(frozen=True)
class ModelConfig:
    vocab_size: int
    hidden_size: int = 64
    num_layers: int = 2
    num_heads: int = 4
    ffn_size: int = 256
    max_len: int = 128
    dropout_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if min(self.vocab_size, self.hidden_size, self.num_layers,
               self.num_heads, self.ffn_size, self.max_len) < 1:
            raise ValueError("all model sizes must be >= 1")
        if self.hidden_size % self.num_heads != 0:
            raise ValueError("hidden_size must be divisible by num_heads")
        if self.ffn_size < self.hidden_size:
            raise ValueError("ffn_size must be >= hidden_size")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")

    def to_dict(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_dict(cls, obj: dict) -> "ModelConfig":
        return cls(**obj)


def param_layout(config: ModelConfig) -> list[tuple[str, tuple[int, ...], str]]:
    """Flat parameter ordering: (name, shape, init kind).

    Kinds: "normal" = truncated normal(0, 0.02, +/-2 sigma), "zeros",
    "ones". The flat checkpoint vector concatenates tensors in exactly
    this order, each in C (row-major) order.
    """
    h, f = config.hidden_size, config.ffn_size
    layout: list[tuple[str, tuple[int, ...], str]] = [
        ("tok_emb", (config.vocab_size, h), "normal"),
        ("pos_emb", (config.max_len, h), "normal"),
        ("seg_emb", (2, h), "normal"),
    ]
    for l in range(config.num_layers):
        for proj in ("q", "k", "v", "o"):
            layout.append((f"layer{l}.attn.w{proj}", (h, h), "normal"))
            layout.append((f"layer{l}.attn.b{proj}", (h,), "zeros"))
        layout.append((f"layer{l}.ln1.gain", (h,), "ones"))
        layout.append((f"layer{l}.ln1.bias", (h,), "zeros"))
        layout.append((f"layer{l}.ffn.w1", (h, f), "normal"))
        layout.append((f"layer{l}.ffn.b1", (f,), "zeros"))
        layout.append((f"layer{l}.ffn.w2", (f, h), "normal"))
        layout.append((f"layer{l}.ffn.b2", (h,), "zeros"))
        layout.append((f"layer{l}.ln2.gain", (h,), "ones"))
        layout.append((f"layer{l}.ln2.bias", (h,), "zeros"))
    layout.append(("head.w", (h,), "normal"))
    layout.append(("head.b", (), "zeros"))
    return layout


class ModelParams:
    """All learnable tensors, backed by one flat float64 vector.

    ``flat`` and the named views in ``tensors`` share memory: in-place
    updates on ``flat`` (the optimizer path) are visible through the views
    used by forward/backward.
    """

    def __init__(self, config: ModelConfig, flat: np.ndarray):
        expected = num_params(config)
        if flat.shape != (expected,):
            raise ValueError(f"flat vector has {flat.shape}, expected ({expected},)")
        self.config = config
        self.flat = flat
        self.tensors: dict[str, np.ndarray] = {}
        offset = 0
        for name, shape, _ in param_layout(config):
            size = int(np.prod(shape, dtype=np.int64)) if shape else 1
            self.tensors[name] = flat[offset:offset + size].reshape(shape)
            offset += size

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def copy(self) -> "ModelParams":
        return ModelParams(self.config, self.flat.copy())

    def assert_finite(self) -> None:
        if not np.all(np.isfinite(self.flat)):
            raise FloatingPointError("non-finite model parameter")


def num_params(config: ModelConfig) -> int:
    return sum(int(np.prod(shape, dtype=np.int64)) if shape else 1
               for _, shape, _ in param_layout(config))


def init_params(config: ModelConfig) -> ModelParams:
    """Deterministic initialization from config.seed."""
    rng = DeterministicRng(config.seed, stream=_INIT_STREAM)
    chunks = []
    for _, shape, kind in param_layout(config):
        size = int(np.prod(shape, dtype=np.int64)) if shape else 1
        if kind == "normal":
            chunks.append(rng.truncated_normal(size) * 0.02)
        elif kind == "ones":
            chunks.append(np.ones(size))
        else:
            chunks.append(np.zeros(size))
    params = ModelParams(config, np.concatenate(chunks))
    params.assert_finite()
    return params


def zero_gradients(config: ModelConfig) -> ModelParams:
    """Shape-congruent gradient accumulator (same layout as ModelParams)."""
    return ModelParams(config, np.zeros(num_params(config)))


def _gelu(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """tanh-approximation GELU; returns (value, derivative)."""
    u = _GELU_C * (x + _GELU_A * x ** 3)
    t = np.tanh(u)
    value = 0.5 * x * (1.0 + t)
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x ** 2)
    deriv = 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t ** 2) * du
    return value, deriv


def _layer_norm(x: np.ndarray, gain: np.ndarray, bias: np.ndarray):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + _LN_EPS)
    xhat = (x - mu) * inv_std
    return gain * xhat + bias, (xhat, inv_std)


def _layer_norm_backward(dy: np.ndarray, gain: np.ndarray, cache) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    xhat, inv_std = cache
    d_gain = (dy * xhat).sum(axis=tuple(range(dy.ndim - 1)))
    d_bias = dy.sum(axis=tuple(range(dy.ndim - 1)))
    dxhat = dy * gain
    dx = inv_std * (dxhat
                    - dxhat.mean(axis=-1, keepdims=True)
                    - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, d_gain, d_bias


def _dropout_mask(rng: DeterministicRng, shape: tuple[int, ...], rate: float) -> np.ndarray:
    keep = rng.uniform(int(np.prod(shape))).reshape(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


def _stack_batch(batch: Sequence[EncodedPair], max_len: int):
    ids = np.stack([p.token_ids for p in batch])
    segs = np.stack([p.segment_ids for p in batch])
    mask = np.stack([p.attention_mask for p in batch])
    if ids.shape[1] != max_len:
        raise ValueError(f"encoded length {ids.shape[1]} != config.max_len {max_len}")
    return ids, segs, mask


def forward(params: ModelParams, batch: Sequence[EncodedPair],
            train_mode: bool = False, dropout_seed: int = 0):
    """Score a batch of encoded pairs; returns (scores, cache).

    Eval mode (train_mode=False) is deterministic and applies no dropout.
    The cache holds every activation backward() needs.
    """
    if len(batch) == 0:
        raise ValueError("batch must be non-empty")
    cfg = params.config
    ids, segs, mask = _stack_batch(batch, cfg.max_len)
    B, T = ids.shape
    H, A = cfg.hidden_size, cfg.num_heads
    dh = H // A
    scale = 1.0 / np.sqrt(dh)

    rng = DeterministicRng(dropout_seed, stream=_DROPOUT_STREAM) if train_mode else None
    use_dropout = train_mode and cfg.dropout_rate > 0.0

    x = params["tok_emb"][ids] + params["pos_emb"][:T] + params["seg_emb"][segs]
    # additive key mask: 0 on real tokens, -inf on PAD keys
    add_mask = np.where(mask[:, None, None, :] == 1, 0.0, -np.inf)

    layers = []
    for l in range(cfg.num_layers):
        p = lambda s: params[f"layer{l}.{s}"]
        x_in = x
        q = (x_in @ p("attn.wq") + p("attn.bq")).reshape(B, T, A, dh).transpose(0, 2, 1, 3)
        k = (x_in @ p("attn.wk") + p("attn.bk")).reshape(B, T, A, dh).transpose(0, 2, 1, 3)
        v = (x_in @ p("attn.wv") + p("attn.bv")).reshape(B, T, A, dh).transpose(0, 2, 1, 3)
        logits = q @ k.transpose(0, 1, 3, 2) * scale + add_mask
        logits -= logits.max(axis=-1, keepdims=True)
        e = np.exp(logits)
        attn = e / e.sum(axis=-1, keepdims=True)
        if use_dropout:
            attn_mask_drop = _dropout_mask(rng, attn.shape, cfg.dropout_rate)
            attn_used = attn * attn_mask_drop
        else:
            attn_mask_drop = None
            attn_used = attn
        ctx = (attn_used @ v).transpose(0, 2, 1, 3).reshape(B, T, H)
        att_out = ctx @ p("attn.wo") + p("attn.bo")
        r1 = x_in + att_out
        y1, ln1_cache = _layer_norm(r1, p("ln1.gain"), p("ln1.bias"))
        pre_act = y1 @ p("ffn.w1") + p("ffn.b1")
        h_act, gelu_deriv = _gelu(pre_act)
        if use_dropout:
            ffn_mask_drop = _dropout_mask(rng, h_act.shape, cfg.dropout_rate)
            h_used = h_act * ffn_mask_drop
        else:
            ffn_mask_drop = None
            h_used = h_act
        f_out = h_used @ p("ffn.w2") + p("ffn.b2")
        r2 = y1 + f_out
        x, ln2_cache = _layer_norm(r2, p("ln2.gain"), p("ln2.bias"))
        layers.append(dict(
            x_in=x_in, q=q, k=k, v=v, attn=attn, attn_mask_drop=attn_mask_drop,
            attn_used=attn_used, ctx=ctx, ln1_cache=ln1_cache, y1=y1,
            gelu_deriv=gelu_deriv, h_used=h_used, ffn_mask_drop=ffn_mask_drop,
            ln2_cache=ln2_cache,
        ))

    h_cls = x[:, 0, :]
    logit = h_cls @ params["head.w"] + params["head.b"]
    scores = 1.0 / (1.0 + np.exp(-logit))
    cache = dict(ids=ids, segs=segs, T=T, layers=layers, h_cls=h_cls,
                 scores=scores, params_flat_id=id(params.flat))
    return scores, cache


def backward(params: ModelParams, cache: dict, score_grads: Sequence[float]) -> ModelParams:
    """Exact gradient of sum_i score_grads[i] * score_i w.r.t. all parameters."""
    if cache.get("params_flat_id") != id(params.flat):
        raise ValueError("cache does not match the given parameters")
    cfg = params.config
    scores = cache["scores"]
    g = np.asarray(score_grads, dtype=np.float64)
    if g.shape != scores.shape:
        raise ValueError("score_grads length must equal batch size")
    grads = zero_gradients(cfg)
    B = scores.shape[0]
    T = cache["T"]
    H, A = cfg.hidden_size, cfg.num_heads
    dh = H // A
    scale = 1.0 / np.sqrt(dh)

    d_logit = g * scores * (1.0 - scores)
    grads.tensors["head.w"][...] = cache["h_cls"].T @ d_logit
    grads.tensors["head.b"][...] = d_logit.sum()
    dx = np.zeros((B, T, H))
    dx[:, 0, :] = d_logit[:, None] * params["head.w"]

    for l in reversed(range(cfg.num_layers)):
        p = lambda s: params[f"layer{l}.{s}"]
        gr = lambda s: grads.tensors[f"layer{l}.{s}"]
        c = cache["layers"][l]

        dr2, dg2, db2 = _layer_norm_backward(dx, p("ln2.gain"), c["ln2_cache"])
        gr("ln2.gain")[...] = dg2
        gr("ln2.bias")[...] = db2
        dy1 = dr2.copy()          # residual branch
        df = dr2                  # FFN branch
        gr("ffn.w2")[...] = np.einsum("btf,bth->fh", c["h_used"], df)
        gr("ffn.b2")[...] = df.sum(axis=(0, 1))
        dh_used = df @ p("ffn.w2").T
        dh_act = dh_used * c["ffn_mask_drop"] if c["ffn_mask_drop"] is not None else dh_used
        d_pre = dh_act * c["gelu_deriv"]
        gr("ffn.w1")[...] = np.einsum("bth,btf->hf", c["y1"], d_pre)
        gr("ffn.b1")[...] = d_pre.sum(axis=(0, 1))
        dy1 += d_pre @ p("ffn.w1").T

        dr1, dg1, db1 = _layer_norm_backward(dy1, p("ln1.gain"), c["ln1_cache"])
        gr("ln1.gain")[...] = dg1
        gr("ln1.bias")[...] = db1
        dx_in = dr1.copy()        # residual branch
        datt_out = dr1            # attention branch
        gr("attn.wo")[...] = np.einsum("bth,btg->hg", c["ctx"], datt_out)
        gr("attn.bo")[...] = datt_out.sum(axis=(0, 1))
        dctx = (datt_out @ p("attn.wo").T).reshape(B, T, A, dh).transpose(0, 2, 1, 3)

        d_attn_used = dctx @ c["v"].transpose(0, 1, 3, 2)
        dv = c["attn_used"].transpose(0, 1, 3, 2) @ dctx
        d_attn = (d_attn_used * c["attn_mask_drop"]
                  if c["attn_mask_drop"] is not None else d_attn_used)
        attn = c["attn"]
        d_logits = attn * (d_attn - (d_attn * attn).sum(axis=-1, keepdims=True))
        dq = d_logits @ c["k"] * scale
        dk = d_logits.transpose(0, 1, 3, 2) @ c["q"] * scale

        # the three input projections share the same backward shape
        for name, dhead in (("q", dq), ("k", dk), ("v", dv)):
            d_proj = dhead.transpose(0, 2, 1, 3).reshape(B, T, H)
            gr(f"attn.w{name}")[...] = np.einsum("bth,btg->hg", c["x_in"], d_proj)
            gr(f"attn.b{name}")[...] = d_proj.sum(axis=(0, 1))
            dx_in += d_proj @ p(f"attn.w{name}").T
        dx = dx_in

    ids, segs = cache["ids"], cache["segs"]
    np.add.at(grads.tensors["tok_emb"], ids, dx)
    grads.tensors["pos_emb"][:T] += dx.sum(axis=0)
    np.add.at(grads.tensors["seg_emb"], segs, dx)
    return grads


def score_pair(params: ModelParams, vocab: Vocab, question: str, answer: str) -> float:
    """Eval-mode score of a single (question, answer) pair."""
    pair = encode_pair(vocab, question, answer, max_len=params.config.max_len)
    scores, _ = forward(params, [pair], train_mode=False)
    return float(scores[0])


def with_vocab_size(config: ModelConfig, vocab_size: int) -> ModelConfig:
    return replace(config, vocab_size=vocab_size)

"""Tokenization, vocabulary, and packed (question, answer) pair encoding.

Sequences follow the sentence-pair convention: position 0 holds the
classification token, the question occupies segment 0 up to and including
the first separator, the answer occupies segment 1 up to and including the
second separator, and the remainder is padding.
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

PAD_ID, UNK_ID, CLS_ID, SEP_ID = 0, 1, 2, 3
RESERVED_TOKENS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")

MIN_MAX_LEN = 8


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch)[0] in ("P", "S")


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, split punctuation/symbol chars off as single tokens."""
    tokens: list[str] = []
    word = []
    for ch in text.lower():
        if ch.isspace():
            if word:
                tokens.append("".join(word))
                word = []
        elif _is_punct(ch):
            if word:
                tokens.append("".join(word))
                word = []
            tokens.append(ch)
        else:
            word.append(ch)
    if word:
        tokens.append("".join(word))
    return tokens


@dataclass(frozen=True)
class Vocab:
    tokens: tuple[str, ...]  # index == id; first four entries are reserved

    def __post_init__(self):
        if self.tokens[:4] != RESERVED_TOKENS:
            raise ValueError("first four vocab entries must be the reserved tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self._lookup().get(token, UNK_ID)

    def token_of(self, token_id: int) -> str:
        return self.tokens[token_id]

    def _lookup(self) -> dict[str, int]:
        # cached on the instance; frozen dataclass so stash via object.__setattr__
        cache = getattr(self, "_cache", None)
        if cache is None:
            cache = {tok: i for i, tok in enumerate(self.tokens)}
            object.__setattr__(self, "_cache", cache)
        return cache

    def save(self, stream: IO[str]) -> None:
        for tok in self.tokens:
            stream.write(tok + "\n")

    @classmethod
    def load(cls, stream: IO[str]) -> "Vocab":
        tokens = tuple(line.rstrip("\n") for line in stream)
        return cls(tokens=tokens)


def build_vocab(texts: Iterable[str], min_freq: int = 1) -> Vocab:
    """Vocabulary of all tokens with frequency >= min_freq.

    Non-reserved ids are assigned by descending frequency, ties broken
    lexicographically, so the result is fully deterministic.
    """
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts: Counter[str] = Counter()
    for text in texts:
        counts.update(tokenize(text))
    kept = sorted((tok for tok, n in counts.items() if n >= min_freq),
                  key=lambda tok: (-counts[tok], tok))
    return Vocab(tokens=RESERVED_TOKENS + tuple(kept))


@dataclass(frozen=True)
class EncodedPair:
    token_ids: np.ndarray      # (max_len,) int64
    segment_ids: np.ndarray    # (max_len,) int64, 0 = question side, 1 = answer side
    attention_mask: np.ndarray  # (max_len,) int64, 1 on non-PAD positions

    def __len__(self) -> int:
        return len(self.token_ids)


def encode_pair(vocab: Vocab, question: str, answer: str, max_len: int = 128) -> EncodedPair:
    """Pack a (question, answer) pair as [CLS] q [SEP] a [SEP] PAD...

    If the packed sequence exceeds max_len, answer tokens are truncated
    first (down to one token), then question tokens.
    """
    if max_len < MIN_MAX_LEN:
        raise ValueError(f"max_len must be >= {MIN_MAX_LEN}, got {max_len}")
    q_tokens = tokenize(question)
    a_tokens = tokenize(answer)
    budget = max_len - 3  # CLS + two SEPs
    if len(q_tokens) + len(a_tokens) > budget:
        keep_a = max(1 if a_tokens else 0, budget - len(q_tokens))
        a_tokens = a_tokens[:keep_a]
        q_tokens = q_tokens[:budget - len(a_tokens)]
    ids = [CLS_ID] + [vocab.id_of(t) for t in q_tokens] + [SEP_ID] \
        + [vocab.id_of(t) for t in a_tokens] + [SEP_ID]
    segs = [0] * (2 + len(q_tokens)) + [1] * (len(a_tokens) + 1)
    n = len(ids)
    token_ids = np.full(max_len, PAD_ID, dtype=np.int64)
    segment_ids = np.zeros(max_len, dtype=np.int64)
    mask = np.zeros(max_len, dtype=np.int64)
    token_ids[:n] = ids
    segment_ids[:n] = segs
    mask[:n] = 1
    return EncodedPair(token_ids=token_ids, segment_ids=segment_ids, attention_mask=mask)

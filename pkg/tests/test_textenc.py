import io

import numpy as np
import pytest

from pairrank.textenc import (
    CLS_ID,
    PAD_ID,
    RESERVED_TOKENS,
    SEP_ID,
    UNK_ID,
    Vocab,
    build_vocab,
    encode_pair,
    tokenize,
)


def test_tokenize_basic():
    assert tokenize("Who wrote Hamlet?") == ["who", "wrote", "hamlet", "?"]


def test_tokenize_empty():
    assert tokenize("") == []
    assert tokenize("   \t\n") == []


def test_tokenize_punctuation_split():
    assert tokenize("state-of-the-art") == ["state", "-", "of", "-", "the", "-", "art"]


def test_build_vocab_order():
    v = build_vocab(["a a b"], min_freq=1)
    assert v.tokens == RESERVED_TOKENS + ("a", "b")
    assert v.id_of("a") == 4 and v.id_of("b") == 5


def test_build_vocab_min_freq():
    v = build_vocab(["a a b"], min_freq=2)
    assert "b" not in v.tokens
    assert v.id_of("b") == UNK_ID


def test_build_vocab_empty():
    assert build_vocab([]).tokens == RESERVED_TOKENS


def test_build_vocab_tie_break_lexicographic():
    v = build_vocab(["b a", "a b"])
    assert v.tokens[4:] == ("a", "b")


def test_vocab_save_load_roundtrip():
    v = build_vocab(["alpha beta beta"])
    buf = io.StringIO()
    v.save(buf)
    buf.seek(0)
    assert Vocab.load(buf) == v
    assert buf.getvalue().splitlines()[:4] == list(RESERVED_TOKENS)


def test_encode_pair_layout():
    v = build_vocab(["who wrote hamlet shakespeare"])
    pair = encode_pair(v, "who wrote hamlet", "shakespeare wrote hamlet", max_len=16)
    ids = [CLS_ID, v.id_of("who"), v.id_of("wrote"), v.id_of("hamlet"), SEP_ID,
           v.id_of("shakespeare"), v.id_of("wrote"), v.id_of("hamlet"), SEP_ID] + [PAD_ID] * 7
    assert pair.token_ids.tolist() == ids
    assert pair.segment_ids.tolist() == [0] * 5 + [1] * 4 + [0] * 7
    assert pair.attention_mask.tolist() == [1] * 9 + [0] * 7


def test_encode_pair_exact_fit_no_padding():
    v = build_vocab(["who wrote hamlet shakespeare"])
    pair = encode_pair(v, "who wrote hamlet", "shakespeare wrote hamlet", max_len=9)
    assert pair.attention_mask.tolist() == [1] * 9


def test_encode_pair_truncates_answer_first():
    v = build_vocab(["w"])
    q = "q1 q2 q3"
    a = " ".join(f"t{i}" for i in range(20))
    pair = encode_pair(v, q, a, max_len=12)
    mask_len = int(pair.attention_mask.sum())
    assert mask_len == 12
    # CLS + 3 question tokens + SEP + 6 answer tokens + SEP
    assert pair.segment_ids.tolist().count(1) == 7
    assert pair.token_ids.tolist().count(SEP_ID) == 2


def test_encode_pair_truncates_question_when_needed():
    v = build_vocab(["w"])
    q = " ".join(f"q{i}" for i in range(30))
    pair = encode_pair(v, q, "a1 a2", max_len=10)
    assert int(pair.attention_mask.sum()) == 10
    assert pair.token_ids.tolist().count(SEP_ID) == 2
    # answer is cut first, down to one token, before the question is touched
    assert pair.segment_ids.tolist().count(1) == 2


def test_encode_pair_min_len_rejected():
    v = build_vocab(["w"])
    with pytest.raises(ValueError):
        encode_pair(v, "a", "b", max_len=4)


def test_encode_pair_oov_maps_to_unk():
    v = build_vocab(["hello"])
    pair = encode_pair(v, "hello", "goodbye", max_len=8)
    assert pair.token_ids[3] == UNK_ID


def test_mask_is_prefix_and_segments_zero_on_pad():
    v = build_vocab(["x y z"])
    pair = encode_pair(v, "x y", "z", max_len=10)
    mask = pair.attention_mask.tolist()
    n = sum(mask)
    assert mask == [1] * n + [0] * (10 - n)
    assert all(s == 0 for s, m in zip(pair.segment_ids, mask) if m == 0)


def test_mask_sum_counts_tokens():
    v = build_vocab(["a b c d e"])
    pair = encode_pair(v, "a b", "c d e", max_len=16)
    assert int(pair.attention_mask.sum()) == 1 + 2 + 1 + 3 + 1


def test_decode_reencode_roundtrip():
    v = build_vocab(["who wrote hamlet shakespeare it"])
    pair = encode_pair(v, "who wrote hamlet", "shakespeare wrote it", max_len=16)
    non_pad = pair.token_ids[pair.attention_mask == 1]
    toks = [v.token_of(int(i)) for i in non_pad]
    sep1 = toks.index("[SEP]")
    q = " ".join(toks[1:sep1])
    a = " ".join(toks[sep1 + 1:-1])
    again = encode_pair(v, q, a, max_len=16)
    assert np.array_equal(again.token_ids, pair.token_ids)
    assert np.array_equal(again.segment_ids, pair.segment_ids)
    assert np.array_equal(again.attention_mask, pair.attention_mask)

"""Canonical answer-selection corpus: types, JSONL parsing/writing, stats.

The on-disk format is line-delimited JSON, one question per line:

    {"question_id": "...", "question_text": "...",
     "candidates": [{"answer_id": "...", "text": "...", "label": true}, ...]}

Unknown JSON fields are kept in an ``extra`` dict (warned about once per
field name) and written back on serialization, so metadata survives a
round trip.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import IO, Iterable

log = logging.getLogger(__name__)

SPLITS = ("train", "dev", "test")
FILTER_MODES = ("keep_all", "require_positive", "require_both")

_QUESTION_KEYS = {"question_id", "question_text", "candidates"}
_CANDIDATE_KEYS = {"answer_id", "text", "label"}


class CorpusError(ValueError):
    """Malformed or invariant-violating corpus data."""


@dataclass(frozen=True)
class CandidateAnswer:
    answer_id: str
    text: str
    label: bool
    extra: tuple = ()  # unknown JSON fields, as sorted (key, json-str) pairs


@dataclass(frozen=True)
class Question:
    question_id: str
    text: str
    candidates: tuple[CandidateAnswer, ...]
    extra: tuple = ()

    def positives(self) -> list[CandidateAnswer]:
        return [c for c in self.candidates if c.label]

    def negatives(self) -> list[CandidateAnswer]:
        return [c for c in self.candidates if not c.label]


@dataclass(frozen=True)
class Dataset:
    name: str
    split: str
    questions: tuple[Question, ...]

    def __post_init__(self):
        if self.split not in SPLITS:
            raise CorpusError(f"unknown split {self.split!r}, expected one of {SPLITS}")


@dataclass(frozen=True)
class DatasetStats:
    num_questions: int
    num_candidates: int
    num_positive: int
    num_negative: int
    num_answerable: int
    num_train_pairs: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _freeze_extra(obj: dict, known: set[str], where: str, warned: set[str]) -> tuple:
    extra = []
    for key in obj:
        if key not in known:
            if key not in warned:
                warned.add(key)
                log.warning("ignoring unknown field %r (%s)", key, where)
            extra.append((key, json.dumps(obj[key], sort_keys=True)))
    return tuple(sorted(extra))


def _require_str(obj: dict, key: str, where: str) -> str:
    value = obj.get(key)
    if not isinstance(value, str):
        raise CorpusError(f"{where}: field {key!r} missing or not a string")
    return value


def parse_canonical(stream: IO[str], name: str = "dataset", split: str = "train") -> Dataset:
    """Parse canonical JSONL into a Dataset, preserving input order.

    Errors carry the 1-based line number. Duplicate question ids, duplicate
    answer ids within a question, and empty texts are rejected.
    """
    questions: list[Question] = []
    seen_qids: set[str] = set()
    warned: set[str] = set()
    for lineno, line in enumerate(stream, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: malformed JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise CorpusError(f"line {lineno}: expected a JSON object")
        where = f"line {lineno}"
        qid = _require_str(obj, "question_id", where)
        qtext = _require_str(obj, "question_text", where)
        if not qid:
            raise CorpusError(f"{where}: empty question_id")
        if not qtext.strip():
            raise CorpusError(f"{where}: question {qid}: empty question_text")
        if qid in seen_qids:
            raise CorpusError(f"{where}: duplicate question_id {qid!r}")
        seen_qids.add(qid)
        raw_cands = obj.get("candidates")
        if not isinstance(raw_cands, list) or not raw_cands:
            raise CorpusError(f"{where}: question {qid}: candidates missing or empty")
        cands: list[CandidateAnswer] = []
        seen_aids: set[str] = set()
        for cobj in raw_cands:
            if not isinstance(cobj, dict):
                raise CorpusError(f"{where}: question {qid}: candidate is not an object")
            aid = _require_str(cobj, "answer_id", f"{where} question {qid}")
            text = _require_str(cobj, "text", f"{where} question {qid}")
            if not aid:
                raise CorpusError(f"{where}: question {qid}: empty answer_id")
            if aid in seen_aids:
                raise CorpusError(f"{where}: question {qid}: duplicate answer_id {aid!r}")
            seen_aids.add(aid)
            if not text.strip():
                raise CorpusError(f"{where}: question {qid}: answer {aid}: empty text")
            label = cobj.get("label")
            if not isinstance(label, bool):
                raise CorpusError(f"{where}: question {qid}: answer {aid}: label must be boolean")
            cands.append(CandidateAnswer(
                answer_id=aid, text=text, label=label,
                extra=_freeze_extra(cobj, _CANDIDATE_KEYS, f"{where} answer {aid}", warned),
            ))
        questions.append(Question(
            question_id=qid, text=qtext, candidates=tuple(cands),
            extra=_freeze_extra(obj, _QUESTION_KEYS, where, warned),
        ))
    return Dataset(name=name, split=split, questions=tuple(questions))


def _candidate_obj(c: CandidateAnswer) -> dict:
    obj = {"answer_id": c.answer_id, "text": c.text, "label": c.label}
    for key, raw in c.extra:
        obj.setdefault(key, json.loads(raw))
    return obj


def write_canonical(dataset: Dataset, stream: IO[str]) -> None:
    """Write canonical JSONL; parse_canonical(write_canonical(d)) == d."""
    for q in dataset.questions:
        obj = {
            "question_id": q.question_id,
            "question_text": q.text,
            "candidates": [_candidate_obj(c) for c in q.candidates],
        }
        for key, raw in q.extra:
            obj.setdefault(key, json.loads(raw))
        stream.write(json.dumps(obj, ensure_ascii=False) + "\n")


def compute_stats(dataset: Dataset) -> DatasetStats:
    num_candidates = num_positive = num_answerable = num_train_pairs = 0
    for q in dataset.questions:
        pos = sum(1 for c in q.candidates if c.label)
        neg = len(q.candidates) - pos
        num_candidates += len(q.candidates)
        num_positive += pos
        if pos >= 1 and neg >= 1:
            num_answerable += 1
        num_train_pairs += pos * neg
    return DatasetStats(
        num_questions=len(dataset.questions),
        num_candidates=num_candidates,
        num_positive=num_positive,
        num_negative=num_candidates - num_positive,
        num_answerable=num_answerable,
        num_train_pairs=num_train_pairs,
    )


def filter_evaluable(dataset: Dataset, mode: str = "require_positive") -> Dataset:
    """Drop questions that cannot be evaluated under the given mode."""
    if mode not in FILTER_MODES:
        raise ValueError(f"unknown filter mode {mode!r}, expected one of {FILTER_MODES}")
    if mode == "keep_all":
        return dataset
    kept = []
    for q in dataset.questions:
        pos = any(c.label for c in q.candidates)
        neg = any(not c.label for c in q.candidates)
        if mode == "require_positive" and pos:
            kept.append(q)
        elif mode == "require_both" and pos and neg:
            kept.append(q)
    return Dataset(name=dataset.name, split=dataset.split, questions=tuple(kept))


def convert_tsv(rows: Iterable[str], name: str = "dataset", split: str = "train") -> Dataset:
    """Convert 4-column TSV (question_id, question_text, answer_text, label).

    Rows must be grouped by question_id; answer ids are assigned a0, a1, ...
    in row order within each question.
    """
    questions: list[Question] = []
    order: list[str] = []
    by_qid: dict[str, dict] = {}
    for lineno, line in enumerate(rows, start=1):
        line = line.rstrip("\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise CorpusError(f"line {lineno}: expected 4 tab-separated columns, got {len(cols)}")
        qid, qtext, atext, label = cols
        if label not in ("0", "1"):
            raise CorpusError(f"line {lineno}: label must be 0 or 1, got {label!r}")
        if qid not in by_qid:
            order.append(qid)
            by_qid[qid] = {"text": qtext, "cands": []}
        elif order[-1] != qid:
            raise CorpusError(f"line {lineno}: rows for question {qid!r} are not contiguous")
        entry = by_qid[qid]
        entry["cands"].append(CandidateAnswer(
            answer_id=f"a{len(entry['cands'])}", text=atext, label=label == "1"))
    for qid in order:
        entry = by_qid[qid]
        questions.append(Question(question_id=qid, text=entry["text"],
                                  candidates=tuple(entry["cands"])))
    ds = Dataset(name=name, split=split, questions=tuple(questions))
    # re-validate through the canonical path so TSV inherits all invariants
    import io
    buf = io.StringIO()
    write_canonical(ds, buf)
    buf.seek(0)
    return parse_canonical(buf, name=name, split=split)

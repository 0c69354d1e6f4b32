"""Ranking metrics: reciprocal rank, average precision, and MRR/MAP reports.

Candidates are sorted by score descending with ties broken by original
candidate order (stable sort), ranks are 1-based, and a question with no
positive candidate scores 0 for both metrics. Aggregates are arithmetic
means over the questions that survive filtering.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import IO, Sequence

from .corpus import Dataset, Question, filter_evaluable
from .model import ModelParams, forward
from .textenc import Vocab, encode_pair


@dataclass(frozen=True)
class RankedList:
    question_id: str
    entries: tuple[tuple[str, float, bool], ...]  # (answer_id, score, label), rank order


@dataclass(frozen=True)
class QuestionResult:
    question_id: str
    reciprocal_rank: float
    average_precision: float
    num_candidates: int
    num_positive: int


@dataclass(frozen=True)
class EvalReport:
    per_question: tuple[QuestionResult, ...]
    mrr: float
    map: float
    num_questions_scored: int
    num_questions_skipped: int
    filter_mode: str

    def to_dict(self) -> dict:
        return {
            "mrr": self.mrr,
            "map": self.map,
            "num_questions_scored": self.num_questions_scored,
            "num_questions_skipped": self.num_questions_skipped,
            "filter_mode": self.filter_mode,
            "per_question": [dict(r.__dict__) for r in self.per_question],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def rank_candidates(question: Question, scores: Sequence[float]) -> RankedList:
    """Stable sort by score descending; ties keep original candidate order."""
    if len(scores) != len(question.candidates):
        raise ValueError(
            f"question {question.question_id}: {len(scores)} scores for "
            f"{len(question.candidates)} candidates")
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    entries = tuple((question.candidates[i].answer_id, float(scores[i]),
                     question.candidates[i].label) for i in order)
    return RankedList(question_id=question.question_id, entries=entries)


def reciprocal_rank(ranked: RankedList) -> float:
    for rank, (_, _, label) in enumerate(ranked.entries, start=1):
        if label:
            return 1.0 / rank
    return 0.0


def average_precision(ranked: RankedList) -> float:
    hits = 0
    precision_sum = 0.0
    for rank, (_, _, label) in enumerate(ranked.entries, start=1):
        if label:
            hits += 1
            precision_sum += hits / rank
    return precision_sum / hits if hits else 0.0


def compute_report(questions: Sequence[Question],
                   rankings: Sequence[RankedList],
                   filter_mode: str,
                   num_skipped: int) -> EvalReport:
    per_question = []
    for q, ranked in zip(questions, rankings):
        per_question.append(QuestionResult(
            question_id=q.question_id,
            reciprocal_rank=reciprocal_rank(ranked),
            average_precision=average_precision(ranked),
            num_candidates=len(q.candidates),
            num_positive=sum(1 for c in q.candidates if c.label),
        ))
    n = len(per_question)
    return EvalReport(
        per_question=tuple(per_question),
        mrr=sum(r.reciprocal_rank for r in per_question) / n if n else 0.0,
        map=sum(r.average_precision for r in per_question) / n if n else 0.0,
        num_questions_scored=n,
        num_questions_skipped=num_skipped,
        filter_mode=filter_mode,
    )


def rank_dataset(params: ModelParams, vocab: Vocab, dataset: Dataset,
                 batch_size: int = 64) -> list[RankedList]:
    """Score every candidate of every question (eval mode) and rank them."""
    if params.config.vocab_size != len(vocab):
        raise ValueError(
            f"checkpoint vocab_size {params.config.vocab_size} != vocab size {len(vocab)}")
    pairs = []
    for q in dataset.questions:
        for c in q.candidates:
            pairs.append(encode_pair(vocab, q.text, c.text, max_len=params.config.max_len))
    scores: list[float] = []
    for start in range(0, len(pairs), batch_size):
        batch_scores, _ = forward(params, pairs[start:start + batch_size], train_mode=False)
        scores.extend(float(s) for s in batch_scores)
    rankings = []
    offset = 0
    for q in dataset.questions:
        n = len(q.candidates)
        rankings.append(rank_candidates(q, scores[offset:offset + n]))
        offset += n
    return rankings


def evaluate(params: ModelParams, vocab: Vocab, dataset: Dataset,
             filter_mode: str = "require_positive", batch_size: int = 64) -> EvalReport:
    """Filter, score, rank, and aggregate MRR/MAP over a dataset."""
    kept = filter_evaluable(dataset, filter_mode)
    if not kept.questions:
        raise ValueError("no questions left to evaluate after filtering")
    rankings = rank_dataset(params, vocab, kept, batch_size=batch_size)
    return compute_report(kept.questions, rankings, filter_mode,
                          num_skipped=len(dataset.questions) - len(kept.questions))


def write_trec_run(rankings: Sequence[RankedList], stream: IO[str],
                   run_tag: str = "pairrank") -> None:
    """TREC run format: question_id Q0 answer_id rank score run_tag."""
    for ranked in rankings:
        for rank, (answer_id, score, _) in enumerate(ranked.entries, start=1):
            stream.write(f"{ranked.question_id} Q0 {answer_id} {rank} {score:.6f} {run_tag}\n")

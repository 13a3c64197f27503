"""New training pairs from fuzzy matches.

Parallel mode: when two source sentences ``s_i`` and ``s_j`` of the same
corpus are close enough, their targets are swapped to give ``(s_i, t_j)`` and
``(s_j, t_i)``. Mono mode: a monolingual sentence ``m_i`` close to a corpus
source ``s_j`` is paired with ``t_j``.

Candidates come from the top-k Jaccard neighbours in an inverted index
(or from every pair when ``exhaustive`` is set); each candidate is then
scored with the normalized token edit distance and kept when the score is
at most ``lambda_dist``.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import IO, Iterable, Optional

from noisy_forge.corpus_io import (
    FUZZY_MONO,
    FUZZY_PARALLEL,
    Corpus,
    DataOrigin,
    MonoCorpus,
    Sentence,
    SentencePair,
)
from noisy_forge.errors import LangMismatch
from noisy_forge.similarity import SimScore, batch_top_k, build_index, thresholded_score

# below this many candidate pairs a worker pool costs more than it saves
_PARALLEL_MIN_PAIRS = 5000


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


@dataclass(frozen=True)
class FuzzyConfig:
    lambda_dist: Fraction = Fraction(1, 2)
    k: int = 10
    min_jaccard: float = 0.0
    exhaustive: bool = False
    dedup: bool = True
    workers: int = 1

    def __post_init__(self):
        lam = _as_fraction(self.lambda_dist)
        object.__setattr__(self, "lambda_dist", lam)
        if not 0 <= lam <= 1:
            raise ValueError("lambda_dist must lie in [0, 1]")
        if self.k < 0:
            raise ValueError("k must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass
class MatchRecord:
    query_id: int
    match_id: int
    score: SimScore
    emitted_pairs: list[tuple[str, str, DataOrigin]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "query_id": self.query_id,
                "match_id": self.match_id,
                "score": float(self.score.value),
                "distance": self.score.distance,
                "pairs": [
                    {"source": s, "target": t, "origin": str(o)} for s, t, o in self.emitted_pairs
                ],
            },
            ensure_ascii=False,
        )


def write_manifest(records: Iterable[MatchRecord], out: IO[str]) -> None:
    for r in records:
        out.write(r.to_json())
        out.write("\n")


def _key(text: str) -> str:
    return " ".join(text.split())


def _score_chunk(args):
    left, right, pairs, threshold = args
    out = []
    for i, j in pairs:
        if not left[i] or not right[j]:
            continue  # empty sentences never match
        s = thresholded_score(left[i], right[j], threshold)
        if s is not None:
            out.append((i, j, s))
    return out


def _score_pairs(left, right, pairs: list[tuple[int, int]], threshold: Fraction, workers: int):
    """Score candidate ``(i, j)`` pairs, keeping matches in input order."""
    if workers <= 1 or len(pairs) < _PARALLEL_MIN_PAIRS:
        return _score_chunk((left, right, pairs, threshold))
    size = -(-len(pairs) // (workers * 4))
    chunks = [pairs[p : p + size] for p in range(0, len(pairs), size)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(_score_chunk, [(left, right, c, threshold) for c in chunks])
        return [m for part in parts for m in part]


def _candidates(queries, index_tokens, cfg: FuzzyConfig, same_corpus: bool) -> list[tuple[int, int]]:
    if cfg.exhaustive:
        if same_corpus:
            n = len(queries)
            return [(i, j) for i in range(n) for j in range(i + 1, n)]
        return [(i, j) for i in range(len(queries)) for j in range(len(index_tokens))]
    index = build_index(index_tokens)
    neighbours = batch_top_k(index, queries, cfg.k, exclude_self=same_corpus, min_jaccard=cfg.min_jaccard)
    if same_corpus:
        found = {(min(i, j), max(i, j)) for i, js in enumerate(neighbours) for j in js}
    else:
        found = {(i, j) for i, js in enumerate(neighbours) for j in js}
    return sorted(found)


class _Emitter:
    def __init__(self, corpus: Corpus, dedup: bool):
        self.dedup = dedup
        self.seen = {(_key(s), _key(t)) for s, t in corpus.texts()} if dedup else set()
        self.pairs: list[tuple[str, str, DataOrigin]] = []

    def emit(self, src: str, tgt: str, origin: DataOrigin) -> Optional[tuple[str, str, DataOrigin]]:
        if self.dedup:
            key = (_key(src), _key(tgt))
            if key in self.seen:
                return None
            self.seen.add(key)
        item = (src, tgt, origin)
        self.pairs.append(item)
        return item

    def corpus(self, src_lang: str, tgt_lang: str) -> Corpus:
        pairs = [
            SentencePair(Sentence(s, src_lang), Sentence(t, tgt_lang), o, i)
            for i, (s, t, o) in enumerate(self.pairs)
        ]
        return Corpus(tuple(pairs), src_lang, tgt_lang)


def augment_parallel(corpus: Corpus, cfg: FuzzyConfig = FuzzyConfig()) -> tuple[Corpus, list[MatchRecord]]:
    """Swap targets between fuzzy-matching source sentences of ``corpus``.

    Sources are expected to be tokenized already (tokens are whitespace
    separated). Every unordered match ``{i, j}`` is emitted once, as
    ``(s_i, t_j)`` followed by ``(s_j, t_i)``, in ascending ``(i, j)`` order.
    """
    tokens = [p.source.text.split() for p in corpus]
    cands = _candidates(tokens, tokens, cfg, same_corpus=True)
    matches = _score_pairs(tokens, tokens, cands, cfg.lambda_dist, cfg.workers)

    emitter = _Emitter(corpus, cfg.dedup)
    records = []
    for i, j, score in matches:
        si, ti = corpus[i].texts()
        sj, tj = corpus[j].texts()
        emitted = [
            e
            for e in (emitter.emit(si, tj, FUZZY_PARALLEL), emitter.emit(sj, ti, FUZZY_PARALLEL))
            if e is not None
        ]
        records.append(MatchRecord(i, j, score, emitted))
    return emitter.corpus(corpus.src_lang, corpus.tgt_lang), records


def augment_mono(
    mono: MonoCorpus, corpus: Corpus, cfg: FuzzyConfig = FuzzyConfig()
) -> tuple[Corpus, list[MatchRecord]]:
    """Pair monolingual sentences with the targets of their fuzzy matches."""
    if mono.lang != corpus.src_lang:
        raise LangMismatch(f"monolingual data is {mono.lang!r}, corpus source is {corpus.src_lang!r}")
    queries = [s.text.split() for s in mono]
    tokens = [p.source.text.split() for p in corpus]
    cands = _candidates(queries, tokens, cfg, same_corpus=False)
    matches = _score_pairs(queries, tokens, cands, cfg.lambda_dist, cfg.workers)

    emitter = _Emitter(corpus, cfg.dedup)
    records = []
    for i, j, score in matches:
        e = emitter.emit(mono.sentences[i].text, corpus[j].target.text, FUZZY_MONO)
        records.append(MatchRecord(i, j, score, [e] if e is not None else []))
    return emitter.corpus(corpus.src_lang, corpus.tgt_lang), records


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)

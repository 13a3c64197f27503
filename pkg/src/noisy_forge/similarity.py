"""Token-level edit distance, the normalized fuzzy-match score and candidate
pre-selection over an inverted index.

The fuzzy-match score is ``editdistance(a, b) / min(len(a), len(b))``; it is a
normalized *distance*, so smaller means more similar and a pair matches
when the score is at most the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np
from scipy import sparse

from noisy_forge.errors import IndexNotFrozen

Tokens = Sequence[Hashable]


def token_edit_distance(a: Tokens, b: Tokens) -> int:
    """Levenshtein distance over tokens with unit costs (two-row DP)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, x in enumerate(a, 1):
        cur = [i]
        for j, y in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (x != y)))
        prev = cur
    return prev[-1]


def bounded_edit_distance(a: Tokens, b: Tokens, max_dist: int) -> Optional[int]:
    """Edit distance if it is ``<= max_dist``, else ``None``.

    Only the diagonal band of width ``max_dist`` is filled and the scan stops
    as soon as a whole row exceeds the bound.
    """
    if max_dist < 0:
        return None
    n, m = len(a), len(b)
    if abs(n - m) > max_dist:
        return None
    if m == 0 or n == 0:
        return max(n, m)
    big = max_dist + 1
    prev = [j if j <= max_dist else big for j in range(m + 1)]
    for i in range(1, n + 1):
        lo = max(1, i - max_dist)
        hi = min(m, i + max_dist)
        cur = [big] * (m + 1)
        if i <= max_dist:
            cur[0] = i
        x = a[i - 1]
        row_min = cur[0]
        for j in range(lo, hi + 1):
            v = prev[j - 1] + (x != b[j - 1])
            if prev[j] + 1 < v:
                v = prev[j] + 1
            if cur[j - 1] + 1 < v:
                v = cur[j - 1] + 1
            if v > big:
                v = big
            cur[j] = v
            if v < row_min:
                row_min = v
        if row_min > max_dist:
            return None
        prev = cur
    d = prev[m]
    return d if d <= max_dist else None


@dataclass(frozen=True)
class SimScore:
    value: Fraction
    is_defined: bool = True
    distance: Optional[int] = None

    def matches(self, threshold) -> bool:
        return self.is_defined and self.value <= threshold

    def __float__(self) -> float:
        return float(self.value) if self.is_defined else float("nan")


UNDEFINED = SimScore(Fraction(0), False)


def eq1_score(a: Tokens, b: Tokens) -> SimScore:
    """Normalized edit distance; undefined when exactly one side is empty."""
    shorter = min(len(a), len(b))
    if shorter == 0:
        if len(a) == len(b):
            return SimScore(Fraction(0), True, 0)
        return UNDEFINED
    d = token_edit_distance(a, b)
    return SimScore(Fraction(d, shorter), True, d)


def thresholded_score(a: Tokens, b: Tokens, threshold) -> Optional[SimScore]:
    """The score of ``(a, b)`` if it is ``<= threshold``, else ``None``."""
    shorter = min(len(a), len(b))
    if shorter == 0:
        return SimScore(Fraction(0), True, 0) if len(a) == len(b) else None
    cutoff = int(Fraction(threshold) * shorter)  # floor; scores are d/shorter
    d = bounded_edit_distance(a, b, cutoff)
    if d is None:
        return None
    return SimScore(Fraction(d, shorter), True, d)


# ---------------------------------------------------------------------------
# Inverted index


@dataclass
class SimilarityIndex:
    """Postings from token to ascending sentence ids, plus per-sentence token
    sets. Sentences are added with ``add`` and the index must be frozen before
    it can be queried."""

    entries: dict[Hashable, list[int]] = field(default_factory=dict)
    token_sets: list[frozenset] = field(default_factory=list)
    frozen: bool = False
    _matrix: Optional[sparse.csr_matrix] = field(default=None, repr=False, compare=False)
    _vocab: dict = field(default_factory=dict, repr=False, compare=False)

    def add(self, tokens: Iterable[Hashable]) -> int:
        if self.frozen:
            raise RuntimeError("index is frozen")
        sid = len(self.token_sets)
        toks = frozenset(tokens)
        self.token_sets.append(toks)
        # ids grow monotonically, so appending keeps postings sorted
        for t in toks:
            self.entries.setdefault(t, []).append(sid)
        return sid

    def freeze(self) -> "SimilarityIndex":
        self.frozen = True
        return self

    def __len__(self) -> int:
        return len(self.token_sets)

    def _check(self) -> None:
        if not self.frozen:
            raise IndexNotFrozen("freeze() the index before querying it")

    def matrix(self) -> sparse.csr_matrix:
        """Binary sentence-by-token incidence matrix (lazily built)."""
        self._check()
        if self._matrix is None:
            vocab = {t: i for i, t in enumerate(self.entries)}
            indptr = [0]
            indices: list[int] = []
            for toks in self.token_sets:
                indices.extend(vocab[t] for t in toks)
                indptr.append(len(indices))
            data = np.ones(len(indices), dtype=np.int32)
            self._matrix = sparse.csr_matrix(
                (data, np.asarray(indices, dtype=np.int64), np.asarray(indptr, dtype=np.int64)),
                shape=(len(self.token_sets), len(vocab)),
            )
            self._vocab = vocab
        return self._matrix


def build_index(sentences: Iterable[Iterable[Hashable]]) -> SimilarityIndex:
    index = SimilarityIndex()
    for s in sentences:
        index.add(s)
    return index.freeze()


def jaccard(a: Iterable[Hashable], b: Iterable[Hashable]) -> Fraction:
    sa, sb = set(a), set(b)
    union = len(sa | sb)
    return Fraction(len(sa & sb), union) if union else Fraction(0)


def top_k_candidates(
    index: SimilarityIndex,
    query: Iterable[Hashable],
    k: int = 10,
    exclude: Optional[int] = None,
    min_jaccard: float = 0.0,
) -> list[int]:
    """Ids of the ``k`` indexed sentences with highest Jaccard similarity.

    Sentences sharing no token with the query are never returned. Ties are
    broken by ascending id.
    """
    index._check()
    if k <= 0:
        return []
    q = frozenset(query)
    overlap: dict[int, int] = {}
    for t in q:
        for sid in index.entries.get(t, ()):
            overlap[sid] = overlap.get(sid, 0) + 1
    if exclude is not None:
        overlap.pop(exclude, None)
    nq = len(q)
    scored = []
    for sid, ov in overlap.items():
        j = ov / (nq + len(index.token_sets[sid]) - ov)
        if j >= min_jaccard:
            scored.append((-j, sid))
    scored.sort()
    return [sid for _, sid in scored[:k]]


def _rank_row(cols: np.ndarray, jac: np.ndarray, k: int) -> list[int]:
    if len(cols) > k:
        kth = np.partition(-jac, k - 1)[k - 1]
        keep = -jac <= kth
        cols, jac = cols[keep], jac[keep]
    order = np.lexsort((cols, -jac))[:k]
    return cols[order].tolist()


def batch_top_k(
    index: SimilarityIndex,
    queries: Sequence[Iterable[Hashable]],
    k: int = 10,
    exclude_self: bool = False,
    min_jaccard: float = 0.0,
    chunk_size: int = 1024,
) -> list[list[int]]:
    """``top_k_candidates`` for many queries at once via sparse products.

    With ``exclude_self`` query ``i`` never returns indexed id ``i``. Results
    are identical to calling ``top_k_candidates`` per query.
    """
    index._check()
    results: list[list[int]] = [[] for _ in queries]
    if k <= 0 or not len(index) or not queries:
        return results
    base = index.matrix()
    vocab = index._vocab
    sizes = np.asarray(base.sum(axis=1)).ravel().astype(np.float64)
    base_t = base.T.tocsr()

    qsets = [frozenset(q) for q in queries]
    for start in range(0, len(qsets), chunk_size):
        block = qsets[start : start + chunk_size]
        indptr = [0]
        indices: list[int] = []
        qsizes = []
        for q in block:
            indices.extend(vocab[t] for t in q if t in vocab)
            indptr.append(len(indices))
            qsizes.append(len(q))
        qmat = sparse.csr_matrix(
            (np.ones(len(indices), dtype=np.int32), indices, indptr),
            shape=(len(block), base.shape[1]),
        )
        overlap = (qmat @ base_t).tocsr()
        overlap.sort_indices()
        for r in range(len(block)):
            lo, hi = overlap.indptr[r], overlap.indptr[r + 1]
            cols = overlap.indices[lo:hi].astype(np.int64)
            ov = overlap.data[lo:hi].astype(np.float64)
            if exclude_self:
                keep = cols != start + r
                cols, ov = cols[keep], ov[keep]
            keep = ov > 0
            cols, ov = cols[keep], ov[keep]
            if not len(cols):
                continue
            jac = ov / (qsizes[r] + sizes[cols] - ov)
            if min_jaccard > 0:
                keep = jac >= min_jaccard
                cols, jac = cols[keep], jac[keep]
            results[start + r] = _rank_row(cols, jac, k)
    return results

"""Byte-pair-encoding subword segmentation.

Words are split into characters followed by a separate end-of-word symbol
``</w>``. Learning repeatedly merges the most frequent adjacent symbol pair.
Equal frequencies are resolved lexicographically on ``(left, right)``, with
the end-of-word marker ordered after every ordinary character so that pairs
inside a word win over pairs closing it.

Segmented output marks every subword except the last one of a word with the
``@@`` continuation suffix.
"""

from __future__ import annotations

import heapq
import os
import warnings
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping

from noisy_forge.errors import DanglingContinuation, DataError

EOW = "</w>"
MARKER = "@@"
_EOW_KEY = "\U0010ffff"

Pair = tuple[str, str]


def _sort_key(pair: Pair) -> tuple[str, str]:
    return tuple(s.replace(EOW, _EOW_KEY) for s in pair)  # type: ignore[return-value]


@dataclass(frozen=True)
class BpeModel:
    merges: tuple[Pair, ...] = ()
    ranks: dict[Pair, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        merges = tuple(tuple(m) for m in self.merges)
        object.__setattr__(self, "merges", merges)
        ranks = {}
        for i, (left, right) in enumerate(merges):
            if not left or not right:
                raise ValueError(f"merge {i} has an empty symbol")
            if (left, right) in ranks:
                raise ValueError(f"duplicate merge {left!r} {right!r}")
            ranks[(left, right)] = i
        object.__setattr__(self, "ranks", ranks)
        # per-model memo; frozen dataclass needs object.__setattr__
        object.__setattr__(self, "_segment", lru_cache(maxsize=2**16)(self._segment_uncached))

    def __len__(self) -> int:
        return len(self.merges)

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for left, right in self.merges:
                f.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path: str | os.PathLike) -> "BpeModel":
        merges = []
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.rstrip("\r\n")
                if not line:
                    continue
                parts = line.split(" ")
                if len(parts) != 2:
                    raise DataError(f"{path}:{line_no}: expected 'left right'")
                merges.append((parts[0], parts[1]))
        try:
            return cls(tuple(merges))
        except ValueError as e:
            raise DataError(f"{path}: {e}") from None

    def _segment_uncached(self, token: str) -> tuple[str, ...]:
        symbols = list(token) + [EOW]
        ranks = self.ranks
        while len(symbols) > 1:
            best = None
            best_rank = len(ranks)
            for pair in zip(symbols, symbols[1:]):
                r = ranks.get(pair, best_rank)
                if r < best_rank:
                    best, best_rank = pair, r
            if best is None:
                break
            symbols = _merge_symbols(symbols, best)
        last = symbols[-1]
        if last == EOW:
            symbols.pop()
        else:
            symbols[-1] = last[: -len(EOW)]
        return tuple(symbols)


def _merge_symbols(symbols: list[str], pair: Pair) -> list[str]:
    left, right = pair
    out = []
    i = 0
    n = len(symbols)
    while i < n:
        if i < n - 1 and symbols[i] == left and symbols[i + 1] == right:
            out.append(left + right)
            i += 2
        else:
            out.append(symbols[i])
            i += 1
    return out


def _word_pairs(symbols: list[str]) -> Counter:
    return Counter(zip(symbols, symbols[1:]))


def learn_bpe(word_freqs: Mapping[str, int], num_merges: int, min_freq: int = 2) -> BpeModel:
    """Learn up to ``num_merges`` merges from a word frequency table.

    Stops early once the best remaining pair occurs fewer than ``min_freq``
    times.
    """
    if num_merges < 0:
        raise ValueError("num_merges must be >= 0")
    words: list[list[str]] = []
    freqs: list[int] = []
    for word, count in sorted(word_freqs.items()):
        if count < 1:
            raise ValueError(f"count for {word!r} must be >= 1")
        if not word:
            continue
        words.append(list(word) + [EOW])
        freqs.append(count)

    stats: Counter = Counter()
    where: dict[Pair, set[int]] = defaultdict(set)
    for idx, symbols in enumerate(words):
        for pair, c in _word_pairs(symbols).items():
            stats[pair] += c * freqs[idx]
            where[pair].add(idx)

    heap = [(-c, _sort_key(p), p) for p, c in stats.items()]
    heapq.heapify(heap)

    merges: list[Pair] = []
    done: set[Pair] = set()
    while len(merges) < num_merges and heap:
        neg, _, pair = heapq.heappop(heap)
        if pair in done or stats.get(pair, 0) != -neg:
            # stale entry, or a pair rebuilt through another merge path
            continue
        if -neg < min_freq:
            break
        merges.append(pair)
        done.add(pair)
        changed: set[Pair] = set()
        for idx in sorted(where.pop(pair, ())):
            old = words[idx]
            old_pairs = _word_pairs(old)
            if pair not in old_pairs:
                continue
            new = _merge_symbols(old, pair)
            new_pairs = _word_pairs(new)
            f = freqs[idx]
            for p, c in old_pairs.items():
                stats[p] -= c * f
                changed.add(p)
            for p, c in new_pairs.items():
                stats[p] += c * f
                where[p].add(idx)
                changed.add(p)
            words[idx] = new
        stats.pop(pair, None)
        for p in changed:
            c = stats.get(p, 0)
            if c <= 0:
                stats.pop(p, None)
            elif p != pair:
                heapq.heappush(heap, (-c, _sort_key(p), p))
    return BpeModel(tuple(merges))


def count_words(lines: Iterable[str]) -> Counter:
    counts: Counter = Counter()
    for line in lines:
        counts.update(line.split())
    return counts


def segment(model: BpeModel, token: str) -> list[str]:
    """Subword symbols for ``token`` without continuation markers."""
    return list(model._segment(token))  # type: ignore[attr-defined]


def apply_bpe(model: BpeModel, token: str) -> list[str]:
    """Segment one whitespace-free token into marked subwords.

    >>> apply_bpe(BpeModel((("a", "b"),)), "abc")
    ['ab@@', 'c']
    """
    pieces = segment(model, token)
    return [p + MARKER for p in pieces[:-1]] + pieces[-1:]


def apply_bpe_line(model: BpeModel, line: str) -> str:
    out = []
    for tok in line.split():
        out.extend(apply_bpe(model, tok))
    return " ".join(out)


def undo_bpe(tokens: list[str]) -> list[str]:
    """Join ``@@``-marked subwords back into words.

    The last token is never treated as a continuation: if it ends in ``@@`` it
    is kept verbatim and a ``DanglingContinuation`` warning is issued.
    """
    out: list[str] = []
    buf = ""
    last = len(tokens) - 1
    for i, tok in enumerate(tokens):
        if i < last and tok.endswith(MARKER):
            buf += tok[: -len(MARKER)]
            continue
        if i == last and tok.endswith(MARKER):
            warnings.warn(f"line ends with continuation token {tok!r}", DanglingContinuation, stacklevel=2)
        out.append(buf + tok)
        buf = ""
    return out


def undo_bpe_line(line: str) -> str:
    return " ".join(undo_bpe(line.split()))

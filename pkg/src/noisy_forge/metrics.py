"""Corpus BLEU and word error rate.

BLEU follows the multi-bleu convention: no smoothing, clipped n-gram counts
summed over the corpus, brevity penalty from total lengths. Inputs are
detokenized text and are tokenized internally with the language-neutral
rules of :mod:`noisy_forge.text_norm`.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from noisy_forge.errors import EmptyCorpus, EmptyReference, LengthMismatch
from noisy_forge.text_norm import tokenize

# ---------------------------------------------------------------------------
# WER


@dataclass(frozen=True)
class WerReport:
    n_ref: int = 0
    subs: int = 0
    dels: int = 0
    ins: int = 0
    hits: int = 0

    @property
    def errors(self) -> int:
        return self.subs + self.dels + self.ins

    @property
    def wer(self) -> Fraction:
        if self.n_ref == 0:
            raise EmptyReference("reference has no tokens")
        return Fraction(self.errors, self.n_ref)

    @property
    def wrr(self) -> Fraction:
        if self.n_ref == 0:
            raise EmptyReference("reference has no tokens")
        return Fraction(self.hits, self.n_ref)

    @property
    def n_hyp(self) -> int:
        return self.hits + self.subs + self.ins

    def __add__(self, other: "WerReport") -> "WerReport":
        return WerReport(
            self.n_ref + other.n_ref,
            self.subs + other.subs,
            self.dels + other.dels,
            self.ins + other.ins,
            self.hits + other.hits,
        )

    def format(self) -> str:
        return (
            f"WER={float(self.wer) * 100:.2f}% WRR={float(self.wrr) * 100:.2f}% "
            f"N={self.n_ref} S={self.subs} D={self.dels} I={self.ins}"
        )

    def as_dict(self) -> dict:
        return {
            "wer": float(self.wer),
            "wrr": float(self.wrr),
            "n_ref": self.n_ref,
            "subs": self.subs,
            "dels": self.dels,
            "ins": self.ins,
            "hits": self.hits,
        }


def align_counts(ref: Sequence[str], hyp: Sequence[str]) -> WerReport:
    """Edit counts of a minimum alignment; defined for empty references too.

    Among equal-cost alignments the backtrace takes a match/substitution
    first, then a deletion, then an insertion.
    """
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        r = ref[i - 1]
        row, up = d[i], d[i - 1]
        for j in range(1, m + 1):
            row[j] = min(up[j - 1] + (r != hyp[j - 1]), up[j] + 1, row[j - 1] + 1)

    subs = dels = ins = hits = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and d[i][j] == d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] == hyp[j - 1]:
                hits += 1
            else:
                subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and d[i][j] == d[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return WerReport(n, subs, dels, ins, hits)


def wer(ref: Sequence[str], hyp: Sequence[str]) -> WerReport:
    if not ref:
        raise EmptyReference("reference has no tokens")
    return align_counts(ref, hyp)


def corpus_wer(refs: Sequence[Sequence[str]], hyps: Sequence[Sequence[str]]) -> WerReport:
    """Micro-averaged WER: counts are summed before taking ratios."""
    if len(refs) != len(hyps):
        raise LengthMismatch(len(refs), len(hyps))
    total = WerReport()
    for r, h in zip(refs, hyps):
        total += align_counts(r, h)
    if total.n_ref == 0:
        raise EmptyReference("references contain no tokens")
    return total


# ---------------------------------------------------------------------------
# BLEU

MAX_ORDER = 4


@dataclass(frozen=True)
class BleuReport:
    matches: tuple[int, ...]
    totals: tuple[int, ...]
    hyp_len: int
    ref_len: int
    cased: bool = True

    @property
    def precisions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(m, t) if t else Fraction(0) for m, t in zip(self.matches, self.totals))

    @property
    def brevity_penalty(self) -> float:
        if self.hyp_len >= self.ref_len:
            return 1.0
        return math.exp(1 - self.ref_len / self.hyp_len)

    @property
    def ratio(self) -> float:
        return self.hyp_len / self.ref_len if self.ref_len else 0.0

    @property
    def bleu(self) -> float:
        ps = self.precisions
        if any(p == 0 for p in ps):
            return 0.0
        log_mean = sum(math.log(m) - math.log(t) for m, t in zip(self.matches, self.totals)) / len(ps)
        return 100.0 * self.brevity_penalty * math.exp(log_mean)

    def format(self) -> str:
        ps = "/".join(f"{float(p) * 100:.1f}" for p in self.precisions)
        return (
            f"BLEU = {self.bleu:.2f}, {ps} (BP={self.brevity_penalty:.3f}, "
            f"ratio={self.ratio:.3f}, hyp_len={self.hyp_len}, ref_len={self.ref_len})"
        )


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _closest_ref_len(hyp_len: int, ref_lens: Sequence[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - hyp_len), r))


References = Sequence[Union[str, Sequence[str]]]


def bleu(refs: References, hyps: Sequence[str], cased: bool = True, max_order: int = MAX_ORDER) -> BleuReport:
    """Corpus BLEU of detokenized ``hyps`` against ``refs``.

    Each element of ``refs`` is a reference string or a sequence of
    alternative references for the same hypothesis.
    """
    if len(refs) != len(hyps):
        raise LengthMismatch(len(refs), len(hyps))

    def prep(text: str) -> list[str]:
        return tokenize(text if cased else text.lower())

    matches = [0] * max_order
    totals = [0] * max_order
    hyp_len = ref_len = 0
    for ref, hyp in zip(refs, hyps):
        alternatives = [ref] if isinstance(ref, str) else list(ref)
        ref_toks = [prep(r) for r in alternatives]
        hyp_toks = prep(hyp)
        hyp_len += len(hyp_toks)
        ref_len += _closest_ref_len(len(hyp_toks), [len(r) for r in ref_toks])
        for n in range(1, max_order + 1):
            counts = _ngrams(hyp_toks, n)
            max_ref: Counter = Counter()
            for r in ref_toks:
                max_ref |= _ngrams(r, n)
            matches[n - 1] += sum(min(c, max_ref[g]) for g, c in counts.items())
            totals[n - 1] += max(len(hyp_toks) - n + 1, 0)
    if hyp_len == 0:
        raise EmptyCorpus("hypotheses contain no tokens")
    return BleuReport(tuple(matches), tuple(totals), hyp_len, ref_len, cased)

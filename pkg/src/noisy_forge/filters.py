"""Length-ratio filtering and pair deduplication."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

from noisy_forge.corpus_io import Corpus, SentencePair

Side = Literal["source", "target"]
Unit = Literal["tokens", "chars"]


def _as_fraction(x) -> Fraction:
    # str() first so that 1.2 means 6/5, not the nearest binary double
    return x if isinstance(x, Fraction) else Fraction(str(x))


@dataclass(frozen=True)
class RatioFilterConfig:
    """Remove a pair when ``len(numerator) / len(denominator) > lambda_ratio``.

    The default compares the translation (target) to the transcript
    (source).
    """

    numerator: Side = "target"
    denominator: Side = "source"
    lambda_ratio: Fraction = Fraction(3, 2)
    unit: Unit = "tokens"

    def __post_init__(self):
        object.__setattr__(self, "lambda_ratio", _as_fraction(self.lambda_ratio))
        for side in (self.numerator, self.denominator):
            if side not in ("source", "target"):
                raise ValueError(f"side must be 'source' or 'target', got {side!r}")
        if self.numerator == self.denominator:
            raise ValueError("numerator and denominator must be different sides")
        if self.lambda_ratio <= 0:
            raise ValueError("lambda_ratio must be positive")
        if self.unit not in ("tokens", "chars"):
            raise ValueError(f"unit must be 'tokens' or 'chars', got {self.unit!r}")


def _length(text: str, unit: Unit) -> int:
    return len(text.split()) if unit == "tokens" else len(text)


def _side(pair: SentencePair, side: Side) -> str:
    return pair.source.text if side == "source" else pair.target.text


def exceeds_ratio(pair: SentencePair, cfg: RatioFilterConfig) -> bool:
    num = _length(_side(pair, cfg.numerator), cfg.unit)
    den = _length(_side(pair, cfg.denominator), cfg.unit)
    if den == 0:
        return True
    return Fraction(num, den) > cfg.lambda_ratio


def length_ratio_filter(corpus: Corpus, cfg: RatioFilterConfig = RatioFilterConfig()) -> tuple[Corpus, Corpus]:
    """Split ``corpus`` into (kept, removed); both keep the original indices."""
    kept, removed = [], []
    for p in corpus:
        (removed if exceeds_ratio(p, cfg) else kept).append(p)
    return (
        Corpus(tuple(kept), corpus.src_lang, corpus.tgt_lang),
        Corpus(tuple(removed), corpus.src_lang, corpus.tgt_lang),
    )


def dedup_pairs(corpus: Corpus) -> Corpus:
    """Keep the first occurrence of every (source, target) text pair."""
    seen = set()
    out = []
    for p in corpus:
        key = p.texts()
        if key not in seen:
            seen.add(key)
            out.append(p)
    return Corpus(tuple(out), corpus.src_lang, corpus.tgt_lang)

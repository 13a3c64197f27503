"""Assemble fine-tuning datasets from noisy, pseudo-parallel and ASR data.

Translation hypotheses are never generated here; they are read from files
produced by an external system, one line per input sentence.
"""

from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Optional, Sequence

from noisy_forge import __version__
from noisy_forge.corpus_io import (
    ASR,
    BACK_TRANSLATION,
    FORWARD_TRANSLATION,
    Corpus,
    MonoCorpus,
    SentencePair,
    load_parallel,
    read_lines,
)
from noisy_forge.errors import LangMismatch, LineCountMismatch
from noisy_forge.filters import RatioFilterConfig, length_ratio_filter
from noisy_forge.text_norm import TagConfig, inject_tag


def merge_directions(c_ab: Corpus, c_ba: Corpus) -> Corpus:
    """Append the reverse-direction corpus, swapped, to the forward one."""
    if (c_ba.src_lang, c_ba.tgt_lang) != (c_ab.tgt_lang, c_ab.src_lang):
        raise LangMismatch(
            f"expected {c_ab.tgt_lang}-{c_ab.src_lang} for the reverse corpus, "
            f"got {c_ba.src_lang}-{c_ba.tgt_lang}"
        )
    return c_ab.concat(c_ba.swapped())


def _hypotheses(mono: MonoCorpus, hyp_path: str | os.PathLike) -> list[str]:
    hyps = read_lines(hyp_path)
    if len(hyps) != len(mono):
        raise LineCountMismatch(len(mono), len(hyps))
    return hyps


def assemble_ft(mono_src: MonoCorpus, hyp_path: str | os.PathLike, tgt_lang: str) -> Corpus:
    """Forward translation: the monolingual text is the source."""
    hyps = _hypotheses(mono_src, hyp_path)
    return Corpus.from_texts(zip(mono_src.texts, hyps), mono_src.lang, tgt_lang, FORWARD_TRANSLATION)


def assemble_bt(mono_tgt: MonoCorpus, hyp_path: str | os.PathLike, src_lang: str) -> Corpus:
    """Back translation: the hypothesis is the source, the monolingual text the target."""
    hyps = _hypotheses(mono_tgt, hyp_path)
    return Corpus.from_texts(zip(hyps, mono_tgt.texts), src_lang, mono_tgt.lang, BACK_TRANSLATION)


def assemble_asr(
    asr_path: str | os.PathLike,
    translations_path: str | os.PathLike,
    src_lang: str,
    tgt_lang: str,
    cfg: RatioFilterConfig = RatioFilterConfig(),
) -> tuple[Corpus, Corpus]:
    """Pair ASR transcripts with gold translations, then length-ratio filter."""
    corpus = load_parallel(asr_path, translations_path, src_lang, tgt_lang, ASR)
    return length_ratio_filter(corpus, cfg)


@dataclass
class Component:
    """One input of a fine-tuning mixture."""

    name: str
    corpus: Corpus
    weight: int = 1
    sources: Sequence[str] = ()
    parameters: dict[str, Any] = field(default_factory=dict)


@dataclass
class AugmentationManifest:
    components: list[dict[str, Any]]
    src_lang: str
    tgt_lang: str
    total_pairs: int
    tagged: bool
    shuffle_seed: Optional[int]
    stage: Optional[str] = None
    created_at: str = ""
    version: str = __version__

    def as_dict(self) -> dict[str, Any]:
        return {
            "version": self.version,
            "created_at": self.created_at,
            "stage": self.stage,
            "src_lang": self.src_lang,
            "tgt_lang": self.tgt_lang,
            "total_pairs": self.total_pairs,
            "tagged": self.tagged,
            "shuffle_seed": self.shuffle_seed,
            "components": self.components,
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, ensure_ascii=False, sort_keys=False) + "\n"

    def save(self, path: str | os.PathLike) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.to_json())


def _timestamp() -> str:
    # SOURCE_DATE_EPOCH pins the timestamp for reproducible manifests.
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    when = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return when.strftime("%Y-%m-%dT%H:%M:%SZ")


def _origin_label(corpus: Corpus) -> str:
    origins = sorted({str(p.origin) for p in corpus})
    if len(origins) == 1:
        return origins[0]
    return "mixed" if origins else "none"


def build_finetune_set(
    components: Sequence[Component | tuple[Corpus, int]],
    tag_cfg: Optional[TagConfig] = None,
    shuffle_seed: Optional[int] = None,
    stage: Optional[str] = None,
) -> tuple[Corpus, AugmentationManifest]:
    """Concatenate weighted components, optionally tagging and shuffling.

    A component with weight ``w`` is repeated ``w`` times. Tags are injected
    per pair origin when ``tag_cfg`` is given.
    """
    comps = [
        c if isinstance(c, Component) else Component(f"component{i}", c[0], c[1])
        for i, c in enumerate(components)
    ]
    if not comps:
        raise ValueError("at least one component is required")
    src_lang, tgt_lang = comps[0].corpus.src_lang, comps[0].corpus.tgt_lang
    pairs: list[SentencePair] = []
    entries = []
    for c in comps:
        if (c.corpus.src_lang, c.corpus.tgt_lang) != (src_lang, tgt_lang):
            raise LangMismatch(
                f"component {c.name!r} is {c.corpus.src_lang}-{c.corpus.tgt_lang}, "
                f"expected {src_lang}-{tgt_lang}"
            )
        if not isinstance(c.weight, int) or c.weight < 1:
            raise ValueError(f"component {c.name!r}: weight must be a positive integer")
        block = list(c.corpus.pairs)
        if tag_cfg is not None:
            block = [inject_tag(p, tag_cfg) for p in block]
        pairs.extend(block * c.weight)
        entries.append(
            {
                "name": c.name,
                "origin": _origin_label(c.corpus),
                "weight": c.weight,
                "base_pairs": len(c.corpus),
                "pair_count": len(c.corpus) * c.weight,
                "sources": list(c.sources),
                "parameters": c.parameters,
            }
        )
    if shuffle_seed is not None:
        random.Random(shuffle_seed).shuffle(pairs)
    out = Corpus.from_pairs(pairs, src_lang, tgt_lang)
    manifest = AugmentationManifest(
        components=entries,
        src_lang=src_lang,
        tgt_lang=tgt_lang,
        total_pairs=len(out),
        tagged=tag_cfg is not None,
        shuffle_seed=shuffle_seed,
        stage=stage,
        created_at=_timestamp(),
    )
    return out, manifest


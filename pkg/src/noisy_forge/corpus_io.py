"""Parallel and monolingual corpora: types, file I/O and size statistics.

Files are UTF-8, one sentence per line, LF-terminated. A trailing CR is
stripped on read so CRLF files load cleanly. Empty lines are kept as empty
sentences so that line alignment is never disturbed.
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from noisy_forge.errors import BadRecord, DataError, InvalidUtf8, LangMismatch, LineCountMismatch

KNOWN_ORIGINS = (
    "clean",
    "mtnt",
    "fuzzy_parallel",
    "fuzzy_mono",
    "forward_translation",
    "back_translation",
    "asr",
    "iwslt",
    "mustc",
)

_LANG_RE = re.compile(r"^[a-z0-9_-]+$")
_OTHER_RE = re.compile(r"^other\((.+)\)$")


@dataclass(frozen=True, order=True)
class DataOrigin:
    """Where a sentence pair came from.

    ``tag`` is one of ``KNOWN_ORIGINS`` or, for ``other`` origins, the free
    form label given by the user.
    """

    tag: str

    def __post_init__(self):
        if not self.tag or any(ch.isspace() for ch in self.tag):
            raise ValueError(f"invalid origin tag {self.tag!r}")

    @property
    def is_other(self) -> bool:
        return self.tag not in KNOWN_ORIGINS

    @classmethod
    def parse(cls, text: str) -> "DataOrigin":
        """Accept ``mtnt``, ``other(reddit)`` or a bare custom label."""
        m = _OTHER_RE.match(text)
        return cls(m.group(1) if m else text)

    def __str__(self) -> str:
        return self.tag if not self.is_other else f"other({self.tag})"


CLEAN = DataOrigin("clean")
MTNT = DataOrigin("mtnt")
FUZZY_PARALLEL = DataOrigin("fuzzy_parallel")
FUZZY_MONO = DataOrigin("fuzzy_mono")
FORWARD_TRANSLATION = DataOrigin("forward_translation")
BACK_TRANSLATION = DataOrigin("back_translation")
ASR = DataOrigin("asr")
IWSLT = DataOrigin("iwslt")
MUSTC = DataOrigin("mustc")


def _check_lang(lang: str) -> None:
    if not lang or not lang.isascii() or not _LANG_RE.match(lang):
        raise ValueError(f"language code must be non-empty lowercase ASCII, got {lang!r}")


@dataclass(frozen=True)
class Sentence:
    text: str
    lang: str

    def __post_init__(self):
        if "\n" in self.text:
            raise ValueError("sentence text must be a single line")
        _check_lang(self.lang)


@dataclass(frozen=True)
class SentencePair:
    source: Sentence
    target: Sentence
    origin: DataOrigin = CLEAN
    index: int = 0

    def swapped(self) -> "SentencePair":
        return SentencePair(self.target, self.source, self.origin, self.index)

    def texts(self) -> tuple[str, str]:
        return self.source.text, self.target.text


@dataclass(frozen=True)
class Corpus:
    """An ordered, immutable list of aligned pairs sharing one direction."""

    pairs: tuple[SentencePair, ...]
    src_lang: str
    tgt_lang: str

    def __post_init__(self):
        _check_lang(self.src_lang)
        _check_lang(self.tgt_lang)
        if self.src_lang == self.tgt_lang:
            raise LangMismatch(f"source and target language are both {self.src_lang!r}")
        object.__setattr__(self, "pairs", tuple(self.pairs))
        seen = set()
        for p in self.pairs:
            if p.source.lang != self.src_lang or p.target.lang != self.tgt_lang:
                raise LangMismatch(
                    f"pair {p.index} is {p.source.lang}-{p.target.lang}, "
                    f"corpus is {self.src_lang}-{self.tgt_lang}"
                )
            if p.index in seen:
                raise ValueError(f"duplicate pair index {p.index}")
            seen.add(p.index)

    @classmethod
    def from_texts(
        cls,
        texts: Iterable[tuple[str, str]],
        src_lang: str,
        tgt_lang: str,
        origin: DataOrigin = CLEAN,
    ) -> "Corpus":
        pairs = [
            SentencePair(Sentence(s, src_lang), Sentence(t, tgt_lang), origin, i)
            for i, (s, t) in enumerate(texts)
        ]
        return cls(tuple(pairs), src_lang, tgt_lang)

    @classmethod
    def from_pairs(cls, pairs: Iterable[SentencePair], src_lang: str, tgt_lang: str) -> "Corpus":
        """Build a corpus from existing pairs, renumbering indices from 0."""
        renumbered = [
            SentencePair(p.source, p.target, p.origin, i) for i, p in enumerate(pairs)
        ]
        return cls(tuple(renumbered), src_lang, tgt_lang)

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[SentencePair]:
        return iter(self.pairs)

    def __getitem__(self, i: int) -> SentencePair:
        return self.pairs[i]

    @property
    def sources(self) -> list[str]:
        return [p.source.text for p in self.pairs]

    @property
    def targets(self) -> list[str]:
        return [p.target.text for p in self.pairs]

    def texts(self) -> list[tuple[str, str]]:
        return [p.texts() for p in self.pairs]

    def swapped(self) -> "Corpus":
        return Corpus(tuple(p.swapped() for p in self.pairs), self.tgt_lang, self.src_lang)

    def concat(self, other: "Corpus") -> "Corpus":
        if (other.src_lang, other.tgt_lang) != (self.src_lang, self.tgt_lang):
            raise LangMismatch(
                f"cannot concatenate {self.src_lang}-{self.tgt_lang} "
                f"with {other.src_lang}-{other.tgt_lang}"
            )
        return Corpus.from_pairs(self.pairs + other.pairs, self.src_lang, self.tgt_lang)

    @classmethod
    def empty(cls, src_lang: str, tgt_lang: str) -> "Corpus":
        return cls((), src_lang, tgt_lang)


@dataclass(frozen=True)
class MonoCorpus:
    sentences: tuple[Sentence, ...]
    lang: str

    def __post_init__(self):
        _check_lang(self.lang)
        object.__setattr__(self, "sentences", tuple(self.sentences))
        for s in self.sentences:
            if s.lang != self.lang:
                raise LangMismatch(f"sentence in {s.lang!r} inside {self.lang!r} corpus")

    @classmethod
    def from_texts(cls, texts: Iterable[str], lang: str) -> "MonoCorpus":
        return cls(tuple(Sentence(t, lang) for t in texts), lang)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    @property
    def texts(self) -> list[str]:
        return [s.text for s in self.sentences]


@dataclass(frozen=True)
class StatsReport:
    sentence_count: int = 0
    source_word_count: int = 0
    target_word_count: int = 0

    def __add__(self, other: "StatsReport") -> "StatsReport":
        return StatsReport(
            self.sentence_count + other.sentence_count,
            self.source_word_count + other.source_word_count,
            self.target_word_count + other.target_word_count,
        )

    def as_dict(self) -> dict[str, int]:
        return {
            "sentences": self.sentence_count,
            "src_words": self.source_word_count,
            "tgt_words": self.target_word_count,
        }

    def to_text(self) -> str:
        d = self.as_dict()
        return " ".join(f"{k}={v}" for k, v in d.items())

    def to_json(self) -> str:
        return json.dumps(self.as_dict())


# ---------------------------------------------------------------------------
# Reading and writing


def iter_lines(path: str | os.PathLike) -> Iterator[str]:
    """Yield decoded lines without their terminator."""
    with open(path, "rb") as f:
        for line_no, raw in enumerate(f, 1):
            if raw.endswith(b"\n"):
                raw = raw[:-1]
            if raw.endswith(b"\r"):
                raw = raw[:-1]
            try:
                yield raw.decode("utf-8")
            except UnicodeDecodeError:
                raise InvalidUtf8(line_no, path) from None


def read_lines(path: str | os.PathLike) -> list[str]:
    return list(iter_lines(path))


def write_lines(lines: Iterable[str], path: str | os.PathLike) -> None:
    """Write lines LF-terminated; an empty iterable gives a zero-byte file."""
    with open(path, "wb") as f:
        for line in lines:
            f.write(line.encode("utf-8"))
            f.write(b"\n")


def load_parallel(
    src_path: str | os.PathLike,
    tgt_path: str | os.PathLike,
    src_lang: str,
    tgt_lang: str,
    origin: DataOrigin = CLEAN,
) -> Corpus:
    src = read_lines(src_path)
    tgt = read_lines(tgt_path)
    if len(src) != len(tgt):
        raise LineCountMismatch(len(src), len(tgt))
    return Corpus.from_texts(zip(src, tgt), src_lang, tgt_lang, origin)


def parse_tsv_lines(lines: Iterable[str]) -> list[tuple[str, str]]:
    records = []
    for line_no, line in enumerate(lines, 1):
        if line.count("\t") != 1:
            raise BadRecord(line_no)
        src, tgt = line.split("\t")
        records.append((src, tgt))
    return records


def load_tsv(
    path: str | os.PathLike,
    src_lang: str,
    tgt_lang: str,
    origin: DataOrigin = CLEAN,
) -> Corpus:
    return Corpus.from_texts(parse_tsv_lines(iter_lines(path)), src_lang, tgt_lang, origin)


def load_mono(path: str | os.PathLike, lang: str) -> MonoCorpus:
    return MonoCorpus.from_texts(iter_lines(path), lang)


def write_parallel(corpus: Corpus, src_path: str | os.PathLike, tgt_path: str | os.PathLike) -> None:
    write_lines(corpus.sources, src_path)
    write_lines(corpus.targets, tgt_path)


def format_tsv(corpus: Corpus) -> Iterator[str]:
    for p in corpus:
        src, tgt = p.texts()
        if "\t" in src or "\t" in tgt:
            raise DataError(f"pair {p.index} contains a TAB and cannot be written as TSV")
        yield f"{src}\t{tgt}"


def write_tsv(corpus: Corpus, path: str | os.PathLike) -> None:
    write_lines(format_tsv(corpus), path)


def corpus_stats(corpus: Corpus | Sequence[SentencePair]) -> StatsReport:
    n = src_words = tgt_words = 0
    for p in corpus:
        n += 1
        src_words += len(p.source.text.split())
        tgt_words += len(p.target.text.split())
    return StatsReport(n, src_words, tgt_words)


def mono_stats(mono: MonoCorpus) -> StatsReport:
    return StatsReport(len(mono), sum(len(s.text.split()) for s in mono), 0)

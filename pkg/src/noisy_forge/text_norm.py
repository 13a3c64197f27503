"""Rule-based tokenization, detokenization, domain tags and French punctuation.

The tokenizer is a small, documented subset of Moses behaviour:

* text is split on whitespace into chunks;
* a chunk containing ``://`` is treated as a URL and left whole;
* the punctuation characters ``. , ! ? ; : ( ) " « »`` are peeled off
  both ends of a chunk, one token per character;
* runs of emoji (including ZWJ sequences, skin-tone modifiers and variation
  selectors) become single tokens;
* in French, elided articles and pronouns (``l'``, ``d'``, ``qu'``, ...) are
  split from the following word.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Mapping

from noisy_forge.corpus_io import KNOWN_ORIGINS, DataOrigin, Sentence, SentencePair
from noisy_forge.errors import DataError, UnknownOrigin

PUNCT = frozenset('.,!?;:()"«»')
# Tokens that attach to the preceding token when detokenizing.
_ATTACH_LEFT = frozenset(".,!?;:)")
_ATTACH_RIGHT = frozenset("(")

APOSTROPHES = ("'", "’")
ELISION_PREFIXES = ("qu", "l", "d", "j", "n", "s", "t", "c", "m")

_ZWJ = "‍"


def _is_emoji(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x1F000 <= cp <= 0x1FAFF
        or 0x2600 <= cp <= 0x27BF
        or 0x2B00 <= cp <= 0x2BFF
        or 0x1F1E6 <= cp <= 0x1F1FF
    )


def _is_emoji_joiner(ch: str) -> bool:
    cp = ord(ch)
    # ZWJ, variation selectors, skin tones, keycap
    return ch == _ZWJ or 0xFE00 <= cp <= 0xFE0F or 0x1F3FB <= cp <= 0x1F3FF or cp == 0x20E3


def _split_emoji(chunk: str) -> list[str]:
    if not any(_is_emoji(ch) for ch in chunk):
        return [chunk]
    parts: list[str] = []
    buf = ""
    in_emoji = False
    for ch in chunk:
        emoji_like = _is_emoji(ch) or (in_emoji and _is_emoji_joiner(ch))
        if buf and emoji_like != in_emoji:
            parts.append(buf)
            buf = ""
        buf += ch
        in_emoji = emoji_like
    if buf:
        parts.append(buf)
    return parts


def _elision_split(word: str) -> tuple[str, str] | None:
    lowered = word.lower()
    for prefix in ELISION_PREFIXES:
        n = len(prefix)
        if len(word) > n + 1 and lowered.startswith(prefix) and word[n] in APOSTROPHES:
            return word[: n + 1], word[n + 1 :]
    return None


def _tokenize_chunk(chunk: str, french: bool) -> list[str]:
    if "://" in chunk:
        return [chunk]
    parts = _split_emoji(chunk)
    if len(parts) > 1:
        tokens: list[str] = []
        for part in parts:
            tokens.extend([part] if _is_emoji(part[0]) else _tokenize_chunk(part, french))
        return tokens
    i, j = 0, len(chunk)
    while i < j and chunk[i] in PUNCT:
        i += 1
    while j > i and chunk[j - 1] in PUNCT:
        j -= 1
    core = chunk[i:j]
    tokens = list(chunk[:i])
    if core:
        if french and (split := _elision_split(core)) is not None:
            tokens.append(split[0])
            tokens.extend(_tokenize_chunk(split[1], french))
        else:
            tokens.append(core)
    tokens.extend(chunk[j:])
    return tokens


def tokenize(text: str, lang: str | None = None) -> list[str]:
    """Split ``text`` into tokens; ``lang=None`` applies language-neutral rules.

    >>> tokenize("Hello, world!", "en")
    ['Hello', ',', 'world', '!']
    >>> tokenize("l'équipe", "fr")
    ["l'", 'équipe']
    """
    french = lang == "fr"
    tokens: list[str] = []
    for chunk in text.split():
        tokens.extend(_tokenize_chunk(chunk, french))
    return tokens


def _is_elided(token: str) -> bool:
    return (
        len(token) >= 2
        and token[-1] in APOSTROPHES
        and token[:-1].lower() in ELISION_PREFIXES
    )


def detokenize(tokens: list[str], lang: str | None = None) -> str:
    """Join tokens, attaching punctuation to its neighbours.

    Straight double quotes alternate between opening (attach right) and
    closing (attach left).
    """
    french = lang == "fr"
    out: list[str] = []
    glue_next = False
    open_quote = False
    for tok in tokens:
        attach_left = tok in _ATTACH_LEFT
        attach_right = tok in _ATTACH_RIGHT or (french and _is_elided(tok))
        if tok == '"':
            if open_quote:
                attach_left = True
            else:
                attach_right = True
            open_quote = not open_quote
        if out and not glue_next and not attach_left:
            out.append(" ")
        out.append(tok)
        glue_next = attach_right
    return "".join(out)


def normalize(text: str, lang: str | None = None) -> str:
    return detokenize(tokenize(text, lang), lang)


# ---------------------------------------------------------------------------
# Domain tags


@dataclass(frozen=True)
class TagConfig:
    tag_map: Mapping[DataOrigin, str] = field(default_factory=dict)

    def __post_init__(self):
        tags = list(self.tag_map.values())
        for tag in tags:
            if not tag or any(ch.isspace() for ch in tag):
                raise ValueError(f"invalid tag token {tag!r}")
        if len(set(tags)) != len(tags):
            raise ValueError("tag tokens must be unique")

    @classmethod
    def default(cls) -> "TagConfig":
        return cls({DataOrigin(name): f"<{name}>" for name in KNOWN_ORIGINS})

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, str]) -> "TagConfig":
        return cls({DataOrigin.parse(k): v for k, v in mapping.items()})

    @classmethod
    def load(cls, path: str | os.PathLike) -> "TagConfig":
        """Read a JSON object mapping origin names to tag tokens."""
        with open(path, encoding="utf-8") as f:
            try:
                mapping = json.load(f)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}: not valid JSON ({e})") from None
        if not isinstance(mapping, dict):
            raise DataError(f"{path}: tag config must be a JSON object")
        try:
            return cls.from_mapping(mapping)
        except ValueError as e:
            raise DataError(f"{path}: {e}") from None

    def tag_for(self, origin: DataOrigin) -> str:
        try:
            return self.tag_map[origin]
        except KeyError:
            raise UnknownOrigin(origin) from None


def tag_text(text: str, tag: str) -> str:
    return f"{tag} {text}"


def untag_text(text: str, tag: str) -> str:
    prefix = tag + " "
    if not text.startswith(prefix):
        raise DataError(f"sentence does not start with tag {tag!r}")
    return text[len(prefix) :]


def inject_tag(pair: SentencePair, cfg: TagConfig) -> SentencePair:
    """Prepend the origin's tag to the source side.

    Not idempotent: tagging twice gives two tags.
    """
    tag = cfg.tag_for(pair.origin)
    source = Sentence(tag_text(pair.source.text, tag), pair.source.lang)
    return SentencePair(source, pair.target, pair.origin, pair.index)


def strip_tag(pair: SentencePair, cfg: TagConfig) -> SentencePair:
    tag = cfg.tag_for(pair.origin)
    source = Sentence(untag_text(pair.source.text, tag), pair.source.lang)
    return SentencePair(source, pair.target, pair.origin, pair.index)


# ---------------------------------------------------------------------------
# French punctuation

_RIGHT_SINGLE_QUOTE = "’"


def _fix_apostrophes(text: str) -> str:
    chars = list(text)
    for i in range(1, len(chars) - 1):
        if chars[i] == "'" and chars[i - 1].isalpha() and chars[i + 1].isalpha():
            chars[i] = _RIGHT_SINGLE_QUOTE
    return "".join(chars)


def _fix_double_quotes(text: str) -> str:
    parts = text.split('"')
    n_quotes = len(parts) - 1
    if n_quotes < 2:
        return text
    out = [parts[0]]
    # parts[1:] alternate between quoted content and text between quotes
    for k in range(1, n_quotes // 2 * 2, 2):
        inner = parts[k].strip(" ")
        out.append("« " + inner + " »")
        out.append(parts[k + 1])
    if n_quotes % 2:
        out.append('"')
        out.append(parts[-1])
    return "".join(out)


def fix_french_punctuation(text: str, apostrophes: bool = True) -> str:
    """Convert straight quotes to French typographic punctuation.

    Intra-word apostrophes (letter on both sides) become U+2019 and paired
    double quotes become ``« ... »`` with exactly one space inside each mark.
    An unpaired final double quote is left alone. With ``apostrophes=False``
    only the double quotes are converted.
    """
    if apostrophes:
        text = _fix_apostrophes(text)
    return _fix_double_quotes(text)

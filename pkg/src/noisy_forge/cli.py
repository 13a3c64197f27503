"""``noisy-forge`` command line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 I/O error.
Data goes to stdout (or ``-o``); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from fractions import Fraction
from typing import Iterable, Iterator, Optional, Sequence

from noisy_forge import __version__, bpe, metrics, text_norm
from noisy_forge.corpus_io import (
    Corpus,
    DataOrigin,
    MonoCorpus,
    Sentence,
    SentencePair,
    corpus_stats,
    format_tsv,
    iter_lines,
    load_mono,
    load_parallel,
    load_tsv,
    mono_stats,
    read_lines,
    write_parallel,
    write_tsv,
)
from noisy_forge.errors import DataError, InvalidUtf8, LineCountMismatch
from noisy_forge.filters import RatioFilterConfig, dedup_pairs, length_ratio_filter
from noisy_forge.fuzzy_augment import (
    FuzzyConfig,
    augment_mono,
    augment_parallel,
    default_workers,
    write_manifest,
)
from noisy_forge.pipeline import (
    Component,
    assemble_asr,
    assemble_bt,
    assemble_ft,
    build_finetune_set,
    merge_directions,
)

log = logging.getLogger("noisy_forge")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


# ---------------------------------------------------------------------------
# stream helpers


def _stdin_lines() -> Iterator[str]:
    for line_no, raw in enumerate(sys.stdin.buffer, 1):
        raw = raw.rstrip(b"\n")
        if raw.endswith(b"\r"):
            raw = raw[:-1]
        try:
            yield raw.decode("utf-8")
        except UnicodeDecodeError:
            raise InvalidUtf8(line_no, "<stdin>") from None


def _input_lines(args) -> Iterator[str]:
    path = getattr(args, "input", None)
    if path and path != "-":
        return iter_lines(path)
    return _stdin_lines()


class _Output:
    """Binary line writer for ``-o PATH`` or stdout."""

    def __init__(self, path: Optional[str]):
        self.path = path

    def __enter__(self):
        if self.path and self.path != "-":
            self.fh = open(self.path, "wb")
        else:
            self.fh = sys.stdout.buffer
        return self

    def write(self, line: str) -> None:
        self.fh.write(line.encode("utf-8"))
        self.fh.write(b"\n")

    def __exit__(self, *exc):
        if self.fh is sys.stdout.buffer:
            self.fh.flush()
        else:
            self.fh.close()


def _write_lines(lines: Iterable[str], path: Optional[str]) -> None:
    with _Output(path) as out:
        for line in lines:
            out.write(line)


def _add_io(p: argparse.ArgumentParser) -> None:
    p.add_argument("-i", "--input", help="input file (default: stdin)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")


def _add_langs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--src-lang", type=_lang, default="en")
    p.add_argument("--tgt-lang", type=_lang, default="fr")


def _add_corpus_in(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tsv", help="parallel corpus as SOURCE<TAB>TARGET lines")
    p.add_argument("--src", help="source side, one sentence per line")
    p.add_argument("--tgt", help="target side, one sentence per line")
    p.add_argument("--origin", default="clean", help="origin label of the input pairs")
    _add_langs(p)


def _add_corpus_out(p: argparse.ArgumentParser) -> None:
    p.add_argument("-o", "--output", help="write pairs as TSV here (default: stdout)")
    p.add_argument("--out-src", help="write the source side to this file")
    p.add_argument("--out-tgt", help="write the target side to this file")


def _load_corpus(args) -> Corpus:
    origin = DataOrigin.parse(args.origin)
    if args.tsv:
        if args.src or args.tgt:
            raise UsageError("give either --tsv or --src/--tgt, not both")
        return load_tsv(args.tsv, args.src_lang, args.tgt_lang, origin)
    if args.src and args.tgt:
        return load_parallel(args.src, args.tgt, args.src_lang, args.tgt_lang, origin)
    raise UsageError("a corpus is required: --tsv FILE or --src FILE --tgt FILE")


def _save_corpus(corpus: Corpus, args) -> None:
    if bool(args.out_src) != bool(args.out_tgt):
        raise UsageError("--out-src and --out-tgt must be given together")
    if args.out_src:
        write_parallel(corpus, args.out_src, args.out_tgt)
    else:
        _write_lines(format_tsv(corpus), args.output)


def _lambda(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


def _lang(text: str) -> str:
    try:
        Sentence("", text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    return text


# ---------------------------------------------------------------------------
# subcommands


def cmd_tokenize(args) -> None:
    _write_lines((" ".join(text_norm.tokenize(l, args.lang)) for l in _input_lines(args)), args.output)


def cmd_detok(args) -> None:
    _write_lines((text_norm.detokenize(l.split(), args.lang) for l in _input_lines(args)), args.output)


def cmd_fix_punct(args) -> None:
    apostrophes = not args.quotes_only
    _write_lines(
        (text_norm.fix_french_punctuation(l, apostrophes) for l in _input_lines(args)), args.output
    )


def cmd_tag(args) -> None:
    cfg = text_norm.TagConfig.load(args.config) if args.config else text_norm.TagConfig.default()
    tag = cfg.tag_for(DataOrigin.parse(args.origin))
    fn = text_norm.untag_text if args.strip else text_norm.tag_text
    _write_lines((fn(l, tag) for l in _input_lines(args)), args.output)


def cmd_bpe_learn(args) -> None:
    counts = bpe.count_words(_input_lines(args))
    model = bpe.learn_bpe(counts, args.merges, args.min_freq)
    log.info("learned %d merges from %d word types", len(model), len(counts))
    _write_lines((f"{a} {b}" for a, b in model.merges), args.output)


def cmd_bpe_apply(args) -> None:
    model = bpe.BpeModel.load(args.model)
    _write_lines((bpe.apply_bpe_line(model, l) for l in _input_lines(args)), args.output)


def cmd_bpe_undo(args) -> None:
    _write_lines((bpe.undo_bpe_line(l) for l in _input_lines(args)), args.output)


def _tokenized(corpus: Corpus) -> Corpus:
    pairs = []
    for p in corpus:
        source = Sentence(" ".join(text_norm.tokenize(p.source.text, corpus.src_lang)), p.source.lang)
        pairs.append(SentencePair(source, p.target, p.origin, p.index))
    return Corpus(tuple(pairs), corpus.src_lang, corpus.tgt_lang)


def cmd_fuzzy_augment(args) -> None:
    corpus = _load_corpus(args)
    if args.tokenize:
        corpus = _tokenized(corpus)
    try:
        cfg = FuzzyConfig(
            lambda_dist=args.lambda_dist,
            k=args.top_k,
            min_jaccard=args.min_jaccard,
            exhaustive=args.exhaustive,
            dedup=not args.no_dedup,
            workers=args.threads or default_workers(),
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    if args.mode == "mono":
        if not args.mono:
            raise UsageError("--mode mono needs --mono FILE")
        mono = load_mono(args.mono, args.src_lang)
        if args.tokenize:
            mono = MonoCorpus.from_texts(
                (" ".join(text_norm.tokenize(t, mono.lang)) for t in mono.texts), mono.lang
            )
        new, records = augment_mono(mono, corpus, cfg)
    else:
        new, records = augment_parallel(corpus, cfg)
    log.info("%d matches, %d new pairs", len(records), len(new))
    if args.manifest:
        with open(args.manifest, "w", encoding="utf-8", newline="\n") as f:
            write_manifest(records, f)
    _save_corpus(new, args)


def _ratio_cfg(args) -> RatioFilterConfig:
    try:
        return RatioFilterConfig(args.num, args.den, args.lambda_ratio, args.unit)
    except ValueError as e:
        raise UsageError(str(e)) from None


def cmd_filter_ratio(args) -> None:
    corpus = _load_corpus(args)
    kept, removed = length_ratio_filter(corpus, _ratio_cfg(args))
    log.info("kept %d, removed %d", len(kept), len(removed))
    if args.removed:
        write_tsv(removed, args.removed)
    _save_corpus(kept, args)


def cmd_dedup(args) -> None:
    corpus = _load_corpus(args)
    out = dedup_pairs(corpus)
    log.info("%d of %d pairs kept", len(out), len(corpus))
    _save_corpus(out, args)


def _ref_hyp(args) -> tuple[list[str], list[str]]:
    refs, hyps = read_lines(args.refs), read_lines(args.hyps)
    if len(refs) != len(hyps):
        raise LineCountMismatch(len(refs), len(hyps))
    return refs, hyps


def cmd_wer(args) -> None:
    refs, hyps = _ref_hyp(args)

    def prep(line: str) -> list[str]:
        if args.ignore_case:
            line = line.lower()
        toks = line.split()
        if args.ignore_punct:
            toks = [t for t in toks if not all(ch in text_norm.PUNCT or not ch.isalnum() for ch in t)]
        return toks

    report = metrics.corpus_wer([prep(r) for r in refs], [prep(h) for h in hyps])
    print(json.dumps(report.as_dict()) if args.json else report.format())


def cmd_bleu(args) -> None:
    refs, hyps = _ref_hyp(args)
    report = metrics.bleu(refs, hyps, cased=not args.uncased)
    print(report.format())


def cmd_merge_directions(args) -> None:
    origin = DataOrigin.parse(args.origin)
    c_ab = load_tsv(args.ab, args.src_lang, args.tgt_lang, origin)
    c_ba = load_tsv(args.ba, args.tgt_lang, args.src_lang, origin)
    out = merge_directions(c_ab, c_ba)
    log.info("merged %d + %d = %d pairs", len(c_ab), len(c_ba), len(out))
    _save_corpus(out, args)


def cmd_assemble(args) -> None:
    if args.mode == "asr":
        if not (args.asr and args.translations):
            raise UsageError("--mode asr needs --asr FILE --translations FILE")
        kept, removed = assemble_asr(args.asr, args.translations, args.src_lang, args.tgt_lang, _ratio_cfg(args))
        log.info("kept %d, removed %d", len(kept), len(removed))
        if args.removed:
            write_tsv(removed, args.removed)
        _save_corpus(kept, args)
        return
    if not (args.mono and args.hyps):
        raise UsageError(f"--mode {args.mode} needs --mono FILE --hyps FILE")
    if args.mode == "ft":
        out = assemble_ft(load_mono(args.mono, args.src_lang), args.hyps, args.tgt_lang)
    else:
        out = assemble_bt(load_mono(args.mono, args.tgt_lang), args.hyps, args.src_lang)
    _save_corpus(out, args)


def _parse_component(spec: str) -> tuple[str, str, int]:
    parts = spec.rsplit(":", 2)
    if len(parts) == 3:
        path, origin, weight = parts
    elif len(parts) == 2:
        (path, origin), weight = parts, "1"
    else:
        raise UsageError(f"component must be PATH:ORIGIN[:WEIGHT], got {spec!r}")
    try:
        w = int(weight)
    except ValueError:
        raise UsageError(f"component weight must be an integer, got {weight!r}") from None
    if w < 1:
        raise UsageError(f"component weight must be positive, got {w}")
    return path, origin, w


def cmd_build_set(args) -> None:
    specs = [_parse_component(s) for s in args.component]
    for path, _, _ in specs:
        _require_file(path)
    comps = []
    for path, origin, weight in specs:
        corpus = load_tsv(path, args.src_lang, args.tgt_lang, DataOrigin.parse(origin))
        comps.append(Component(os.path.basename(path), corpus, weight, [path], {"origin": origin}))
    tag_cfg = None
    if args.tags:
        tag_cfg = text_norm.TagConfig.load(args.tags)
    elif args.default_tags:
        tag_cfg = text_norm.TagConfig.default()
    out, manifest = build_finetune_set(comps, tag_cfg, args.seed, args.stage)
    if args.manifest:
        manifest.save(args.manifest)
    log.info("built %d pairs from %d components", len(out), len(comps))
    _save_corpus(out, args)


def cmd_stats(args) -> None:
    if args.mono:
        report = mono_stats(load_mono(args.mono, args.src_lang))
    else:
        report = corpus_stats(_load_corpus(args))
    print(report.to_json() if args.json else report.to_text())


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="noisy-forge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"noisy-forge {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("tokenize", help="tokenize lines")
    p.add_argument("--lang", default=None)
    _add_io(p)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("detok", help="detokenize lines")
    p.add_argument("--lang", default=None)
    _add_io(p)
    p.set_defaults(func=cmd_detok)

    p = sub.add_parser("fix-punct", help="French apostrophes and angle quotes")
    p.add_argument("--quotes-only", action="store_true", help="leave apostrophes untouched")
    _add_io(p)
    p.set_defaults(func=cmd_fix_punct)

    p = sub.add_parser("tag", help="prepend (or strip) a domain tag")
    p.add_argument("--origin", required=True)
    p.add_argument("--config", help="JSON object mapping origin to tag token")
    p.add_argument("--strip", action="store_true")
    _add_io(p)
    p.set_defaults(func=cmd_tag, input_paths=("config",))

    p = sub.add_parser("bpe-learn", help="learn BPE merges from text")
    p.add_argument("--merges", type=int, default=50000)
    p.add_argument("--min-freq", type=int, default=2)
    _add_io(p)
    p.set_defaults(func=cmd_bpe_learn)

    p = sub.add_parser("bpe-apply", help="segment text with a BPE model")
    p.add_argument("--model", required=True)
    _add_io(p)
    p.set_defaults(func=cmd_bpe_apply, input_paths=("model",))

    p = sub.add_parser("bpe-undo", help="join @@-marked subwords")
    _add_io(p)
    p.set_defaults(func=cmd_bpe_undo)

    p = sub.add_parser("fuzzy-augment", help="new pairs from fuzzy matches")
    _add_corpus_in(p)
    p.add_argument("--mode", choices=("parallel", "mono"), default="parallel")
    p.add_argument("--mono", help="monolingual source-language file (mono mode)")
    p.add_argument("--lambda", dest="lambda_dist", type=_lambda, default=_lambda("0.5"))
    p.add_argument("--top-k", type=int, default=10)
    p.add_argument("--min-jaccard", type=float, default=0.0)
    p.add_argument("--exhaustive", action="store_true", help="score every pair, bypassing the index")
    p.add_argument("--no-dedup", action="store_true")
    p.add_argument("--tokenize", action="store_true", help="tokenize sources before matching")
    p.add_argument("--manifest", help="write match records as JSON lines")
    p.add_argument("--threads", type=int, default=None)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_fuzzy_augment, input_paths=("tsv", "src", "tgt", "mono"))

    def ratio_flags(q):
        q.add_argument("--num", choices=("source", "target"), default="target")
        q.add_argument("--den", choices=("source", "target"), default="source")
        q.add_argument("--lambda", dest="lambda_ratio", type=_lambda, default=_lambda("1.5"))
        q.add_argument("--unit", choices=("tokens", "chars"), default="tokens")
        q.add_argument("--removed", help="write removed pairs as TSV")

    p = sub.add_parser("filter-ratio", help="drop pairs by length ratio")
    _add_corpus_in(p)
    ratio_flags(p)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_filter_ratio, input_paths=("tsv", "src", "tgt"))

    p = sub.add_parser("dedup", help="drop repeated pairs")
    _add_corpus_in(p)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_dedup, input_paths=("tsv", "src", "tgt"))

    p = sub.add_parser("wer", help="word error / recognition rate")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--ignore-case", action="store_true")
    p.add_argument("--ignore-punct", action="store_true")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_wer, input_paths=("refs", "hyps"))

    p = sub.add_parser("bleu", help="corpus BLEU on detokenized text")
    p.add_argument("--refs", required=True)
    p.add_argument("--hyps", required=True)
    p.add_argument("--uncased", action="store_true")
    p.set_defaults(func=cmd_bleu, input_paths=("refs", "hyps"))

    p = sub.add_parser("merge-directions", help="append the swapped reverse direction")
    p.add_argument("--ab", required=True, help="TSV in the SRC->TGT direction")
    p.add_argument("--ba", required=True, help="TSV in the TGT->SRC direction")
    p.add_argument("--origin", default="mtnt")
    _add_langs(p)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_merge_directions, input_paths=("ab", "ba"))

    p = sub.add_parser("assemble", help="forward/back-translation or ASR pairs")
    p.add_argument("--mode", choices=("ft", "bt", "asr"), required=True)
    p.add_argument("--mono", help="monolingual text (ft: source language, bt: target language)")
    p.add_argument("--hyps", help="translations of --mono, one per line")
    p.add_argument("--asr", help="ASR transcripts (asr mode)")
    p.add_argument("--translations", help="gold translations (asr mode)")
    _add_langs(p)
    ratio_flags(p)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_assemble, input_paths=("mono", "hyps", "asr", "translations"))

    p = sub.add_parser("build-set", help="weighted, tagged fine-tuning mixture")
    p.add_argument("--component", action="append", required=True, metavar="PATH:ORIGIN:WEIGHT")
    p.add_argument("--tags", help="JSON tag config")
    p.add_argument("--default-tags", action="store_true", help="tag with <origin> tokens")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--stage", default=None)
    p.add_argument("--manifest")
    _add_langs(p)
    _add_corpus_out(p)
    p.set_defaults(func=cmd_build_set, input_paths=("tags",))

    p = sub.add_parser("stats", help="sentence and word counts")
    _add_corpus_in(p)
    p.add_argument("--mono", help="count a monolingual file instead")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats, input_paths=("tsv", "src", "tgt", "mono"))

    return parser


def _require_file(path: str) -> None:
    if path != "-" and not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")


def dispatch(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError(parser.format_usage())
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING,
            format="%(name)s: %(message)s",
            stream=sys.stderr,
        )
        logging.captureWarnings(True)
        input_paths = ("input",) + tuple(getattr(args, "input_paths", ()))
        for name in input_paths:
            value = getattr(args, name, None)
            if value:
                _require_file(value)
        args.func(args)
    except UsageError as e:
        print(str(e).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"noisy-forge: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except OSError as e:
        print(f"noisy-forge: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except ValueError as e:
        print(f"noisy-forge: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as e:
        # --help / --version
        return e.code if isinstance(e.code, int) else EXIT_OK
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())

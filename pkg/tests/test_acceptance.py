"""Acceptance suite: one check per criterion, each at its stated tolerance.

A summary line per criterion is printed at the end of the pytest run.
"""

import json
import math
import os
import random
import subprocess
import sys
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

import conftest
from noisy_forge.bpe import BpeModel, apply_bpe, count_words, learn_bpe, undo_bpe
from noisy_forge.cli import dispatch
from noisy_forge.corpus_io import MTNT, Corpus, read_lines, write_lines
from noisy_forge.filters import RatioFilterConfig, length_ratio_filter
from noisy_forge.fuzzy_augment import FuzzyConfig, augment_parallel
from noisy_forge.metrics import align_counts, bleu, corpus_wer, wer
from noisy_forge.pipeline import merge_directions
from noisy_forge.similarity import eq1_score, token_edit_distance
from noisy_forge.text_norm import fix_french_punctuation, tokenize

from oracles import enumerate_alignments, quadratic_parallel_scan, recursive_edit_distance

_RANK = {"PASS": 0, "SKIP": 1, "FAIL": 2}


def _record(n, desc, status, detail):
    old = conftest.ACCEPTANCE_RESULTS.get(n)
    if old:
        status = max(old[1], status, key=_RANK.__getitem__)
        detail = "; ".join(d for d in (old[2], detail) if d)
    conftest.ACCEPTANCE_RESULTS[n] = (desc, status, detail)


@contextmanager
def criterion(n, desc):
    """Record PASS/FAIL/SKIP for criterion ``n``; details go in the yielded list."""
    notes = []
    start = time.perf_counter()
    try:
        yield notes
    except pytest.skip.Exception as e:
        _record(n, desc, "SKIP", str(e))
        raise
    except BaseException as e:
        first = str(e).strip().splitlines()[0] if str(e).strip() else type(e).__name__
        _record(n, desc, "FAIL", "; ".join(notes + [first]))
        raise
    else:
        notes.append(f"{time.perf_counter() - start:.2f}s")
        _record(n, desc, "PASS", "; ".join(notes))


# ---------------------------------------------------------------------------
# 1. edit distance


def test_c1_edit_distance_oracle():
    with criterion(1, "edit distance equals recursive oracle, 1000 pairs") as notes:
        rng = random.Random(1)
        alphabet = "abcde"
        pairs = [
            (
                tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 8))),
                tuple(rng.choice(alphabet) for _ in range(rng.randint(0, 8))),
            )
            for _ in range(1000)
        ]
        start = time.perf_counter()
        for a, b in pairs:
            assert token_edit_distance(a, b) == recursive_edit_distance(a, b), (a, b)
        elapsed = time.perf_counter() - start
        assert elapsed < 10, f"took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 2. fuzzy augmentation


def _corpus_texts(rng, n, vocab=30, clustered=False):
    words = [f"w{i}" for i in range(vocab)]
    if clustered:
        # disjoint 3-word groups, at most 11 sentences each: <= 10 overlapping neighbours
        groups = [words[g : g + 3] for g in range(0, vocab, 3)]
        sents = [[rng.choice(groups[i % len(groups)]) for _ in range(rng.randint(1, 5))] for i in range(n)]
    else:
        templates = [[rng.choice(words) for _ in range(rng.randint(2, 8))] for _ in range(max(1, n // 5))]
        sents = []
        for _ in range(n):
            s = list(rng.choice(templates))
            for _ in range(rng.randint(0, 3)):
                pos = rng.randrange(len(s) + 1)
                op = rng.random()
                if op < 0.33 and s:
                    s.pop(min(pos, len(s) - 1))
                elif op < 0.66:
                    s.insert(pos, rng.choice(words))
                elif s:
                    s[min(pos, len(s) - 1)] = rng.choice(words)
            sents.append(s)
    return [(" ".join(s), f"T{i}") for i, s in enumerate(sents)]


def _max_neighbours(sources):
    sets = [set(s.split()) for s in sources]
    return max((sum(1 for j, o in enumerate(sets) if j != i and s & o) for i, s in enumerate(sets)), default=0)


def _cli_pairs(tmp_path, tsv, *flags):
    out = tmp_path / "out.tsv"
    code = dispatch(["fuzzy-augment", "--tsv", str(tsv), "--threads", "1", "-o", str(out), *flags])
    assert code == 0
    return {tuple(line.split("\t")) for line in read_lines(out)}


def test_c2_fuzzy_augment_oracle(tmp_path):
    with criterion(2, "fuzzy-augment exhaustive = O(n^2) scan; indexed subset/equal") as notes:
        rng = random.Random(2)
        lam = Fraction(1, 2)
        tool_time = 0.0
        n_equal_checked = 0
        for c in range(50):
            clustered = c % 2 == 1
            n = rng.randint(2, 110 if clustered else 200)
            texts = _corpus_texts(rng, n, clustered=clustered)
            tsv = tmp_path / "in.tsv"
            write_lines((f"{s}\t{t}" for s, t in texts), tsv)

            start = time.perf_counter()
            exhaustive = _cli_pairs(tmp_path, tsv, "--exhaustive", "--no-dedup")
            exhaustive_dedup = _cli_pairs(tmp_path, tsv, "--exhaustive")
            indexed = _cli_pairs(tmp_path, tsv, "--top-k", "10", "--no-dedup")
            tool_time += time.perf_counter() - start

            expected = quadratic_parallel_scan([(s.split(), t) for s, t in texts], lam)
            assert exhaustive == expected, f"corpus {c}"
            assert exhaustive_dedup == expected - set(texts), f"corpus {c}"
            assert indexed <= exhaustive, f"corpus {c}"
            if _max_neighbours([s for s, _ in texts]) <= 10:
                n_equal_checked += 1
                assert indexed == exhaustive, f"corpus {c}"
        assert n_equal_checked >= 25
        assert tool_time < 30, f"took {tool_time:.1f}s"
        notes.append(f"equality checked on {n_equal_checked} corpora")


# ---------------------------------------------------------------------------
# 3. normalized distance score


def test_c3_eq1_values():
    with criterion(3, "normalized distance examples 1/3, 0, undefined"):
        s = eq1_score("a b c".split(), "a b d".split())
        assert s.is_defined and abs(float(s.value) - 1 / 3) <= 1e-12
        s = eq1_score(["x"], ["x"])
        assert s.is_defined and abs(float(s.value)) <= 1e-12
        s = eq1_score(["a"], [])
        assert not s.is_defined
        assert not s.matches(Fraction(1))


# ---------------------------------------------------------------------------
# 4. BLEU


def test_c4_bleu_identity():
    with criterion(4, "BLEU identity, clipped-precision example, permutation invariance"):
        refs = ["the quick brown fox jumps", "a stitch in time saves nine", "over the lazy dog again"]
        r = bleu(refs, refs)
        assert abs(r.bleu - 100.0) <= 0.0 and r.brevity_penalty == 1.0


def test_c4_bleu_clipped_precision_example():
    with criterion(4, "BLEU identity, clipped-precision example, permutation invariance"):
        r = bleu(["the cat sat on the mat"], ["the cat the cat on the mat"])
        assert r.precisions[0] == Fraction(6, 7), f"p1 = {r.precisions[0]}, expected 6/7"


def test_c4_bleu_permutation_invariance():
    with criterion(4, "BLEU identity, clipped-precision example, permutation invariance"):
        rng = random.Random(4)
        words = "the a cat dog sat on mat quick brown fox".split()
        refs = [" ".join(rng.choice(words) for _ in range(rng.randint(4, 15))) for _ in range(60)]
        hyps = [" ".join(rng.choice(words) for _ in range(rng.randint(4, 15))) for _ in range(60)]
        base = bleu(refs, hyps)
        assert base.bleu > 0
        order = list(range(len(refs)))
        for _ in range(100):
            rng.shuffle(order)
            r = bleu([refs[i] for i in order], [hyps[i] for i in order])
            assert r.bleu == base.bleu  # bit-identical float
            assert r.precisions == base.precisions


# ---------------------------------------------------------------------------
# 5. WER / WRR


def test_c5_wer():
    with criterion(5, "WER example, alignment invariants, WER+WRR != 100% with insertions"):
        r = wer("a b c".split(), "a x c".split())
        assert (r.subs, r.dels, r.ins, r.hits) == (1, 0, 0, 2)
        assert r.wer == Fraction(1, 3) and r.wrr == Fraction(2, 3)

        rng = random.Random(5)
        for _ in range(1000):
            ref = [rng.choice("abcd") for _ in range(rng.randint(0, 10))]
            hyp = [rng.choice("abcd") for _ in range(rng.randint(0, 10))]
            c = align_counts(ref, hyp)
            assert c.hits + c.subs + c.dels == len(ref)
            assert c.hits + c.subs + c.ins == len(hyp)
            assert c.errors == recursive_edit_distance(tuple(ref), tuple(hyp))
            if len(ref) <= 5 and len(hyp) <= 5:
                assert (c.subs, c.dels, c.ins, c.hits) in enumerate_alignments(tuple(ref), tuple(hyp))

        refs = ["the cat sat".split(), "on the mat".split()]
        hyps = ["the cat sat down".split(), "on a the mat".split()]
        report = corpus_wer(refs, hyps)
        assert report.ins == 2
        assert report.wer + report.wrr != 1
        assert report.wrr + Fraction(report.subs + report.dels, report.n_ref) == 1


# ---------------------------------------------------------------------------
# 6. BPE


def test_c6_bpe():
    with criterion(6, "BPE round trip, toy learn examples, merge-list prefix property"):
        rng = random.Random(6)
        letters = "abcdefgh"
        corpus = [" ".join("".join(rng.choice(letters) for _ in range(rng.randint(1, 9))) for _ in range(20))
                  for _ in range(500)]
        assert sum(len(line.split()) for line in corpus) == 10_000
        model = learn_bpe(count_words(corpus), 300)
        assert len(model) > 0
        for line in corpus:
            toks = line.split()
            seg = [s for t in toks for s in apply_bpe(model, t)]
            assert undo_bpe(seg) == toks

        assert learn_bpe({"ab": 2}, 1).merges == (("a", "b"),)
        assert learn_bpe({"ab": 5}, 0).merges == ()
        assert learn_bpe({"aa": 3, "ab": 1}, 2).merges[0] == ("a", "a")
        assert apply_bpe(BpeModel(()), "abc") == ["a@@", "b@@", "c"]
        assert apply_bpe(BpeModel((("a", "b"),)), "abc") == ["ab@@", "c"]
        assert apply_bpe(BpeModel((("l", "o"), ("lo", "w"), ("low", "</w>"))), "low") == ["low"]

        for _ in range(20):
            vocab = {
                "".join(rng.choice("abcde") for _ in range(rng.randint(1, 7))): rng.randint(1, 20)
                for _ in range(rng.randint(5, 40))
            }
            full = learn_bpe(vocab, 60).merges
            for k in range(len(full) + 1):
                shorter = learn_bpe(vocab, k).merges
                longer = learn_bpe(vocab, k + 1).merges
                assert longer[:k] == shorter
                assert shorter == full[:k]


# ---------------------------------------------------------------------------
# 7. length-ratio filter


def test_c7_ratio_filter():
    with criterion(7, "ratio filter boundary kept, partition, monotonicity"):
        boundary = Corpus.from_texts([("a b", "x y z"), ("a b c d e", "v w x y z q r s")], "en", "fr")
        kept, removed = length_ratio_filter(boundary, RatioFilterConfig(lambda_ratio=Fraction(3, 2)))
        assert [p.index for p in kept] == [0] and [p.index for p in removed] == [1]
        at_12 = Corpus.from_texts([("a b c d e", "a b c d e f")], "en", "fr")
        assert len(length_ratio_filter(at_12, RatioFilterConfig(lambda_ratio=1.2))[0]) == 1

        rng = random.Random(7)
        lambdas = [Fraction(n, d) for d in range(1, 6) for n in range(1, 16)]
        for _ in range(200):
            texts = [(" ".join("s" * rng.randint(0, 6)), " ".join("t" * rng.randint(0, 9))) for _ in range(rng.randint(0, 30))]
            c = Corpus.from_texts(texts, "en", "fr")
            unit = rng.choice(["tokens", "chars"])
            prev = None
            for lam in sorted(rng.sample(lambdas, 5)):
                kept, removed = length_ratio_filter(c, RatioFilterConfig(lambda_ratio=lam, unit=unit))
                assert len(kept) + len(removed) == len(c)
                assert tuple(sorted(kept.pairs + removed.pairs, key=lambda p: p.index)) == c.pairs
                ids = {p.index for p in kept}
                if prev is not None:
                    assert prev <= ids
                prev = ids


# ---------------------------------------------------------------------------
# 8. punctuation fix


def _quote_heavy_line(rng):
    pieces = ["'", '"', " ", "l", "équipe", "a", "dit", "«", "»", "’", "  ", "bonjour", "qu", "x", ".", ""]
    return "".join(rng.choice(pieces) for _ in range(rng.randint(0, 25)))


def test_c8_fix_punct():
    with criterion(8, "punctuation fix idempotent, worked example reproduced") as notes:
        rng = random.Random(8)
        for _ in range(10_000):
            x = _quote_heavy_line(rng) if rng.random() < 0.7 else "".join(
                chr(rng.randint(32, 0x2FF)) for _ in range(rng.randint(0, 30))
            )
            for apostrophes in (True, False):
                once = fix_french_punctuation(x, apostrophes)
                assert fix_french_punctuation(once, apostrophes) == once, repr(x)

        src = 'L\'equipe a dit "bonjour"'
        # the worked output keeps the straight apostrophe: quote conversion only
        assert fix_french_punctuation(src, apostrophes=False) == "L'equipe a dit « bonjour »"
        # the default also applies the intra-word apostrophe rule
        assert fix_french_punctuation(src) == "L’equipe a dit « bonjour »"
        assert fix_french_punctuation("") == ""
        notes.append("example matched in quote-only mode")


# ---------------------------------------------------------------------------
# 9. pipeline counts


def test_c9_pipeline_counts(tmp_path):
    with criterion(9, "merge 36+19 -> 55 pairs; build-set byte-identical under fixed seed"):
        ab = Corpus.from_texts([(f"en {i}", f"fr {i}") for i in range(36)], "en", "fr", MTNT)
        ba = Corpus.from_texts([(f"fr x{i}", f"en x{i}") for i in range(19)], "fr", "en", MTNT)
        assert len(merge_directions(ab, ba)) == 55

        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        write_lines((f"a {i}\tA {i}" for i in range(40)), a)
        write_lines((f"b {i}\tB {i}" for i in range(15)), b)
        env = dict(os.environ, SOURCE_DATE_EPOCH="1700000000")
        results = []
        for run in range(2):
            out, man = tmp_path / f"out{run}.tsv", tmp_path / f"man{run}.json"
            proc = subprocess.run(
                [sys.executable, "-m", "noisy_forge", "build-set",
                 "--component", f"{a}:mtnt:2", "--component", f"{b}:clean:1",
                 "--default-tags", "--seed", "13", "--manifest", str(man), "-o", str(out)],
                env=env, capture_output=True,
            )
            assert proc.returncode == 0, proc.stderr
            results.append((out.read_bytes(), man.read_bytes()))
        assert results[0] == results[1]
        assert len(results[0][0].splitlines()) == 95
        assert json.loads(results[0][1])["total_pairs"] == 95


# ---------------------------------------------------------------------------
# 10. stretch: real MTNT data


def _load_mtnt(path, src, tgt):
    # released files are id<TAB>source<TAB>target
    texts = [tuple(line.split("\t")[-2:]) for line in read_lines(path)]
    return Corpus.from_texts(texts, src, tgt, MTNT)


def _tokenize_sources(corpus):
    texts = [(" ".join(tokenize(s, corpus.src_lang)), t) for s, t in corpus.texts()]
    return Corpus.from_texts(texts, corpus.src_lang, corpus.tgt_lang, MTNT)


def test_c10_mtnt_stretch():
    root = os.environ.get("MTNT_DIR")
    with criterion(10, "MTNT fuzzy-augment counts within 10% of 7290 / 7154 (stretch)") as notes:
        if not root:
            pytest.skip("set MTNT_DIR to the MTNT release to run")
        en_fr = _load_mtnt(os.path.join(root, "train", "train.en-fr.tsv"), "en", "fr")
        fr_en = _load_mtnt(os.path.join(root, "train", "train.fr-en.tsv"), "fr", "en")
        cfg = FuzzyConfig(lambda_dist=Fraction(1, 2), k=10, workers=os.cpu_count() or 1)
        n_en_fr = len(augment_parallel(_tokenize_sources(merge_directions(en_fr, fr_en)), cfg)[0])
        n_fr_en = len(augment_parallel(_tokenize_sources(merge_directions(fr_en, en_fr)), cfg)[0])
        notes.append(f"en-fr {n_en_fr}, fr-en {n_fr_en}")
        assert math.isclose(n_en_fr, 7290, rel_tol=0.10)
        assert math.isclose(n_fr_en, 7154, rel_tol=0.10)

import pytest

from noisy_forge.corpus_io import Corpus

# criterion number -> (description, passed, detail); filled by test_acceptance
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        desc, status, detail = ACCEPTANCE_RESULTS[n]
        line = f"[{status}] criterion {n}: {desc}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)


@pytest.fixture
def make_corpus():
    def make(texts, src="en", tgt="fr", **kw):
        return Corpus.from_texts(texts, src, tgt, **kw)

    return make

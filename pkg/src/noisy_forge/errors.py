"""Exception hierarchy.

``DataError`` subclasses signal bad input content (the CLI maps them to exit
code 2); plain ``OSError`` is left for I/O failures (exit code 3).
"""


class DataError(Exception):
    """Input data violates a format or consistency requirement."""


class LineCountMismatch(DataError):
    def __init__(self, n_src: int, n_tgt: int):
        super().__init__(f"line count mismatch: {n_src} vs {n_tgt}")
        self.n_src = n_src
        self.n_tgt = n_tgt


class InvalidUtf8(DataError):
    def __init__(self, line_no: int, path=None):
        where = f"{path}:" if path is not None else "line "
        super().__init__(f"invalid UTF-8 at {where}{line_no}")
        self.line_no = line_no
        self.path = path


class BadRecord(DataError):
    def __init__(self, line_no: int, reason: str = "expected exactly one TAB"):
        super().__init__(f"bad record at line {line_no}: {reason}")
        self.line_no = line_no


class LangMismatch(DataError):
    pass


class UnknownOrigin(DataError):
    def __init__(self, origin):
        super().__init__(f"no tag configured for origin {origin!s}")
        self.origin = origin


class LengthMismatch(DataError):
    def __init__(self, n_ref: int, n_hyp: int):
        super().__init__(f"{n_ref} references vs {n_hyp} hypotheses")
        self.n_ref = n_ref
        self.n_hyp = n_hyp


class EmptyReference(DataError):
    """Reference has no tokens, so WER is undefined."""


class EmptyCorpus(DataError):
    """Hypotheses contain no tokens."""


class IndexNotFrozen(RuntimeError):
    """A similarity index was queried before ``freeze()``."""


class DanglingContinuation(UserWarning):
    """A BPE-segmented line ends with a token carrying the ``@@`` marker."""

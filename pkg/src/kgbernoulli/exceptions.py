class KgBernoulliError(Exception):
    """Base class for errors raised by this package."""


class DataError(KgBernoulliError, ValueError):
    """Malformed or inconsistent data (CSV cells, shapes, ranges)."""


class KbParseError(KgBernoulliError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class InconsistencyError(KgBernoulliError):
    """Both F(a) and not-F(a) are derivable."""

    def __init__(self, individual: str, concept: str):
        self.individual = individual
        self.concept = concept
        super().__init__(f"inconsistent knowledge base: both {concept}({individual}) and not {concept}({individual}) are derivable")


class FitError(KgBernoulliError, ValueError):
    pass


class ExtractionError(KgBernoulliError, ValueError):
    pass


class ProblemGenerationError(KgBernoulliError, RuntimeError):
    pass

class ThaiSeqError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(ThaiSeqError, ValueError):
    pass


class FitError(ThaiSeqError, ValueError):
    pass


class ShapeError(ThaiSeqError, ValueError):
    pass


class SchemeError(ThaiSeqError, ValueError):
    """Malformed chunk tag or unparseable tagging scheme."""


class AlignmentError(ThaiSeqError, ValueError):
    pass


class ReportError(ThaiSeqError, ValueError):
    pass


class FormatError(ThaiSeqError, ValueError):
    """Input file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(where + message)
        self.path = path
        self.line = line

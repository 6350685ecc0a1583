"""Exception hierarchy shared by the pipeline stages."""


class LvcError(Exception):
    """Base class for all errors raised by turklvc."""


class ConfigError(LvcError):
    """Invalid or inconsistent experiment configuration."""


class DataError(LvcError):
    """Input data that violates a format or consistency contract."""


class ConlluError(DataError):
    """Malformed CoNLL-U input."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ReviewError(DataError):
    """Review decisions that do not match the exported candidates."""


class NumericalError(LvcError):
    """Non-finite values or divergence during optimization."""

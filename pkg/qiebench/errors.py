"""
Exception types raised across qiebench.

Each error also derives from the builtin that callers would naturally catch,
so ``except ValueError`` keeps working at the entry point.
"""


class QieBenchError(Exception):
    """Base class for all qiebench errors."""


class ConfigError(QieBenchError, ValueError):
    """Invalid run configuration or environment value."""


class InputValidationError(QieBenchError, ValueError):
    """An argument violates an operation's preconditions."""


class DatasetNotFoundError(QieBenchError, FileNotFoundError):
    """A dataset file does not exist."""


class CsvParseError(QieBenchError, ValueError):
    """A CSV cell could not be parsed as a finite number."""

    def __init__(self, path: str, row: int, column: str, value: str):
        self.path = path
        self.row = row
        self.column = column
        self.value = value
        super().__init__(f"{path}: row {row}, column {column!r}: cannot parse {value!r} as a finite number")


class UnknownLabelError(QieBenchError, ValueError):
    """A label value is not part of the configured class mapping."""

    def __init__(self, path: str, row: int, value: str):
        self.path = path
        self.row = row
        self.value = value
        super().__init__(f"{path}: row {row}: unknown label value {value!r}")


class StratificationError(QieBenchError, ValueError):
    """A class has too few samples to appear on both sides of a split."""


class NotFittedError(QieBenchError, RuntimeError):
    """transform() was called before fit()."""


class InfeasibleError(QieBenchError, ValueError):
    """A feature map would exceed its configured feature budget."""


class PairingError(QieBenchError, ValueError):
    """Seed-matched pairing failed because a score is missing."""


class ReportWriteError(QieBenchError, OSError):
    """Writing a report file failed."""

    def __init__(self, path: str, reason: str):
        self.path = path
        super().__init__(f"Failed to write {path}: {reason}")

"""Exception hierarchy shared across the package."""


class SubwordNERError(Exception):
    """Base class for all package errors."""


class DomainError(SubwordNERError, ValueError):
    """An argument lies outside the domain of an operation."""


class ShapeError(SubwordNERError, ValueError):
    """Tensor or sequence dimensions do not line up."""


class NonFiniteError(SubwordNERError, FloatingPointError):
    """A NaN or infinity appeared where finite values are required."""


class NondeterministicLossError(SubwordNERError):
    """Two evaluations of a loss at identical parameters disagreed."""


class TrainingDivergedError(NonFiniteError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch
        self.loss = loss


class DataFormatError(SubwordNERError, ValueError):
    """Malformed input file. Carries the offending path and line when known."""

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


class CorpusFormatError(DataFormatError):
    pass


class LexiconError(DataFormatError):
    pass


class ConfigError(DataFormatError):
    pass


class ModelFormatError(DataFormatError):
    pass


class TruncatedModelError(ModelFormatError):
    pass


class UnknownVersionError(ModelFormatError):
    pass


class ShapeMismatchError(ModelFormatError):
    pass

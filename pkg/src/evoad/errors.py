"""Exception types shared across the package."""


class EvoadError(Exception):
    """Base class for all evoad errors."""


class DataError(EvoadError):
    """Raised for unusable input data (non-finite values, empty files, bad labels)."""


class ParseError(DataError):
    """Raised for malformed CSV content; carries the offending line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class TrainingError(EvoadError):
    """Raised when training diverges; carries the last finite loss observed."""

    def __init__(self, message: str, last_loss: float | None = None):
        super().__init__(message)
        self.last_loss = last_loss


class EvolutionError(EvoadError):
    """Raised when an evolution hook fails; identifies generation and individual."""

    def __init__(self, message: str, generation: int, index: int):
        super().__init__(f"generation {generation}, individual {index}: {message}")
        self.generation = generation
        self.index = index


class PipelineError(EvoadError):
    """Raised when a pipeline level aborts; names the level that failed."""

    def __init__(self, level: str, message: str):
        super().__init__(f"level '{level}': {message}")
        self.level = level

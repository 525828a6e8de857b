"""Exception types shared across the package."""


class TrojanLabError(Exception):
    """Base class for all trojanlab errors."""


class ShapeMismatchError(TrojanLabError):
    """An array did not have the shape an operation requires."""


class CheckpointFormatError(TrojanLabError):
    """A model checkpoint file is corrupt or has an unsupported version."""


class DatasetFormatError(TrojanLabError):
    """A dataset file is corrupt or has an unsupported version."""


class MaskFormatError(TrojanLabError):
    """A mask file is corrupt or has an unsupported version."""


class ConfigError(TrojanLabError):
    """A run configuration could not be parsed or validated."""


class TrainingDivergedError(TrojanLabError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, step: int):
        self.epoch = epoch
        self.step = step
        super().__init__(f"non-finite loss at epoch {epoch}, step {step}")


class MaskOptimizationError(TrojanLabError):
    """Mask reverse engineering produced non-finite values."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"mask optimizer diverged at step {step}")


class MitigationAborted(TrojanLabError):
    """Mitigation stopped early; carries the partial report."""

    def __init__(self, report, cause: Exception):
        self.report = report
        self.cause = cause
        super().__init__(f"mitigation aborted: {cause}")

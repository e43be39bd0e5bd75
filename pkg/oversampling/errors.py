"""Module for the exception hierarchy and the exit codes the CLI maps them to"""

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_ALGORITHM = 3
EXIT_IO = 4


class OversamplingError(Exception):
    """Base class for every error raised by the package"""
    exit_code = EXIT_ALGORITHM


class ValidationError(OversamplingError):
    exit_code = EXIT_VALIDATION


class DatasetError(ValidationError):
    """Bad input file, bad labels or a dataset that breaks an invariant"""


class ConfigError(ValidationError):
    """Run configuration that fails validation"""


class DimensionError(ValidationError, ValueError):
    """Feature vectors or matrices whose widths disagree"""


class AlgorithmError(OversamplingError):
    exit_code = EXIT_ALGORITHM


class ResampleError(AlgorithmError):
    """An oversampler could not run on the given training data"""


class NoPairsError(ResampleError):
    """No native counterfactual pair exists under the tolerance"""
    code = "E_NO_PAIRS"

    def __init__(self, message, diagnostics=None):
        super().__init__(f"{self.code}: {message}")
        self.diagnostics = dict(diagnostics or {})


class TrainingError(AlgorithmError):
    """A classifier could not be trained or evaluated"""


class ArtifactError(OversamplingError):
    exit_code = EXIT_IO


class DownloadError(ArtifactError):
    """A public dataset could not be downloaded"""

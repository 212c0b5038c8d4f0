"""Exception types shared across the package.

Everything raised on purpose derives from TrajembedError so callers (and the
CLI) can distinguish domain failures (exit 1) from usage errors (exit 2) and
genuine bugs. Plain OSError is left alone for file-system problems.
"""


class TrajembedError(Exception):
    """Base class for all domain errors raised by this package."""


class ParseError(TrajembedError):
    """A dataset record could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(TrajembedError):
    """A record references an id that does not resolve."""


class InvariantError(TrajembedError):
    """A record violates a structural invariant (e.g. non-unit quaternion)."""


class EmptyPartError(TrajembedError):
    """A part has no points inside the featurization volume."""


class DegenerateFrameError(TrajembedError):
    """A part frame's axes are not orthonormal."""


class EmptyTrajectoryError(TrajembedError):
    """A trajectory with zero waypoints was passed where one is required."""


class DimensionMismatchError(TrajembedError):
    """Vector/matrix shapes do not chain through a network stack."""


class NonFiniteGradientError(TrajembedError):
    """A gradient contained NaN or infinity."""


class EmptySimilarSetError(TrajembedError):
    """The similar-trajectory set came out empty (should be impossible)."""


class EmptyCandidatesError(TrajembedError):
    """Mining was attempted over an empty candidate set."""


class EmptyLibraryError(TrajembedError):
    """A trajectory index or exhaustive search was given no trajectories."""


class FingerprintMismatchError(TrajembedError):
    """A trajectory index was built from a different model checkpoint."""


class EmptySceneError(TrajembedError):
    """Segmentation was asked to run on a scene without points."""


class EmptyTrainingPoolError(TrajembedError):
    """Segment ranking requires at least one training example."""


class TooFewTasksError(TrajembedError):
    """Cross-validation needs at least as many tasks as folds."""


class CheckpointError(TrajembedError):
    """A model checkpoint file is malformed or has the wrong version."""


class ConfigError(TrajembedError):
    """A run configuration contains an unknown key or a bad value."""

"""Exception types shared across the engine."""


class TutorialKitError(Exception):
    """Base class for all engine errors."""


# transcript parsing

class UnparsableTranscript(TutorialKitError):
    """No cue could be parsed from the input."""


class InvalidTimestamp(TutorialKitError):
    """A timestamp token could not be interpreted."""


# LLM extraction

class PromptTooLong(TutorialKitError):
    """Estimated prompt tokens exceed the provider limit; caller should chunk."""

    def __init__(self, estimated: int, limit: int):
        super().__init__(f"prompt estimated at {estimated} tokens exceeds limit {limit}")
        self.estimated = estimated
        self.limit = limit


class NoStepsParsed(TutorialKitError):
    """The response text contained no recognizable step items."""


class AllStepsDegenerate(TutorialKitError):
    """Every step draft collapsed to zero length during normalization."""


class NoObjectsParsed(TutorialKitError):
    """The response text contained no recognizable object names."""


class ProviderFailure(TutorialKitError):
    """A remote or stub provider could not produce a response."""


# shots / frames

class EmptyImage(TutorialKitError):
    """Image raster has no pixels."""


class NoFramesInInterval(TutorialKitError):
    """No frame sample falls inside the requested step interval."""


# linking

class EmptyAfterNormalization(TutorialKitError):
    """Term normalization left an empty string."""


# dependency graph

class CycleDetected(TutorialKitError):
    """An edge violates the temporal (from < to) ordering."""

    def __init__(self, from_step: int, to_step: int):
        super().__init__(f"edge ({from_step} -> {to_step}) breaks step order")
        self.from_step = from_step
        self.to_step = to_step


# document store

class OverlapRejected(TutorialKitError):
    """An interval edit would make steps overlap."""


class UnknownTarget(TutorialKitError):
    """Edit refers to a step, object, or edge that does not exist."""


class StaleRevision(TutorialKitError):
    """Edit carried a revision that no longer matches the document."""

    def __init__(self, expected: int, actual: int):
        super().__init__(f"edit expected revision {expected}, document is at {actual}")
        self.expected = expected
        self.actual = actual


class SchemaVersionMismatch(TutorialKitError):
    """Serialized document uses an unsupported schema version."""


class CorruptDocument(TutorialKitError):
    """Serialized document bytes could not be decoded."""


# evaluation

class VideoIdMismatch(TutorialKitError):
    """Prediction and ground truth refer to different videos."""


class EmptyInput(TutorialKitError):
    """An aggregate was requested over zero rows."""


# service

class MissingPrerequisiteStage(TutorialKitError):
    """A stage was run before the stages it consumes."""

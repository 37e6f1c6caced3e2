"""Exception hierarchy shared across the engine."""


class HypothesearchError(Exception):
    """Base class for all engine errors."""


class SchemaError(HypothesearchError):
    """Task file is structurally invalid (missing keys, wrong shapes)."""


class ParseError(HypothesearchError):
    """A textual value could not be parsed for its domain."""


class BackendError(HypothesearchError):
    """The generation backend failed after exhausting retries."""


class ReplayMiss(BackendError):
    """A replay backend received a request absent from its transcript."""


class ExtractionError(HypothesearchError):
    """No program code could be extracted from a completion."""


class SandboxSpawnError(HypothesearchError):
    """Host-level failure to start a sandbox process (not a guest failure)."""


class NoCandidates(HypothesearchError):
    """Every candidate for a hypothesis was dropped before evaluation."""


class UnknownTask(HypothesearchError):
    """A selection referenced a task id that was never enqueued."""


class UnknownHypothesis(HypothesearchError):
    """A selection referenced a hypothesis id outside the task's candidates."""


class TimedOut(HypothesearchError):
    """Waiting for a human selection exceeded the allowed time."""


class MissingPriceTable(HypothesearchError):
    """Cost estimation requested without a price entry for the backend."""

"""Error taxonomy shared across the pipeline stages."""


class FrontlabError(Exception):
    """Base class for all structured failures."""


class InvalidSpecError(FrontlabError):
    """Reaction data is malformed (non-finite values, bad shapes, bad config)."""


class EnvelopeError(FrontlabError):
    """The envelope inequalities or envelope shape hypotheses fail."""


class ThresholdError(FrontlabError):
    """The requested rate violates the existence threshold."""


class WindowError(FrontlabError):
    """A spatial window is too small for the requested construction."""


class DomainExhaustedError(FrontlabError):
    """The front reached the edge of the computational domain."""


class NoDecayingSolutionError(FrontlabError):
    """No positive decaying solution of the linearized equation exists."""


class NormalizationError(FrontlabError):
    """Tail normalization of a profile failed (wrong decay rate or bad fit)."""


class ResolutionError(FrontlabError):
    """Numerical resolution is insufficient for the requested tolerance."""


class FrontAbsentError(FrontlabError):
    """A level crossing was requested but the state never attains the level."""


class BlowupError(FrontlabError):
    """The time stepper produced non-finite values."""


class ScenarioRejectedError(FrontlabError):
    """A pipeline stage gate failed; carries the stage and structured data."""

    def __init__(self, stage: str, message: str, data=None, stages=None):
        super().__init__(message)
        self.stage = stage
        self.data = dict(data or {})
        self.stages = list(stages or [])

"""Exception hierarchy, grouped by the CLI exit code each family maps to."""


class OrdguessError(Exception):
    pass


# config / usage (exit 2)
class ConfigError(OrdguessError):
    pass


# input data (exit 3 when I/O-level)
class LengthOverflowError(OrdguessError, ValueError):
    pass


class EmptyCorpusError(OrdguessError, ValueError):
    pass


# model family (exit 4)
class ModelError(OrdguessError):
    pass


class InvalidOrderError(ModelError, ValueError):
    pass


class InvalidCorpusError(ModelError, ValueError):
    pass


class MalformedPrefixError(ModelError, ValueError):
    pass


class ModelVersionError(ModelError):
    pass


class CorruptModelError(ModelError):
    pass


# external-adapter protocol (exit 5)
class AdapterError(ModelError):
    pass


class ProtocolError(AdapterError):
    pass


class AdapterTimeoutError(AdapterError):
    pass


class NormalizationError(AdapterError):
    pass


class DeterminismError(AdapterError):
    pass


# search
class EmptyFrontierError(OrdguessError, IndexError):
    pass


class StateSpaceError(OrdguessError):
    pass


# evaluation
class MetricError(OrdguessError, ValueError):
    pass


class SetMismatchError(OrdguessError):
    """Generated set differs from the oracle set: a completeness failure."""


class TargetUnreachableError(OrdguessError):
    def __init__(self, message, max_cover=None):
        super().__init__(message)
        self.max_cover = max_cover

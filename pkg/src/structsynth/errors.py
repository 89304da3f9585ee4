"""Exception hierarchy shared by all structsynth modules."""


class StructSynthError(Exception):
    """Base class for every error raised by this package."""


# dataset
class DataIOError(StructSynthError, OSError):
    pass


class FormatError(StructSynthError, ValueError):
    pass


class SchemaMismatch(StructSynthError, ValueError):
    pass


class InvalidFraction(StructSynthError, ValueError):
    pass


class NotEnoughRows(StructSynthError, ValueError):
    pass


class UnknownColumn(StructSynthError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# association / evaluation statistics
class TooFewSamples(StructSynthError, ValueError):
    pass


class NotNormalized(StructSynthError, ValueError):
    pass


class EmptyInput(StructSynthError, ValueError):
    pass


class NoLabel(StructSynthError, ValueError):
    pass


class SingleClass(StructSynthError, ValueError):
    pass


class ConstantTarget(StructSynthError, ValueError):
    pass


# graphs
class CyclicResult(StructSynthError):
    pass


class CyclicInput(StructSynthError, ValueError):
    pass


class UnknownNode(StructSynthError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


# LLM gateway
class BackendError(StructSynthError):
    """Anything that went wrong talking to a completion backend."""


class TransportError(BackendError):
    pass


class RateLimited(BackendError):
    pass


class Truncated(BackendError):
    pass


class ScriptExhausted(BackendError):
    pass


class Unparseable(StructSynthError, ValueError):
    pass


class WrongColumns(Unparseable):
    pass


class DegenerateCycle(StructSynthError, ValueError):
    pass


# discovery / synthesis
class EmptySourceSet(StructSynthError):
    pass


class ResolutionExhausted(StructSynthError):
    pass


class GenerationStalled(StructSynthError):
    def __init__(self, message, stats=None):
        super().__init__(message)
        self.stats = stats or {}


class MissingAttribute(StructSynthError, ValueError):
    pass


class OverlappingAttribute(StructSynthError, ValueError):
    pass


class ConfigError(StructSynthError, ValueError):
    pass

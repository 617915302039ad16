"""Exception types shared across the laboratory modules."""


class CalabError(ValueError):
    """Base class for all laboratory errors."""


class DimensionMismatchError(CalabError):
    """Vector data does not match the dimension of its space."""


class NonFiniteEntryError(CalabError):
    """Input contains NaN or infinite entries."""


class GuardExceededError(CalabError):
    """A desk-scale resource guard (dimension, horizon, word count) was exceeded."""


class EmptyFamilyError(CalabError):
    """An operation that needs at least one vector received none."""


class HypothesisNotMetError(CalabError):
    """A bound's hypothesis fails (for rank lower bounds: delta >= certified lower constant)."""


class NotAnIsomorphismError(CalabError):
    """The family is certified degenerate: its lower basis constant is zero."""


class EmptySystemError(CalabError):
    """The transition matrix is nilpotent; the subshift contains no points."""


class MalformedSpecError(CalabError):
    """A permutation presentation does not assemble into a bijection."""


class InsufficientWindowError(CalabError):
    """The coordinate window is too small for the requested probe construction."""


class UnsupportedStructureError(CalabError):
    """No exact certified bound is available for this family's structure."""


class ConfigError(CalabError):
    """An experiment configuration violates the documented schema."""

"""Exception types shared across the package."""


class ChartrecError(Exception):
    """Base class for all package errors."""


class ParseError(ChartrecError):
    """A sequence string (or table file) could not be tokenized."""


class UnknownField(ChartrecError):
    """A field reference points outside the table."""


class IllegalState(ChartrecError):
    """A token sequence is not a legal prefix of any chart template."""


class IllegalAction(ChartrecError):
    """An action is not legal in the given state."""


class LimitExceeded(ChartrecError):
    """Enumeration grew past its configured cap."""


class TooManyFields(ChartrecError):
    """Table exceeds the maximum encoder input length."""


class DimensionMismatch(ChartrecError):
    """Tensor shapes are incompatible with the model configuration."""


class KeyMismatch(ChartrecError):
    """Score and label vectors do not cover the same action set."""


class EmptyCorpus(ChartrecError):
    """An operation needs at least one field / entry in the corpus."""


class EmptySplit(ChartrecError):
    """A corpus split required for training is empty."""


class TooFewSchemas(ChartrecError):
    """Not enough distinct schemas to split the corpus."""


class MissingType(ChartrecError):
    """The corpus lacks charts of a requested type."""


class NoLegalSeed(ChartrecError):
    """Search constraints exclude every chart type."""


class UnsatisfiableConstraints(ChartrecError):
    """No complete chart can satisfy the user constraints."""

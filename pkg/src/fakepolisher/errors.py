"""Exception hierarchy shared by every module."""


class FakePolisherError(Exception):
    """Base class for all library errors."""


class DimensionError(FakePolisherError, ValueError):
    """Array shapes disagree with each other or with a geometry."""


class ParameterError(FakePolisherError, ValueError):
    """An argument is outside its admissible range."""


class RankError(FakePolisherError, ValueError):
    """Training data does not have enough rank for the requested dictionary."""


class FormatError(FakePolisherError, ValueError):
    """A dictionary file is truncated, corrupt, or of an unknown version."""

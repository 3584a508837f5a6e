class PollibotError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(PollibotError):
    pass


class OutOfRow(PollibotError):
    pass


class ScenarioError(PollibotError, ValueError):
    pass

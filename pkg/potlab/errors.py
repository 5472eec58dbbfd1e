"""Exceptions raised by potlab operations."""

from typing import Any, Dict, Optional


class PotlabError(Exception):
    """Base class for every domain error."""


class InputError(PotlabError):
    """Malformed scenario, weight specification or set description."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message if field is None else f"{field}: {message}")
        self.field = field


class NonIntegrable(PotlabError):
    """A weight (or its dual density) is not integrable on a bounded interval."""

    def __init__(self, interval, near: Optional[float] = None, partial: Optional[float] = None):
        where = f" near x={near:g}" if near is not None else ""
        super().__init__(f"integral over {interval} diverges{where}")
        self.interval = interval
        self.near = near
        self.partial = partial


class DegenerateInterval(PotlabError):
    """Two interpolation points with zero nu-distance between them."""


class Disconnected(PotlabError):
    """A component I of Omega has I minus E disconnected; no extension exists."""

    def __init__(self, component, witness=None):
        super().__init__(f"component {component} is separated by E")
        self.component = component
        self.witness = witness


class NotRemovable(PotlabError):
    """An operation that needs a removable configuration got a non-removable one."""

    def __init__(self, message: str, verdict=None):
        super().__init__(message)
        self.verdict = verdict


class LimitMissing(PotlabError):
    """A one-sided limit could not be established numerically."""


class ConditionFailed(PotlabError):
    """A constant update was requested outside its range of validity."""


class NoConvergence(PotlabError):
    """The energy minimizer hit its iteration cap."""

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class BallTooLarge(PotlabError):
    """The enlarged ball 6B does not fit inside Omega."""

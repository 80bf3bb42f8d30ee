"""Exception types shared across the package."""


class VasculinkError(Exception):
    """Base class for every error this package raises deliberately."""


class SchemaError(VasculinkError):
    """A network document is structurally malformed (missing or mistyped fields)."""


class ModelError(VasculinkError):
    """A structurally valid input violates a model invariant."""

"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument is outside the operation's mathematical domain."""


class ConfigError(ValueError):
    """A configuration or construction parameter is unusable."""


class PreconditionError(RuntimeError):
    """A checker's stated precondition could not be certified; the check
    is refused rather than run degraded."""


class FalsificationError(RuntimeError):
    """A certified lower estimate exceeded a certified upper bound that the
    underlying inequality guarantees; the premises were certified, so this
    is a genuine falsification (or an implementation bug)."""

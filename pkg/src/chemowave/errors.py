"""Exception types shared across the package."""


class ChemowaveError(Exception):
    pass


class DomainError(ChemowaveError, ValueError):
    """An argument lies outside the domain where a formula is defined."""


class HypothesisError(ChemowaveError, ValueError):
    """A standing parameter condition (positivity of a denominator, feasibility) fails."""


class NonConvergenceError(ChemowaveError, RuntimeError):
    """An iteration hit its cap or a tolerance could not be reached."""


class BlowupError(ChemowaveError, RuntimeError):
    pass


class SandwichError(ChemowaveError, ValueError):
    """A field leaves the region between the lower and upper envelopes."""


class GridMismatchError(ChemowaveError, ValueError):
    pass


class ConfigError(ChemowaveError, ValueError):
    """A configuration file or flag is malformed, incomplete or names an unknown key."""

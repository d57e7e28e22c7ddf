"""Exception hierarchy shared across the package.

Every domain error derives from PrednamerError so the CLI can map the whole
family to exit code 1. Modules define their specific exceptions next to the
code that raises them; only the base class lives here.
"""


class PrednamerError(Exception):
    """Base class for all domain errors raised by this package."""

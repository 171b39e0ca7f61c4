"""Exception hierarchy shared by all modules."""


class BeaconPursuitError(Exception):
    """Base class for every error raised by this package."""


class DegenerateGeometry(BeaconPursuitError, ValueError):
    """Two agents, or an agent and the beacon, are closer than the geometric tolerance."""


class AssumptionViolation(BeaconPursuitError, ValueError):
    """Parameters are not in the symmetric (equal speed, gain and beacon offset) class."""


class InconsistentShape(BeaconPursuitError, ValueError):
    """A shape state does not satisfy the closure/consistency constraints."""


class DegenerateFamily(BeaconPursuitError, ValueError):
    """The parameters admit a continuum of circling equilibria."""


class NoSuchEquilibrium(BeaconPursuitError, ValueError):
    """The requested equilibrium does not exist for the given parameters."""


class IllConditioned(BeaconPursuitError, ArithmeticError):
    """An eigen-decomposition failed its backward-error check."""


class ConfigError(BeaconPursuitError, ValueError):
    """Bad scenario configuration. ``pointer`` is a JSON pointer to the offending field."""

    def __init__(self, message: str, pointer: str = ""):
        self.pointer = pointer
        super().__init__(f"{pointer or '/'}: {message}")

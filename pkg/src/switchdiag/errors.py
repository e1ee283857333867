"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid user-supplied input: model, configuration, scenario or CLI argument."""


class InternalConsistencyError(RuntimeError):
    """An internal invariant failed; indicates a bug, not a valid analysis outcome."""


class OracleBoundError(InputError):
    """Model exceeds the configured size bound of the exhaustive test oracle."""


class ResidualModeError(InputError):
    """A residual was requested in an operating mode where it is not valid."""


class NonStationaryError(InputError):
    """Trace tail varies too much for a steady-state estimate."""


class SimulationDivergedError(InputError):
    """Integration produced a non-finite state."""

"""Exception types shared across the package."""


class LandauLabError(Exception):
    """Base class for all errors raised by landaulab."""


class DimensionError(LandauLabError, ValueError):
    """Unsupported space dimension or mismatched multi-index length."""


class IndexRangeError(LandauLabError, ValueError):
    """Invalid order range or partial-order violation (beta not <= mu)."""


class OrderError(LandauLabError, ValueError):
    """Derivative order too large for the grid resolution."""


class ConfigError(LandauLabError, ValueError):
    """Invalid configuration value; ``key`` holds the dotted key path."""

    def __init__(self, message: str, key: str | None = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class DataIntegrityError(LandauLabError, ValueError):
    """A field violates a structural invariant (symmetry, finiteness)."""


class FitDegenerateError(LandauLabError, ValueError):
    """Not enough usable data to fit a decay model."""


class BlowUpError(LandauLabError, RuntimeError):
    """NaN/Inf appeared during time stepping.

    ``t`` is the time of the last finite state and ``snapshot`` a dict of
    diagnostics taken from it.
    """

    def __init__(self, t: float, snapshot: dict):
        self.t = t
        self.snapshot = snapshot
        super().__init__(f"non-finite density after step from t={t:.6g}")


class CatalogError(LandauLabError, KeyError):
    """Unknown scenario name or scenario parameter."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class SnapshotError(LandauLabError, ValueError):
    """Snapshot file with a bad header, version or payload length."""

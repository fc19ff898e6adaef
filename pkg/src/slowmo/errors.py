class SlowmoError(Exception):
    """Base class for errors raised by this package."""

    code = "error"

    def to_dict(self) -> dict:
        return {"error": self.code, "message": str(self)}


class GridError(SlowmoError, ValueError):
    code = "grid"


class BandEdgeError(SlowmoError):
    """Probability reached the edge of the momentum band (aliasing risk)."""

    code = "band_edge"


class HistogramRangeError(SlowmoError, ValueError):
    code = "histogram_range"


class ConvergenceError(SlowmoError):
    code = "convergence"

    def __init__(self, message, **values):
        super().__init__(message)
        self.values = values

    def to_dict(self) -> dict:
        d = super().to_dict()
        d.update({k: v for k, v in self.values.items()})
        return d


class FixedPointError(ConvergenceError):
    code = "fixed_point"


class IntegrationError(SlowmoError):
    code = "integration"


class NoPeaksError(SlowmoError):
    code = "no_peaks"


class EnsembleError(SlowmoError):
    code = "ensemble"

"""Exception types shared across modules."""


class CavityError(ValueError):
    """Base class for invalid inputs to cavity computations."""


class UnstableGeometryError(CavityError):
    """Raised when |g| >= 1, i.e. the resonator has no confined Gaussian mode."""


class IdentifiabilityError(CavityError):
    """A fit parameter is not constrained by the supplied data.

    Attributes
    ----------
    parameter : str
        Name of the parameter that cannot be determined.
    """

    def __init__(self, parameter, message=None):
        self.parameter = parameter
        super().__init__(message or f"parameter {parameter!r} is not identifiable from the data")


class ConvergenceError(RuntimeError):
    """An iterative solver failed to converge.

    Attributes
    ----------
    best : object
        Best iterate found before giving up (whatever the solver returns on
        success, or a raw parameter vector).
    diagnostics : dict
        Free-form solver information.
    """

    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = dict(diagnostics or {})

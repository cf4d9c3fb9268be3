"""Exception and warning types raised across the package."""


class ItescatterError(Exception):
    """Base class for package errors."""


class SingularModalSystem(ItescatterError):
    """A modal 2x2 system (or transfer matrix) is numerically singular."""

    def __init__(self, m: int, k: float, detail: str = ""):
        self.m = m
        self.k = k
        msg = f"singular modal system at mode m={m}, k={k!r}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class NotAnEigenvalue(ItescatterError):
    """The supplied wavenumber is not a refined transmission eigenvalue."""


class ResonantWavenumber(ItescatterError):
    """``k**2`` coincides with a retained Dirichlet eigenvalue."""


class NonConvergence(ItescatterError):
    """No optimizer start reduced the misfit."""


class DegenerateData(ItescatterError):
    """Far-field data are below the noise floor."""


class HypothesisViolation(UserWarning):
    """Input lies outside the regime covered by a uniqueness guarantee."""


class IllConditioned(UserWarning):
    """The final Jacobian of an inversion is nearly rank deficient."""

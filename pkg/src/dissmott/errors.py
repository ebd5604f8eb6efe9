"""Exception and warning types shared across the package."""


class DissmottError(Exception):
    """Base class for all package errors."""


class ConfigError(DissmottError):
    """Invalid or unknown entries in a run configuration."""


class SingularPoint(DissmottError):
    """Evaluation requested exactly at a branch point of the reservoir response."""


class DegenerateSteadyState(DissmottError):
    """More than one Liouvillian eigenvalue below the null threshold."""


class IllConditioned(DissmottError):
    """Left/right eigenvector pairing failed the biorthonormality residual."""


class InvalidFilling(DissmottError):
    """Effective chemical potential does not select an integer filling."""


class NoRoot(DissmottError):
    """No sign change of Im G in the search window: no instability here."""


class WrongSign(DissmottError):
    """Re G >= 0 at the requested frequency: no physical transition."""


class NoConvergence(DissmottError):
    """Fixed-point iteration exceeded the iteration budget."""


class StepFailure(DissmottError):
    """Adaptive ODE controller underflowed the minimum step size."""


class FitFailure(DissmottError):
    """Peak fit residual exceeded the acceptable fraction of the peak height."""


class TruncationWarning(UserWarning):
    """Pump rate is nonzero at the truncation edge (or a phase-space grid
    reaches displacements the truncated Fock space cannot represent)."""


class PositivityLoss(UserWarning):
    """Density matrix developed eigenvalues below the positivity tolerance."""

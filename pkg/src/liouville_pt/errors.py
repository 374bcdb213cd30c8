"""Exception hierarchy shared by all modules."""


class LiouvillePTError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(LiouvillePTError, ValueError):
    pass


class NotHermitianError(LiouvillePTError, ValueError):
    pass


class PinvConvergenceError(LiouvillePTError):
    """SVD did not converge while forming a pseudoinverse."""


class NotPositiveDefinite(LiouvillePTError):
    """Cholesky met a non-positive pivot.

    For amplitude-matrix seeds the remedy is a larger diagonal shift ``c``.
    """


class EigensolverError(LiouvillePTError):
    pass


class DefectiveSpectrum(LiouvillePTError):
    """Eigenvector matrix too ill-conditioned to be treated as diagonalizable."""


class NonUniqueSteadyState(LiouvillePTError):
    pass


class Degenerate(LiouvillePTError):
    """Seed eigenvalue is degenerate; non-degenerate perturbation theory does not apply."""


class SolvabilityViolation(LiouvillePTError):
    """Right-hand side of a recursion step has a component along the left null vector."""


class NormalizationFailure(LiouvillePTError):
    pass


class SingularZ0(LiouvillePTError):
    """The amplitude-matrix linear system is singular; increase the shift ``c``."""


class InternalConsistencyError(LiouvillePTError):
    pass


class TrackingLost(LiouvillePTError):
    pass


class ErrorFloor(LiouvillePTError):
    """Errors are at the numerical noise level, so a convergence slope is meaningless."""


class IterativeSolverError(LiouvillePTError):
    """A Krylov solve did not reach its tolerance."""

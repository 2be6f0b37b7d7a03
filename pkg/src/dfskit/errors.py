"""Exception hierarchy for dfskit."""


class DfsKitError(Exception):
    """Base class for every error raised by dfskit."""


class DimensionError(DfsKitError, ValueError):
    """Operand shapes do not fit together."""


class ConvergenceError(DfsKitError):
    """An iterative routine (eigensolver, power iteration) did not converge."""


class NearSingularError(DfsKitError):
    """A matrix expected to be invertible is singular up to tolerance."""


class InvarianceError(DfsKitError):
    """A subspace is not invariant under a channel.

    Attributes
    ----------
    kraus_index : int
        Index of the Kraus operator with the largest leakage.
    residual : float
        Leakage norm of that operator.
    """

    def __init__(self, kraus_index, residual, threshold):
        self.kraus_index = kraus_index
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"subspace not invariant: Kraus operator {kraus_index} leaks "
            f"{residual:.3e} (threshold {threshold:.3e})"
        )


class NotCPTPError(DfsKitError):
    """Input data does not describe a trace-preserving channel."""


class NotIrreducibleError(DfsKitError):
    """An operation that requires irreducible input received a reducible one."""


class ToleranceInconsistency(DfsKitError):
    """Spectral data contradicts an exact identity; the tolerance is likely breached."""


class RetryExhausted(DfsKitError):
    """All random draws of a generic element failed the genericity check."""


class CapExceededError(DfsKitError):
    """A dense expansion would exceed the configured size cap."""

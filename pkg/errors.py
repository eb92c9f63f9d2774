from constants import EXIT_ACCEPTANCE, EXIT_NUMERICAL, EXIT_USAGE


class LiePruneError(Exception):
    """Base class of every error raised by the library."""

    exit_code = EXIT_USAGE


class DimensionError(LiePruneError, ValueError):
    pass


class UnitarityError(LiePruneError, ValueError):
    pass


class HermiticityError(LiePruneError, ValueError):
    pass


class NormalizationError(LiePruneError, ValueError):
    pass


class NotParameterizedError(LiePruneError, ValueError):
    pass


class SupportError(LiePruneError, ValueError):
    pass


class BranchAmbiguityError(LiePruneError, ArithmeticError):
    """An eigenphase sits on the principal-log branch cut."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, phase, branch_tol):
        self.phase = float(phase)
        self.branch_tol = branch_tol
        super().__init__(
            f"Eigenphase {self.phase:.12f} rad lies within {branch_tol:g} rad of the "
            "branch cut at -pi; the principal logarithm is ambiguous"
        )


class DivergenceError(LiePruneError, ArithmeticError):
    exit_code = EXIT_NUMERICAL

    def __init__(self, step, last_finite_loss):
        self.step = step
        self.last_finite_loss = last_finite_loss
        super().__init__(
            f"Loss became non-finite at step {step} (last finite loss: {last_finite_loss})"
        )


class AcceptanceError(LiePruneError, AssertionError):
    exit_code = EXIT_ACCEPTANCE

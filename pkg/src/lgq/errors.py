"""Exception types shared across the library."""

from __future__ import annotations


class ConvergenceError(RuntimeError):
    """A steady-state solve did not reach the residual threshold in time.

    Carries the last residual Frobenius norm seen by the integrator.
    """

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (last residual {residual:.3e})")
        self.residual = residual


class SingularityError(RuntimeError):
    """A matrix required by a formula is singular or too ill-conditioned.

    ``matrix_name`` identifies the offending matrix, e.g. ``"V_F - V_T"``.
    """

    def __init__(self, matrix_name: str, condition: float):
        super().__init__(
            f"matrix {matrix_name} is singular or ill-conditioned "
            f"(condition number {condition:.3e})"
        )
        self.matrix_name = matrix_name
        self.condition = condition


class NumericError(RuntimeError):
    """A numerical computation produced non-finite intermediate values."""

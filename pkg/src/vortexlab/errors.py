"""Exceptions raised by the solvers."""


class NumericalAbort(RuntimeError):
    """A time integration could not continue."""

    def __init__(self, message: str, step_index: int | None = None):
        super().__init__(message)
        self.step_index = step_index


class CFLViolation(NumericalAbort):
    def __init__(self, max_velocity: float, dt: float, admissible_dt: float, step_index: int | None = None):
        super().__init__(
            f"CFL violation at step {step_index}: max|u| = {max_velocity:.6g}, "
            f"dt = {dt:.6g} exceeds admissible dt = {admissible_dt:.6g}",
            step_index,
        )
        self.max_velocity = max_velocity
        self.dt = dt
        self.admissible_dt = admissible_dt


class NonFiniteState(NumericalAbort):
    def __init__(self, step_index: int):
        super().__init__(f"non-finite state after step {step_index}", step_index)


class StepperMismatch(ValueError):
    """Adjoint requested for a forward stepper with different dt, grid or viscosity."""

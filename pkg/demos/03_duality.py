"""The duality pairing between a viscous run and its backward dual problem."""

import numpy as np

from vortexlab import (
    DualConfig,
    Grid,
    ScalarField,
    SolverConfig,
    StepperSpec,
    VelocitySource,
    dual_backward,
    dual_backward_adjoint,
    duality_terms,
    gronwall_ratio,
    run_forward,
    source_bank,
)

grid = Grid(64, 2 * np.pi)
X, Y = grid.mesh
w0 = ScalarField(grid, np.exp(-((X - np.pi) ** 2 + (Y - np.pi) ** 2) / 0.5) + np.sin(X) * np.cos(2 * Y))
nu, dt, T = 0.01, 0.01, 1.0
traj = run_forward(w0, SolverConfig(nu, dt, T))

vel = VelocitySource.from_trajectory(traj)
stepper = StepperSpec.for_navier_stokes(traj)
for chi in source_bank(grid, T):
    cfg = DualConfig(nu, dt, T, q=3.0, chi=chi)
    for label, phi in (("adjoint", dual_backward_adjoint(cfg, vel, stepper)), ("pde", dual_backward(cfg, vel))):
        terms = duality_terms(traj, phi, chi)
        print(
            f"{chi.name} {label:7s}  int chi w = {terms['pairing']:+.10f}   int phi(0) w0 = {terms['initial']:+.10f}"
            f"   relative residual {abs(terms['residual']) / terms['scale']:.1e}"
            f"   L2 envelope ratio {gronwall_ratio(phi, chi, None, 2.0):.3f}"
        )

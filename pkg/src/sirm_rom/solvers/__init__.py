"""Time integrators and the linear solvers they rely on."""

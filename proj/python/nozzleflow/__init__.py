"""1-D isentropic nozzle flow: exact Riemann solver plus the modified
Godunov scheme, re-exported from the compiled extension."""

from _nozzleflow import (
    char_speeds,
    f_of_k,
    invariants,
    mu_sigma,
    run,
    sample_riemann,
    solve_riemann,
    state_from_invariants,
)

__all__ = [
    "char_speeds",
    "f_of_k",
    "invariants",
    "mu_sigma",
    "run",
    "sample_riemann",
    "solve_riemann",
    "state_from_invariants",
]

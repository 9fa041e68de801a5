from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # optimization gaps below -gap_clamp are reported as inconsistent
    gap_clamp: float = 1e-10
    symmetry: float = 1e-12
    solve_residual: float = 1e-10
    cg_rtol: float = 1e-12
    divergence_energy: float = 1e6


TOLERANCES = Tolerances()

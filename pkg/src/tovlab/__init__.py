"""Relativistic star families and their growing modes.

A numerical laboratory for the stability of spherically symmetric
relativistic stars.  Equilibria are indexed by the central value kappa of
the enthalpy potential; the package traces the mass-radius curve of the
one-parameter family and counts growing modes of the linearized dynamics
two independent ways, so the turning-point structure of the curve can be
checked against direct spectral theory point by point.

Layers, bottom to top:

    eos        equation-of-state models (polytrope, hybrid stiffening,
               tabulated) and their structural validation
    tov        one equilibrium star: the structure integrator in the
               enthalpy-potential variable, metric assembly, accessors
    newtonian  the kappa -> 0 limit system (Lane-Emden), profile
               rescaling, and the convergence-rate check
    spectral   the reduced self-adjoint operator on radial functions:
               P1 forms, Morse index, kernel gap, eigenpairs
    modes      the full linearized quadratic forms on density cells,
               the mass-free velocity generator, direct mode counts
    family     kappa sweeps, derivative estimates, turning points,
               winding index, and the joined turning-point report
    cli        configuration, subcommands, CSV/JSON persistence

The central cross-checks, each computed by construction rather than by
assumption: the Morse index of the reduced operator equals that of the
density form; the predicted count (Morse index minus winding index) equals
the direct count of growing velocity modes; and the kernel of the reduced
operator opens exactly at the critical points of M/R.
"""

from .eos import HybridEos, Polytrope, TabulatedEos, load_table
from .errors import (ConfigError, ConsistencyError, DegenerateCurveError,
                     DomainError, EosModelError, HorizonError,
                     IntegrationError, QuadratureError, TovlabError)
from .family import (ExtremumEvent, FamilyCurve, FamilyPoint, IndexConfig,
                     SweepConfig, TppReport, find_extrema, sweep_family,
                     tpp_report, winding_index)
from .modes import (DensityForm, ModeReport, assemble_L,
                    constrained_morse_index, density_morse_index,
                    induced_potential, unstable_modes)
from .newtonian import (LaneEmdenState, NewtonianLimitReport,
                        newtonian_limit_check, rescale_state,
                        solve_lane_emden)
from .spectral import (FormPair, GapResult, MorseCount, RadialMesh,
                       SpectralReport, assemble_reduced_form, build_mesh,
                       kernel_gap, lowest_eigenpairs, morse_index,
                       null_direction_residual, spectral_report)
from .tov import (SolverConfig, SteadyState, compressibility_weights,
                  solve_steady_state)

__version__ = "0.1.0"

__all__ = [
    "HybridEos", "Polytrope", "TabulatedEos", "load_table",
    "TovlabError", "DomainError", "EosModelError", "QuadratureError",
    "IntegrationError", "HorizonError", "DegenerateCurveError",
    "ConsistencyError", "ConfigError",
    "SolverConfig", "SteadyState", "solve_steady_state",
    "compressibility_weights",
    "LaneEmdenState", "NewtonianLimitReport", "newtonian_limit_check",
    "rescale_state", "solve_lane_emden",
    "RadialMesh", "FormPair", "MorseCount", "GapResult", "SpectralReport",
    "build_mesh", "assemble_reduced_form", "morse_index", "kernel_gap",
    "lowest_eigenpairs", "null_direction_residual", "spectral_report",
    "DensityForm", "ModeReport", "assemble_L", "induced_potential",
    "density_morse_index", "constrained_morse_index", "unstable_modes",
    "FamilyPoint", "FamilyCurve", "ExtremumEvent", "SweepConfig",
    "IndexConfig", "TppReport", "sweep_family", "find_extrema",
    "winding_index", "tpp_report",
]

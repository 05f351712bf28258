"""Steady-state simulator for a driven microresonator coupled to a Lambda atom.

Two counterpropagating whispering-gallery mode pairs couple to the two legs
of a three-level Lambda atom; the resonator is probed through a fiber.  The
package solves for the steady state two ways -- a truncated-Hilbert-space
Liouvillian solve and an adiabatic elimination of the cavity -- and exposes
transmission/reflection fluxes, atomic populations, equal-time second-order
correlations, dressed-state spectra, and a parameter-sweep CLI.
"""

from .params import (
    PhysicalParams,
    ModeCouplings,
    validate,
    critical_kappa_ex,
    mode_couplings,
    preset,
)
from .fockspace import HilbertSpace, build_space
from .th_solver import (
    build_hamiltonian,
    build_liouvillian,
    solve_steady_state,
    no_atom_reference,
)
from .ae_solver import (
    effective_constants,
    build_effective_model,
    solve_atomic_steady_state,
)
from .observables import (
    input_amplitude,
    output_coefficients,
    flux_th,
    flux_ae,
    no_atom_flux,
    g2,
    populations,
)
from .dressed import closed_form_eigenvalues, numeric_dressed

__version__ = "0.1.0"

__all__ = [
    "PhysicalParams",
    "ModeCouplings",
    "validate",
    "critical_kappa_ex",
    "mode_couplings",
    "preset",
    "HilbertSpace",
    "build_space",
    "build_hamiltonian",
    "build_liouvillian",
    "solve_steady_state",
    "no_atom_reference",
    "effective_constants",
    "build_effective_model",
    "solve_atomic_steady_state",
    "input_amplitude",
    "output_coefficients",
    "flux_th",
    "flux_ae",
    "no_atom_flux",
    "g2",
    "populations",
    "closed_form_eigenvalues",
    "numeric_dressed",
    "__version__",
]

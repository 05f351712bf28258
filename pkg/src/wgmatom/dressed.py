"""Dressed states of the drive-free atom-resonator system.

Without external drive the Hamiltonian conserves the total excitation
number (atomic excitation + photons), so it block-diagonalizes into small
sectors.  In the fully symmetric configuration -- phases pi/2 (only the B
modes couple), equal couplings gB, equal h, all detunings zero -- the
single- and double-excitation eigenvalues have closed forms:

    E_e1 = (-h - sqrt(8 gB^2 + h^2)) / 2      (symmetric polariton, lower)
    E_e2 = -h                                  (uncoupled one-photon states)
    E_e3 = (-h + sqrt(8 gB^2 + h^2)) / 2      (symmetric polariton, upper)
    E_e4 = (-3h + sqrt(4 gB^2 + h^2)) / 2     (two-excitation branch, upper)
    E_e5 = (-3h - sqrt(4 gB^2 + h^2)) / 2     (two-excitation branch, lower)

with the ground sector at zero.  A probe is resonant with a dressed
transition when its detuning is minus the eigenenergy shift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import fockspace, params as params_mod, th_solver
from .params import PhysicalParams

__all__ = ["closed_form_eigenvalues", "DressedSpectrum", "numeric_dressed"]


def closed_form_eigenvalues(g_B: float, h: float) -> tuple[float, float, float, float, float]:
    """(E_e1, ..., E_e5) of the degenerate symmetric configuration."""
    r1 = math.sqrt(8.0 * g_B**2 + h**2)
    r2 = math.sqrt(4.0 * g_B**2 + h**2)
    return (
        0.5 * (-h - r1),
        -h,
        0.5 * (-h + r1),
        0.5 * (-3.0 * h + r2),
        0.5 * (-3.0 * h - r2),
    )


@dataclass(frozen=True)
class DressedSpectrum:
    """Eigen decomposition of one excitation sector."""

    sector: int
    eigenvalues: np.ndarray          # real, ascending
    eigenvectors: np.ndarray         # columns match eigenvalues
    basis_labels: tuple[str, ...]    # labels of the sector basis states
    basis_indices: tuple[int, ...]   # flat indices into the full space

    def amplitude(self, which: int, label: str) -> complex:
        """Component of eigenvector ``which`` on basis state ``label``."""
        try:
            row = self.basis_labels.index(label)
        except ValueError:
            raise KeyError(f"{label!r} not in sector basis {self.basis_labels}") from None
        return complex(self.eigenvectors[row, which])


def numeric_dressed(
    params: PhysicalParams,
    sector: int,
    mode_caps=(1, 1, 1, 1),
    zero_detunings: bool = True,
) -> DressedSpectrum:
    """Diagonalize the drive-free Hamiltonian inside one excitation sector.

    The drive is always switched off (it breaks excitation conservation);
    detunings are zeroed too unless ``zero_detunings`` is False, matching the
    canonical closed-form comparison.  Sectors 0, 1 and 2 are supported.
    """
    if sector not in (0, 1, 2):
        raise ValueError(f"sector must be 0, 1, or 2, got {sector}")
    stripped = replace(params, E_1=0.0, E_2=0.0)
    if zero_detunings:
        stripped = replace(
            stripped, Delta_1=0.0, Delta_2=0.0, delta_c_1=0.0, delta_c_2=0.0
        )
    stripped = params_mod.validate(stripped)

    space = fockspace.build_space(mode_caps)
    H = th_solver.build_hamiltonian(space, stripped).toarray()

    atom, occ = space.occupation_arrays()
    excitation = (atom == 2).astype(int) + occ.sum(axis=1)
    idx = np.flatnonzero(excitation == sector)
    block = H[np.ix_(idx, idx)]

    vals, vecs = np.linalg.eigh(block)
    return DressedSpectrum(
        sector=sector,
        eigenvalues=vals,
        eigenvectors=vecs,
        basis_labels=tuple(space.label(k) for k in idx),
        basis_indices=tuple(int(k) for k in idx),
    )

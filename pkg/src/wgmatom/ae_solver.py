"""Adiabatic elimination of the cavity: effective 3-level master equation.

In the bad-cavity regime (g << kappa) the normal modes follow the atom and
drive adiabatically.  Eliminating them leaves an atomic master equation

    d rho/dt = -i [H_atom, rho] + sum_ij (Gamma_ij / 2)
               (2 S_j- rho S_i+ - S_i+ S_j- rho - rho S_i+ S_j-)

    H_atom = sum_ij Delta_ij S_i+ S_j-  -  sum_i Delta_i S_i- S_i+
           + sum_i (Omega_i S_i+ + Omega_i* S_i-)

whose coefficients are built from the complex mode response functions

    f_A1 = i / (kappa_1 - i (delta_1 + h_1)),   f_B1 = i / (kappa_1 - i (delta_1 - h_1))

(and likewise for pair 2), dressed by the inter-pair scattering amplitudes
mu = q + p and nu = p - q (their e^{i eps t} phase is evaluated at t = 0;
validation restricts eps != 0 to p = q = 0 so the model stays stationary):

    lambda_A = f_A1 / (1 - f_A1 f_A2 |mu|^2)      xi_A = f_A2 / (same)
    F_A      = f_A1 f_A2 / (same)                 and A -> B with mu -> nu

    Delta_11 = gA1^2 Re(lambda_A) + gB1^2 Re(lambda_B)
    Delta_22 = gA2^2 Re(xi_A)     + gB2^2 Re(xi_B)
    Delta_12 = Delta_21 = 0
    Omega_1  = lambda_A* gA1 E1/sqrt2 + F_A* mu  gA1 E2/sqrt2
             + i lambda_B* gB1 E1/sqrt2 + i F_B* nu  gB1 E2/sqrt2
    Omega_2  = xi_A*     gA2 E2/sqrt2 + F_A* mu* gA2 E1/sqrt2
             + i xi_B*   gB2 E2/sqrt2 + i F_B* nu* gB2 E1/sqrt2
    Gamma_11 = 2 (gA1^2 Im(lambda_A) + gB1^2 Im(lambda_B)) + gamma_1
    Gamma_22 = 2 (gA2^2 Im(xi_A)     + gB2^2 Im(xi_B))     + gamma_2
    Gamma_12 = 2 (gA1 gA2 mu Im(F_A) + gB1 gB2 nu Im(F_B)),  Gamma_21 = Gamma_12*

For p = q = 0 everything collapses: mu = nu = 0, F = 0, Gamma_12 = 0,
lambda = f_.1 and xi = f_.2, and the decay matrix is diagonal (cavity-
enhanced decay on each leg plus the free-space gamma_i).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import params as params_mod
from .errors import (
    AdiabaticityWarning,
    DegenerateResponse,
    NonHermitianConstruction,
    NonPhysicalResult,
    SingularGenerator,
)
from .params import ModeCouplings, PhysicalParams

__all__ = [
    "EffectiveConstants",
    "effective_constants",
    "EffectiveAtomModel",
    "build_effective_model",
    "AtomicDM",
    "solve_atomic_steady_state",
    "steady_state",
    "dump_constants",
]

ADIABATICITY_RATIO = 0.5  # warn when g0 / kappa exceeds this

HERMITICITY_TOL = 1e-12
DM_TOL = 1e-10


@dataclass(frozen=True)
class EffectiveConstants:
    """Cavity-elimination constants (all in units of gamma)."""

    f_A1: complex
    f_B1: complex
    f_A2: complex
    f_B2: complex
    mu: complex
    nu: complex
    lambda_A: complex
    lambda_B: complex
    xi_A: complex
    xi_B: complex
    F_A: complex
    F_B: complex
    Omega_1: complex
    Omega_2: complex
    Delta_11: float
    Delta_22: float
    Delta_12: float
    Delta_21: float
    Gamma_11: float
    Gamma_22: float
    Gamma_12: complex
    Gamma_21: complex


def effective_constants(
    params: PhysicalParams, couplings: ModeCouplings | None = None
) -> EffectiveConstants:
    """Evaluate every elimination constant for the given parameters."""
    params = params_mod.validate(params)
    if couplings is None:
        couplings = params_mod.mode_couplings(params)

    for i in (1, 2):
        g0 = (params.g0_1, params.g0_2)[i - 1] * params.radial_factor
        if params.kappa(i) > 0 and g0 / params.kappa(i) > ADIABATICITY_RATIO:
            warnings.warn(
                f"g0_{i}/kappa_{i} = {g0 / params.kappa(i):.2f}: bad-cavity condition "
                "g << kappa is questionable; adiabatic elimination may be inaccurate",
                AdiabaticityWarning,
                stacklevel=2,
            )

    f_A1 = 1j / (params.kappa(1) - 1j * (params.delta_c(1) + params.h(1)))
    f_B1 = 1j / (params.kappa(1) - 1j * (params.delta_c(1) - params.h(1)))
    f_A2 = 1j / (params.kappa(2) - 1j * (params.delta_c(2) + params.h(2)))
    f_B2 = 1j / (params.kappa(2) - 1j * (params.delta_c(2) - params.h(2)))

    # mu = (q+p) e^{i eps t}, nu = (p-q) e^{i eps t}, evaluated at t = 0
    mu = complex(params.q + params.p)
    nu = complex(params.p - params.q)

    den_A = 1.0 - f_A1 * f_A2 * (mu * np.conj(mu))
    den_B = 1.0 - f_B1 * f_B2 * (nu * np.conj(nu))
    for name, den in (("A", den_A), ("B", den_B)):
        if abs(den) < 1e-12:
            raise DegenerateResponse(f"{name}-family response denominator vanished")

    lambda_A = f_A1 / den_A
    lambda_B = f_B1 / den_B
    xi_A = f_A2 / den_A
    xi_B = f_B2 / den_B
    # F only ever enters through mu*F / nu*F products, so it carries no
    # cross response once the inter-pair scattering is off
    F_A = f_A1 * f_A2 / den_A if mu != 0 else 0j
    F_B = f_B1 * f_B2 / den_B if nu != 0 else 0j

    gA1, gA2 = couplings.gA_1, couplings.gA_2
    gB1, gB2 = couplings.gB_1, couplings.gB_2
    E1 = complex(params.E_1) / math.sqrt(2)
    E2 = complex(params.E_2) / math.sqrt(2)

    Omega_A1 = np.conj(lambda_A) * gA1 * E1 + np.conj(F_A) * mu * gA1 * E2
    Omega_A2 = np.conj(xi_A) * gA2 * E2 + np.conj(F_A) * np.conj(mu) * gA2 * E1
    Omega_B1 = 1j * np.conj(lambda_B) * gB1 * E1 + 1j * np.conj(F_B) * nu * gB1 * E2
    Omega_B2 = 1j * np.conj(xi_B) * gB2 * E2 + 1j * np.conj(F_B) * np.conj(nu) * gB2 * E1

    Gamma_12 = 2.0 * (gA1 * gA2 * mu * np.imag(F_A) + gB1 * gB2 * nu * np.imag(F_B))

    return EffectiveConstants(
        f_A1=f_A1, f_B1=f_B1, f_A2=f_A2, f_B2=f_B2,
        mu=mu, nu=nu,
        lambda_A=lambda_A, lambda_B=lambda_B,
        xi_A=xi_A, xi_B=xi_B,
        F_A=F_A, F_B=F_B,
        Omega_1=complex(Omega_A1 + Omega_B1),
        Omega_2=complex(Omega_A2 + Omega_B2),
        Delta_11=float(gA1**2 * np.real(lambda_A) + gB1**2 * np.real(lambda_B)),
        Delta_22=float(gA2**2 * np.real(xi_A) + gB2**2 * np.real(xi_B)),
        Delta_12=0.0,
        Delta_21=0.0,
        Gamma_11=float(2.0 * (gA1**2 * np.imag(lambda_A) + gB1**2 * np.imag(lambda_B))
                       + params.gamma_1),
        Gamma_22=float(2.0 * (gA2**2 * np.imag(xi_A) + gB2**2 * np.imag(xi_B))
                       + params.gamma_2),
        Gamma_12=complex(Gamma_12),
        Gamma_21=complex(np.conj(Gamma_12)),
    )


# atomic operators on the 3-level space, |1>, |2>, |3> -> indices 0, 1, 2
def _sigma_minus(i: int) -> np.ndarray:
    out = np.zeros((3, 3), dtype=np.complex128)
    out[i - 1, 2] = 1.0
    return out


@dataclass(frozen=True)
class EffectiveAtomModel:
    """Effective Hamiltonian and decay-matrix dissipator of the bare atom."""

    hamiltonian: np.ndarray      # 3x3, Hermitian
    gamma_matrix: np.ndarray     # 2x2 decay matrix Gamma_ij over channels S_i-
    constants: EffectiveConstants

    def liouvillian(self) -> np.ndarray:
        """9x9 generator, column-stacking convention."""
        eye = np.eye(3, dtype=np.complex128)
        H = self.hamiltonian
        L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
        for i in (1, 2):
            for j in (1, 2):
                rate = self.gamma_matrix[i - 1, j - 1] / 2.0
                if rate == 0:
                    continue
                Si, Sj = _sigma_minus(i), _sigma_minus(j)
                SpSm = Si.conj().T @ Sj  # S_i+ S_j-
                L += rate * (
                    2.0 * np.kron(Si.conj(), Sj)
                    - np.kron(eye, SpSm)
                    - np.kron(SpSm.T, eye)
                )
        return L


def build_effective_model(
    constants: EffectiveConstants, params: PhysicalParams
) -> EffectiveAtomModel:
    """Assemble H_atom and the Gamma matrix; check Hermiticity."""
    params = params_mod.validate(params)
    H = np.zeros((3, 3), dtype=np.complex128)
    deltas = {(1, 1): constants.Delta_11, (2, 2): constants.Delta_22,
              (1, 2): constants.Delta_12, (2, 1): constants.Delta_21}
    for (i, j), shift in deltas.items():
        H += shift * (_sigma_minus(i).conj().T @ _sigma_minus(j))
    H[0, 0] -= params.Delta_1
    H[1, 1] -= params.Delta_2
    for i, Omega in ((1, constants.Omega_1), (2, constants.Omega_2)):
        H += Omega * _sigma_minus(i).conj().T
        H += np.conj(Omega) * _sigma_minus(i)

    if np.abs(H - H.conj().T).max() > HERMITICITY_TOL * max(1.0, np.abs(H).max()):
        raise NonHermitianConstruction("effective Hamiltonian not Hermitian")

    gamma = np.array(
        [[constants.Gamma_11, constants.Gamma_12],
         [constants.Gamma_21, constants.Gamma_22]],
        dtype=np.complex128,
    )
    if np.abs(gamma - gamma.conj().T).max() > HERMITICITY_TOL * max(1.0, np.abs(gamma).max()):
        raise NonHermitianConstruction("decay matrix not Hermitian")
    return EffectiveAtomModel(hamiltonian=H, gamma_matrix=gamma, constants=constants)


@dataclass(frozen=True)
class AtomicDM:
    """3x3 atomic density matrix with solve diagnostics."""

    rho: np.ndarray
    residual: float

    @property
    def populations(self) -> tuple[float, float, float]:
        d = np.real(np.diag(self.rho))
        return float(d[0]), float(d[1]), float(d[2])

    def coherence(self, i: int, j: int) -> complex:
        """<i|rho|j> with 1-based level labels."""
        return complex(self.rho[i - 1, j - 1])

    def expect_sigma_minus(self, i: int) -> complex:
        """<S_i-> = Tr(rho |i><3|) = <3|rho|i>."""
        return complex(self.rho[2, i - 1])


def solve_atomic_steady_state(model: EffectiveAtomModel) -> AtomicDM:
    """Steady state of the effective master equation.

    Vectorizes the 3x3 density matrix, eliminates the last diagonal element
    (excited-state population) through the trace, and solves the remaining
    8x8 system.  An exactly singular generator (dark-state degeneracy) falls
    back to the smallest-singular-value null vector, renormalized.
    """
    L = model.liouvillian()
    e = 8  # vec index of rho[2, 2]
    K = L[:e, e].copy()
    G = L[:e, :e].copy()
    diag_cols = [0, 4]  # vec indices of rho[0,0], rho[1,1]
    for c in diag_cols:
        G[:, c] -= K

    try:
        cond = np.linalg.cond(G)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError(f"condition number {cond:g}")
        x = np.linalg.solve(G, -K)
        residual = float(np.abs(G @ x + K).max())
    except np.linalg.LinAlgError:
        return _nullspace_atomic(L)

    full = np.empty(9, dtype=np.complex128)
    full[:e] = x
    full[e] = 1.0 - full[0] - full[4]
    rho = full.reshape((3, 3), order="F")
    dm = AtomicDM(rho=rho, residual=residual)
    _check_atomic(dm)
    return dm


def _nullspace_atomic(L: np.ndarray) -> AtomicDM:
    # minimum-norm unit-trace element of the (possibly multi-dimensional)
    # kernel; the kernel of a Lindblad generator is closed under adjoint
    _, s, vh = np.linalg.svd(L)
    scale = max(1.0, s[0])
    kernel = vh[s < 1e-10 * scale].conj().T
    if kernel.shape[1] == 0:
        raise SingularGenerator(
            f"no kernel vector found (smallest singular value {s[-1]:g})"
        )
    traces = np.array([np.trace(kernel[:, j].reshape((3, 3), order="F"))
                       for j in range(kernel.shape[1])])
    norm2 = float(np.abs(traces) ** 2 @ np.ones(len(traces)))
    if norm2 < 1e-24:
        raise SingularGenerator("degenerate steady state: kernel is traceless")
    vec = kernel @ (np.conj(traces) / norm2)
    rho = vec.reshape((3, 3), order="F")
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.trace(rho).real
    residual = float(np.abs(L @ rho.reshape(-1, order="F")).max())
    dm = AtomicDM(rho=rho, residual=residual)
    _check_atomic(dm)
    return dm


def _check_atomic(dm: AtomicDM) -> None:
    rho = dm.rho
    if np.abs(rho - rho.conj().T).max() > DM_TOL:
        raise NonPhysicalResult("atomic steady state not Hermitian")
    if abs(np.trace(rho) - 1.0) > DM_TOL:
        raise NonPhysicalResult(f"atomic steady state trace {np.trace(rho):g} != 1")
    if np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min() < -DM_TOL:
        raise NonPhysicalResult("atomic steady state not positive semidefinite")


def steady_state(params: PhysicalParams) -> AtomicDM:
    """Convenience: constants -> model -> steady state in one call."""
    model = build_effective_model(effective_constants(params), params)
    return solve_atomic_steady_state(model)


def dump_constants(constants: EffectiveConstants, path) -> None:
    """Write the constants as labeled JSON-style text (regression snapshots)."""
    import json

    def encode(v):
        if isinstance(v, complex):
            return {"re": v.real, "im": v.imag}
        return v

    payload = {k: encode(v) for k, v in vars(constants).items()}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")

"""Input-output observables: fluxes, populations, second-order correlations.

Normalization convention.  The mean input amplitude of travelling mode a_i
is <a_in,i> = -i E_i / sqrt(2 kappa_ex,i), so |<a_in,i>|^2 =
|E_i|^2 / (2 kappa_ex,i).  All first-order fluxes are normalized to this
value, which makes the far-detuned transmission approach one and the
critically-coupled empty-cavity transmission vanish exactly (identity
2 kappa kappa_ex = kappa^2 + h^2).

Output operators.  a_i,out = -a_i,in + sqrt(2 kappa_ex,i) a_i and the same
for b_i with vacuum input.  The input field is treated at mean-field level:
only the c-number -<a_in> interference term is kept, normally ordered vacuum
fluctuation terms drop.  Over the atomic operator basis {1, S_1-, S_2-} the
steady-state cavity response gives the expansion

    a_i,out = alpha_i0 + alpha_i1 S_1- + alpha_i2 S_2-
    b_i,out = beta_i0  + beta_i1  S_1- + beta_i2  S_2-

used by the adiabatic-elimination backend.  Any normally ordered product of
two such expansions stays in the same basis because S_i- S_j- = 0 and
S_i+ S_j- = delta_ij |3><3|, which is what makes equal-time g2 evaluable on
the 3x3 atomic density matrix alone.  The truncated-Hilbert-space backend is
refused for g2: one photon per mode cannot represent two-photon emission.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import fockspace, params as params_mod, th_solver
from .ae_solver import AtomicDM
from .errors import DegenerateResponse, UnsatisfiableSpec, VanishingDenominator, ZeroKappaEx
from .params import PhysicalParams
from .th_solver import SteadyStateDM

__all__ = [
    "MODE_LABELS",
    "input_amplitude",
    "OutputCoefficients",
    "output_coefficients",
    "flux_th",
    "flux_ae",
    "no_atom_flux",
    "no_atom_flux_budget",
    "G2Result",
    "g2",
    "g2_th",
    "populations",
    "SpectrumPoint",
]

MODE_LABELS = ("a1", "b1", "a2", "b2")


def _parse_mode(mode: str) -> tuple[str, int]:
    mode = mode.lower()
    if mode not in MODE_LABELS:
        raise ValueError(f"unknown output mode {mode!r}; use one of {MODE_LABELS}")
    return mode[0], int(mode[1])


def input_amplitude(params: PhysicalParams, i: int) -> complex:
    """Mean input amplitude <a_in,i> = -i E_i / sqrt(2 kappa_ex,i)."""
    kex = params.kappa_ex(i)
    if kex <= 0:
        raise ZeroKappaEx(f"kappa_ex_{i} must be > 0 to normalize input flux")
    return -1j * complex(params.E(i)) / math.sqrt(2.0 * kex)


def _input_norm(params: PhysicalParams, i: int) -> float:
    n = abs(input_amplitude(params, i)) ** 2
    if n <= 0:
        raise VanishingDenominator(
            f"probe {i} is off (E_{i} = 0): normalized flux undefined"
        )
    return n


@dataclass(frozen=True)
class OutputCoefficients:
    """Expansion of the output operators over {1, S_1-, S_2-}.

    alpha[i-1] are the coefficients of a_i,out, beta[i-1] those of b_i,out.
    """

    alpha: np.ndarray  # shape (2, 3), complex
    beta: np.ndarray   # shape (2, 3), complex

    def coeffs(self, mode: str) -> np.ndarray:
        family, i = _parse_mode(mode)
        return (self.alpha if family == "a" else self.beta)[i - 1]


def output_coefficients(
    params: PhysicalParams, couplings: params_mod.ModeCouplings | None = None
) -> OutputCoefficients:
    """Solve the steady-state mode equations over {1, S_1-, S_2-}.

    For p = q = 0 the families decouple:

        A_i = (-i E_i/sqrt2 - i gA_i S_i-) / (kappa_i + i (delta_i + h_i))
        B_i = (-i E_i/sqrt2 -   gB_i S_i-) / (kappa_i + i (delta_i - h_i))

    otherwise the 2x2 coupled systems for (A1, A2) and (B1, B2) are solved
    with operator-valued right-hand sides.
    """
    params = params_mod.validate(params)
    if couplings is None:
        couplings = params_mod.mode_couplings(params)

    # operator-basis columns: [1, S_1-, S_2-]
    rhs_A = np.zeros((2, 3), dtype=np.complex128)
    rhs_B = np.zeros((2, 3), dtype=np.complex128)
    for i in (1, 2):
        E = complex(params.E(i)) / math.sqrt(2)
        rhs_A[i - 1, 0] = -1j * E
        rhs_B[i - 1, 0] = -1j * E
        rhs_A[i - 1, i] = -1j * couplings.gA(i)
        rhs_B[i - 1, i] = -couplings.gB(i)

    dA = np.array([params.kappa(i) + 1j * (params.delta_c(i) + params.h(i)) for i in (1, 2)])
    dB = np.array([params.kappa(i) + 1j * (params.delta_c(i) - params.h(i)) for i in (1, 2)])

    if params.p == 0 and params.q == 0:
        A = rhs_A / dA[:, None]
        B = rhs_B / dB[:, None]
    else:
        mu = complex(params.q + params.p)
        nu = complex(params.p - params.q)
        MA = np.array([[dA[0], 1j * mu], [1j * np.conj(mu), dA[1]]])
        MB = np.array([[dB[0], 1j * nu], [1j * np.conj(nu), dB[1]]])
        for name, M in (("A", MA), ("B", MB)):
            if abs(np.linalg.det(M)) < 1e-12:
                raise DegenerateResponse(f"coupled {name}-mode response is singular")
        A = np.linalg.solve(MA, rhs_A)
        B = np.linalg.solve(MB, rhs_B)

    alpha = np.zeros((2, 3), dtype=np.complex128)
    beta = np.zeros((2, 3), dtype=np.complex128)
    for i in (1, 2):
        root = math.sqrt(2.0 * params.kappa_ex(i))
        a_coeffs = (A[i - 1] + B[i - 1]) / math.sqrt(2)
        b_coeffs = (A[i - 1] - B[i - 1]) / math.sqrt(2)
        alpha[i - 1] = root * a_coeffs
        beta[i - 1] = root * b_coeffs
        alpha[i - 1, 0] -= input_amplitude(params, i)
    return OutputCoefficients(alpha=alpha, beta=beta)


def _quadratic_form(c: np.ndarray, rho: np.ndarray) -> float:
    """< (c0 + c1 S1- + c2 S2-)^dag (c0 + c1 S1- + c2 S2-) > on a 3x3 rho."""
    s = (rho[2, 0], rho[2, 1])  # <S_i-> = <3|rho|i>
    p3 = rho[2, 2].real
    val = (
        abs(c[0]) ** 2
        + 2.0 * (np.conj(c[0]) * (c[1] * s[0] + c[2] * s[1])).real
        + (abs(c[1]) ** 2 + abs(c[2]) ** 2) * p3
    )
    return float(val)


def flux_ae(atomic_dm: AtomicDM, coeffs: OutputCoefficients, mode: str,
            params: PhysicalParams) -> float:
    """Normalized first-order flux of one output mode, AE backend."""
    _, i = _parse_mode(mode)
    return _quadratic_form(coeffs.coeffs(mode), atomic_dm.rho) / _input_norm(params, i)


def flux_th(state: SteadyStateDM, params: PhysicalParams, mode: str) -> float:
    """Normalized first-order flux of one output mode, TH backend.

    <a_out+ a_out> = |<a_in>|^2 - 2 sqrt(2 kex) Re(<a_in>* <a>) + 2 kex <a+a>
    (coherent input, fluctuations uncorrelated with the cavity); reflection
    uses <b_in> = 0, so only the 2 kex <b+b> term survives.
    """
    params = params_mod.validate(params)
    family, i = _parse_mode(mode)
    space = state.space
    sign = 1.0 if family == "a" else -1.0
    A = fockspace.annihilation(space, f"A{i}")
    B = fockspace.annihilation(space, f"B{i}")
    m = (A + sign * B) / math.sqrt(2)
    kex = params.kappa_ex(i)
    norm = _input_norm(params, i)
    nbar = state.expectation((m.getH() @ m).tocsr()).real
    if family == "b":
        return 2.0 * kex * nbar / norm
    a_in = input_amplitude(params, i)
    amp = state.expectation(m)
    value = (
        norm
        - 2.0 * math.sqrt(2.0 * kex) * (np.conj(a_in) * amp).real
        + 2.0 * kex * nbar
    )
    return float(value / norm)


def no_atom_flux(params: PhysicalParams, mode: str) -> float:
    """Closed-form normalized flux of the empty (atom-free) resonator."""
    params = params_mod.validate(params)
    family, i = _parse_mode(mode)
    amps = th_solver.no_atom_reference(params)
    kex = params.kappa_ex(i)
    norm = _input_norm(params, i)
    a = (amps[f"A{i}"] + amps[f"B{i}"]) / math.sqrt(2)
    b = (amps[f"A{i}"] - amps[f"B{i}"]) / math.sqrt(2)
    if family == "a":
        out = -input_amplitude(params, i) + math.sqrt(2.0 * kex) * a
    else:
        out = math.sqrt(2.0 * kex) * b
    return float(abs(out) ** 2 / norm)


def no_atom_flux_budget(params: PhysicalParams, i: int) -> tuple[float, float, float]:
    """(transmitted, reflected, internal loss) of pair i, empty resonator.

    The three add up to 1 exactly: the internal channel carries
    2 kappa_in (|<A>|^2 + |<B>|^2) normalized like the fluxes.
    """
    params = params_mod.validate(params)
    amps = th_solver.no_atom_reference(params)
    norm = _input_norm(params, i)
    loss = 2.0 * params.kappa_in(i) * (
        abs(amps[f"A{i}"]) ** 2 + abs(amps[f"B{i}"]) ** 2
    ) / norm
    return (
        no_atom_flux(params, f"a{i}"),
        no_atom_flux(params, f"b{i}"),
        float(loss),
    )


@dataclass(frozen=True)
class G2Result:
    """Equal-time second-order correlation with its raw moments.

    ``value`` is +inf (tagged by ``finite = False``) when a normalization
    flux vanishes; the raw moments stay meaningful in that case.
    """

    value: float
    numerator: float
    flux_i: float
    flux_j: float
    finite: bool = True

    def __float__(self) -> float:
        return self.value


def g2(atomic_dm: AtomicDM, coeffs: OutputCoefficients, mode_i: str, mode_j: str,
       params: PhysicalParams | None = None) -> G2Result:
    """g2(m_i, m_j) = <m_i+ m_j+ m_j m_i> / (<m_i+ m_i> <m_j+ m_j>), AE backend.

    The quartic product collapses onto {1, S_1-, S_2-} because S_i- S_j- = 0;
    both numerator and denominators are then quadratic forms on the atomic
    density matrix, so the input normalization cancels and ``params`` is not
    needed.
    """
    ci = coeffs.coeffs(mode_i)
    cj = coeffs.coeffs(mode_j)
    pair = np.array(
        [ci[0] * cj[0], ci[0] * cj[1] + cj[0] * ci[1], ci[0] * cj[2] + cj[0] * ci[2]]
    )
    rho = atomic_dm.rho
    numerator = _quadratic_form(pair, rho)
    mom_i = _quadratic_form(ci, rho)
    mom_j = _quadratic_form(cj, rho)
    if mom_i <= 1e-14 * max(1.0, abs(ci[0]) ** 2) or mom_j <= 1e-14 * max(1.0, abs(cj[0]) ** 2):
        return G2Result(
            value=math.inf, numerator=numerator, flux_i=mom_i, flux_j=mom_j, finite=False
        )
    return G2Result(
        value=numerator / (mom_i * mom_j),
        numerator=numerator,
        flux_i=mom_i,
        flux_j=mom_j,
    )


def g2_th(*args, **kwargs):
    """Second-order correlations are not available from the TH backend:
    single-photon caps cannot represent the two-photon processes that g2
    measures.  Use the AE backend."""
    raise UnsatisfiableSpec(
        "g2 via the truncated-Hilbert-space backend is refused: the one-photon "
        "truncation cannot capture two-photon correlations; use the adiabatic-"
        "elimination backend"
    )


def populations(dm) -> tuple[float, float, float]:
    """(P1, P2, P3) from an atomic or full steady-state density matrix."""
    if isinstance(dm, AtomicDM):
        return dm.populations
    if isinstance(dm, SteadyStateDM):
        return dm.atomic_populations()
    rho = np.asarray(dm)
    if rho.shape == (3, 3):
        d = np.real(np.diag(rho))
        return float(d[0]), float(d[1]), float(d[2])
    raise TypeError(f"cannot extract populations from {type(dm)!r}")


@dataclass
class SpectrumPoint:
    """One grid cell of a sweep: detunings, fluxes, populations, optional g2."""

    Delta_1: float
    Delta_2: float
    F1_a1: float | None = None
    F1_b1: float | None = None
    F1_a2: float | None = None
    F1_b2: float | None = None
    P1: float | None = None
    P2: float | None = None
    P3: float | None = None
    g2_a1a1: float | None = None
    g2_a2a2: float | None = None
    g2_a1a2: float | None = None

    def check(self) -> None:
        for name in ("F1_a1", "F1_b1", "F1_a2", "F1_b2"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} = {v} negative")
        pops = [self.P1, self.P2, self.P3]
        if all(p is not None for p in pops) and abs(sum(pops) - 1.0) > 1e-10:
            raise ValueError(f"populations sum to {sum(pops)!r}, not 1")

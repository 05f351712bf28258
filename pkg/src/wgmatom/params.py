"""Physical parameters of the fiber-driven resonator + Lambda-atom system.

Unit system: the atomic decay rate gamma sets the scale (gamma_1 = gamma_2 =
gamma = 1 by default) and every rate, detuning and drive amplitude is a
dimensionless multiple of gamma.  Phases are in radians.

Conventions
-----------
* Mode pair i in {1, 2} couples the atomic transition |i> <-> |3>.
* kappa_i = kappa_in_i + kappa_ex_i is the total cavity half-width; the
  cavity dissipator carries kappa (not kappa/2).
* Travelling modes a_i, b_i scatter into each other at rate h_i; the normal
  modes A_i = (a_i + b_i)/sqrt(2) and B_i = (a_i - b_i)/sqrt(2) have energies
  delta_c_i + h_i and delta_c_i - h_i.
* Atom position enters through phase_i = k_i x and the radial envelope
  radial_factor = f(r, z): the normal-mode couplings are
  gA_i = g0_i * f * cos(k_i x) and gB_i = g0_i * f * sin(k_i x).
* delta_c_i is slaved to Delta_i unless ``slave_delta_c`` is switched off
  (cavity pair resonant with its atomic transition).
* epsilon (probe-frequency difference) is only allowed together with
  p = q = 0; it then drops out of the normal-mode dynamics entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import EpsilonWithScattering, NegativeRate, ParameterError, ZeroTotalKappa

__all__ = [
    "PhysicalParams",
    "ModeCouplings",
    "validate",
    "check",
    "critical_kappa_ex",
    "mode_couplings",
    "preset",
    "PRESETS",
    "load_config",
    "apply_overrides",
]


@dataclass(frozen=True)
class PhysicalParams:
    """All system parameters in units of gamma.  Immutable once created."""

    g0_1: float = 0.0            # atom-cavity coupling prefactor, pair 1
    g0_2: float = 0.0            # atom-cavity coupling prefactor, pair 2
    h1: float = 0.0              # intra-pair scattering a1 <-> b1
    h2: float = 0.0              # intra-pair scattering a2 <-> b2
    kappa_in_1: float = 1.0      # internal cavity decay, pair 1
    kappa_in_2: float = 1.0      # internal cavity decay, pair 2
    kappa_ex_1: float = 1.0      # fiber coupling, pair 1
    kappa_ex_2: float = 1.0      # fiber coupling, pair 2
    gamma_1: float = 1.0         # atomic decay |3> -> |1>
    gamma_2: float = 1.0         # atomic decay |3> -> |2>
    p: float = 0.0               # inter-pair scattering a1 <-> a2, b1 <-> b2
    q: float = 0.0               # inter-pair scattering a1 <-> b2, b1 <-> a2
    epsilon: float = 0.0         # probe frequency difference w_p1 - w_p2
    delta_ground: float = 0.0    # ground-state splitting (bookkeeping only)
    Delta_1: float = 0.0         # atom-probe detuning, transition 1
    Delta_2: float = 0.0         # atom-probe detuning, transition 2
    delta_c_1: float = 0.0       # cavity-probe detuning, pair 1
    delta_c_2: float = 0.0       # cavity-probe detuning, pair 2
    E_1: complex = 0.1           # drive amplitude, probe 1
    E_2: complex = 0.1           # drive amplitude, probe 2
    phase_1: float = math.pi / 2  # azimuthal phase k_1 x
    phase_2: float = math.pi / 2  # azimuthal phase k_2 x
    radial_factor: float = 1.0   # radial envelope f(r, z) in [0, 1]
    slave_delta_c: bool = True   # delta_c_i := Delta_i on validation

    @property
    def kappa_1(self) -> float:
        return self.kappa_in_1 + self.kappa_ex_1

    @property
    def kappa_2(self) -> float:
        return self.kappa_in_2 + self.kappa_ex_2

    def kappa(self, i: int) -> float:
        return (self.kappa_1, self.kappa_2)[_pair_index(i)]

    def kappa_ex(self, i: int) -> float:
        return (self.kappa_ex_1, self.kappa_ex_2)[_pair_index(i)]

    def kappa_in(self, i: int) -> float:
        return (self.kappa_in_1, self.kappa_in_2)[_pair_index(i)]

    def h(self, i: int) -> float:
        return (self.h1, self.h2)[_pair_index(i)]

    def delta_c(self, i: int) -> float:
        return (self.delta_c_1, self.delta_c_2)[_pair_index(i)]

    def Delta(self, i: int) -> float:
        return (self.Delta_1, self.Delta_2)[_pair_index(i)]

    def E(self, i: int) -> complex:
        return (self.E_1, self.E_2)[_pair_index(i)]

    def gamma(self, i: int) -> float:
        return (self.gamma_1, self.gamma_2)[_pair_index(i)]


@dataclass(frozen=True)
class ModeCouplings:
    """Real couplings of the atom to the normal modes A_i, B_i."""

    gA_1: float
    gA_2: float
    gB_1: float
    gB_2: float

    def gA(self, i: int) -> float:
        return (self.gA_1, self.gA_2)[_pair_index(i)]

    def gB(self, i: int) -> float:
        return (self.gB_1, self.gB_2)[_pair_index(i)]


def _pair_index(i: int) -> int:
    if i not in (1, 2):
        raise ValueError(f"mode pair index must be 1 or 2, got {i}")
    return i - 1


_RATE_FIELDS = (
    "g0_1", "g0_2", "h1", "h2",
    "kappa_in_1", "kappa_in_2", "kappa_ex_1", "kappa_ex_2",
    "gamma_1", "gamma_2",
)


def check(params: PhysicalParams) -> list[tuple[str, str]]:
    """Return every violated constraint as ``(code, message)`` pairs."""
    violations = []
    for name in _RATE_FIELDS:
        value = getattr(params, name)
        if value < 0:
            violations.append(("NegativeRate", f"{name} = {value} must be >= 0"))
    if not 0.0 <= params.radial_factor <= 1.0:
        violations.append(
            ("NegativeRate", f"radial_factor = {params.radial_factor} outside [0, 1]")
        )
    for i in (1, 2):
        if params.kappa_in(i) + params.kappa_ex(i) <= 0:
            violations.append(
                ("ZeroTotalKappa", f"kappa_in_{i} + kappa_ex_{i} must be > 0")
            )
    if params.epsilon != 0 and (params.p != 0 or params.q != 0):
        violations.append(
            (
                "EpsilonWithScattering",
                "epsilon != 0 requires p = q = 0 (otherwise no stationary frame)",
            )
        )
    return violations


_VIOLATION_CLASSES = {
    "NegativeRate": NegativeRate,
    "ZeroTotalKappa": ZeroTotalKappa,
    "EpsilonWithScattering": EpsilonWithScattering,
}


def validate(params: PhysicalParams) -> PhysicalParams:
    """Validate and resolve derived quantities.

    Returns a new instance with delta_c_i slaved to Delta_i when requested.
    Raises the error class of the first violation; the exception carries the
    full violation list.  Idempotent: validate(validate(x)) == validate(x).
    """
    violations = check(params)
    if violations:
        code, _ = violations[0]
        msg = "; ".join(m for _, m in violations)
        raise _VIOLATION_CLASSES.get(code, ParameterError)(msg, violations)
    if params.slave_delta_c:
        params = replace(params, delta_c_1=params.Delta_1, delta_c_2=params.Delta_2)
    return params


def critical_kappa_ex(h: float, kappa_in: float) -> float:
    """Fiber coupling at which on-resonance transmission vanishes.

    kappa_ex = sqrt(h^2 + kappa_in^2); at this value the identity
    2*kappa*kappa_ex = kappa^2 + h^2 holds and the empty-cavity output
    interferes destructively with the input.
    """
    if h < 0 or kappa_in < 0:
        raise NegativeRate(f"critical coupling needs h, kappa_in >= 0, got {h}, {kappa_in}")
    return math.hypot(h, kappa_in)


def mode_couplings(params: PhysicalParams) -> ModeCouplings:
    """Position-dependent couplings to the normal modes.

    gA_i = g0_i * f * cos(k_i x), gB_i = g0_i * f * sin(k_i x); the
    Pythagorean sum gA_i^2 + gB_i^2 = (g0_i * f)^2 is position independent.
    """
    f = params.radial_factor
    return ModeCouplings(
        gA_1=params.g0_1 * f * math.cos(params.phase_1),
        gA_2=params.g0_2 * f * math.cos(params.phase_2),
        gB_1=params.g0_1 * f * math.sin(params.phase_1),
        gB_2=params.g0_2 * f * math.sin(params.phase_2),
    )


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

def _strong() -> PhysicalParams:
    # strong coupling: kappa << g0, critical fiber coupling
    return PhysicalParams(
        g0_1=100.0, g0_2=100.0,
        h1=15.0, h2=15.0,
        kappa_in_1=1.0, kappa_in_2=1.0,
        kappa_ex_1=critical_kappa_ex(15.0, 1.0),
        kappa_ex_2=critical_kappa_ex(15.0, 1.0),
        E_1=0.1, E_2=0.1,
    )


def _bad_cavity() -> PhysicalParams:
    # bad cavity: g0 << kappa, adiabatic elimination applicable
    return PhysicalParams(
        g0_1=70.0, g0_2=70.0,
        h1=250.0, h2=250.0,
        kappa_in_1=1.0, kappa_in_2=1.0,
        kappa_ex_1=critical_kappa_ex(250.0, 1.0),
        kappa_ex_2=critical_kappa_ex(250.0, 1.0),
        E_1=0.1, E_2=0.1,
    )


PRESETS = {
    "strong": _strong,
    "bad_cavity": _bad_cavity,
}


def preset(name: str) -> PhysicalParams:
    """Named parameter preset (validated)."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ParameterError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return validate(factory())


# ---------------------------------------------------------------------------
# config file / overrides
# ---------------------------------------------------------------------------

_FIELD_TYPES = {f.name: f.type for f in fields(PhysicalParams)}


def _parse_value(name: str, text: str):
    kind = _FIELD_TYPES[name]
    text = text.strip()
    if kind == "bool":
        lowered = text.lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ParameterError(f"cannot parse boolean {name} = {text!r}")
    if kind == "complex":
        return complex(text.replace(" ", ""))
    return float(text)


def apply_overrides(params: PhysicalParams, overrides: dict) -> PhysicalParams:
    """Apply ``{field: value}`` overrides; string values are parsed."""
    resolved = {}
    for name, value in overrides.items():
        if name not in _FIELD_TYPES:
            raise ParameterError(f"unknown parameter {name!r}")
        resolved[name] = _parse_value(name, value) if isinstance(value, str) else value
    return replace(params, **resolved)


def load_config(path) -> dict:
    """Read a flat key=value config file (``#`` comments, blank lines ok)."""
    overrides = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, text = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ParameterError(f"{path}:{lineno}: unknown parameter {key!r}")
            overrides[key] = _parse_value(key, text)
    return overrides

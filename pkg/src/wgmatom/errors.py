"""Exception hierarchy and warning categories for the simulator.

All errors derive from :class:`WgmAtomError` so callers can catch the whole
family at once.  Warning categories flag physics-validity issues (truncation,
adiabaticity) that do not invalidate a run but should reach the user.
"""


class WgmAtomError(Exception):
    """Base class for all package errors."""


# ---------------------------------------------------------------------------
# parameter validation
# ---------------------------------------------------------------------------

class ParameterError(WgmAtomError):
    """A physical-parameter constraint is violated.

    ``violations`` holds every violated constraint as ``(code, message)``
    pairs, not just the one that triggered the raise.
    """

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations or [])


class NegativeRate(ParameterError):
    """A rate parameter (g0, h, kappa, gamma) is negative."""


class EpsilonWithScattering(ParameterError):
    """epsilon != 0 combined with p != 0 or q != 0 (no stationary frame)."""


class ZeroTotalKappa(ParameterError):
    """kappa_in + kappa_ex vanishes for some mode pair."""


# ---------------------------------------------------------------------------
# Hilbert space / operators
# ---------------------------------------------------------------------------

class DimensionOverflow(WgmAtomError):
    """Requested truncated space exceeds the configured dimension bound."""


class IndexOutOfRange(WgmAtomError):
    """Invalid mode or atomic-level index."""


# ---------------------------------------------------------------------------
# generators and solvers
# ---------------------------------------------------------------------------

class NonHermitianConstruction(WgmAtomError):
    """Internal consistency check failed: assembled Hamiltonian not Hermitian."""


class SingularGenerator(WgmAtomError):
    """Steady-state linear system is (numerically) singular.

    Typically the drive-free or exactly dark-state-degenerate case, where the
    fixed point is not unique.  A null-space solve (smallest singular value,
    renormalized to unit trace) is the suggested fallback.
    """


class NonPhysicalResult(WgmAtomError):
    """Solved density matrix violates Hermiticity/trace/positivity tolerances."""


class DegenerateResponse(WgmAtomError):
    """A cavity response denominator (or 2x2 mode system) is singular."""


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------

class ZeroKappaEx(WgmAtomError):
    """Input-field normalization requested with kappa_ex = 0 (or zero drive)."""


class VanishingDenominator(WgmAtomError):
    """g2 normalization flux vanished; raw moments are still meaningful."""


# ---------------------------------------------------------------------------
# scan engine / CLI
# ---------------------------------------------------------------------------

class InvalidAxis(WgmAtomError):
    """Scan axis refers to an unknown or non-numeric parameter."""


class UnsatisfiableSpec(WgmAtomError):
    """Scan spec cannot be satisfied (empty grid, g2 with the TH method, ...)."""


class IoFailure(WgmAtomError):
    """Emitting a result file failed."""


# ---------------------------------------------------------------------------
# warnings
# ---------------------------------------------------------------------------

class TruncationWarning(UserWarning):
    """Mean photon occupation too high for the hard Fock truncation."""


class AdiabaticityWarning(UserWarning):
    """Bad-cavity condition g << kappa questionable for adiabatic elimination."""

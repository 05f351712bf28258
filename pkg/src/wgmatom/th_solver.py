"""Master-equation generator on the truncated space and its steady state.

The Hamiltonian is assembled in the normal-mode basis (units of gamma,
frame rotating with the probes):

    H = sum_i [ -Delta_i |i><i| + (delta_i + h_i) nA_i + (delta_i - h_i) nB_i ]
      + sum_i (1/sqrt(2)) [ E_i (A_i+ + B_i+) + h.c. ]
      + sum_i [ gA_i (A_i+ S_i- + S_i+ A_i) + gB_i (-i B_i+ S_i- + i S_i+ B_i) ]
      + (p+q) (A1+ A2 + h.c.) + (p-q) (B1+ B2 + h.c.)        [ static only ]

The drive is treated as a c-number (input-field fluctuations dropped from
the generator).  Dissipation:

    L_kappa rho = sum_modes kappa_i (2 M rho M+ - M+M rho - rho M+M)
    L_gamma rho = sum_i (gamma_i / 2) (2 S_i- rho S_i+ - S_i+S_i- rho - rho S_i+S_i-)

kappa is a half-width: the cavity dissipator carries kappa, not kappa/2.

Vectorization is column-stacking, vec(rho)[n*dim + m] = rho[m, n].  The last
diagonal element (population of the highest-index basis state) is eliminated
through Tr rho = 1, giving the affine fixed-point problem

    d/dt vec' = G vec' + K,     vec'_ss = -G^{-1} K

with G of size (dim^2 - 1), 2303 for single-photon caps.  The default solver
sorts the unknowns by excitation difference (only the drive couples
neighboring grades, everything else is grade-preserving), which makes G
block-tridiagonal, and runs a dense block-Thomas sweep with iterative
refinement; SuperLU and dense LAPACK backends remain selectable.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import fockspace, params as params_mod
from .errors import (
    NonHermitianConstruction,
    NonPhysicalResult,
    SingularGenerator,
    TruncationWarning,
)
from .fockspace import MODE_NAMES, HilbertSpace
from .params import PhysicalParams

__all__ = [
    "build_hamiltonian",
    "build_liouvillian",
    "LiouvillianSystem",
    "SteadyStateDM",
    "solve_steady_state",
    "nullspace_steady_state",
    "no_atom_reference",
    "dump_system",
]

HERMITICITY_TOL = 1e-10
TRACE_TOL = 1e-12
PSD_TOL = 1e-8
OCCUPATION_GUARD = 0.1


def build_hamiltonian(space: HilbertSpace, params: PhysicalParams) -> sp.csr_matrix:
    """Assemble the normal-mode Hamiltonian as a sparse matrix."""
    params = params_mod.validate(params)
    g = params_mod.mode_couplings(params)

    dim = space.dim
    H = sp.csr_matrix((dim, dim), dtype=np.complex128)

    for i in (1, 2):
        mode_a, mode_b = MODE_NAMES[2 * (i - 1)], MODE_NAMES[2 * (i - 1) + 1]
        A = fockspace.annihilation(space, mode_a)
        B = fockspace.annihilation(space, mode_b)
        Sm = fockspace.sigma_minus(space, i)
        Sp = fockspace.sigma_plus(space, i)

        delta_c = params.delta_c(i)
        h = params.h(i)
        H = H + (delta_c + h) * fockspace.number_op(space, mode_a)
        H = H + (delta_c - h) * fockspace.number_op(space, mode_b)
        H = H - params.Delta(i) * fockspace.atomic_op(space, i, i)

        E = complex(params.E(i))
        if E != 0:
            drive = (E / math.sqrt(2)) * (A + B).getH()
            H = H + drive + drive.getH()

        gA, gB = g.gA(i), g.gB(i)
        if gA != 0:
            H = H + gA * (A.getH() @ Sm + Sp @ A)
        if gB != 0:
            H = H + gB * (-1j * (B.getH() @ Sm) + 1j * (Sp @ B))

    if params.p != 0 or params.q != 0:
        A1 = fockspace.annihilation(space, "A1")
        A2 = fockspace.annihilation(space, "A2")
        B1 = fockspace.annihilation(space, "B1")
        B2 = fockspace.annihilation(space, "B2")
        cross = (params.p + params.q) * (A1.getH() @ A2) \
            + (params.p - params.q) * (B1.getH() @ B2)
        H = H + cross + cross.getH()

    defect = abs(H - H.getH()).max() if H.nnz else 0.0
    scale = max(1.0, abs(H).max() if H.nnz else 0.0)
    if defect > 1e-12 * scale:
        raise NonHermitianConstruction(
            f"Hamiltonian assembly failed Hermiticity check: defect {defect:g}"
        )
    H.sum_duplicates()
    return H.tocsr()


def _jump_operators(space: HilbertSpace, params: PhysicalParams):
    """(rate, operator) pairs of the dissipator, paper rate convention."""
    jumps = []
    for i in (1, 2):
        kappa = params.kappa(i)
        jumps.append((kappa, fockspace.annihilation(space, MODE_NAMES[2 * (i - 1)])))
        jumps.append((kappa, fockspace.annihilation(space, MODE_NAMES[2 * (i - 1) + 1])))
        jumps.append((params.gamma(i) / 2.0, fockspace.sigma_minus(space, i)))
    return jumps


def full_generator(space: HilbertSpace, params: PhysicalParams) -> sp.csr_matrix:
    """Full dim^2 x dim^2 Liouvillian (column-stacking convention)."""
    H = build_hamiltonian(space, params)
    eye = fockspace.identity(space)
    L = -1j * (sp.kron(eye, H, format="csr") - sp.kron(H.T, eye, format="csr"))
    for rate, M in _jump_operators(space, params):
        if rate == 0:
            continue
        MdM = (M.getH() @ M).tocsr()
        L = L + rate * (
            2.0 * sp.kron(M.conj(), M, format="csr")
            - sp.kron(eye, MdM, format="csr")
            - sp.kron(MdM.T, eye, format="csr")
        )
    L.sum_duplicates()
    return L.tocsr()


@dataclass
class LiouvillianSystem:
    """Trace-eliminated affine generator d/dt vec' = G vec' + K."""

    G: sp.csr_matrix
    K: np.ndarray
    eliminated_index: int
    space: HilbertSpace
    full: sp.csr_matrix = field(repr=False)

    def trace_defect(self) -> float:
        """Max deviation of the trace functional from the full generator's
        left null space; 0 for any proper Lindblad form."""
        dim = self.space.dim
        diag_rows = np.arange(dim) * (dim + 1)
        col_sums = np.asarray(self.full[diag_rows, :].sum(axis=0)).ravel()
        return float(np.abs(col_sums).max())


def _excitation_grades(space: HilbertSpace) -> np.ndarray:
    """Excitation difference exc(row) - exc(col) for every vec element.

    Only the drive changes the total excitation (atomic + photonic) of a
    basis state by one; every other generator term preserves it on both
    sides of the density matrix.  Sorting the vectorized elements by this
    difference therefore permutes the generator into block-tridiagonal form,
    which the default solver exploits.
    """
    atom, occ = space.occupation_arrays()
    exc = (atom == 2).astype(np.int64) + occ.sum(axis=1)
    return (exc[:, None] - exc[None, :]).flatten(order="F")


class _BlockTridiagLU:
    """Dense block-Thomas factorization of a grade-permuted generator.

    Explicit Schur-complement inverses keep every heavy operation a GEMM;
    accuracy is restored by the caller's iterative refinement (the solve
    residual is checked afterwards in any case).
    """

    def __init__(self, G: sp.spmatrix, grades: np.ndarray):
        n = G.shape[0]
        self.perm = np.argsort(grades, kind="stable")
        self.inv_perm = np.empty(n, dtype=np.int64)
        self.inv_perm[self.perm] = np.arange(n)
        sorted_grades = grades[self.perm]
        _, counts = np.unique(sorted_grades, return_counts=True)
        bounds = np.concatenate(([0], np.cumsum(counts)))
        self.bounds = bounds
        nblocks = len(counts)

        Gp = G.tocsr()[self.perm][:, self.perm].tocsr()
        diag, lower, upper = [], [], []
        for b in range(nblocks):
            r0, r1 = bounds[b], bounds[b + 1]
            rows = Gp[r0:r1].tocsc()
            c0 = bounds[b - 1] if b > 0 else 0
            c1 = bounds[b + 2] if b + 1 < nblocks else n
            # anything outside the tridiagonal envelope means the grading
            # assumption is violated; bail out to a generic solver
            outside = rows[:, :c0].count_nonzero() + rows[:, c1:].count_nonzero()
            if outside:
                raise ValueError("generator is not block-tridiagonal in the grading")
            diag.append(rows[:, r0:r1].toarray())
            # coupling blocks hold only drive terms: keep them sparse
            upper.append(rows[:, r1:c1].tocsr() if b + 1 < nblocks else None)
            lower.append(rows[:, c0:r0].tocsr() if b > 0 else None)

        self.lower = lower
        self.upper = upper
        self.inverses = []
        for b in range(nblocks):
            S = diag[b]
            if b > 0:
                # S -= L @ inv(S_prev) @ U with sparse L, U
                T = (upper[b - 1].T @ self.inverses[b - 1].T).T
                S = S - lower[b] @ T
            self.inverses.append(np.linalg.inv(S))
        if not all(np.all(np.isfinite(inv)) for inv in self.inverses):
            raise ValueError("singular Schur complement in block-tridiagonal sweep")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        b = rhs[self.perm]
        bounds = self.bounds
        nblocks = len(self.inverses)
        ys = []
        for i in range(nblocks):
            y = b[bounds[i]:bounds[i + 1]]
            if i > 0:
                y = y - self.lower[i] @ (self.inverses[i - 1] @ ys[i - 1])
            ys.append(y)
        x = np.empty_like(b)
        xi = self.inverses[-1] @ ys[-1]
        x[bounds[nblocks - 1]:bounds[nblocks]] = xi
        for i in range(nblocks - 2, -1, -1):
            xi = self.inverses[i] @ (ys[i] - self.upper[i] @ xi)
            x[bounds[i]:bounds[i + 1]] = xi
        return x[self.inv_perm]


def build_liouvillian(space: HilbertSpace, params: PhysicalParams) -> LiouvillianSystem:
    """Vectorize the master equation and eliminate the last diagonal element."""
    L = full_generator(space, params)
    dim = space.dim
    e = dim * dim - 1  # vec index of rho[dim-1, dim-1], the eliminated element

    Lc = L.tocsc()
    Kcol = Lc[:e, e:]  # column feeding from the eliminated element
    diag_cols = np.arange(dim - 1) * (dim + 1)
    ind = sp.csr_matrix(
        (np.ones(diag_cols.size), (np.zeros(diag_cols.size, dtype=np.int64), diag_cols)),
        shape=(1, e),
    )
    G = (Lc[:e, :e] - Kcol @ ind).tocsr()
    K = np.asarray(Kcol.todense()).ravel()
    return LiouvillianSystem(G=G, K=K, eliminated_index=e, space=space, full=L)


@dataclass
class SteadyStateDM:
    """Steady-state density matrix plus solve diagnostics."""

    rho: np.ndarray
    residual: float
    space: HilbertSpace
    occupations: dict
    min_eigenvalue: float

    def expectation(self, op) -> complex:
        """Tr(rho O) for a sparse or dense operator O."""
        if sp.issparse(op):
            return complex(op.multiply(self.rho.T).sum())
        return complex(np.einsum("ij,ji->", op, self.rho))

    def atomic_populations(self) -> tuple[float, float, float]:
        """(P1, P2, P3) by partial trace over the modes."""
        atom, _ = self.space.occupation_arrays()
        diag = np.real(np.diag(self.rho))
        return tuple(float(diag[atom == lvl].sum()) for lvl in range(3))


def _unvec(x: np.ndarray, dim: int) -> np.ndarray:
    return x.reshape((dim, dim), order="F")


def solve_steady_state(
    system: LiouvillianSystem,
    method: str = "auto",
    refine: int = 2,
    check: bool = True,
    fallback: str = "error",
) -> SteadyStateDM:
    """Solve G x = -K, restore the eliminated population, check physicality.

    method: "auto"/"tridiag" exploits the excitation grading (only the drive
    couples neighboring grades, so the permuted generator is block
    tridiagonal), "sparse" uses SuperLU, "dense" LAPACK.  ``refine`` rounds
    of iterative refinement push the fixed-point residual to the rounding
    floor.  With ``fallback="nullspace"`` a singular generator is handed to
    :func:`nullspace_steady_state` instead of raising.
    """
    if fallback not in ("error", "nullspace"):
        raise ValueError(f"unknown fallback {fallback!r}")
    try:
        return _solve_regular(system, method=method, refine=refine, check=check)
    except SingularGenerator:
        if fallback == "nullspace":
            return nullspace_steady_state(system)
        raise


def _solve_regular(
    system: LiouvillianSystem,
    method: str,
    refine: int,
    check: bool,
) -> SteadyStateDM:
    G, K = system.G, system.K
    dim = system.space.dim

    solve = None
    if method in ("auto", "tridiag"):
        # excitation-difference grading: drop the eliminated (grade-0) entry
        grades = _excitation_grades(system.space)[: system.eliminated_index]
        try:
            solve = _BlockTridiagLU(G, grades).solve
        except (ValueError, np.linalg.LinAlgError) as exc:
            if method == "tridiag":
                raise SingularGenerator(
                    f"block-tridiagonal factorization failed ({exc}); "
                    "use nullspace_steady_state as a fallback"
                ) from exc
            solve = None  # fall through to the generic sparse path

    try:
        if solve is None:
            if method in ("auto", "sparse", "tridiag"):
                lu = spla.splu(G.tocsc())
                solve = lu.solve
            elif method == "dense":
                lu_dense = scipy.linalg.lu_factor(G.toarray())
                solve = lambda b: scipy.linalg.lu_solve(lu_dense, b)  # noqa: E731
            else:
                raise ValueError(f"unknown solver method {method!r}")
    except (RuntimeError, scipy.linalg.LinAlgError) as exc:
        raise SingularGenerator(
            f"LU factorization failed ({exc}); the steady state may be "
            "non-unique -- use nullspace_steady_state as a fallback"
        ) from exc

    x = solve(-K)
    for _ in range(refine):
        r = G @ x + K
        x = x - solve(r)

    residual = float(np.abs(G @ x + K).max()) if x.size else 0.0
    if not np.all(np.isfinite(x)) or residual > 1e-6 * max(1.0, float(np.abs(K).max())):
        raise SingularGenerator(
            f"steady-state solve did not converge (residual {residual:g}); "
            "the generator is singular within working precision -- use "
            "nullspace_steady_state as a fallback"
        )

    full = np.empty(dim * dim, dtype=np.complex128)
    full[: system.eliminated_index] = x
    diag_idx = np.arange(dim - 1) * (dim + 1)
    full[system.eliminated_index] = 1.0 - full[diag_idx].sum()
    rho = _unvec(full, dim)

    occupations = _mode_occupations(system.space, rho)
    min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2.0).min())
    state = SteadyStateDM(
        rho=rho,
        residual=residual,
        space=system.space,
        occupations=occupations,
        min_eigenvalue=min_eig,
    )
    if check:
        _check_physicality(state)
    return state


def nullspace_steady_state(
    system: LiouvillianSystem,
    subspace: int = 6,
    iterations: int = 3,
    kernel_tol: float = 1e-8,
) -> SteadyStateDM:
    """Fallback for singular generators (non-unique steady state).

    Shift-inverted subspace iteration on the *full* generator extracts the
    near-kernel; the returned state is the minimum-norm unit-trace kernel
    element, Hermitized (the kernel of a Lindblad generator is closed under
    the adjoint).  Deterministic: the start block is seeded.
    """
    dim = system.space.dim
    n = dim * dim
    L = system.full.tocsr()
    sigma = 1e-6
    shifted = (L - sigma * sp.identity(n, dtype=np.complex128, format="csr")).tocsr()
    grades = _excitation_grades(system.space)
    try:
        op = _BlockTridiagLU(shifted, grades)
        solve = op.solve
    except (ValueError, np.linalg.LinAlgError):
        lu = spla.splu(shifted.tocsc())
        solve = lu.solve

    rng = np.random.default_rng(1807)
    V = rng.standard_normal((n, subspace)) + 1j * rng.standard_normal((n, subspace))
    for _ in range(iterations):
        V = np.column_stack([solve(V[:, j]) for j in range(subspace)])
        V, _ = np.linalg.qr(V)
    # Rayleigh-Ritz on the original generator
    T = V.conj().T @ (L @ V)
    evals, evecs = np.linalg.eig(T)
    scale = float(np.abs(L).max())
    keep = np.abs(evals) < kernel_tol * max(1.0, scale)
    if not np.any(keep):
        raise SingularGenerator(
            "no kernel vector found; generator may not be singular after all "
            f"(smallest Ritz value {np.abs(evals).min():g})"
        )
    W, _ = np.linalg.qr(V @ evecs[:, keep])
    traces = np.array([np.trace(_unvec(W[:, j], dim)) for j in range(W.shape[1])])
    norm2 = float(np.abs(traces) ** 2 @ np.ones(len(traces)))
    if norm2 < 1e-24:
        raise SingularGenerator("kernel contains no unit-trace state")
    vec = W @ (np.conj(traces) / norm2)
    rho = _unvec(vec, dim)
    rho = (rho + rho.conj().T) / 2.0
    rho = rho / np.trace(rho).real
    residual = float(np.abs(L @ rho.reshape(-1, order="F")).max())
    return SteadyStateDM(
        rho=rho,
        residual=residual,
        space=system.space,
        occupations=_mode_occupations(system.space, rho),
        min_eigenvalue=float(np.linalg.eigvalsh(rho).min()),
    )


def _mode_occupations(space: HilbertSpace, rho: np.ndarray) -> dict:
    _, occ = space.occupation_arrays()
    diag = np.real(np.diag(rho))
    return {name: float(occ[:, m] @ diag) for m, name in enumerate(MODE_NAMES)}


def _check_physicality(state: SteadyStateDM) -> None:
    rho = state.rho
    herm = float(np.abs(rho - rho.conj().T).max())
    if herm > HERMITICITY_TOL:
        raise NonPhysicalResult(f"steady state not Hermitian: defect {herm:g}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > TRACE_TOL:
        raise NonPhysicalResult(f"steady state trace {tr} != 1")
    if state.min_eigenvalue < -PSD_TOL:
        raise NonPhysicalResult(
            f"steady state not positive semidefinite: min eigenvalue {state.min_eigenvalue:g}"
        )
    high = {m: n for m, n in state.occupations.items() if n > OCCUPATION_GUARD}
    if high:
        warnings.warn(
            f"mean occupation {high} exceeds {OCCUPATION_GUARD}; hard single-photon "
            "truncation is unreliable here",
            TruncationWarning,
            stacklevel=3,
        )


def no_atom_reference(params: PhysicalParams) -> dict:
    """Analytic steady-state normal-mode amplitudes without the atom.

    For p = q = 0 each mode responds independently:

        <A_i> = (-i E_i / sqrt(2)) / (kappa_i + i (delta_i + h_i))
        <B_i> = (-i E_i / sqrt(2)) / (kappa_i + i (delta_i - h_i))

    For p, q != 0 (epsilon = 0) the 2x2 coupled systems for (A1, A2) and
    (B1, B2) are solved instead.
    """
    params = params_mod.validate(params)
    rhs = {i: -1j * complex(params.E(i)) / math.sqrt(2) for i in (1, 2)}
    dA = {i: params.kappa(i) + 1j * (params.delta_c(i) + params.h(i)) for i in (1, 2)}
    dB = {i: params.kappa(i) + 1j * (params.delta_c(i) - params.h(i)) for i in (1, 2)}

    if params.p == 0 and params.q == 0:
        return {
            "A1": rhs[1] / dA[1],
            "B1": rhs[1] / dB[1],
            "A2": rhs[2] / dA[2],
            "B2": rhs[2] / dB[2],
        }

    mu = complex(params.q + params.p)   # e^{i eps t} at t = 0; eps = 0 enforced here
    nu = complex(params.p - params.q)
    MA = np.array([[dA[1], 1j * mu], [1j * np.conj(mu), dA[2]]])
    MB = np.array([[dB[1], 1j * nu], [1j * np.conj(nu), dB[2]]])
    a = np.linalg.solve(MA, np.array([rhs[1], rhs[2]]))
    b = np.linalg.solve(MB, np.array([rhs[1], rhs[2]]))
    return {"A1": a[0], "B1": b[0], "A2": a[1], "B2": b[1]}


def dump_system(system: LiouvillianSystem, prefix) -> None:
    """Serialize (G, K) as coordinate-triplet text files (debug aid)."""
    fockspace.dump_operator(system.G, f"{prefix}_G.txt", header="reduced generator G")
    with open(f"{prefix}_K.txt", "w", encoding="utf-8") as fh:
        fh.write(f"# drive/source vector K, eliminated index {system.eliminated_index}\n")
        for idx in np.flatnonzero(system.K):
            v = system.K[idx]
            fh.write(f"{idx} {v.real:.17g} {v.imag:.17g}\n")

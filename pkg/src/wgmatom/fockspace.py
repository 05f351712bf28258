"""Truncated tensor-product basis and sparse operators.

Basis states are |atom, n(A1), n(B1), n(A2), n(B2)> with the atom index
slowest: flat index = (((atom*(lA1+1) + nA1)*(lB1+1) + nB1)*(lA2+1) + nA2)
*(lB2+1) + nB2.  Atom levels |1>, |2>, |3> map to indices 0, 1, 2.  Each
mode m has its own photon cap l_m; with caps (1,1,1,1) the dimension is
3 * 2^4 = 48.

Truncation convention is *hard*: the annihilation operator keeps the
amplitudes sqrt(n) for n -> n-1 and the creation amplitude out of the cap
state is dropped, so [a, a+] = 1 - (l+1)|l><l| on a capped mode.  This fixed
ordering makes serialized matrices reproducible bit-for-bit.

All operators are scipy.sparse CSR matrices with complex entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionOverflow, IndexOutOfRange

__all__ = [
    "MODE_NAMES",
    "HilbertSpace",
    "build_space",
    "annihilation",
    "number_op",
    "atomic_op",
    "sigma_minus",
    "sigma_plus",
    "identity",
    "dump_operator",
]

MODE_NAMES = ("A1", "B1", "A2", "B2")

ATOM_LEVELS = 3

DEFAULT_MAX_DIM = 10_000


@dataclass(frozen=True)
class HilbertSpace:
    """Enumerated basis |atom, n(A1), n(B1), n(A2), n(B2)>."""

    mode_caps: tuple[int, int, int, int]
    atom_levels: int = ATOM_LEVELS
    dim: int = field(init=False)

    def __post_init__(self):
        dim = self.atom_levels
        for cap in self.mode_caps:
            dim *= cap + 1
        object.__setattr__(self, "dim", dim)

    def index(self, atom: int, occupations) -> int:
        """Flat index of |atom, n(A1), n(B1), n(A2), n(B2)> (atom 0-based)."""
        if not 0 <= atom < self.atom_levels:
            raise IndexOutOfRange(f"atom index {atom} outside 0..{self.atom_levels - 1}")
        idx = atom
        for n, cap in zip(occupations, self.mode_caps, strict=True):
            if not 0 <= n <= cap:
                raise IndexOutOfRange(f"occupation {n} outside 0..{cap}")
            idx = idx * (cap + 1) + n
        return idx

    def state(self, index: int) -> tuple[int, tuple[int, int, int, int]]:
        """Inverse of :meth:`index`."""
        if not 0 <= index < self.dim:
            raise IndexOutOfRange(f"state index {index} outside 0..{self.dim - 1}")
        occ = []
        for cap in reversed(self.mode_caps):
            index, n = divmod(index, cap + 1)
            occ.append(n)
        return index, tuple(reversed(occ))

    def label(self, index: int) -> str:
        atom, occ = self.state(index)
        return f"|{atom + 1};{','.join(str(n) for n in occ)}>"

    def mode_index(self, mode) -> int:
        if isinstance(mode, str):
            try:
                return MODE_NAMES.index(mode)
            except ValueError:
                raise IndexOutOfRange(f"unknown mode {mode!r}; use one of {MODE_NAMES}") from None
        if not 0 <= mode < len(MODE_NAMES):
            raise IndexOutOfRange(f"mode index {mode} outside 0..3")
        return int(mode)

    def occupation_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(atom_index, occupations) for every basis state, vectorized."""
        idx = np.arange(self.dim)
        occ = np.empty((self.dim, 4), dtype=np.int64)
        for m in range(3, -1, -1):
            cap = self.mode_caps[m]
            idx, occ[:, m] = np.divmod(idx, cap + 1)
        return idx, occ


def build_space(mode_caps, max_dim: int = DEFAULT_MAX_DIM) -> HilbertSpace:
    """Build the enumerated basis with per-mode photon caps."""
    caps = tuple(int(c) for c in mode_caps)
    if len(caps) != 4:
        raise IndexOutOfRange(f"need 4 mode caps (A1, B1, A2, B2), got {len(caps)}")
    if any(c < 0 for c in caps):
        raise IndexOutOfRange(f"mode caps must be >= 0, got {caps}")
    dim = ATOM_LEVELS * math.prod(c + 1 for c in caps)
    if dim > max_dim:
        raise DimensionOverflow(f"dimension {dim} exceeds bound {max_dim}")
    return HilbertSpace(mode_caps=caps)


def annihilation(space: HilbertSpace, mode) -> sp.csr_matrix:
    """Photon annihilation on one mode: |n> -> sqrt(n)|n-1>, hard-truncated."""
    m = space.mode_index(mode)
    atom, occ = space.occupation_arrays()
    src = np.flatnonzero(occ[:, m] > 0)
    n = occ[src, m]
    # stride of one quantum in mode m under the fixed ordering
    stride = math.prod(cap + 1 for cap in space.mode_caps[m + 1:])
    dst = src - stride
    data = np.sqrt(n).astype(np.complex128)
    op = sp.csr_matrix((data, (dst, src)), shape=(space.dim, space.dim))
    op.sum_duplicates()
    return op


def number_op(space: HilbertSpace, mode) -> sp.csr_matrix:
    """Photon number operator of one mode (diagonal)."""
    m = space.mode_index(mode)
    _, occ = space.occupation_arrays()
    return sp.diags(occ[:, m].astype(np.complex128)).tocsr()


def atomic_op(space: HilbertSpace, i: int, j: int) -> sp.csr_matrix:
    """|i><j| on the atom (levels 1..3), identity on the modes."""
    for lvl in (i, j):
        if lvl not in (1, 2, 3):
            raise IndexOutOfRange(f"atomic level {lvl} must be in 1..3")
    atom, _ = space.occupation_arrays()
    src = np.flatnonzero(atom == j - 1)
    n_modes = space.dim // space.atom_levels
    dst = src + (i - j) * n_modes
    data = np.ones(src.size, dtype=np.complex128)
    op = sp.csr_matrix((data, (dst, src)), shape=(space.dim, space.dim))
    op.sum_duplicates()
    return op


def sigma_minus(space: HilbertSpace, i: int) -> sp.csr_matrix:
    """Lowering operator S_i^- = |i><3| of transition i in {1, 2}."""
    if i not in (1, 2):
        raise IndexOutOfRange(f"transition index {i} must be 1 or 2")
    return atomic_op(space, i, 3)


def sigma_plus(space: HilbertSpace, i: int) -> sp.csr_matrix:
    """Raising operator S_i^+ = |3><i| of transition i in {1, 2}."""
    if i not in (1, 2):
        raise IndexOutOfRange(f"transition index {i} must be 1 or 2")
    return atomic_op(space, 3, i)


def identity(space: HilbertSpace) -> sp.csr_matrix:
    return sp.identity(space.dim, dtype=np.complex128, format="csr")


def dump_operator(op, path, header: str = "") -> None:
    """Write an operator as deduplicated coordinate triplets (debug aid)."""
    coo = sp.coo_matrix(op)
    coo.sum_duplicates()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        fh.write(f"# shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}\n")
        for k in order:
            v = coo.data[k]
            fh.write(f"{coo.row[k]} {coo.col[k]} {v.real:.17g} {v.imag:.17g}\n")

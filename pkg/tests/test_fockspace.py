import itertools

import numpy as np
import pytest

from wgmatom import fockspace as fs
from wgmatom.errors import DimensionOverflow, IndexOutOfRange


@pytest.fixture(scope="module")
def space48():
    return fs.build_space((1, 1, 1, 1))


class TestBuildSpace:
    def test_single_photon_caps_give_48(self, space48):
        assert space48.dim == 48

    def test_photonless_space(self):
        assert fs.build_space((0, 0, 0, 0)).dim == 3

    def test_two_photon_caps(self):
        assert fs.build_space((2, 2, 2, 2)).dim == 243

    def test_dimension_bound(self):
        with pytest.raises(DimensionOverflow):
            fs.build_space((9, 9, 9, 9))
        # the bound is configurable
        assert fs.build_space((9, 9, 9, 9), max_dim=10**6).dim == 30000

    def test_bad_caps(self):
        with pytest.raises(IndexOutOfRange):
            fs.build_space((1, 1, 1))
        with pytest.raises(IndexOutOfRange):
            fs.build_space((1, -1, 1, 1))

    def test_index_round_trip_exhaustive(self):
        for caps in ((1, 1, 1, 1), (2, 1, 0, 2)):
            space = fs.build_space(caps)
            ranges = [range(c + 1) for c in caps]
            seen = set()
            for atom in range(3):
                for occ in itertools.product(*ranges):
                    idx = space.index(atom, occ)
                    assert space.state(idx) == (atom, occ)
                    seen.add(idx)
            assert seen == set(range(space.dim))

    def test_ordering_atom_slowest_then_modes(self, space48):
        # |1;0,0,0,0> first, |1;0,0,0,1> second, atom stride is 16
        assert space48.index(0, (0, 0, 0, 0)) == 0
        assert space48.index(0, (0, 0, 0, 1)) == 1
        assert space48.index(0, (1, 0, 0, 0)) == 8
        assert space48.index(1, (0, 0, 0, 0)) == 16

    def test_index_range_checks(self, space48):
        with pytest.raises(IndexOutOfRange):
            space48.index(3, (0, 0, 0, 0))
        with pytest.raises(IndexOutOfRange):
            space48.index(0, (2, 0, 0, 0))
        with pytest.raises(IndexOutOfRange):
            space48.state(48)


class TestOperators:
    def test_annihilation_amplitude_on_cap_one(self, space48):
        a = fs.annihilation(space48, "A1")
        src = space48.index(0, (1, 0, 0, 0))
        dst = space48.index(0, (0, 0, 0, 0))
        assert a[dst, src] == 1.0  # sqrt(1)
        assert a.getnnz() == 24  # half the basis states have n(A1) = 1

    def test_annihilation_sqrt_weights_cap_two(self):
        space = fs.build_space((2, 0, 0, 0))
        a = fs.annihilation(space, "A1")
        two = space.index(0, (2, 0, 0, 0))
        one = space.index(0, (1, 0, 0, 0))
        assert a[one, two] == pytest.approx(np.sqrt(2.0))

    def test_hard_truncation_commutator(self, space48):
        # on a capped mode [a, a+] = 1 - 2|1><1|: explicit 2x2 ladder algebra
        a2 = np.array([[0.0, 1.0], [0.0, 0.0]])
        oracle_single_mode = a2 @ a2.T - a2.T @ a2
        assert np.allclose(oracle_single_mode, np.diag([1.0, -1.0]))

        a = fs.annihilation(space48, "B2")
        comm = (a @ a.getH() - a.getH() @ a).toarray()
        n = fs.number_op(space48, "B2").toarray()
        assert np.allclose(comm, np.eye(48) - 2.0 * n, atol=1e-15)

    def test_number_operator_spectrum(self):
        space = fs.build_space((2, 1, 2, 1))
        for mode, cap in zip(fs.MODE_NAMES, space.mode_caps):
            nvals = np.unique(np.real(fs.number_op(space, mode).diagonal()))
            assert set(nvals) == set(range(cap + 1))

    def test_sigma_algebra(self, space48):
        s1m, s2m = fs.sigma_minus(space48, 1), fs.sigma_minus(space48, 2)
        s1p, s2p = fs.sigma_plus(space48, 1), fs.sigma_plus(space48, 2)
        proj3 = fs.atomic_op(space48, 3, 3)
        assert abs(s1p @ s1m - proj3).max() == 0
        assert abs(s2p @ s2m - proj3).max() == 0
        assert (s1p @ s2m).getnnz() == 0
        assert (s2p @ s1m).getnnz() == 0
        # S_i- S_j+ = |i><j|
        assert abs(s1m @ s2p - fs.atomic_op(space48, 1, 2)).max() == 0
        assert abs(s2m @ s2p - fs.atomic_op(space48, 2, 2)).max() == 0

    def test_disjoint_factors_commute(self, space48):
        a1 = fs.annihilation(space48, "A1")
        b2 = fs.annihilation(space48, "B2")
        s1m = fs.sigma_minus(space48, 1)
        assert abs(a1 @ b2 - b2 @ a1).max() == 0
        assert abs(a1 @ s1m - s1m @ a1).max() == 0

    def test_adjoint_involution(self, space48):
        a = fs.annihilation(space48, "A2")
        assert abs(a.getH().getH() - a).max() == 0

    def test_product_associativity(self, space48):
        triples = (
            (fs.annihilation(space48, "A1"), fs.sigma_plus(space48, 1),
             fs.annihilation(space48, "B1").getH()),
            (fs.sigma_minus(space48, 2), fs.number_op(space48, "A2"),
             fs.annihilation(space48, "B2")),
        )
        for X, Y, Z in triples:
            assert abs((X @ Y) @ Z - X @ (Y @ Z)).max() < 1e-14

    def test_bad_indices(self, space48):
        with pytest.raises(IndexOutOfRange):
            fs.annihilation(space48, "C1")
        with pytest.raises(IndexOutOfRange):
            fs.atomic_op(space48, 0, 1)
        with pytest.raises(IndexOutOfRange):
            fs.sigma_minus(space48, 3)


def test_dump_operator(tmp_path, space48):
    path = tmp_path / "a1.txt"
    fs.dump_operator(fs.annihilation(space48, "A1"), path, header="A1 annihilation")
    lines = path.read_text().splitlines()
    assert lines[0] == "# A1 annihilation"
    assert lines[1].startswith("# shape 48 48 nnz 24")
    assert len(lines) == 2 + 24
    row, col, re, im = lines[2].split()
    assert float(re) == 1.0 and float(im) == 0.0

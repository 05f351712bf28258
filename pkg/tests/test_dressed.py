import math
from dataclasses import replace

import numpy as np
import pytest

from wgmatom import dressed, params as pm


def degenerate_params(g0, h):
    return pm.validate(pm.PhysicalParams(
        g0_1=g0, g0_2=g0, h1=h, h2=h,
        kappa_in_1=1.0, kappa_in_2=1.0,
        kappa_ex_1=pm.critical_kappa_ex(h, 1.0),
        kappa_ex_2=pm.critical_kappa_ex(h, 1.0),
    ))


class TestClosedForm:
    def test_reference_point(self):
        vals = dressed.closed_form_eigenvalues(100.0, 15.0)
        assert vals == pytest.approx(
            (-149.12009038268548, -15.0, 134.12009038268548,
             77.7808556006579, -122.7808556006579),
            rel=1e-15,
        )

    def test_paper_rounding(self):
        vals = dressed.closed_form_eigenvalues(100.0, 15.0)
        for got, rounded in zip(vals, (-149, -15, 134, 77, -122)):
            assert abs(got - rounded) < 1.0

    def test_no_coupling_collapse(self):
        assert dressed.closed_form_eigenvalues(0.0, 15.0) == pytest.approx(
            (-15.0, -15.0, 0.0, -15.0, -30.0)
        )

    def test_no_scattering_collapse(self):
        g = 37.0
        assert dressed.closed_form_eigenvalues(g, 0.0) == pytest.approx(
            (-math.sqrt(2) * g, 0.0, math.sqrt(2) * g, g, -g)
        )


class TestNumericDressed:
    def test_matches_closed_form_randomized(self):
        rng = np.random.default_rng(42)
        for _ in range(8):
            g0 = rng.uniform(5.0, 150.0)
            h = rng.uniform(0.5, 40.0)
            p = degenerate_params(g0, h)
            closed = dressed.closed_form_eigenvalues(g0, h)
            spectra = {s: dressed.numeric_dressed(p, s).eigenvalues for s in (1, 2)}
            for value, sector in zip(closed, (1, 1, 1, 2, 2)):
                err = np.abs(spectra[sector] - value).min()
                assert err <= 1e-10 * max(1.0, abs(value))

    def test_ground_sector_is_zero(self):
        spectrum = dressed.numeric_dressed(pm.preset("strong"), 0)
        assert spectrum.eigenvalues == pytest.approx((0.0, 0.0), abs=1e-14)
        assert spectrum.basis_labels == ("|1;0,0,0,0>", "|2;0,0,0,0>")

    def test_sector_sizes(self):
        p = pm.preset("strong")
        assert len(dressed.numeric_dressed(p, 1).eigenvalues) == 9
        assert len(dressed.numeric_dressed(p, 2).eigenvalues) == 16

    def test_uncoupled_family_has_no_excited_component(self):
        # the -h eigenvectors (one-photon states the atom cannot absorb plus
        # the antisymmetric combination) contain no |3;vac> amplitude
        p = pm.preset("strong")
        spectrum = dressed.numeric_dressed(p, 1)
        vac3 = spectrum.basis_labels.index("|3;0,0,0,0>")
        for k, val in enumerate(spectrum.eigenvalues):
            if abs(val + 15.0) < 1e-9:
                assert abs(spectrum.eigenvectors[vac3, k]) < 1e-12

    def test_polaritons_contain_excited_state(self):
        p = pm.preset("strong")
        spectrum = dressed.numeric_dressed(p, 1)
        e1 = dressed.closed_form_eigenvalues(100.0, 15.0)[0]
        k = int(np.abs(spectrum.eigenvalues - e1).argmin())
        amp = spectrum.amplitude(k, "|3;0,0,0,0>")
        assert abs(amp) > 0.5

    def test_family_exchange_symmetry(self):
        base = pm.validate(pm.PhysicalParams(
            g0_1=80.0, g0_2=40.0, h1=10.0, h2=20.0,
            kappa_in_1=1.0, kappa_in_2=1.0, kappa_ex_1=5.0, kappa_ex_2=7.0,
        ))
        swapped = pm.validate(replace(
            base, g0_1=base.g0_2, g0_2=base.g0_1, h1=base.h2, h2=base.h1,
            kappa_in_1=base.kappa_in_2, kappa_in_2=base.kappa_in_1,
            kappa_ex_1=base.kappa_ex_2, kappa_ex_2=base.kappa_ex_1,
        ))
        for sector in (1, 2):
            a = dressed.numeric_dressed(base, sector).eigenvalues
            b = dressed.numeric_dressed(swapped, sector).eigenvalues
            assert a == pytest.approx(b, abs=1e-10)

    def test_detunings_kept_when_requested(self):
        # equal slaved detunings cancel inside a sector, unequal ones do not
        p = pm.validate(replace(pm.preset("strong"), Delta_1=50.0, Delta_2=-30.0))
        zeroed = dressed.numeric_dressed(p, 1).eigenvalues
        kept = dressed.numeric_dressed(p, 1, zero_detunings=False).eigenvalues
        assert not np.allclose(zeroed, kept)

    def test_invalid_sector(self):
        with pytest.raises(ValueError):
            dressed.numeric_dressed(pm.preset("strong"), 3)

    def test_amplitude_unknown_label(self):
        spectrum = dressed.numeric_dressed(pm.preset("strong"), 1)
        with pytest.raises(KeyError):
            spectrum.amplitude(0, "|9;0,0,0,0>")

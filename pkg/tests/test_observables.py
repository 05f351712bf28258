import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wgmatom import ae_solver as ae
from wgmatom import fockspace as fs
from wgmatom import observables as obs
from wgmatom import params as pm
from wgmatom import th_solver as th
from wgmatom.errors import VanishingDenominator, ZeroKappaEx


@pytest.fixture(scope="module")
def space48():
    return fs.build_space((1, 1, 1, 1))


class TestInputAmplitude:
    def test_zero_drive(self):
        p = pm.validate(replace(pm.preset("strong"), E_1=0.0))
        assert obs.input_amplitude(p, 1) == 0

    def test_reference_magnitude(self):
        p = pm.preset("strong")
        direct = 0.1 / math.sqrt(2.0 * 15.0333)
        assert direct == pytest.approx(0.0182372, abs=5e-8)
        assert abs(obs.input_amplitude(p, 1)) == pytest.approx(direct, abs=1e-8)

    def test_real_drive_gives_imaginary_amplitude(self):
        p = pm.preset("strong")
        amp = obs.input_amplitude(p, 2)
        assert amp.real == 0 and amp.imag < 0

    def test_zero_kappa_ex_rejected(self):
        p = pm.validate(replace(pm.preset("strong"), kappa_ex_1=0.0))
        with pytest.raises(ZeroKappaEx):
            obs.input_amplitude(p, 1)


class TestOutputCoefficients:
    def test_critical_coupling_kills_constant_part(self):
        p = pm.validate(replace(
            pm.preset("strong"), g0_1=0.0, g0_2=0.0, Delta_1=0.0, Delta_2=0.0
        ))
        coeffs = obs.output_coefficients(p)
        assert abs(coeffs.alpha[0][0]) < 1e-14
        assert abs(coeffs.alpha[1][0]) < 1e-14

    def test_no_coupling_kills_atomic_parts(self):
        p = pm.validate(replace(pm.preset("strong"), g0_1=0.0, g0_2=0.0))
        coeffs = obs.output_coefficients(p)
        assert np.all(coeffs.alpha[:, 1:] == 0)
        assert np.all(coeffs.beta[:, 1:] == 0)

    def test_family_one_never_carries_other_transition(self):
        coeffs = obs.output_coefficients(pm.preset("strong"))
        assert coeffs.alpha[0][2] == 0  # a1 has no S_2- component at p=q=0
        assert coeffs.beta[0][2] == 0
        assert coeffs.alpha[1][1] == 0

    def test_reflection_keeps_coupled_mode_response(self):
        p = pm.validate(replace(pm.preset("strong"), Delta_1=10.0, Delta_2=10.0))
        coeffs = obs.output_coefficients(p)
        g = pm.mode_couplings(p)
        kappa = p.kappa_1
        # beta_11 = sqrt(2 kex) * (+gB/(kappa + i(delta - h))) / sqrt(2)
        direct = math.sqrt(2 * p.kappa_ex_1) * (
            g.gB_1 / (kappa + 1j * (10.0 - 15.0))
        ) / math.sqrt(2)
        assert coeffs.beta[0][1] == pytest.approx(direct, rel=1e-12)

    def test_inter_pair_scattering_mixes_families(self):
        p = pm.validate(replace(pm.preset("strong"), p=2.0, q=0.5))
        coeffs = obs.output_coefficients(p)
        assert coeffs.alpha[0][2] != 0  # a1 now carries S_2-
        # continuity with the decoupled path
        p_small = pm.validate(replace(pm.preset("strong"), p=1e-13, q=1e-13))
        c0 = obs.output_coefficients(pm.preset("strong"))
        c1 = obs.output_coefficients(p_small)
        assert np.abs(c0.alpha - c1.alpha).max() < 1e-9


class TestFluxes:
    def test_no_atom_reflection_closed_form(self):
        # at zero detuning and critical coupling: F(b) = h^2 / kappa^2 and
        # F(a) = 0 by the identity 2 kappa kappa_ex = kappa^2 + h^2
        p = pm.validate(replace(
            pm.preset("strong"), g0_1=0.0, g0_2=0.0, Delta_1=0.0, Delta_2=0.0
        ))
        kappa = p.kappa_1
        assert obs.no_atom_flux(p, "a1") < 1e-28
        assert obs.no_atom_flux(p, "b1") == pytest.approx(15.0**2 / kappa**2, rel=1e-12)

    def test_extinction_needs_critical_coupling(self):
        # perturbing kappa_ex off sqrt(h^2 + kappa_in^2) breaks the identity
        # 2 kappa kappa_ex = kappa^2 + h^2 and with it the zero transmission
        p = pm.validate(replace(
            pm.preset("strong"), g0_1=0.0, g0_2=0.0, Delta_1=0.0, Delta_2=0.0,
            kappa_ex_1=pm.critical_kappa_ex(15.0, 1.0) + 1.0,
        ))
        assert obs.no_atom_flux(p, "a1") > 1e-6

    def test_th_transmission_far_detuned(self, space48):
        p = pm.validate(replace(pm.preset("strong"), Delta_1=2000.0, Delta_2=0.0))
        state = th.solve_steady_state(th.build_liouvillian(space48, p))
        assert obs.flux_th(state, p, "a1") > 0.99

    def test_ae_transmission_far_detuned(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=2000.0, Delta_2=-22.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        assert obs.flux_ae(dm, coeffs, "a1", p) > 0.99

    def test_dark_state_flux_equals_no_atom_th(self, space48):
        # away from the cavity resonance the caps-1 truncation bias is far
        # below the tolerance (see the truncation-artifact test for Delta ~ h)
        p = pm.validate(replace(pm.preset("strong"), Delta_1=-150.0, Delta_2=-150.0))
        state = th.solve_steady_state(th.build_liouvillian(space48, p))
        p0 = pm.validate(replace(p, g0_1=0.0, g0_2=0.0))
        state0 = th.solve_steady_state(
            th.build_liouvillian(space48, p0), fallback="nullspace"
        )
        for mode in obs.MODE_LABELS:
            assert abs(obs.flux_th(state, p, mode)
                       - obs.flux_th(state0, p0, mode)) < 1e-6

    def test_dark_state_flux_equals_no_atom_ae(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.0, Delta_2=-19.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        for mode in obs.MODE_LABELS:
            assert abs(obs.flux_ae(dm, coeffs, mode, p)
                       - obs.no_atom_flux(p, mode)) < 1e-6

    def test_th_and_ae_agree_at_resonance_peak(self, space48):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.5, Delta_2=-22.0))
        state = th.solve_steady_state(th.build_liouvillian(space48, p))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        f_th = obs.flux_th(state, p, "a1")
        f_ae = obs.flux_ae(dm, coeffs, "a1", p)
        assert f_th == pytest.approx(f_ae, rel=0.02)

    def test_flux_requires_drive(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), E_1=0.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        with pytest.raises(VanishingDenominator):
            obs.flux_ae(dm, coeffs, "a1", p)

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(0.0, 100.0), st.floats(0.1, 20.0), st.floats(0.1, 30.0),
        st.floats(-50.0, 50.0), st.floats(0.001, 0.5),
    )
    def test_no_atom_flux_conservation(self, h, kappa_in, kappa_ex, delta, drive):
        p = pm.validate(pm.PhysicalParams(
            h1=h, h2=h, kappa_in_1=kappa_in, kappa_in_2=kappa_in,
            kappa_ex_1=kappa_ex, kappa_ex_2=kappa_ex,
            Delta_1=delta, Delta_2=delta, E_1=drive, E_2=drive,
        ))
        transmitted, reflected, loss = obs.no_atom_flux_budget(p, 1)
        assert transmitted >= 0 and reflected >= 0 and loss >= 0
        assert transmitted + reflected + loss == pytest.approx(1.0, abs=1e-12)


class TestG2:
    def test_coherent_output_without_atom(self):
        p = pm.validate(replace(
            pm.preset("bad_cavity"), g0_1=0.0, g0_2=0.0, Delta_1=-19.0, Delta_2=-25.0
        ))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        for pair in (("a1", "a1"), ("a2", "a2"), ("a1", "a2"), ("b1", "b2")):
            assert float(obs.g2(dm, coeffs, *pair)) == pytest.approx(1.0, abs=1e-12)

    def test_poissonian_on_dark_diagonal(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.0, Delta_2=-19.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        assert float(obs.g2(dm, coeffs, "a1", "a1")) == pytest.approx(1.0, abs=1e-6)

    def test_antibunching_near_transmission_resonance(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.0, Delta_2=-22.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        auto = float(obs.g2(dm, coeffs, "a1", "a1"))
        cross = float(obs.g2(dm, coeffs, "a1", "a2"))
        assert auto == pytest.approx(1.509e-4, rel=1e-3)
        assert cross == pytest.approx(1.061e-4, rel=1e-3)

    def test_symmetry(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-17.0, Delta_2=-24.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        for mi, mj in (("a1", "a2"), ("a1", "b1"), ("b2", "a2")):
            assert float(obs.g2(dm, coeffs, mi, mj)) == pytest.approx(
                float(obs.g2(dm, coeffs, mj, mi)), rel=1e-12
            )

    def test_vanishing_denominator_marker(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), E_1=0.0, E_2=0.0,
                                Delta_1=-3.0, Delta_2=4.0))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        result = obs.g2(dm, coeffs, "a1", "a1")
        assert not result.finite
        assert math.isinf(float(result))
        assert result.numerator == 0 and result.flux_i == 0

    def test_th_backend_refused(self):
        from wgmatom.errors import UnsatisfiableSpec

        with pytest.raises(UnsatisfiableSpec):
            obs.g2_th()


class TestPopulations:
    def test_from_atomic_dm(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.0, Delta_2=-19.0))
        dm = ae.steady_state(p)
        pops = obs.populations(dm)
        assert pops == pytest.approx((0.5, 0.5, 0.0), abs=1e-9)

    def test_from_full_state(self, space48):
        p = pm.validate(replace(pm.preset("strong"), Delta_1=-22.0, Delta_2=-22.0))
        state = th.solve_steady_state(th.build_liouvillian(space48, p))
        pops = obs.populations(state)
        assert sum(pops) == pytest.approx(1.0, abs=1e-10)

    def test_from_raw_matrix(self):
        rho = np.diag([0.2, 0.3, 0.5]).astype(complex)
        assert obs.populations(rho) == pytest.approx((0.2, 0.3, 0.5))

    def test_rejects_unknown(self):
        with pytest.raises(TypeError):
            obs.populations([1, 2, 3])


class TestSpectrumPoint:
    def test_check_accepts_valid(self):
        pt = obs.SpectrumPoint(Delta_1=0.0, Delta_2=0.0, F1_a1=0.5,
                               P1=0.5, P2=0.5, P3=0.0)
        pt.check()

    def test_check_rejects_negative_flux(self):
        pt = obs.SpectrumPoint(Delta_1=0.0, Delta_2=0.0, F1_a1=-0.1)
        with pytest.raises(ValueError):
            pt.check()

    def test_check_rejects_bad_populations(self):
        pt = obs.SpectrumPoint(Delta_1=0.0, Delta_2=0.0, P1=0.9, P2=0.3, P3=0.0)
        with pytest.raises(ValueError):
            pt.check()

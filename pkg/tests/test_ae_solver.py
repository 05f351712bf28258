import math
from dataclasses import replace

import numpy as np
import pytest

from wgmatom import ae_solver as ae
from wgmatom import params as pm
from wgmatom.errors import AdiabaticityWarning


def degenerate_params(g0=2.0, h=15.0, **kw):
    base = dict(
        g0_1=g0, g0_2=g0, h1=h, h2=h,
        kappa_in_1=1.0, kappa_in_2=1.0,
        kappa_ex_1=pm.critical_kappa_ex(h, 1.0),
        kappa_ex_2=pm.critical_kappa_ex(h, 1.0),
    )
    base.update(kw)
    return pm.validate(pm.PhysicalParams(**base))


class TestEffectiveConstants:
    def test_bad_cavity_level_shift(self):
        # Delta_11 = gB^2 h / (h^2 + kappa^2) at zero detunings, phases pi/2
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=0.0, Delta_2=0.0))
        c = ae.effective_constants(p)
        kappa = p.kappa_1
        direct = 70.0**2 * 250.0 / (250.0**2 + kappa**2)
        assert c.Delta_11 == pytest.approx(direct, rel=1e-12)
        assert c.Delta_11 == pytest.approx(9.761, abs=5e-4)
        assert c.Delta_22 == pytest.approx(c.Delta_11, rel=1e-12)
        assert c.Delta_12 == 0.0 and c.Delta_21 == 0.0

    def test_collapse_at_no_inter_pair_scattering(self):
        c = ae.effective_constants(degenerate_params(Delta_1=3.0, Delta_2=-4.0))
        assert c.mu == 0 and c.nu == 0
        assert c.F_A == 0 and c.F_B == 0
        assert c.Gamma_12 == 0 and c.Gamma_21 == 0
        assert c.lambda_A == c.f_A1 and c.xi_A == c.f_A2
        assert c.lambda_B == c.f_B1 and c.xi_B == c.f_B2

    def test_cavity_enhanced_decay_rate(self):
        # Gamma_11 = 2 g0^2 kappa / (kappa^2 + h^2) + gamma_1 at phases pi/2,
        # zero detuning: Im f_B1 = kappa / (kappa^2 + (delta - h)^2)
        p = degenerate_params()
        c = ae.effective_constants(p)
        kappa = p.kappa_1
        assert kappa == pytest.approx(16.0333, abs=5e-5)
        oracle = 2.0 * 2.0**2 * kappa / (kappa**2 + 15.0**2) + 1.0
        assert c.Gamma_11 == pytest.approx(oracle, rel=1e-14)
        assert c.Gamma_11 >= min(p.gamma_1, p.gamma_2)

    def test_response_functions(self):
        p = degenerate_params(Delta_1=4.0)
        c = ae.effective_constants(p)
        kappa = p.kappa_1
        assert c.f_A1 == pytest.approx(1j / (kappa - 1j * (4.0 + 15.0)))
        assert c.f_B1 == pytest.approx(1j / (kappa - 1j * (4.0 - 15.0)))

    def test_effective_rabi_frequency(self):
        # Omega_1 reduces to g E / (sqrt2 (kappa + i(delta - h))) when only
        # the B modes couple: the cavity's coherent response times g
        p = degenerate_params(E_1=0.1, Delta_1=4.0)
        c = ae.effective_constants(p)
        kappa = p.kappa_1
        direct = 2.0 * (0.1 / math.sqrt(2)) / (kappa + 1j * (4.0 - 15.0))
        assert c.Omega_1 == pytest.approx(direct, rel=1e-12)

    def test_gamma12_appears_with_inter_pair_scattering(self):
        p = degenerate_params(p=0.4, q=0.1)
        c = ae.effective_constants(p)
        assert c.mu == pytest.approx(0.5) and c.nu == pytest.approx(0.3)
        assert c.Gamma_12 != 0
        assert c.Gamma_21 == pytest.approx(np.conj(c.Gamma_12))
        assert c.F_A != 0 and c.F_B != 0

    def test_shift_scaling_dimensional_consistency(self):
        p = degenerate_params(Delta_1=3.0, Delta_2=-1.0)
        c1 = ae.effective_constants(p)
        s = 2.5
        scaled = pm.validate(replace(
            p, g0_1=s * p.g0_1, g0_2=s * p.g0_2, h1=s * p.h1, h2=s * p.h2,
            kappa_in_1=s * p.kappa_in_1, kappa_in_2=s * p.kappa_in_2,
            kappa_ex_1=s * p.kappa_ex_1, kappa_ex_2=s * p.kappa_ex_2,
            Delta_1=s * p.Delta_1, Delta_2=s * p.Delta_2,
        ))
        c2 = ae.effective_constants(scaled)
        assert c2.Delta_11 == pytest.approx(s * c1.Delta_11, rel=1e-12)
        assert c2.Delta_22 == pytest.approx(s * c1.Delta_22, rel=1e-12)

    def test_adiabaticity_warning(self):
        with pytest.warns(AdiabaticityWarning):
            ae.effective_constants(pm.preset("strong"))

    @pytest.mark.filterwarnings("ignore::wgmatom.errors.AdiabaticityWarning")
    def test_decay_rates_real_and_bounded_below(self):
        # Im(lambda), Im(xi) >= 0 for kappa > 0, so the cavity only ever
        # adds to the free-space decay
        rng = np.random.default_rng(3)
        for _ in range(20):
            h = rng.uniform(0.0, 300.0)
            p = pm.validate(pm.PhysicalParams(
                g0_1=rng.uniform(0.0, 80.0), g0_2=rng.uniform(0.0, 80.0),
                h1=h, h2=h,
                kappa_in_1=rng.uniform(0.1, 3.0), kappa_in_2=rng.uniform(0.1, 3.0),
                kappa_ex_1=rng.uniform(0.5, 300.0), kappa_ex_2=rng.uniform(0.5, 300.0),
                gamma_1=rng.uniform(0.5, 2.0), gamma_2=rng.uniform(0.5, 2.0),
                Delta_1=rng.uniform(-100.0, 100.0), Delta_2=rng.uniform(-100.0, 100.0),
                phase_1=rng.uniform(0, 7), phase_2=rng.uniform(0, 7),
            ))
            c = ae.effective_constants(p)
            assert c.Gamma_11.imag == 0 and c.Gamma_22.imag == 0
            floor = min(p.gamma_1, p.gamma_2)
            assert c.Gamma_11 >= floor - 1e-12
            assert c.Gamma_22 >= floor - 1e-12


class TestEffectiveModel:
    def test_hamiltonian_structure(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-5.0, Delta_2=3.0))
        c = ae.effective_constants(p)
        model = ae.build_effective_model(c, p)
        H = model.hamiltonian
        assert H[0, 0] == pytest.approx(5.0)
        assert H[1, 1] == pytest.approx(-3.0)
        assert H[2, 2] == pytest.approx(c.Delta_11 + c.Delta_22)
        assert H[2, 0] == pytest.approx(c.Omega_1)
        assert H[0, 2] == pytest.approx(np.conj(c.Omega_1))
        assert np.abs(H - H.conj().T).max() < 1e-12

    def test_single_nonzero_eigenvalue_is_shift_sum(self):
        p = pm.validate(replace(
            pm.preset("bad_cavity"), Delta_1=0.0, Delta_2=0.0, E_1=0.0, E_2=0.0
        ))
        c = ae.effective_constants(p)
        model = ae.build_effective_model(c, p)
        vals = np.sort(np.linalg.eigvalsh(model.hamiltonian))
        assert vals[0] == pytest.approx(0.0, abs=1e-12)
        assert vals[1] == pytest.approx(0.0, abs=1e-12)
        assert vals[2] == pytest.approx(19.52, abs=5e-3)

    def test_gamma_matrix_diagonal_without_scattering(self):
        p = pm.preset("bad_cavity")
        model = ae.build_effective_model(ae.effective_constants(p), p)
        gm = model.gamma_matrix
        assert gm[0, 1] == 0 and gm[1, 0] == 0
        assert np.linalg.eigvalsh(gm).min() >= 0

    def test_generalized_dissipator_preserves_trace(self):
        p = degenerate_params(p=0.4, q=0.1, E_1=0.05, E_2=0.02j, Delta_1=2.0)
        model = ae.build_effective_model(ae.effective_constants(p), p)
        L = model.liouvillian()
        trace_row = np.zeros(9)
        trace_row[[0, 4, 8]] = 1.0
        assert np.abs(trace_row @ L).max() < 1e-12


class TestAtomicSteadyState:
    def test_dark_state_on_diagonal(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.0, Delta_2=-19.0))
        dm = ae.steady_state(p)
        assert dm.populations[0] == pytest.approx(0.5, abs=1e-9)
        assert dm.populations[1] == pytest.approx(0.5, abs=1e-9)
        assert dm.populations[2] < 1e-12

    def test_pumping_into_undriven_ground_state(self):
        p = pm.validate(replace(
            pm.preset("bad_cavity"), E_2=0.0, Delta_1=-10.0, Delta_2=-22.0
        ))
        dm = ae.steady_state(p)
        assert dm.populations[1] > 0.999

    def test_drive_free_fallback_returns_even_mixture(self):
        p = pm.validate(replace(
            pm.preset("bad_cavity"), E_1=0.0, E_2=0.0, Delta_1=-3.0, Delta_2=9.0
        ))
        dm = ae.steady_state(p)
        assert dm.populations == pytest.approx((0.5, 0.5, 0.0), abs=1e-12)

    def test_invariants(self):
        p = pm.validate(replace(pm.preset("bad_cavity"), Delta_1=-19.3, Delta_2=-21.0))
        dm = ae.steady_state(p)
        rho = dm.rho
        assert np.abs(rho - rho.conj().T).max() < 1e-10
        assert abs(np.trace(rho) - 1.0) < 1e-10
        assert np.linalg.eigvalsh(rho).min() > -1e-10
        assert dm.residual < 1e-10

    def test_p3_maximum_near_predicted_resonance(self):
        base = pm.preset("bad_cavity")
        best, best_p3 = None, -1.0
        for d1 in np.arange(-40.0, 0.0, 1.0):
            p = pm.validate(replace(base, Delta_1=float(d1), Delta_2=-22.0))
            p3 = ae.steady_state(p).populations[2]
            if p3 > best_p3:
                best, best_p3 = d1, p3
        assert -22.0 <= best <= -16.0


def test_inter_pair_scattering_cross_validated_against_th():
    # the two backends route p, q through independent machinery (a pair-
    # exchange Hamiltonian term vs mu/nu-dressed response constants with a
    # non-diagonal decay matrix); bad-cavity agreement pins the conventions
    from wgmatom import fockspace as fs
    from wgmatom import observables as obs
    from wgmatom import th_solver as th

    space = fs.build_space((1, 1, 1, 1))
    base = replace(pm.preset("bad_cavity"), p=30.0, q=10.0)
    for d1 in (-60.0, -19.5, 0.0, 20.0):
        p = pm.validate(replace(base, Delta_1=d1, Delta_2=-22.0))
        state = th.solve_steady_state(th.build_liouvillian(space, p))
        dm = ae.steady_state(p)
        coeffs = obs.output_coefficients(p)
        for mode in ("a1", "b1", "a2", "b2"):
            f_th = obs.flux_th(state, p, mode)
            f_ae = obs.flux_ae(dm, coeffs, mode, p)
            assert abs(f_th - f_ae) < 0.03, (d1, mode, f_th, f_ae)


def test_dump_constants(tmp_path):
    import json

    p = pm.preset("bad_cavity")
    c = ae.effective_constants(p)
    path = tmp_path / "constants.json"
    ae.dump_constants(c, path)
    payload = json.loads(path.read_text())
    assert payload["Delta_11"] == pytest.approx(c.Delta_11)
    assert payload["f_A1"] == {"re": pytest.approx(c.f_A1.real),
                               "im": pytest.approx(c.f_A1.imag)}

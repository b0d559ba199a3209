"""Q factors, efficiency curvature, and bandwidth sweep logic."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qport import matching, momwire, portreduce, qcore

F0 = 1.0e9
OMEGA0 = 2.0 * math.pi * F0


def _matched_eta(rig, match, v, omega):
    """Total efficiency of the fixed feeding behind the fixed match."""
    system = momwire.assemble(rig.geometry, omega)
    y0 = portreduce.port_admittance(system, None, rig.reduction)
    pair = matching.waves(y0, match, omega, v)
    return 1.0 - pair.p_reflected / pair.p_incident


def _eta_curvature_fd(rig, match, v, omega0, rel=1e-3):
    """Richardson second difference of the swept matched efficiency."""

    def second(h):
        plus = _matched_eta(rig, match, v, omega0 + h)
        minus = _matched_eta(rig, match, v, omega0 - h)
        center = _matched_eta(rig, match, v, omega0)
        return (plus - 2.0 * center + minus) / (h * h)

    h = omega0 * rel
    return (4.0 * second(h / 2.0) - second(h)) / 3.0


class TestStoredEnergies:
    def test_energies_nonnegative_for_dipole(self, single_rig):
        v = np.array([1.0])
        excitation = portreduce.expand_voltage(
            single_rig.reduction, portreduce.PortExcitation(v)
        )
        current = momwire.solve_current(single_rig.system, None, excitation)
        en = qcore.stored_energies(single_rig.system, single_rig.dz, current)
        assert en.w_m >= 0.0 and en.w_e >= 0.0
        assert not en.indefinite
        assert en.p_rad > 0.0

    def test_energy_split_reassembles_reactive_power(self, pair_rig):
        v = np.array([1.0, -1.0])
        excitation = portreduce.expand_voltage(
            pair_rig.reduction, portreduce.PortExcitation(v)
        )
        current = momwire.solve_current(pair_rig.system, None, excitation)
        en = qcore.stored_energies(pair_rig.system, pair_rig.dz, current)
        assert 2.0 * OMEGA0 * (en.w_m - en.w_e) == pytest.approx(en.p_react, rel=1e-10)


class TestRadiationQ:
    @pytest.mark.parametrize("v", [np.array([1.0, 1.0]), np.array([1.0, -1.0]),
                                   np.array([1.0, 0.5j])])
    def test_port_level_equals_solver_level(self, pair_rig, v):
        excitation = portreduce.expand_voltage(
            pair_rig.reduction, portreduce.PortExcitation(v)
        )
        current = momwire.solve_current(pair_rig.system, None, excitation)
        en = qcore.stored_energies(pair_rig.system, pair_rig.dz, current)
        q_mom = qcore.q_rad_mom(en, OMEGA0)
        w_red = portreduce.reduce_matrix(
            pair_rig.dz.imag, pair_rig.system, None, pair_rig.reduction
        )
        q_port = qcore.q_rad_port(pair_rig.y0, w_red, v, OMEGA0)
        assert q_port == pytest.approx(q_mom, rel=1e-12)


class TestEfficiencyCurvature:
    @pytest.mark.parametrize("v", [np.array([1.0, 1.0]), np.array([1.0, -1.0])])
    def test_closed_form_matches_swept_efficiency(self, pair_rig, v):
        match = matching.synthesize_match(pair_rig.y0, v, OMEGA0)
        ddy0 = portreduce.port_admittance_second_derivative(
            pair_rig.geometry, OMEGA0, None, pair_rig.reduction
        )
        closed = qcore.eta_second_derivative(
            pair_rig.y0, pair_rig.dy0, ddy0, match, v, OMEGA0
        )
        fd = _eta_curvature_fd(pair_rig, match, v, OMEGA0)
        assert closed == pytest.approx(fd, rel=1e-3)

    @pytest.mark.parametrize("v", [np.array([1.0, 1.0]), np.array([1.0, -1.0])])
    def test_q_tarc_is_curvature_in_disguise(self, pair_rig, v):
        match = matching.synthesize_match(pair_rig.y0, v, OMEGA0)
        ddy0 = portreduce.port_admittance_second_derivative(
            pair_rig.geometry, OMEGA0, None, pair_rig.reduction
        )
        curvature = qcore.eta_second_derivative(
            pair_rig.y0, pair_rig.dy0, ddy0, match, v, OMEGA0
        )
        q = qcore.q_tarc(pair_rig.y0, pair_rig.dy0, match, v, OMEGA0)
        assert q == pytest.approx(math.sqrt(-0.5 * OMEGA0 ** 2 * curvature), rel=1e-9)

    def test_detuned_state_is_rejected_by_q_tarc(self, pair_rig):
        v = np.array([1.0, 1.0])
        match = matching.synthesize_match(pair_rig.y0, v, OMEGA0)
        detuned = matching.MatchingState(
            r0=match.r0, element=match.element, value=match.value * 1.05,
            omega_ref=match.omega_ref,
        )
        with pytest.raises(qcore.UnmatchedStateError):
            qcore.q_tarc(pair_rig.y0, pair_rig.dy0, detuned, v, OMEGA0)


class TestSinglePortCollapse:
    def test_all_three_q_definitions_agree(self, single_rig):
        v = np.array([1.0])
        match = matching.synthesize_match(single_rig.y0, v, OMEGA0)
        q_t = qcore.q_tarc(single_rig.y0, single_rig.dy0, match, v, OMEGA0)
        q_m = qcore.q_zm(single_rig.y0, single_rig.dy0, v, OMEGA0)
        q_i = qcore.q_z(single_rig.y0[0, 0], single_rig.dy0[0, 0], match, OMEGA0)
        assert q_m == pytest.approx(q_t, rel=1e-9)
        assert q_i == pytest.approx(q_t, rel=1e-9)

    @pytest.mark.parametrize("v", [np.array([1.0, 1.0]), np.array([1.0, -1.0])])
    def test_symmetric_pair_eigenvectors_collapse_q_zm(self, pair_rig, v):
        # the symmetric two-element array shares eigenvectors between the
        # admittance and its derivative, which is exactly when the prior-art
        # formula agrees
        match = matching.synthesize_match(pair_rig.y0, v, OMEGA0)
        q_t = qcore.q_tarc(pair_rig.y0, pair_rig.dy0, match, v, OMEGA0)
        q_m = qcore.q_zm(pair_rig.y0, pair_rig.dy0, v, OMEGA0)
        assert q_m == pytest.approx(q_t, rel=1e-9)

    def test_five_element_tapered_feeding_splits_the_definitions(self, five_rig):
        v = np.array([1.0, 2.0, 3.0, 2.0, 1.0])
        match = matching.synthesize_match(five_rig.y0, v, OMEGA0)
        q_t = qcore.q_tarc(five_rig.y0, five_rig.dy0, match, v, OMEGA0)
        q_m = qcore.q_zm(five_rig.y0, five_rig.dy0, v, OMEGA0)
        assert abs(q_t - q_m) / q_t > 0.01


class TestSeriesRlcClosedForm:
    R, L = 12.0, 40e-9

    def _admittance(self, omega):
        c = 1.0 / (OMEGA0 ** 2 * self.L)
        z = self.R + 1j * omega * self.L + 1.0 / (1j * omega * c)
        return np.array([[1.0 / z]])

    def _admittance_derivative(self, omega):
        c = 1.0 / (OMEGA0 ** 2 * self.L)
        z = self.R + 1j * omega * self.L + 1.0 / (1j * omega * c)
        dz = 1j * self.L + 1j / (omega ** 2 * c)
        return np.array([[-dz / (z * z)]])

    def test_q_tarc_equals_omega_l_over_r(self):
        y0 = self._admittance(OMEGA0)
        dy0 = self._admittance_derivative(OMEGA0)
        v = np.array([1.0])
        match = matching.synthesize_match(y0, v, OMEGA0)
        q = qcore.q_tarc(y0, dy0, match, v, OMEGA0)
        assert q == pytest.approx(OMEGA0 * self.L / self.R, rel=1e-12)

    def test_q_z_equals_omega_l_over_r(self):
        y0 = self._admittance(OMEGA0)
        dy0 = self._admittance_derivative(OMEGA0)
        match = matching.synthesize_match(y0, np.array([1.0]), OMEGA0)
        q = qcore.q_z(y0[0, 0], dy0[0, 0], match, OMEGA0)
        assert q == pytest.approx(OMEGA0 * self.L / self.R, rel=1e-12)


class TestBandwidthPrediction:
    def test_predicted_fraction(self):
        assert qcore.fbw_predict(10.0, 0.2) == pytest.approx(0.04)

    def test_zero_q_is_unbounded(self):
        with pytest.raises(qcore.UnboundedBandwidthError):
            qcore.fbw_predict(0.0, 0.2)

    @pytest.mark.parametrize("gamma", [0.0, 1.0, -0.1])
    def test_ceiling_domain_checked(self, gamma):
        with pytest.raises(ValueError):
            qcore.fbw_predict(5.0, gamma)

    def test_approximation_floor_and_clip(self):
        omegas = OMEGA0 * np.linspace(0.5, 1.5, 11)
        vals = qcore.tarc_approx(8.0, OMEGA0, omegas, eta_max=0.9)
        assert vals[5] == pytest.approx(math.sqrt(0.1))
        assert vals.max() <= 1.0
        assert np.all(np.diff(vals[5:]) >= 0.0)


class TestSweptBandwidth:
    def _v_curve(self, q, n=801, span=0.2):
        omegas = OMEGA0 * np.linspace(1.0 - span, 1.0 + span, n)
        tarc = np.minimum(q * np.abs(omegas - OMEGA0) / OMEGA0, 1.0)
        return omegas, tarc

    def test_linear_v_curve_inverts_exactly(self):
        omegas, tarc = self._v_curve(12.0)
        swept = qcore.fbw_sweep(omegas, tarc, OMEGA0, 0.2)
        assert swept.fbw == pytest.approx(2.0 * 0.2 / 12.0, rel=1e-9)
        assert not swept.double_resonance
        assert swept.omega_plus - OMEGA0 == pytest.approx(OMEGA0 - swept.omega_minus,
                                                          rel=1e-9)

    @settings(max_examples=40, deadline=None)
    @given(
        q=st.floats(min_value=2.0, max_value=80.0),
        gamma=st.floats(min_value=0.05, max_value=0.5),
    )
    def test_v_curve_inversion_property(self, q, gamma):
        omegas, tarc = self._v_curve(q, span=min(0.45, 2.0 * gamma / q * 4.0 + 0.05))
        swept = qcore.fbw_sweep(omegas, tarc, OMEGA0, gamma)
        assert swept.fbw == pytest.approx(2.0 * gamma / q, rel=1e-6)

    def test_asymmetric_band_flags_double_resonance(self):
        omegas = OMEGA0 * np.linspace(0.8, 1.2, 801)
        delta = (omegas - OMEGA0) / OMEGA0
        tarc = np.minimum(np.where(delta < 0.0, 30.0, 6.0) * np.abs(delta), 1.0)
        swept = qcore.fbw_sweep(omegas, tarc, OMEGA0, 0.2)
        assert swept.double_resonance

    def test_twin_dip_flags_double_resonance(self):
        omegas = OMEGA0 * np.linspace(0.9, 1.1, 801)
        delta = (omegas - OMEGA0) / OMEGA0
        # W-shaped curve: shallow local maximum at the center, dips at
        # +-2.5 percent, rising walls outside
        tarc = 0.05 + 60.0 * (np.abs(delta) - 0.025) ** 2
        tarc = np.minimum(tarc, 1.0)
        swept = qcore.fbw_sweep(omegas, tarc, OMEGA0, 0.3)
        assert swept.double_resonance
        assert swept.n_minima >= 2

    def test_center_above_ceiling_is_an_error(self):
        omegas, tarc = self._v_curve(10.0)
        with pytest.raises(qcore.BandEdgeError) as err:
            qcore.fbw_sweep(omegas, tarc + 0.5, OMEGA0, 0.2)
        assert err.value.side == "center"

    def test_missing_upper_edge_names_the_side(self):
        omegas = OMEGA0 * np.linspace(0.9, 1.1, 401)
        delta = (omegas - OMEGA0) / OMEGA0
        tarc = np.where(delta < 0.0, np.minimum(40.0 * np.abs(delta), 1.0), 0.0)
        with pytest.raises(qcore.BandEdgeError) as err:
            qcore.fbw_sweep(omegas, tarc, OMEGA0, 0.2)
        assert err.value.side == "upper"

    def test_center_outside_grid_is_a_range_error(self):
        omegas, tarc = self._v_curve(10.0)
        from qport._interp import GridRangeError

        with pytest.raises(GridRangeError):
            qcore.fbw_sweep(omegas, tarc, 2.0 * OMEGA0, 0.2)

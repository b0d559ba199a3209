"""Solver-level tests: kernel integrals, physical sanity, and validation."""

import math

import numpy as np
import pytest
from scipy.integrate import dblquad

from qport import momwire, portreduce, scenarios
from qport.momwire import _static_monomials

F0 = 1.0e9
OMEGA0 = 2.0 * math.pi * F0
LAM0 = momwire.C0 / F0


def _quad_monomial(a, b, c, dp, dq, rho):
    """Brute-force reference for the static 1/R monomial integrals."""

    def integrand(xis, xio):
        r = math.hypot(c + xio * dp - xis * dq, rho)
        return (xio ** a) * (xis ** b) / r

    val, err = dblquad(integrand, 0.0, 1.0, 0.0, 1.0, epsabs=1e-12, epsrel=1e-11)
    assert err < 1e-6 * max(1.0, abs(val))
    return val * dp * dq


class TestStaticMonomials:
    cases = [
        # same segment, lateral offset = wire radius
        (0.0, 4.7e-3, 4.7e-3, 1.5e-4),
        # adjacent segments on one wire
        (4.7e-3, 4.7e-3, 4.7e-3, 1.5e-4),
        # far segments on one wire
        (8.0e-2, 4.7e-3, 4.7e-3, 1.5e-4),
        # opposite wire, axially aligned
        (0.0, 4.7e-3, 4.7e-3, 3.75e-2),
        # unequal segment lengths, negative offset
        (-6.0e-3, 4.0e-3, 5.3e-3, 2.0e-3),
    ]

    @pytest.mark.parametrize("c,dp,dq,rho", cases)
    def test_matches_quadrature(self, c, dp, dq, rho):
        got = _static_monomials(
            np.array([c]), np.array([dp]), np.array([dq]), np.array([rho])
        )
        for (a, b), val in zip([(0, 0), (1, 0), (0, 1), (1, 1)], got):
            want = _quad_monomial(a, b, c, dp, dq, rho)
            assert val[0] == pytest.approx(want, rel=5e-7), (a, b)

    def test_same_segment_mixed_monomials_symmetric(self):
        c, dp, dq, rho = 0.0, 4.7e-3, 4.7e-3, 1.5e-4
        _, g10, g01, _ = _static_monomials(
            np.array([c]), np.array([dp]), np.array([dq]), np.array([rho])
        )
        assert g10[0] == pytest.approx(g01[0], rel=1e-12)


class TestAssembledOperator:
    def test_half_wave_dipole_impedance_bracket(self, single_rig):
        z_in = 1.0 / single_rig.y0[0, 0]
        assert 60.0 < z_in.real < 90.0
        assert 20.0 < z_in.imag < 60.0

    def test_exact_reciprocity(self, pair_rig):
        z = pair_rig.system.z
        assert np.max(np.abs(z - z.T)) <= 1e-14 * np.max(np.abs(z))

    def test_passive_real_part(self, pair_rig):
        eigs = np.linalg.eigvalsh(pair_rig.system.z.real)
        assert eigs.min() >= -1e-12 * eigs.max()

    def test_frequency_scale_invariance_at_ports(self, rig_factory):
        # halving every length while doubling the frequency keeps the port
        # impedance in ohms; the raw operator carries the basis length scale
        # squared
        geom1 = scenarios.parallel_dipole_array(2, LAM0 / 8.0, F0, segments=16)
        geom2 = scenarios.parallel_dipole_array(2, LAM0 / 16.0, 2.0 * F0, segments=16)
        sys1 = momwire.assemble(geom1, OMEGA0)
        sys2 = momwire.assemble(geom2, 2.0 * OMEGA0)
        assert np.allclose(sys2.z, sys1.z / 4.0, rtol=1e-12, atol=0.0)
        red1 = portreduce.PortReduction.from_geometry(geom1)
        red2 = portreduce.PortReduction.from_geometry(geom2)
        zp1 = np.linalg.inv(portreduce.port_admittance(sys1, None, red1))
        zp2 = np.linalg.inv(portreduce.port_admittance(sys2, None, red2))
        assert np.allclose(zp1, zp2, rtol=1e-12, atol=0.0)

    def test_mesh_convergence(self, rig_factory):
        vals = []
        for segments in (32, 64):
            geom = scenarios.parallel_dipole_array(1, LAM0, F0, segments=segments)
            rig = rig_factory(geom)
            vals.append(1.0 / rig.y0[0, 0])
        assert abs(vals[1] - vals[0]) / abs(vals[0]) < 0.02

    def test_reactance_sign_flips_through_resonance(self, single_rig):
        geom = single_rig.geometry
        red = single_rig.reduction
        low = portreduce.port_admittance(momwire.assemble(geom, 0.9 * OMEGA0), None, red)
        high = single_rig.y0
        assert (1.0 / low[0, 0]).imag < 0.0 < (1.0 / high[0, 0]).imag

    def test_derivative_step_self_consistency(self, pair_rig):
        d1 = pair_rig.dz
        d2 = momwire.impedance_derivative(pair_rig.geometry, OMEGA0, rel_step=1e-6)
        rel = np.linalg.norm(d1 - d2) / np.linalg.norm(d1)
        assert rel < 1e-6


class TestPowers:
    def test_input_power_balance(self, pair_rig):
        v = np.array([1.0, 1.0j])
        excitation = portreduce.expand_voltage(
            pair_rig.reduction, portreduce.PortExcitation(v)
        )
        current = momwire.solve_current(pair_rig.system, None, excitation)
        pw = momwire.powers(pair_rig.system, None, current)
        p_in = 0.5 * float(np.real(np.vdot(current, excitation)))
        assert pw.p_loss == 0.0
        assert pw.p_rad == pytest.approx(p_in, rel=1e-10)

    @pytest.mark.parametrize("eta", [0.5, 0.9, 0.997])
    def test_loss_model_hits_target_efficiency_for_any_excitation(self, pair_rig, eta):
        loss = momwire.loss_for_efficiency(pair_rig.system, eta)
        for v in (np.array([1.0, 1.0]), np.array([1.0, -1.0]), np.array([1.0, 0.3j])):
            excitation = portreduce.expand_voltage(
                pair_rig.reduction, portreduce.PortExcitation(v)
            )
            current = momwire.solve_current(pair_rig.system, loss, excitation)
            pw = momwire.powers(pair_rig.system, loss, current)
            assert pw.p_rad / (pw.p_rad + pw.p_loss) == pytest.approx(eta, rel=1e-12)


class TestValidation:
    def test_odd_segment_count_rejected(self):
        with pytest.raises(momwire.GeometryError):
            momwire.Wire(
                length=0.15, radius=1e-4, center=(0, 0, 0), axis=(0, 0, 1),
                segments=31, port_segment=15,
            )

    def test_port_segment_must_hit_an_interior_node(self):
        with pytest.raises(momwire.GeometryError):
            momwire.Wire(
                length=0.15, radius=1e-4, center=(0, 0, 0), axis=(0, 0, 1),
                segments=32, port_segment=32,
            )

    def test_non_parallel_wires_rejected(self):
        a = momwire.Wire(length=0.15, radius=1e-4, center=(0, 0, 0),
                         axis=(0, 0, 1), segments=32, port_segment=16)
        b = momwire.Wire(length=0.15, radius=1e-4, center=(0.05, 0, 0),
                         axis=(0, 1e-3, 1), segments=32, port_segment=16)
        with pytest.raises(momwire.GeometryError):
            momwire.WireArrayGeometry(wires=(a, b))

    def test_thick_wire_next_to_thin_gap_rejected(self):
        with pytest.raises(momwire.GeometryError, match="gap"):
            scenarios.parallel_dipole_array(2, 1e-3, F0)

    def test_coarse_mesh_rejected_with_suggestion(self):
        geom = scenarios.parallel_dipole_array(1, LAM0, F0, segments=10)
        with pytest.raises(momwire.AssemblyError, match=r"\d+"):
            momwire.assemble(geom, 8.0 * OMEGA0)

    def test_geometry_round_trip_and_fingerprint(self, tmp_path, pair_rig):
        path = tmp_path / "pair.json"
        momwire.save_geometry(pair_rig.geometry, path)
        loaded = momwire.load_geometry(path)
        assert momwire.geometry_fingerprint(loaded) == momwire.geometry_fingerprint(
            pair_rig.geometry
        )
        other = scenarios.parallel_dipole_array(2, LAM0 / 4.0, F0)
        assert momwire.geometry_fingerprint(other) != momwire.geometry_fingerprint(
            pair_rig.geometry
        )

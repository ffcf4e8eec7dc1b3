import numpy as np
import pytest

from zakbench.errors import ContractViolation, GridRangeError, RealityViolation, SingularDirectionError
from zakbench.fields import physical_field, zero_field
from zakbench.grid import Grid
from zakbench.model import (
    MINUS,
    PLUS,
    Parameters,
    State,
    from_halfwave,
    from_profiles,
    grad_eta_phi,
    grad_eta_psi,
    grad_xi_phi,
    grad_xi_psi,
    null_identity_phi_residual,
    null_identity_psi_residual,
    phase_phi,
    phase_psi,
    resonance_scan,
    state_from_profiles,
    to_halfwave,
    to_profiles,
    validate_parameters,
)
from zakbench.spectral import apply_multiplier, dft_forward, dft_inverse, schrodinger_symbol

from conftest import random_field

E1 = np.array([1.0, 0.0, 0.0])


def make_state(grid, rng, t=0.0, u_scale=0.1, n_scale=0.1):
    def real_zero_mean():
        v = rng.standard_normal(grid.shape)
        return physical_field(grid, (v - v.mean()).astype(np.complex128))

    u = random_field(grid, rng) * u_scale
    return State(u=u, n=real_zero_mean() * n_scale, n_t=real_zero_mean() * n_scale, t=t)


class TestHalfWave:
    def test_zero_time_derivative_case(self):
        g = Grid(16, 16.0)
        X = np.broadcast_to(g.xmesh()[0], g.shape)
        n = physical_field(g, np.cos(2 * np.pi * X / g.length).astype(np.complex128))
        st = State(u=zero_field(g), n=n, n_t=zero_field(g))
        hw = to_halfwave(st)
        assert np.max(np.abs(hw.w_plus.values - n.values)) < 1e-12
        assert np.max(np.abs(hw.w_minus.values + n.values)) < 1e-12

    def test_round_trip(self, grid16, rng):
        st = make_state(grid16, rng)
        hw = to_halfwave(st)
        back = from_halfwave(hw, (0.0, 0.0), u=st.u)
        for a, b in ((back.n, st.n), (back.n_t, st.n_t)):
            assert np.max(np.abs(a.values - b.values)) < 1e-12 * max(b.linf(), 1e-300)

    def test_reality_pairing(self, grid16, rng):
        hw = to_halfwave(make_state(grid16, rng))
        hw.validate()
        residue = np.max(np.abs(np.conj(hw.w_plus.values) + hw.w_minus.values))
        assert residue < 1e-10 * hw.w_plus.linf()

    def test_nonreal_reconstruction_rejected(self, grid16, rng):
        w = random_field(grid16, rng)
        hw_bad = type(to_halfwave(make_state(grid16, rng)))(w_plus=w, w_minus=zero_field(grid16))
        with pytest.raises(RealityViolation):
            from_halfwave(hw_bad)

    def test_requires_zero_mean(self, grid16, rng):
        n = physical_field(grid16, np.ones(grid16.shape))
        st = State(u=zero_field(grid16), n=n, n_t=zero_field(grid16))
        with pytest.raises(ContractViolation):
            to_halfwave(st)


class TestProfiles:
    def test_identity_at_time_zero(self, grid16, rng):
        st = make_state(grid16, rng, t=0.0)
        p = to_profiles(st)
        hw = to_halfwave(st)
        assert np.max(np.abs(p.f.values - st.u.values)) < 1e-13
        assert np.max(np.abs(p.g_plus.values - hw.w_plus.values)) < 1e-13

    def test_free_evolution_keeps_f_constant(self, grid16, rng):
        st = make_state(grid16, rng, t=0.0)
        p0 = to_profiles(st)
        dt = 0.7
        u_later = dft_inverse(apply_multiplier(dft_forward(st.u), schrodinger_symbol(dt)))
        st_later = State(u=u_later, n=st.n, n_t=st.n_t, t=dt)
        # wave part is not free-evolved here; only compare f
        p1 = to_profiles(st_later)
        assert np.max(np.abs(p1.f.values - p0.f.values)) < 1e-12 * p0.f.linf()

    def test_round_trip(self, grid16, rng):
        st = make_state(grid16, rng, t=1.3)
        back = state_from_profiles(to_profiles(st))
        assert np.max(np.abs(back.u.values - st.u.values)) < 1e-12 * st.u.linf()
        assert np.max(np.abs(back.n.values - st.n.values)) < 1e-12 * max(st.n.linf(), 1e-300)
        assert back.t == st.t

    def test_mass_equality(self, grid16, rng):
        st = make_state(grid16, rng, t=2.1)
        p = to_profiles(st)
        assert abs(p.f.l2() - st.u.l2()) < 1e-12 * st.u.l2()

    def test_mean_tracking(self, grid16, rng):
        st = make_state(grid16, rng, t=2.0)
        st = State(u=st.u, n=st.n, n_t=st.n_t, n_mean=0.3, n_t_mean=0.1, t=2.0)
        p = to_profiles(st)
        assert p.n_mean_at(2.0) == pytest.approx(0.3, abs=1e-14)
        back = state_from_profiles(p)
        assert back.n_mean == pytest.approx(0.3, abs=1e-14)
        assert back.n_t_mean == pytest.approx(0.1, abs=1e-14)


class TestPhases:
    def test_hand_values(self):
        assert phase_phi(E1, E1, PLUS) == pytest.approx(2.0, abs=1e-14)
        assert phase_phi(E1, E1, MINUS) == pytest.approx(0.0, abs=1e-14)
        assert phase_psi(E1, E1, PLUS) == pytest.approx(0.0, abs=1e-14)
        assert phase_psi(E1, E1, MINUS) == pytest.approx(2.0, abs=1e-14)

    def test_eta_zero_annihilates_phi(self, rng):
        xi = rng.standard_normal((50, 3))
        eta = np.zeros((50, 3))
        assert np.max(np.abs(phase_phi(xi, eta, PLUS))) == 0.0

    def test_phi_depends_on_xi_through_dot_product(self, rng):
        eta = rng.standard_normal(3)
        xi1 = rng.standard_normal(3)
        # another xi with the same dot product against eta
        perp = np.cross(eta, rng.standard_normal(3))
        xi2 = xi1 + 3.7 * perp
        assert np.dot(xi1, eta) == pytest.approx(np.dot(xi2, eta), rel=1e-12)
        for s in (PLUS, MINUS):
            assert phase_phi(xi1, eta, s) == pytest.approx(phase_phi(xi2, eta, s), rel=1e-12)

    def test_gradients(self, rng):
        xi = rng.standard_normal((20, 3)) + 0.5
        eta = rng.standard_normal((20, 3)) + 0.5
        ge = grad_eta_phi(xi, eta, PLUS)
        expected = 2 * xi - 2 * eta + eta / np.linalg.norm(eta, axis=-1, keepdims=True)
        assert np.max(np.abs(ge - expected)) < 1e-14
        assert np.max(np.abs(grad_eta_psi(xi, eta, MINUS) - 2 * xi)) == 0.0
        assert np.max(np.abs(grad_xi_phi(xi, eta, PLUS) + 2 * eta)) == 0.0

    def test_singular_directions(self):
        with pytest.raises(SingularDirectionError):
            grad_eta_phi(E1, np.zeros(3), PLUS)
        with pytest.raises(SingularDirectionError):
            grad_xi_psi(np.zeros(3), E1, PLUS)
        with pytest.raises(SingularDirectionError):
            null_identity_psi_residual(np.zeros(3), E1, PLUS)
        with pytest.raises(SingularDirectionError):
            null_identity_phi_residual(E1, np.zeros(3), PLUS)

    def test_sign_validation(self):
        with pytest.raises(ContractViolation):
            phase_phi(E1, E1, 2)


class TestNullIdentities:
    def test_psi_residual_at_point(self):
        r = null_identity_psi_residual(E1, np.array([0.0, 1.0, 0.0]), PLUS)
        assert abs(r) < 1e-14

    def test_psi_residual_is_eta_independent(self, rng):
        xi = rng.standard_normal(3) + 0.5
        r1 = null_identity_psi_residual(xi, rng.standard_normal(3), PLUS)
        r2 = null_identity_psi_residual(xi, rng.standard_normal(3), PLUS)
        assert r1 == pytest.approx(r2, abs=1e-14)

    def test_phi_residual_at_point(self):
        r = null_identity_phi_residual(E1, np.array([0.0, 0.0, 1.0]), PLUS)
        assert np.max(np.abs(r)) < 1e-14

    def test_phi_residual_collinear(self):
        xi = 0.8 * E1
        eta = -1.4 * E1
        for s in (PLUS, MINUS):
            assert np.max(np.abs(null_identity_phi_residual(xi, eta, s))) < 1e-14

    def test_randomized_sweeps(self, rng):
        xi = rng.standard_normal((10_000, 3))
        eta = rng.standard_normal((10_000, 3))
        for s in (PLUS, MINUS):
            assert np.max(np.abs(null_identity_psi_residual(xi, eta, s))) < 1e-12
            assert np.max(np.abs(null_identity_phi_residual(xi, eta, s))) < 1e-12


class TestResonanceScan:
    def test_phi_resonant_set_location(self):
        for sign in (PLUS, MINUS):
            scan = resonance_scan("phi", sign, 1.0, 64)
            R = scan.resonant_set
            h = scan.cell
            assert len(R) > 0
            eta_mag = np.hypot(R[:, 3], R[:, 4])
            xi_mag = np.abs(R[:, 0])
            assert eta_mag.max() <= 2 * h
            assert np.abs(xi_mag - 0.5).max() <= 2 * h
            # both hemispheres of the resonant sphere are represented
            for target in (0.5, -0.5):
                d = np.sqrt((R[:, 0] - target) ** 2 + R[:, 3] ** 2 + R[:, 4] ** 2)
                assert d.min() <= 2 * np.sqrt(3) * h

    def test_psi_resonant_set_location(self):
        scan = resonance_scan("psi", PLUS, 1.0, 64)
        R = scan.resonant_set
        assert len(R) > 0
        assert np.abs(R[:, 0]).max() <= 2 * scan.cell
        # R is contained in T and in S
        assert len(scan.resonant_set) <= min(len(scan.time_set), len(scan.space_set))

    def test_phi_space_set_contains_half_xi_branch(self):
        # solving 2 xi - 2 eta + eta/|eta| = 0 for small eta along e1
        # puts xi near -e1/2
        scan = resonance_scan("phi", PLUS, 1.0, 64)
        S = scan.space_set
        h = scan.cell
        d = np.sqrt((S[:, 0] + 0.5) ** 2 + S[:, 3] ** 2 + S[:, 4] ** 2)
        assert d.min() <= 2 * np.sqrt(3) * h

    def test_validation(self):
        with pytest.raises(GridRangeError):
            resonance_scan("phi", PLUS, 1.0, 4)
        with pytest.raises(GridRangeError):
            resonance_scan("phi", PLUS, -1.0, 64)
        with pytest.raises(ContractViolation):
            resonance_scan("chi", PLUS, 1.0, 64)

    def test_csv_output(self, tmp_path):
        scan = resonance_scan("psi", MINUS, 0.5, 8)
        path = tmp_path / "scan.csv"
        scan.write_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "xi1,xi2,xi3,eta1,eta2,eta3,set_tag"
        tags = {line.rsplit(",", 1)[1] for line in lines[1:]}
        assert tags <= {"T", "S", "R"}
        assert len(lines) == 1 + len(scan.time_set) + len(scan.space_set) + len(scan.resonant_set)


class TestParameters:
    def test_reference_values(self):
        p = Parameters.consistent(eps0=0.05, delta=1.0 / 480.0, N=2400)
        assert p.alpha == pytest.approx(13.0 / 80.0, abs=1e-15)
        assert p.beta == pytest.approx(41.0 / 80.0, abs=1e-15)
        report = validate_parameters(p)
        assert report.passed

    def test_large_delta_fails(self):
        p = Parameters.consistent(eps0=0.05, delta=1.0 / 60.0)
        report = validate_parameters(p)
        assert not report.passed
        failing = [c.name for c in report.checks if not c.passed]
        assert "delta <= 1/480" in failing

    def test_small_n_fails(self):
        p = Parameters.consistent(eps0=0.05, delta=1.0 / 480.0, N=100)
        report = validate_parameters(p)
        assert not report.passed
        failing = [c.name for c in report.checks if not c.passed]
        assert "delta >= 5/N" in failing

    def test_report_lines(self):
        report = validate_parameters(Parameters.consistent(0.01))
        lines = report.lines()
        assert len(lines) == len(report.checks)
        assert all(line.startswith(("PASS", "FAIL")) for line in lines)

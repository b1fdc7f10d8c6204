import math

import numpy as np
import pytest

from eprb.core import PhysicalConfig, SpinOrientation, derive_params, wrap_phi
from eprb.trajectory import (
    PHASE_IN_MAGNET,
    PHASE_POST_MAGNET,
    IntegrationError,
    PairInitialConditions,
    classify_outcome,
    field_params,
    integrate_a,
    mirror_spin_b,
    simulate_pair,
    step2_b_trajectory,
    step2_initial_orientation,
    step2_initial_position,
    theta_after_magnet,
    theta_in_magnet,
    velocity_after_magnet,
    velocity_in_magnet,
)

from oracles import rk4_scalar

SIGMA0 = 1e-4


def _init(z0=0.0, x0=0.0, theta0=0.0, phi0=0.0, z0b=None, x0b=None):
    return PairInitialConditions(
        z0_m=z0, x0_m=x0, orient_a0=SpinOrientation(theta0, phi0),
        z0_b_m=z0b, x0_b_m=x0b,
    )


class TestSpinLaws:
    def test_theta_unchanged_on_axis(self, cfg):
        for t in (0.0, 1e-5, 2e-5):
            for theta0 in (0.3, 1.0, 2.5):
                assert theta_in_magnet(0.0, t, theta0, cfg) == pytest.approx(
                    theta0, abs=1e-14
                )

    def test_theta_half_life_point(self, cfg, d):
        # pick z so the exponent equals ln 2 at magnet exit:
        # tan(theta/2) = tan(pi/4) / 2 -> theta = 2 atan(1/2)
        z = math.log(2.0) * SIGMA0**2 / d.z_delta_m
        got = float(theta_in_magnet(z, d.transit_time_s, math.pi / 2, cfg))
        assert got == pytest.approx(2.0 * math.atan(0.5), abs=1e-12)
        assert got == pytest.approx(0.9272952180016122, abs=1e-12)

    def test_theta_pole_fixed_points(self, cfg):
        for theta0 in (0.0, math.pi):
            assert float(theta_in_magnet(3e-4, 1.5e-5, theta0, cfg)) == theta0

    def test_theta_monotone_in_z(self, cfg):
        z = np.linspace(-5e-4, 5e-4, 401)
        th = theta_in_magnet(z, 2e-5, 1.1, cfg)
        assert np.all(np.diff(th) < 0)

    def test_velocity_in_magnet_poles(self, cfg):
        rate = cfg.magnetic_moment_J_per_T * cfg.B_gradient_T_per_m / cfg.mass_kg
        for t in (0.0, 1e-5, 2e-5):
            assert float(velocity_in_magnet(2e-4, t, 0.0, cfg)) == rate * t
            assert float(velocity_in_magnet(-2e-4, t, math.pi, cfg)) == -(rate * t)

    def test_velocity_in_magnet_equator_axis(self, cfg):
        # cos(pi/2) carries one rounding ulp, so "zero" means 1e-12-level
        assert float(velocity_in_magnet(0.0, 1e-5, math.pi / 2, cfg)) == (
            pytest.approx(0.0, abs=1e-12)
        )

    def test_drift_velocity_poles(self, cfg, d):
        u = d.u_m_per_s
        for z, t in ((0.0, 0.0), (3e-4, 2e-4), (-6e-4, 4e-4)):
            assert float(velocity_after_magnet(z, t, 0.0, d, SIGMA0)) == u
            assert float(velocity_after_magnet(z, t, math.pi, d, SIGMA0)) == -u

    def test_drift_equilibrium(self, cfg, d):
        assert float(velocity_after_magnet(0.0, 1e-4, math.pi / 2, d, SIGMA0)) == (
            pytest.approx(0.0, abs=1e-12)
        )
        assert float(theta_after_magnet(0.0, 1e-4, math.pi / 2, d, SIGMA0)) == (
            pytest.approx(math.pi / 2, abs=1e-14)
        )

    def test_drift_velocity_matches_quotient_form(self, cfg, d):
        # the u cos(theta) evaluation equals the tanh quotient it rewrites
        rng = np.random.default_rng(33)
        u = d.u_m_per_s
        for _ in range(200):
            z = float(rng.normal(0, 3 * SIGMA0))
            t = float(rng.uniform(0, 4e-4))
            theta0 = float(np.arccos(1 - 2 * rng.random()))
            zeta = (d.z_delta_m + u * t) * z / SIGMA0**2
            th = math.tanh(zeta)
            c0 = math.cos(theta0)
            expect = u * (th + c0) / (1.0 + th * c0)
            got = float(velocity_after_magnet(z, t, theta0, d, SIGMA0))
            assert got == pytest.approx(expect, abs=1e-12 * u)

    def test_drift_speed_bounded(self, cfg, d):
        rng = np.random.default_rng(35)
        u = d.u_m_per_s
        z = rng.normal(0, 5 * SIGMA0, 1000)
        t = rng.uniform(0, 4e-4, 1000)
        theta0 = float(np.arccos(1 - 2 * rng.random()))
        v = velocity_after_magnet(z, t, theta0, d, SIGMA0)
        assert np.max(np.abs(v)) <= u + 1e-12


class TestIntegrateA:
    def test_spin_up_closed_form(self, cfg, d):
        samples = integrate_a(_init(theta0=0.0), cfg, d)
        seam = [s for s in samples if s.phase == PHASE_IN_MAGNET][-1]
        assert seam.z_m == pytest.approx(d.z_delta_m, abs=1e-8)
        assert seam.t_s == pytest.approx(d.transit_time_s, rel=1e-12)
        final = samples[-1]
        assert final.z_m == pytest.approx(4.1e-4, abs=1e-8)
        assert final.t_s == pytest.approx(
            d.transit_time_s + d.drift_time_s, rel=1e-12
        )

    def test_spin_down_mirror(self, cfg, d):
        samples = integrate_a(_init(theta0=math.pi), cfg, d)
        assert samples[-1].z_m == pytest.approx(-4.1e-4, abs=1e-8)

    def test_equator_on_axis_fixed_point(self, cfg, d):
        samples = integrate_a(_init(theta0=math.pi / 2), cfg, d, 200, 200)
        for s in samples[:: 40]:
            assert abs(s.z_m) < 1e-12
            assert s.theta_rad == pytest.approx(math.pi / 2, abs=1e-12)

    def test_rejects_few_steps(self, cfg, d):
        with pytest.raises(ValueError):
            integrate_a(_init(), cfg, d, 99, 200)
        with pytest.raises(ValueError):
            integrate_a(_init(), cfg, d, 200, 99)

    def test_strictly_increasing_times_and_phases(self, cfg, d):
        samples = integrate_a(_init(theta0=1.0, z0=1e-5), cfg, d, 150, 250)
        times = np.array([s.t_s for s in samples])
        assert np.all(np.diff(times) > 0)
        phases = [s.phase for s in samples]
        n_in = phases.count(PHASE_IN_MAGNET)
        assert n_in == 151
        assert phases == [PHASE_IN_MAGNET] * n_in + [PHASE_POST_MAGNET] * 250

    def test_matches_independent_rk4(self, cfg, d):
        # cross-check the kernel against a brute-force scalar RK4 driving the
        # public velocity functions
        theta0, z0 = 0.9, -0.7e-4
        samples = integrate_a(_init(z0=z0, theta0=theta0), cfg, d, 200, 400)
        z_seam = rk4_scalar(
            lambda z, t: float(velocity_in_magnet(z, t, theta0, cfg)),
            z0, 0.0, d.transit_time_s, 200,
        )
        seam = [s for s in samples if s.phase == PHASE_IN_MAGNET][-1]
        assert seam.z_m == pytest.approx(z_seam, abs=1e-18)
        z_end = rk4_scalar(
            lambda z, t: float(velocity_after_magnet(z, t, theta0, d, SIGMA0)),
            z_seam, 0.0, d.drift_time_s, 400,
        )
        assert samples[-1].z_m == pytest.approx(z_end, abs=1e-15)

    def test_closed_form_theta_along_path(self, cfg, d):
        rng = np.random.default_rng(44)
        for _ in range(5):
            theta0 = float(np.arccos(1 - 2 * rng.random()))
            z0 = float(rng.normal(0, SIGMA0))
            samples = integrate_a(_init(z0=z0, theta0=theta0), cfg, d, 150, 300)
            for s in samples[:: 30]:
                if s.phase == PHASE_IN_MAGNET:
                    expect = float(theta_in_magnet(s.z_m, s.t_s, theta0, cfg))
                else:
                    expect = float(
                        theta_after_magnet(
                            s.z_m, s.t_s - d.transit_time_s, theta0, d, SIGMA0
                        )
                    )
                assert s.theta_rad == pytest.approx(expect, abs=1e-9)

    def test_mirror_symmetry(self, cfg, d):
        rng = np.random.default_rng(46)
        for _ in range(5):
            theta0 = float(rng.uniform(0.2, math.pi - 0.2))
            z0 = float(rng.normal(0, SIGMA0))
            s1 = integrate_a(_init(z0=z0, theta0=theta0), cfg, d, 150, 300)
            s2 = integrate_a(
                _init(z0=-z0, theta0=math.pi - theta0), cfg, d, 150, 300
            )
            for a, b in zip(s1[::50], s2[::50]):
                assert a.z_m == pytest.approx(-b.z_m, abs=1e-9)
                assert a.theta_rad == pytest.approx(math.pi - b.theta_rad, abs=1e-9)

    def test_default_grid_converged(self, cfg, d):
        samples = integrate_a(_init(z0=0.3e-4, theta0=1.2), cfg, d, 2000, 4000)
        fine = integrate_a(_init(z0=0.3e-4, theta0=1.2), cfg, d, 4000, 8000)
        assert abs(samples[-1].z_m - fine[-1].z_m) < 1e-10

    def test_spin_alignment_at_detection(self, cfg, d):
        # away from the equatorial band the spin ends aligned with a pole
        rng = np.random.default_rng(123)
        count = 0
        while count < 200:
            z0 = float(rng.uniform(-3 * SIGMA0, 3 * SIGMA0))
            theta0 = float(np.arccos(1 - 2 * rng.random()))
            if abs(theta0 - math.pi / 2) <= 1e-3:
                continue
            count += 1
            samples = integrate_a(_init(z0=z0, theta0=theta0), cfg, d, 150, 300)
            assert abs(math.cos(samples[-1].theta_rad)) > 0.99

    def test_nonfinite_aborts(self, cfg, d):
        # bypass the constructor validation to reach the kernel-level check
        bad = PairInitialConditions.__new__(PairInitialConditions)
        object.__setattr__(bad, "z0_m", math.inf)
        object.__setattr__(bad, "x0_m", 0.0)
        object.__setattr__(bad, "z0_b_m", 0.0)
        object.__setattr__(bad, "x0_b_m", 0.0)
        object.__setattr__(bad, "orient_a0", SpinOrientation(1.0, 0.0))
        with pytest.raises(IntegrationError):
            integrate_a(bad, cfg, d, 150, 300)

    def test_init_validates_position(self):
        with pytest.raises(ValueError):
            _init(z0=math.nan)


class TestOutcomeAndMirror:
    def test_mirror_spin_examples(self):
        m = mirror_spin_b(0.0, 0.0)
        assert m.theta_rad == math.pi
        assert m.phi_rad == -math.pi
        m = mirror_spin_b(math.pi / 2, math.pi / 2)
        assert m.theta_rad == pytest.approx(math.pi / 2, abs=1e-15)
        assert m.phi_rad == pytest.approx(-math.pi / 2, abs=1e-15)

    def test_mirror_involution(self):
        rng = np.random.default_rng(50)
        for _ in range(100):
            th = float(rng.uniform(0.01, math.pi - 0.01))
            ph = float(rng.uniform(-math.pi, math.pi))
            m = mirror_spin_b(th, ph)
            mm = mirror_spin_b(m.theta_rad, m.phi_rad)
            assert mm.theta_rad == pytest.approx(th, abs=1e-14)
            assert mm.phi_rad == pytest.approx(wrap_phi(ph), abs=1e-14)

    def test_classify(self):
        from eprb.trajectory import TrajectorySample

        mk = lambda z: TrajectorySample(4.2e-4, z, 0.0, 0.0, PHASE_POST_MAGNET)
        assert classify_outcome(mk(4.1e-4)) == 1
        assert classify_outcome(mk(-1e-6)) == -1
        assert classify_outcome(mk(0.0)) == 1  # documented tie-break


class TestStepTwo:
    def test_initial_orientation_aligned(self):
        o = step2_initial_orientation(1, 0.0)
        assert o.theta_rad == 0.0
        o = step2_initial_orientation(-1, 0.0)
        assert o.theta_rad == math.pi

    def test_initial_orientation_tilted(self):
        delta = 0.9
        o = step2_initial_orientation(1, delta)
        assert o.theta_rad == pytest.approx(delta, abs=1e-12)
        assert o.phi_rad == pytest.approx(0.0, abs=1e-12)
        o = step2_initial_orientation(-1, delta)
        assert o.theta_rad == pytest.approx(math.pi - delta, abs=1e-12)

    def test_initial_position_rotation(self):
        zp, xp = step2_initial_position(1e-4, -2e-4, math.pi / 2)
        assert zp == pytest.approx(2e-4, abs=1e-19)
        assert xp == pytest.approx(1e-4, abs=1e-19)

    def test_aligned_analyzers_agree(self, cfg, d):
        samples, outcome = step2_b_trajectory(_init(), 1, 0.0, cfg, d, 150, 300)
        assert outcome == 1
        assert samples[-1].z_m == pytest.approx(4.1e-4, abs=1e-8)
        _, outcome = step2_b_trajectory(_init(), -1, 0.0, cfg, d, 150, 300)
        assert outcome == -1

    def test_opposed_analyzers_flip(self, cfg, d):
        _, outcome = step2_b_trajectory(_init(), 1, math.pi, cfg, d, 150, 300)
        assert outcome == -1

    def test_uses_b_position(self, cfg, d):
        # B's own coordinates, not A's, set the analyzer-frame start
        init = _init(z0=0.0, x0=0.0, theta0=1.0, z0b=2e-4, x0b=-1e-4)
        samples, _ = step2_b_trajectory(init, 1, math.pi / 2, cfg, d, 150, 300)
        zp0 = 2e-4 * math.cos(math.pi / 2) - (-1e-4) * math.sin(math.pi / 2)
        assert samples[0].z_m == pytest.approx(zp0, abs=1e-19)


class TestSimulatePair:
    def test_aligned_up(self, cfg, d):
        pt = simulate_pair(_init(theta0=0.0), 0.0, cfg, d, 150, 300)
        assert (pt.outcome_a, pt.outcome_b) == (1, 1)

    def test_aligned_down(self, cfg, d):
        pt = simulate_pair(_init(theta0=math.pi), 0.0, cfg, d, 150, 300)
        assert (pt.outcome_a, pt.outcome_b) == (-1, -1)

    def test_b_step1_record_bit_exact(self, cfg, d):
        init = _init(z0=SIGMA0, x0=0.2e-4, theta0=math.pi / 2, phi0=0.4, z0b=0.5e-4)
        pt = simulate_pair(init, math.pi / 2, cfg, d, 150, 300)
        assert len(pt.samples_b_step1) == len(pt.samples_a)
        phi_b = wrap_phi(init.orient_a0.phi_rad - math.pi)
        for sa, sb in zip(pt.samples_a, pt.samples_b_step1):
            assert sb.t_s == sa.t_s
            assert sb.z_m == init.z0_b_m
            assert sb.theta_rad == math.pi - sa.theta_rad  # bit exact
            assert sb.phi_rad == phi_b
            assert sb.phase == sa.phase

    def test_outcomes_well_defined(self, cfg, d):
        pt = simulate_pair(
            _init(z0=SIGMA0, theta0=math.pi / 2), math.pi / 2, cfg, d, 150, 300
        )
        assert pt.outcome_a in (1, -1)
        assert pt.outcome_b in (1, -1)

    def test_step2_time_axis(self, cfg, d):
        pt = simulate_pair(_init(theta0=0.3), 0.5, cfg, d, 150, 300)
        t_detect = d.transit_time_s + d.drift_time_s
        assert pt.samples_b_step2[0].t_s == t_detect
        assert pt.samples_b_step2[1].t_s > t_detect
        assert pt.samples_b_step2[-1].t_s == pytest.approx(2 * t_detect, rel=1e-12)


class TestRichardson:
    def test_fourth_order_ratio(self, cfg, d):
        from eprb import kernels

        fp = field_params(cfg, d)
        rng = np.random.default_rng(0)

        def final(z0, cth, si, so):
            return kernels.rk4_final_batch(
                np.array([z0]), np.array([cth]),
                fp.kmag, fp.rate, fp.u, fp.z_delta, fp.inv_sig2,
                fp.dt_magnet, fp.t_drift, si, so,
            )[0]

        for _ in range(10):
            z0 = float(rng.normal(0, SIGMA0))
            theta0 = float(np.arccos(1 - 2 * rng.random()))
            if abs(math.cos(theta0)) > 0.999:
                theta0 = math.pi / 3  # poles integrate exactly: no error signal
            cth = math.cos(theta0)
            f1 = final(z0, cth, 100, 200)
            f2 = final(z0, cth, 200, 400)
            f4 = final(z0, cth, 400, 800)
            ratio = (f1 - f2) / (f2 - f4)
            assert 13.0 <= ratio <= 19.0

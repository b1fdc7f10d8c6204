import json
import math
from dataclasses import replace

import numpy as np
import pytest

from eprb.core import PhysicalConfig, derive_params, wrap_phi
from eprb.ensemble import (
    EnsembleConfig,
    Histogram,
    _sample_arrays,
    bin_masses,
    correlation_sweep,
    histogram_edges,
    run_ensemble,
    sample_initials,
    sweep_seeds,
    tv_distance,
)

from oracles import gauss_mass

SIGMA0 = 1e-4

# coarse but valid step counts keep the statistical tests fast; outcomes are
# threshold decisions and insensitive to the integration resolution
FAST = dict(steps_in=100, steps_out=100)


class TestSampling:
    def test_deterministic(self):
        a = sample_initials(64, 123, SIGMA0)
        b = sample_initials(64, 123, SIGMA0)
        for pa, pb in zip(a, b):
            assert pa == pb

    def test_index_addressable(self):
        # pair k's draws do not depend on how many pairs are generated
        full = sample_initials(50, 9, SIGMA0)
        z0a, x0a, z0b, x0b, th, ph = _sample_arrays(9, 17, 18, SIGMA0)
        assert full[17].z0_m == z0a[0]
        assert full[17].x0_m == x0a[0]
        assert full[17].z0_b_m == z0b[0]
        assert full[17].x0_b_m == x0b[0]
        assert full[17].orient_a0.theta_rad == th[0]
        assert full[17].orient_a0.phi_rad == wrap_phi(ph[0])

    def test_position_moments(self):
        n = 100_000
        z0a, x0a, z0b, x0b, th, ph = _sample_arrays(2024, 0, n, SIGMA0)
        bound = 3 * SIGMA0 / math.sqrt(n)
        for arr in (z0a, x0a, z0b, x0b):
            assert abs(arr.mean()) < bound
        # uniform sphere: Var(cos theta) = 1/3
        assert abs(np.cos(th).mean()) < 0.01
        assert abs(ph.mean()) < 3 * math.pi / math.sqrt(3 * n)

    def test_positions_of_a_and_b_independent(self):
        n = 100_000
        z0a, _, z0b, _, _, _ = _sample_arrays(5, 0, n, SIGMA0)
        corr = np.corrcoef(z0a, z0b)[0, 1]
        assert abs(corr) < 3 / math.sqrt(n)

    def test_spin_hemispheres_balanced(self):
        n = 100_000
        *_, th, _ = _sample_arrays(77, 0, n, SIGMA0)
        frac = np.mean(np.cos(th) > 0)
        assert abs(frac - 0.5) < 3 / (2 * math.sqrt(n))

    def test_b_orientation_antipodal_exact(self):
        for p in sample_initials(32, 4, SIGMA0):
            ob = p.orient_b0
            assert ob.theta_rad == math.pi - p.orient_a0.theta_rad
            assert ob.phi_rad == wrap_phi(p.orient_a0.phi_rad - math.pi)

    def test_rejects_bad_args(self):
        with pytest.raises(ValueError):
            sample_initials(0, 1, SIGMA0)


class TestHistogramTools:
    def test_default_edges(self, d):
        edges = histogram_edges(d, SIGMA0)
        assert len(edges) == 102  # 101 bins of width sigma0/5
        assert edges[0] == pytest.approx(-1.01e-3, rel=1e-12)
        assert edges[-1] == pytest.approx(1.01e-3, rel=1e-12)
        widths = np.diff(edges)
        assert np.allclose(widths, SIGMA0 / 5, rtol=1e-9)

    def test_bin_masses_vs_erf(self, d):
        # package quadrature against the closed-form Gaussian mass
        edges = histogram_edges(d, SIGMA0)
        masses = bin_masses(
            lambda z: np.exp(-np.square(z) / (2 * SIGMA0**2))
            / (SIGMA0 * math.sqrt(2 * math.pi)),
            edges,
        )
        expect = np.array(
            [gauss_mass(0.0, SIGMA0, edges[i], edges[i + 1]) for i in range(101)]
        )
        assert np.max(np.abs(masses - expect)) < 1e-12

    def test_tv_disjoint_supports(self):
        edges = np.linspace(0.0, 1.0, 11)
        counts = np.zeros(10, dtype=int)
        counts[0] = 100
        hist = Histogram(bin_edges_m=edges, counts=counts)
        # density supported entirely on the last bin
        tv = tv_distance(hist, lambda z: np.where(z > 0.9, 10.0, 0.0))
        assert tv == pytest.approx(1.0, abs=1e-9)

    def test_tv_self_consistency(self, d):
        rng = np.random.default_rng(8)
        n = 200_000
        reach = d.z_delta_m + d.u_m_per_s * d.drift_time_s
        comp = rng.choice([-1.0, 1.0], n)
        z = comp * reach + rng.normal(0, SIGMA0, n)
        edges = histogram_edges(d, SIGMA0)
        counts, _ = np.histogram(z, bins=edges)
        hist = Histogram(bin_edges_m=edges, counts=counts)

        def dens(zz):
            c = 1.0 / (SIGMA0 * math.sqrt(2 * math.pi))
            return 0.5 * c * (
                np.exp(-np.square(zz - reach) / (2 * SIGMA0**2))
                + np.exp(-np.square(zz + reach) / (2 * SIGMA0**2))
            )

        assert tv_distance(hist, dens) < 0.02

    def test_tv_rejects_empty(self):
        hist = Histogram(bin_edges_m=np.linspace(0, 1, 3), counts=np.zeros(2))
        with pytest.raises(ValueError):
            tv_distance(hist, lambda z: np.ones_like(z))


class TestRunEnsemble:
    def test_config_validation(self):
        with pytest.raises(ValueError):
            EnsembleConfig(n_pairs=0, seed=1)
        with pytest.raises(ValueError):
            EnsembleConfig(n_pairs=10, seed=-1)
        with pytest.raises(ValueError):
            EnsembleConfig(n_pairs=10, seed=1, convention="weird")
        with pytest.raises(ValueError):
            EnsembleConfig(n_pairs=10, seed=1, steps_in=10)

    def test_tallies_and_fraction(self, cfg, d):
        ec = EnsembleConfig(n_pairs=4000, seed=11, delta_rad=1.0, **FAST)
        st = run_ensemble(ec, cfg, d)
        assert sum(st.counts.values()) == 4000
        n_same = st.counts["++"] + st.counts["--"]
        n_diff = st.counts["+-"] + st.counts["-+"]
        assert st.E == (n_same - n_diff) / 4000
        bound = 3 / (2 * math.sqrt(4000))
        assert abs(st.fraction_a_plus - 0.5) < bound
        assert int(st.histogram.counts.sum()) == 4000

    def test_aligned_analyzers_correlate(self, cfg, d):
        ec = EnsembleConfig(n_pairs=10_000, seed=3, delta_rad=0.0, **FAST)
        st = run_ensemble(ec, cfg, d)
        assert st.E >= 0.99

    def test_orthogonal_analyzers_uncorrelated(self, cfg, d):
        ec = EnsembleConfig(n_pairs=10_000, seed=5, delta_rad=math.pi / 2, **FAST)
        st = run_ensemble(ec, cfg, d)
        assert abs(st.E) <= 0.03

    def test_spot_separation(self, cfg, d):
        ec = EnsembleConfig(n_pairs=10_000, seed=13, delta_rad=0.0, **FAST)
        st = run_ensemble(ec, cfg, d)
        sep = st.mean_z_plus_m - st.mean_z_minus_m
        assert sep == pytest.approx(8.2e-4, rel=0.02)

    def test_convention_duality_exact(self, cfg, d):
        ec = EnsembleConfig(n_pairs=2000, seed=21, delta_rad=0.7, **FAST)
        spot = run_ensemble(ec, cfg, d)
        spin = run_ensemble(replace(ec, convention="spin"), cfg, d)
        assert spin.E == -spot.E
        assert spin.counts["++"] == spot.counts["+-"]
        assert spin.counts["--"] == spot.counts["-+"]
        assert spin.fraction_a_plus == spot.fraction_a_plus
        assert np.array_equal(spin.histogram.counts, spot.histogram.counts)

    def test_workers_bit_identical(self, cfg, d):
        ec = EnsembleConfig(n_pairs=9000, seed=31, delta_rad=0.4, **FAST)
        s1 = run_ensemble(ec, cfg, d, workers=1)
        s3 = run_ensemble(ec, cfg, d, workers=3)
        assert json.dumps(s1.to_json_dict(), sort_keys=True) == json.dumps(
            s3.to_json_dict(), sort_keys=True
        )

    def test_repeat_identical(self, cfg, d):
        ec = EnsembleConfig(n_pairs=1000, seed=41, delta_rad=1.3, **FAST)
        s1 = run_ensemble(ec, cfg, d)
        s2 = run_ensemble(ec, cfg, d)
        assert s1.to_json_dict() == s2.to_json_dict()

    def test_failure_names_pair_index(self, cfg, d, monkeypatch):
        import eprb.ensemble as ens_mod
        from eprb.trajectory import IntegrationError

        real = ens_mod.kernels.rk4_final_batch

        def poisoned(z0, cth, *args):
            out = real(z0, cth, *args)
            if len(out) > 3:
                out[3] = math.nan  # global pair index 3 in the first chunk
            return out

        monkeypatch.setattr(ens_mod.kernels, "rk4_final_batch", poisoned)
        ec = EnsembleConfig(n_pairs=50, seed=1, **FAST)
        with pytest.raises(IntegrationError, match="pair 3"):
            run_ensemble(ec, cfg, d)


class TestSweep:
    def test_seed_derivation_deterministic(self):
        assert sweep_seeds(99, 5) == sweep_seeds(99, 5)
        assert sweep_seeds(99, 5)[:3] != sweep_seeds(100, 5)[:3]

    def test_endpoints(self, cfg, d):
        ec = EnsembleConfig(n_pairs=4000, seed=71, **FAST)
        pts = correlation_sweep([0.0, math.pi], ec, cfg, d)
        assert pts[0].E >= 0.99
        assert pts[1].E <= -0.99

    def test_rows_in_input_order_and_consistent(self, cfg, d):
        ec = EnsembleConfig(n_pairs=1500, seed=55, **FAST)
        deltas = [1.1, 0.2, 2.6]
        pts = correlation_sweep(deltas, ec, cfg, d)
        assert [p.delta_rad for p in pts] == deltas
        # a single row reproduces run_ensemble with the derived seed
        seed0 = sweep_seeds(55, 3)[0]
        st = run_ensemble(
            replace(ec, delta_rad=1.1, seed=seed0), cfg, d
        )
        assert pts[0].E == st.E
        assert pts[0].stderr == pytest.approx(
            math.sqrt((1 - st.E**2) / 1500), rel=1e-12
        )

    def test_repeat_identical(self, cfg, d):
        ec = EnsembleConfig(n_pairs=800, seed=61, **FAST)
        a = correlation_sweep([0.3, 1.9], ec, cfg, d)
        b = correlation_sweep([0.3, 1.9], ec, cfg, d)
        assert a == b

    def test_rejects_empty(self, cfg, d):
        ec = EnsembleConfig(n_pairs=100, seed=1, **FAST)
        with pytest.raises(ValueError):
            correlation_sweep([], ec, cfg, d)

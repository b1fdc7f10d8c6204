"""Monte Carlo ensembles over the hidden variables of the pair source.

Each pair carries six hidden variables: the transverse positions of the
two atoms, (z0_A, x0_A) and (z0_B, x0_B), drawn independently from the
Gaussian position density of the initial packets, and A's spin angles,
drawn uniformly on the sphere (theta0 = arccos(1-2v), phi0 uniform).  The
uniform sphere prior is a model assumption: the source is only required to
emit "randomly oriented" opposite-spin pairs, and the rotation-invariant
choice makes both outcomes equally likely.  B's spin is the antipode of
A's, never sampled.

The positions are sampled per atom because the initial position density of
the pair factorizes into the two single-atom packets.  Collapsing the two
draws onto one shared point preserves each atom's marginal density but
correlates B's position with the variables that decide A's outcome, which
visibly distorts the second-step correlation curve at intermediate
analyzer angles.

Randomness is counter-based: pair ``i`` draws from a Philox stream keyed by
the run seed with its counter block set from ``i``, so a pair's hidden
variables depend only on (seed, i).  Work is split into fixed-size chunks
(independent of the worker count) and per-pair results are assembled by
index before any statistic is computed, which makes ensemble output
bit-identical for any number of worker processes.

Outcome labeling conventions:

* ``spot`` labels each atom by the detector spot it hits in its own
  analyzer frame (up = +).  The pair correlation then follows +cos(delta).
* ``spin`` labels B by the spin projection along its analyzer axis, the
  textbook singlet labeling, which flips B's spot label and the sign of
  the correlation: -cos(delta).
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from numpy.random import Generator, Philox

from . import kernels
from .analytic import marginal_a
from .core import DerivedParams, PhysicalConfig, SpinOrientation, derive_params
from .trajectory import (
    DEFAULT_STEPS_IN,
    DEFAULT_STEPS_OUT,
    MIN_STEPS,
    FieldParams,
    IntegrationError,
    PairInitialConditions,
    field_params,
    step2_initial_orientation,
)

CONVENTIONS = ("spot", "spin")

CHUNK_PAIRS = 4096
"""Pairs per work unit; fixed so results do not depend on the worker count."""

HIST_BIN_SIGMA_FRACTION = 0.2  # bin width sigma0/5
HIST_RANGE_SIGMAS = 6.0        # range +-(z_delta + u t1 + 6 sigma0)

_GL16_NODES, _GL16_WEIGHTS = np.polynomial.legendre.leggauss(16)

_MAX_SEED = 2**64


@dataclass(frozen=True)
class EnsembleConfig:
    """Run parameters of one Monte Carlo ensemble."""

    n_pairs: int
    seed: int
    delta_rad: float = 0.0
    convention: str = "spot"
    steps_in: int = DEFAULT_STEPS_IN
    steps_out: int = DEFAULT_STEPS_OUT

    def __post_init__(self):
        if self.n_pairs < 1:
            raise ValueError("n_pairs must be >= 1")
        if not (0 <= self.seed < _MAX_SEED):
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.convention not in CONVENTIONS:
            raise ValueError(f"convention must be one of {CONVENTIONS}")
        if self.steps_in < MIN_STEPS or self.steps_out < MIN_STEPS:
            raise ValueError(f"step counts must be >= {MIN_STEPS}")
        if not math.isfinite(self.delta_rad):
            raise ValueError("delta_rad must be finite")


@dataclass(frozen=True)
class Histogram:
    """Binned counts with their edges."""

    bin_edges_m: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class EnsembleStats:
    """Aggregated results of one ensemble run."""

    n_pairs: int
    seed: int
    delta_rad: float
    convention: str
    counts: dict[str, int]
    E: float
    fraction_a_plus: float
    mean_z_plus_m: float | None
    mean_z_minus_m: float | None
    histogram: Histogram
    analytic_mass: np.ndarray
    tv_distance_a: float

    def to_json_dict(self) -> dict:
        return {
            "n_pairs": self.n_pairs,
            "seed": self.seed,
            "delta_rad": self.delta_rad,
            "convention": self.convention,
            "counts": dict(self.counts),
            "E": self.E,
            "fraction_a_plus": self.fraction_a_plus,
            "mean_z_plus_m": self.mean_z_plus_m,
            "mean_z_minus_m": self.mean_z_minus_m,
            "tv_distance_a": self.tv_distance_a,
            "histogram": {
                "bin_edges_m": [float(e) for e in self.histogram.bin_edges_m],
                "counts": [int(c) for c in self.histogram.counts],
                "analytic_mass": [float(m) for m in self.analytic_mass],
            },
        }


@dataclass(frozen=True)
class SweepPoint:
    """One row of a correlation sweep."""

    delta_rad: float
    E: float
    stderr: float
    n_pairs: int


# ---------------------------------------------------------------------------
# hidden-variable sampling
# ---------------------------------------------------------------------------


def pair_rng(seed: int, index: int) -> Generator:
    """Philox substream of pair ``index``: counter block set from the index."""
    return Generator(Philox(key=seed, counter=index << 128))


def _sample_arrays(seed: int, start: int, stop: int, sigma0: float):
    """Hidden variables of pairs [start, stop) as arrays.

    Draw order per pair is fixed: z0_A, x0_A, z0_B, x0_B, cos(theta0) via a
    uniform, phi0.  Returns (z0_a, x0_a, z0_b, x0_b, theta0, phi0).
    """
    n = stop - start
    z0a = np.empty(n)
    x0a = np.empty(n)
    z0b = np.empty(n)
    x0b = np.empty(n)
    theta0 = np.empty(n)
    phi0 = np.empty(n)
    for j, i in enumerate(range(start, stop)):
        g = pair_rng(seed, i)
        z0a[j] = sigma0 * g.standard_normal()
        x0a[j] = sigma0 * g.standard_normal()
        z0b[j] = sigma0 * g.standard_normal()
        x0b[j] = sigma0 * g.standard_normal()
        theta0[j] = np.arccos(1.0 - 2.0 * g.random())
        phi0[j] = -np.pi + (2.0 * np.pi) * g.random()
    return z0a, x0a, z0b, x0b, theta0, phi0


def sample_initials(n: int, seed: int, sigma0: float) -> list[PairInitialConditions]:
    """Hidden variables of ``n`` pairs, fully determined by (seed, index)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    z0a, x0a, z0b, x0b, theta0, phi0 = _sample_arrays(seed, 0, n, sigma0)
    return [
        PairInitialConditions(
            z0_m=float(z0a[j]),
            x0_m=float(x0a[j]),
            orient_a0=SpinOrientation(float(theta0[j]), float(phi0[j])),
            z0_b_m=float(z0b[j]),
            x0_b_m=float(x0b[j]),
        )
        for j in range(n)
    ]


# ---------------------------------------------------------------------------
# chunked pair simulation
# ---------------------------------------------------------------------------


def _simulate_chunk(task) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Final z of A plus both spot labels for pairs [start, stop)."""
    (
        seed, start, stop, sigma0, fp_tuple, steps_in, steps_out,
        cth_b_plus, cth_b_minus, cos_d, sin_d,
    ) = task
    fp = FieldParams(*fp_tuple)
    z0a, x0a, z0b, x0b, theta0, _phi0 = _sample_arrays(seed, start, stop, sigma0)

    z_a = kernels.rk4_final_batch(
        z0a, np.cos(theta0),
        fp.kmag, fp.rate, fp.u, fp.z_delta, fp.inv_sig2,
        fp.dt_magnet, fp.t_drift, steps_in, steps_out,
    )
    bad = np.flatnonzero(~np.isfinite(z_a))
    if bad.size:
        raise IntegrationError(f"pair {start + int(bad[0])}: non-finite z for atom A")
    a = np.where(z_a >= 0.0, 1, -1).astype(np.int8)

    zp0 = z0b * cos_d - x0b * sin_d
    cth_b = np.where(a > 0, cth_b_plus, cth_b_minus)
    z_b = kernels.rk4_final_batch(
        zp0, cth_b,
        fp.kmag, fp.rate, fp.u, fp.z_delta, fp.inv_sig2,
        fp.dt_magnet, fp.t_drift, steps_in, steps_out,
    )
    bad = np.flatnonzero(~np.isfinite(z_b))
    if bad.size:
        raise IntegrationError(f"pair {start + int(bad[0])}: non-finite z for atom B")
    b = np.where(z_b >= 0.0, 1, -1).astype(np.int8)
    return z_a, a, b


def _chunk_tasks(ec: EnsembleConfig, cfg: PhysicalConfig, d: DerivedParams):
    fp = field_params(cfg, d)
    fp_tuple = (
        fp.kmag, fp.rate, fp.u, fp.z_delta, fp.inv_sig2, fp.dt_magnet, fp.t_drift,
    )
    cth_b_plus = math.cos(step2_initial_orientation(1, ec.delta_rad).theta_rad)
    cth_b_minus = math.cos(step2_initial_orientation(-1, ec.delta_rad).theta_rad)
    cos_d = math.cos(ec.delta_rad)
    sin_d = math.sin(ec.delta_rad)
    tasks = []
    for start in range(0, ec.n_pairs, CHUNK_PAIRS):
        stop = min(start + CHUNK_PAIRS, ec.n_pairs)
        tasks.append(
            (
                ec.seed, start, stop, cfg.sigma0_m, fp_tuple,
                ec.steps_in, ec.steps_out,
                cth_b_plus, cth_b_minus, cos_d, sin_d,
            )
        )
    return tasks


def histogram_edges(d: DerivedParams, sigma0: float) -> np.ndarray:
    """Detection-screen bin edges: +-(spot center + 6 sigma0), width sigma0/5."""
    reach = d.z_delta_m + d.u_m_per_s * d.drift_time_s + HIST_RANGE_SIGMAS * sigma0
    width = HIST_BIN_SIGMA_FRACTION * sigma0
    n_bins = max(1, int(round(2.0 * reach / width)))
    return np.linspace(-reach, reach, n_bins + 1)


def bin_masses(density: Callable, edges: np.ndarray) -> np.ndarray:
    """Per-bin integrals of a smooth 1-d density (16-node Gauss-Legendre)."""
    edges = np.asarray(edges, dtype=float)
    mids = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    pts = mids[:, None] + half[:, None] * _GL16_NODES[None, :]
    vals = np.asarray(density(pts), dtype=float)
    return (vals * _GL16_WEIGHTS[None, :]).sum(axis=1) * half


def tv_distance(hist: Histogram, density: Callable) -> float:
    """Total-variation distance between a histogram and an analytic density.

    Half the absolute difference between empirical and analytic bin masses,
    in [0, 1].  Rejects empty histograms.
    """
    counts = np.asarray(hist.counts, dtype=float)
    total = counts.sum()
    if total <= 0:
        raise ValueError("histogram has zero total count")
    empirical = counts / total
    analytic = bin_masses(density, hist.bin_edges_m)
    return 0.5 * float(np.abs(empirical - analytic).sum())


def run_ensemble(
    ec: EnsembleConfig,
    cfg: PhysicalConfig,
    d: DerivedParams | None = None,
    workers: int = 1,
) -> EnsembleStats:
    """Simulate ``ec.n_pairs`` pairs and aggregate outcome statistics.

    ``workers`` only distributes fixed-size chunks over processes; the
    returned statistics are bit-identical for any value.  Integration
    failures propagate with the offending pair index.
    """
    if d is None:
        d = derive_params(cfg)
    tasks = _chunk_tasks(ec, cfg, d)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_simulate_chunk, tasks))
    else:
        results = [_simulate_chunk(t) for t in tasks]

    z_a = np.concatenate([r[0] for r in results])
    a = np.concatenate([r[1] for r in results]).astype(np.int64)
    b = np.concatenate([r[2] for r in results]).astype(np.int64)
    if ec.convention == "spin":
        b = -b

    n = ec.n_pairs
    n_pp = int(np.count_nonzero((a > 0) & (b > 0)))
    n_pm = int(np.count_nonzero((a > 0) & (b < 0)))
    n_mp = int(np.count_nonzero((a < 0) & (b > 0)))
    n_mm = int(np.count_nonzero((a < 0) & (b < 0)))
    e_corr = ((n_pp + n_mm) - (n_pm + n_mp)) / n

    plus = z_a[a > 0]
    minus = z_a[a < 0]
    edges = histogram_edges(d, cfg.sigma0_m)
    counts, _ = np.histogram(z_a, bins=edges)
    analytic = bin_masses(
        lambda z: marginal_a(z, d.drift_time_s, d, cfg.sigma0_m), edges
    )
    hist = Histogram(bin_edges_m=edges, counts=counts)
    tv = 0.5 * float(np.abs(counts / n - analytic).sum())

    return EnsembleStats(
        n_pairs=n,
        seed=ec.seed,
        delta_rad=ec.delta_rad,
        convention=ec.convention,
        counts={"++": n_pp, "+-": n_pm, "-+": n_mp, "--": n_mm},
        E=e_corr,
        fraction_a_plus=float(np.count_nonzero(a > 0)) / n,
        mean_z_plus_m=float(plus.mean()) if plus.size else None,
        mean_z_minus_m=float(minus.mean()) if minus.size else None,
        histogram=hist,
        analytic_mass=analytic,
        tv_distance_a=tv,
    )


def sweep_seeds(master_seed: int, count: int) -> list[int]:
    """Independent per-point seeds derived from a master seed."""
    children = np.random.SeedSequence(master_seed).spawn(count)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def correlation_sweep(
    deltas: Sequence[float],
    ec: EnsembleConfig,
    cfg: PhysicalConfig,
    d: DerivedParams | None = None,
    workers: int = 1,
) -> list[SweepPoint]:
    """One ensemble per analyzer angle, rows in input order.

    Each angle runs with its own seed derived from ``ec.seed`` so the points
    are statistically independent; the reported standard error is
    sqrt((1 - E^2)/n).
    """
    if len(deltas) == 0:
        raise ValueError("deltas must be non-empty")
    if d is None:
        d = derive_params(cfg)
    seeds = sweep_seeds(ec.seed, len(deltas))
    points = []
    for delta, seed in zip(deltas, seeds):
        sub = replace(ec, delta_rad=float(delta), seed=seed)
        stats = run_ensemble(sub, cfg, d, workers=workers)
        stderr = math.sqrt(max(0.0, 1.0 - stats.E * stats.E) / ec.n_pairs)
        points.append(
            SweepPoint(
                delta_rad=float(delta), E=stats.E, stderr=stderr, n_pairs=ec.n_pairs
            )
        )
    return points

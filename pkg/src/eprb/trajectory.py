"""Pilot-wave trajectories through the two sequential spin measurements.

Atom A crosses its magnet (transit time dt) and drifts to the screen
(drift time t1).  Its transverse position obeys

    inside the magnet   dz/dt = (mu B' t / m) cos(theta(z, t)),
                        tan(theta/2) = tan(theta0/2) exp(-mu B' t^2 z / (2 m sigma0^2))

    after the magnet    dz/dt = u (tanh(zeta) + cos(theta0)) / (1 + tanh(zeta) cos(theta0)),
                        tan(theta/2) = tan(theta0/2) exp(-zeta),
                        zeta = (z_delta + u t) z / sigma0^2,  t re-zeroed at exit

where theta(z, t) is the evolving spin polar angle.  The drift velocity is
algebraically equal to u cos(theta(z, t)) (tanh addition), and the two
exponents agree at the seam because mu B' dt^2 / (2 m) = z_delta; z is
continuous and theta needs no matching condition.

z is advanced with classical fixed-step RK4 (compiled kernel when
available); theta is never integrated, it is evaluated from the closed
form at the recorded (z, t), so position and spin angle cannot drift apart.
The spin azimuth of A is held at its initial value: the model gives it no
dynamics, and it enters no implemented observable.

During step 1 atom B flies straight (z, x constant) while its spin mirrors
A's: theta_B = pi - theta_A, phi_B = phi_A - pi, sample for sample.  In
step 2 B crosses its own, tilted analyzer; its coordinates are rotated into
the analyzer frame and the same guidance equations apply there with B's
post-collapse spin as the initial condition.

theta0 = 0 and theta0 = pi are exact fixed points of the spin law; both are
handled exactly (cos(theta0) = +-1 makes one branch weight exactly zero).
The equatorial initial condition theta0 = pi/2 with z0 = 0 sits on the
unstable separatrix between the two outcomes and stays there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .core import (
    DerivedParams,
    PhysicalConfig,
    SpinOrientation,
    Spinor,
    opposite_orientation,
    orientation_from_spinor,
    rotate_to_analyzer_basis,
    wrap_phi,
)

PHASE_IN_MAGNET = "in_magnet"
PHASE_POST_MAGNET = "post_magnet"

MIN_STEPS = 100

DEFAULT_STEPS_IN = 2000
DEFAULT_STEPS_OUT = 4000


class IntegrationError(RuntimeError):
    """A trajectory integration produced a non-finite state."""


@dataclass(frozen=True)
class FieldParams:
    """Scalar coefficients of the guidance fields, ready for the kernels."""

    kmag: float        # mu B' / (2 m sigma0^2), magnet-phase exponent rate
    rate: float        # mu B' / m, magnet-phase acceleration
    u: float
    z_delta: float
    inv_sig2: float    # 1 / sigma0^2
    dt_magnet: float
    t_drift: float


def field_params(cfg: PhysicalConfig, d: DerivedParams) -> FieldParams:
    mu_grad = cfg.magnetic_moment_J_per_T * cfg.B_gradient_T_per_m
    sig2 = cfg.sigma0_m * cfg.sigma0_m
    return FieldParams(
        kmag=mu_grad / (2.0 * cfg.mass_kg * sig2),
        rate=mu_grad / cfg.mass_kg,
        u=d.u_m_per_s,
        z_delta=d.z_delta_m,
        inv_sig2=1.0 / sig2,
        dt_magnet=d.transit_time_s,
        t_drift=d.drift_time_s,
    )


@dataclass(frozen=True)
class TrajectorySample:
    """One time sample of a trajectory: position and spin angles."""

    t_s: float
    z_m: float
    theta_rad: float
    phi_rad: float
    phase: str  # PHASE_IN_MAGNET or PHASE_POST_MAGNET


@dataclass(frozen=True)
class PairInitialConditions:
    """Hidden variables of one pair.

    ``z0_m, x0_m`` is atom A's transverse position and ``orient_a0`` its spin
    orientation.  B's spin is never stored: it is the exact antipode of A's,
    (pi - theta0_A, phi0_A - pi).

    B's transverse position defaults to A's (a pair created at one source
    point), which is what the single-pair commands use.  The ensemble
    sampler always supplies an independent draw for B: the initial position
    density of the pair factorizes, and the statistics of the second
    measurement are only reproduced when B's position carries no imprint of
    the variables that decide A's outcome.
    """

    z0_m: float
    x0_m: float
    orient_a0: SpinOrientation
    z0_b_m: float | None = None
    x0_b_m: float | None = None

    def __post_init__(self):
        if self.z0_b_m is None:
            object.__setattr__(self, "z0_b_m", self.z0_m)
        if self.x0_b_m is None:
            object.__setattr__(self, "x0_b_m", self.x0_m)
        for v in (self.z0_m, self.x0_m, self.z0_b_m, self.x0_b_m):
            if not math.isfinite(v):
                raise ValueError("initial position must be finite")

    @property
    def orient_b0(self) -> SpinOrientation:
        return opposite_orientation(self.orient_a0)


@dataclass(frozen=True)
class PairTrajectory:
    """Full two-step history of one entangled pair.

    ``samples_b_step2`` lives in B's analyzer frame (primed z'); its time
    axis continues from the detection of A, so the last sample sits at
    2 (dt + t1) since A entered its magnet.
    """

    init: PairInitialConditions
    delta_rad: float
    samples_a: list[TrajectorySample] = field(repr=False)
    samples_b_step1: list[TrajectorySample] = field(repr=False)
    samples_b_step2: list[TrajectorySample] = field(repr=False)
    outcome_a: int
    outcome_b: int


# ---------------------------------------------------------------------------
# closed-form guidance fields
# ---------------------------------------------------------------------------


def _theta_from_exponent(theta0: float, a):
    """Spin polar angle from tan(theta/2) = tan(theta0/2) exp(-a).

    The poles are exact fixed points and are returned unchanged; elsewhere
    the exponent is split symmetrically between numerator and denominator so
    the evaluation cannot overflow for any reachable state.
    """
    if theta0 == 0.0 or theta0 == math.pi:
        return theta0 + np.zeros_like(np.asarray(a, dtype=float))
    half = 0.5 * theta0
    s = math.sin(half)
    c = math.cos(half)
    ac = np.clip(np.asarray(a, dtype=float), -1400.0, 1400.0)
    return 2.0 * np.arctan2(s * np.exp(-0.5 * ac), c * np.exp(0.5 * ac))


def _cos_theta_from_exponent(theta0: float, a):
    """cos(theta) with the same branch-weight form the kernels use."""
    cth0 = math.cos(theta0)
    c2 = 0.5 * (1.0 + cth0)
    s2 = 0.5 * (1.0 - cth0)
    ea = np.exp(np.clip(a, -700.0, 700.0))
    up = c2 * ea
    dn = s2 / ea
    return (up - dn) / (up + dn)


def theta_in_magnet(z, t, theta0: float, cfg: PhysicalConfig):
    """Spin polar angle at (z, t) inside the magnet, t from magnet entry.

    Monotone decreasing in z for theta0 strictly between the poles: the
    atom's spin turns towards + as it rides the upper branch and towards -
    on the lower one.
    """
    kmag = (
        cfg.magnetic_moment_J_per_T
        * cfg.B_gradient_T_per_m
        / (2.0 * cfg.mass_kg * cfg.sigma0_m * cfg.sigma0_m)
    )
    return _theta_from_exponent(theta0, (kmag * (np.asarray(t) * np.asarray(t))) * z)


def velocity_in_magnet(z, t, theta0: float, cfg: PhysicalConfig):
    """dz/dt inside the magnet: (mu B' t / m) cos(theta(z, t))."""
    kmag = (
        cfg.magnetic_moment_J_per_T
        * cfg.B_gradient_T_per_m
        / (2.0 * cfg.mass_kg * cfg.sigma0_m * cfg.sigma0_m)
    )
    rate = cfg.magnetic_moment_J_per_T * cfg.B_gradient_T_per_m / cfg.mass_kg
    t = np.asarray(t, dtype=float)
    a = (kmag * (t * t)) * z
    return (rate * t) * _cos_theta_from_exponent(theta0, a)


def _drift_exponent(z, t, d: DerivedParams, sigma0: float):
    return ((d.z_delta_m + d.u_m_per_s * np.asarray(t, dtype=float)) * z) / (
        sigma0 * sigma0
    )


def theta_after_magnet(z, t, theta0: float, d: DerivedParams, sigma0: float):
    """Spin polar angle at (z, t) in the drift region, t from magnet exit."""
    return _theta_from_exponent(theta0, _drift_exponent(z, t, d, sigma0))


def velocity_after_magnet(z, t, theta0: float, d: DerivedParams, sigma0: float):
    """Drift velocity u (tanh(zeta) + cos theta0) / (1 + tanh(zeta) cos theta0).

    Evaluated as u cos(theta(z, t)), which is the same quotient by the tanh
    addition identity and stays exact at the spin poles.  Bounded by |u|.
    """
    return d.u_m_per_s * _cos_theta_from_exponent(
        theta0, _drift_exponent(z, t, d, sigma0)
    )


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------


def _check_steps(steps_in: int, steps_out: int):
    if steps_in < MIN_STEPS or steps_out < MIN_STEPS:
        raise ValueError(
            f"step counts must be >= {MIN_STEPS}, got ({steps_in}, {steps_out})"
        )


def _record_run(
    z0: float,
    theta0: float,
    phi0: float,
    fp: FieldParams,
    steps_in: int,
    steps_out: int,
    t0: float = 0.0,
    label: str = "trajectory",
) -> list[TrajectorySample]:
    """Shared single-trajectory runner: RK4 record + closed-form angles."""
    zs = kernels.rk4_record(
        z0, math.cos(theta0),
        fp.kmag, fp.rate, fp.u, fp.z_delta, fp.inv_sig2,
        fp.dt_magnet, fp.t_drift, steps_in, steps_out,
    )
    if not np.all(np.isfinite(zs)):
        bad = int(np.flatnonzero(~np.isfinite(zs))[0])
        raise IntegrationError(f"{label}: non-finite z at sample {bad}")

    h1 = fp.dt_magnet / steps_in
    h2 = fp.t_drift / steps_out
    t_mag = h1 * np.arange(steps_in + 1)
    t_dft = h2 * np.arange(1, steps_out + 1)
    z_mag = zs[: steps_in + 1]
    z_dft = zs[steps_in + 1 :]

    th_mag = np.broadcast_to(
        _theta_from_exponent(theta0, (fp.kmag * (t_mag * t_mag)) * z_mag),
        z_mag.shape,
    )
    th_dft = np.broadcast_to(
        _theta_from_exponent(theta0, ((fp.z_delta + fp.u * t_dft) * z_dft) * fp.inv_sig2),
        z_dft.shape,
    )

    samples = [
        TrajectorySample(t0 + float(t), float(z), float(th), phi0, PHASE_IN_MAGNET)
        for t, z, th in zip(t_mag, z_mag, th_mag)
    ]
    samples += [
        TrajectorySample(
            t0 + fp.dt_magnet + float(t), float(z), float(th), phi0, PHASE_POST_MAGNET
        )
        for t, z, th in zip(t_dft, z_dft, th_dft)
    ]
    return samples


def integrate_a(
    init: PairInitialConditions,
    cfg: PhysicalConfig,
    d: DerivedParams | None = None,
    steps_in: int = DEFAULT_STEPS_IN,
    steps_out: int = DEFAULT_STEPS_OUT,
) -> list[TrajectorySample]:
    """Step-1 trajectory of atom A from magnet entry to the screen.

    Returns steps_in + steps_out + 1 samples at strictly increasing times;
    the final one is at dt + t1.  Raises ``ValueError`` for step counts
    below the minimum and ``IntegrationError`` on non-finite states.
    """
    _check_steps(steps_in, steps_out)
    if d is None:
        d = _derive(cfg)
    fp = field_params(cfg, d)
    return _record_run(
        init.z0_m,
        init.orient_a0.theta_rad,
        init.orient_a0.phi_rad,
        fp,
        steps_in,
        steps_out,
        label="atom A",
    )


def _derive(cfg: PhysicalConfig) -> DerivedParams:
    from .core import derive_params

    return derive_params(cfg)


def mirror_spin_b(theta_a: float, phi_a: float) -> SpinOrientation:
    """B's spin orientation slaved to A's: (pi - theta_A, phi_A - pi)."""
    return SpinOrientation(math.pi - theta_a, wrap_phi(phi_a - math.pi))


def classify_outcome(final: TrajectorySample) -> int:
    """Spot label at detection: +1 for z > 0, -1 for z < 0, +1 at exactly 0."""
    return 1 if final.z_m >= 0.0 else -1


def step2_initial_orientation(outcome_a: int, delta_rad: float) -> SpinOrientation:
    """B's spin in its analyzer frame right after A's outcome.

    B collapses to the spin opposite A's outcome; re-expressing that state
    on the tilted-analyzer basis and dropping the global phase gives polar
    angle delta (for A = +) or pi - delta (for A = -).
    """
    if outcome_a not in (1, -1):
        raise ValueError("outcome_a must be +1 or -1")
    spin_b = Spinor(0.0j, 1.0 + 0.0j) if outcome_a == 1 else Spinor(1.0 + 0.0j, 0.0j)
    orient, _phase = orientation_from_spinor(
        rotate_to_analyzer_basis(spin_b, delta_rad)
    )
    return orient


def step2_initial_position(z0: float, x0: float, delta_rad: float) -> tuple[float, float]:
    """B's transverse position in the analyzer frame: rotation by delta."""
    c = math.cos(delta_rad)
    s = math.sin(delta_rad)
    return z0 * c - x0 * s, z0 * s + x0 * c


def step2_b_trajectory(
    init: PairInitialConditions,
    outcome_a: int,
    delta_rad: float,
    cfg: PhysicalConfig,
    d: DerivedParams | None = None,
    steps_in: int = DEFAULT_STEPS_IN,
    steps_out: int = DEFAULT_STEPS_OUT,
    t0: float = 0.0,
) -> tuple[list[TrajectorySample], int]:
    """Step-2 trajectory of atom B through its tilted analyzer.

    Positions and angles are in the analyzer (primed) frame; ``t0`` offsets
    the reported times (pass dt + t1 to keep a single experiment clock).
    Returns the samples and the spot label read off the final primed z.
    """
    _check_steps(steps_in, steps_out)
    if d is None:
        d = _derive(cfg)
    fp = field_params(cfg, d)
    orient = step2_initial_orientation(outcome_a, delta_rad)
    zp0, _xp0 = step2_initial_position(init.z0_b_m, init.x0_b_m, delta_rad)
    samples = _record_run(
        zp0,
        orient.theta_rad,
        orient.phi_rad,
        fp,
        steps_in,
        steps_out,
        t0=t0,
        label="atom B (step 2)",
    )
    return samples, classify_outcome(samples[-1])


def simulate_pair(
    init: PairInitialConditions,
    delta_rad: float,
    cfg: PhysicalConfig,
    d: DerivedParams | None = None,
    steps_in: int = DEFAULT_STEPS_IN,
    steps_out: int = DEFAULT_STEPS_OUT,
) -> PairTrajectory:
    """Run one pair through both measurement steps.

    Step 1 integrates A and mirrors its spin onto B (B's position frozen);
    A's spot fixes its outcome.  Step 2 sends B through the analyzer tilted
    by ``delta_rad`` starting from the collapsed spin, and B's spot fixes
    the second outcome.
    """
    if d is None:
        d = _derive(cfg)
    samples_a = integrate_a(init, cfg, d, steps_in, steps_out)

    phi_b = wrap_phi(init.orient_a0.phi_rad - math.pi)
    samples_b1 = [
        TrajectorySample(
            s.t_s, init.z0_b_m, math.pi - s.theta_rad, phi_b, s.phase
        )
        for s in samples_a
    ]

    outcome_a = classify_outcome(samples_a[-1])
    t_detect = d.transit_time_s + d.drift_time_s
    samples_b2, outcome_b = step2_b_trajectory(
        init, outcome_a, delta_rad, cfg, d, steps_in, steps_out, t0=t_detect
    )
    return PairTrajectory(
        init=init,
        delta_rad=delta_rad,
        samples_a=samples_a,
        samples_b_step1=samples_b1,
        samples_b_step2=samples_b2,
        outcome_a=outcome_a,
        outcome_b=outcome_b,
    )

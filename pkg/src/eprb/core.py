"""Experimental constants and spin-1/2 algebra for the two-step EPR-B bench.

The default numbers describe a silver-atom beam through a Stern-Gerlach
analyzer: atom mass, transverse packet width, magnet geometry and field
gradient, and the drift distance to the detection screen.  ``derive_params``
turns those into the quantities every other module consumes: the magnet
transit time, the packet deflection and exit velocity picked up inside the
magnet, and the drift time to the screen.

Spin states live in two equivalent representations: Bloch angles
(:class:`SpinOrientation`) and complex amplitude pairs (:class:`Spinor`).
The two-body layer (:class:`TwoBodySpinor`) carries the four amplitudes of
a pair, and :func:`antisymmetrize_singlet` implements the opposite-spin
product construction whose antisymmetrization recovers the singlet state up
to a global phase.

The default magnetic moment is 9.0e-24 J/T.  With the silver-atom defaults
this makes the derived constants come out at round values
(deflection 1e-5 m, exit velocity 1 m/s); the Bohr magneton, 9.274e-24 J/T,
sits about 3% higher and can be configured explicitly if preferred.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

HBAR = 1.054571817e-34
"""Reduced Planck constant, J s (2018 CODATA)."""

TWO_PI = 2.0 * math.pi


def wrap_phi(phi):
    """Wrap an azimuthal angle into [-pi, pi).  Works on scalars and arrays."""
    return (phi + math.pi) % TWO_PI - math.pi


# ---------------------------------------------------------------------------
# experimental configuration
# ---------------------------------------------------------------------------

_POSITIVE_FIELDS = (
    "mass_kg",
    "magnetic_moment_J_per_T",
    "v_y_m_per_s",
    "sigma0_m",
    "B_gradient_T_per_m",
    "magnet_length_m",
    "drift_distance_m",
)


@dataclass(frozen=True)
class PhysicalConfig:
    """Stern-Gerlach bench constants in SI units.

    Defaults are the silver-atom values: m = 1.8e-25 kg, beam speed
    v_y = 500 m/s, packet width sigma0 = 1e-4 m, field B0 = 5 T with
    gradient 1e3 T/m over a 0.01 m magnet, and a 0.20 m drift to the screen.

    ``B0_T`` may be zero: the uniform field component enters none of the
    implemented observables (densities, branch weights, trajectories).
    """

    mass_kg: float = 1.8e-25
    magnetic_moment_J_per_T: float = 9.0e-24
    v_y_m_per_s: float = 500.0
    sigma0_m: float = 1.0e-4
    B0_T: float = 5.0
    B_gradient_T_per_m: float = 1.0e3
    magnet_length_m: float = 0.01
    drift_distance_m: float = 0.20

    def __post_init__(self):
        for name in _POSITIVE_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ValueError(f"{name}: expected a number, got {value!r}")
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name}: must be finite and > 0, got {value!r}")
        b0 = self.B0_T
        if not isinstance(b0, (int, float)) or isinstance(b0, bool):
            raise ValueError(f"B0_T: expected a number, got {b0!r}")
        if not math.isfinite(b0) or b0 < 0.0:
            raise ValueError(f"B0_T: must be finite and >= 0, got {b0!r}")


@dataclass(frozen=True)
class DerivedParams:
    """Quantities derived from :class:`PhysicalConfig`.

    transit_time_s
        Time spent inside the magnet, magnet_length / v_y.
    z_delta_m
        Transverse deflection accumulated at the magnet exit.
    u_m_per_s
        Transverse speed of a fully polarized packet at the magnet exit.
    drift_time_s
        Time from magnet exit to the detection screen, drift_distance / v_y.
    """

    transit_time_s: float
    z_delta_m: float
    u_m_per_s: float
    drift_time_s: float


def derive_params(cfg: PhysicalConfig) -> DerivedParams:
    """Closed-form bench constants: transit time, deflection, exit speed.

    With the defaults: transit 2e-5 s, deflection 1e-5 m, exit speed 1 m/s,
    drift 4e-4 s.  ``u * transit_time == 2 * z_delta`` holds exactly, also in
    floating point (z_delta is computed as u*dt/2).
    """
    if cfg.v_y_m_per_s <= 0.0:
        raise ValueError("v_y_m_per_s: must be > 0")
    if cfg.magnet_length_m <= 0.0:
        raise ValueError("magnet_length_m: must be > 0")
    dt = cfg.magnet_length_m / cfg.v_y_m_per_s
    u = cfg.magnetic_moment_J_per_T * cfg.B_gradient_T_per_m * dt / cfg.mass_kg
    z_delta = 0.5 * (u * dt)
    t1 = cfg.drift_distance_m / cfg.v_y_m_per_s
    return DerivedParams(
        transit_time_s=dt, z_delta_m=z_delta, u_m_per_s=u, drift_time_s=t1
    )


# ---------------------------------------------------------------------------
# spin-1/2 states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SpinOrientation:
    """Bloch angles of a spin-1/2 state: theta in [0, pi], phi in [-pi, pi).

    Angles are normalized on construction: theta is clamped into [0, pi] and
    phi wrapped into [-pi, pi).  At theta == 0 the azimuth drops out of the
    spinor entirely, so phi is canonicalized to 0 there.  At theta == pi the
    azimuth still fixes the phase of the spin-down amplitude and is kept.
    """

    theta_rad: float
    phi_rad: float = 0.0

    def __post_init__(self):
        theta = float(self.theta_rad)
        phi = float(self.phi_rad)
        if not (math.isfinite(theta) and math.isfinite(phi)):
            raise ValueError(f"angles must be finite, got ({theta!r}, {phi!r})")
        theta = min(max(theta, 0.0), math.pi)
        phi = 0.0 if theta == 0.0 else wrap_phi(phi)
        object.__setattr__(self, "theta_rad", theta)
        object.__setattr__(self, "phi_rad", phi)


def opposite_orientation(o: SpinOrientation) -> SpinOrientation:
    """The antipodal spin orientation: (pi - theta, phi - pi).

    This is the orientation of the partner particle in an opposite-spin
    pair; applying it twice is the identity.
    """
    return SpinOrientation(math.pi - o.theta_rad, wrap_phi(o.phi_rad - math.pi))


@dataclass(frozen=True)
class Spinor:
    """Amplitudes of a spin-1/2 state on the (spin up, spin down) basis."""

    amp_plus: complex
    amp_minus: complex

    def norm(self) -> float:
        return math.sqrt(abs(self.amp_plus) ** 2 + abs(self.amp_minus) ** 2)


@dataclass(frozen=True)
class TwoBodySpinor:
    """Four amplitudes of a two-particle spin state, indexed (A sign, B sign)."""

    amp_pp: complex
    amp_pm: complex
    amp_mp: complex
    amp_mm: complex

    def norm(self) -> float:
        return math.sqrt(
            abs(self.amp_pp) ** 2
            + abs(self.amp_pm) ** 2
            + abs(self.amp_mp) ** 2
            + abs(self.amp_mm) ** 2
        )

    def overlap(self, other: "TwoBodySpinor") -> complex:
        """Inner product <other|self>."""
        return (
            complex(other.amp_pp).conjugate() * self.amp_pp
            + complex(other.amp_pm).conjugate() * self.amp_pm
            + complex(other.amp_mp).conjugate() * self.amp_mp
            + complex(other.amp_mm).conjugate() * self.amp_mm
        )


SINGLET = TwoBodySpinor(0.0j, 1.0 / math.sqrt(2.0), -1.0 / math.sqrt(2.0), 0.0j)
"""The spin-zero pair state (|+-> - |-+>)/sqrt(2)."""


def spinor_from_orientation(o: SpinOrientation) -> Spinor:
    """Amplitudes (cos(theta/2), sin(theta/2) e^{i phi}) for Bloch angles."""
    half = 0.5 * o.theta_rad
    return Spinor(
        complex(math.cos(half), 0.0),
        math.sin(half) * cmath.exp(1j * o.phi_rad),
    )


def orientation_from_spinor(s: Spinor) -> tuple[SpinOrientation, float]:
    """Bloch angles and global phase of a unit spinor.

    Returns ``(orientation, phase)`` such that
    ``exp(i*phase) * spinor_from_orientation(orientation)`` reproduces the
    input.  The phase is read off the spin-up amplitude; when that amplitude
    vanishes (theta == pi) the phase is reported as 0 and the spin-down
    phase is carried by phi instead.

    Raises ``ValueError`` on (numerically) zero-norm input.
    """
    a = complex(s.amp_plus)
    b = complex(s.amp_minus)
    n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if n < 1e-12:
        raise ValueError("zero-norm spinor has no orientation")
    a /= n
    b /= n
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if abs(b) == 0.0:
        phase = cmath.phase(a)
        phi = 0.0
    elif abs(a) == 0.0:
        phase = 0.0
        phi = cmath.phase(b)
    else:
        phase = cmath.phase(a)
        phi = wrap_phi(cmath.phase(b) - phase)
    return SpinOrientation(theta, phi), phase


def rotate_to_analyzer_basis(s: Spinor, delta_rad: float) -> Spinor:
    """Coordinates of a spinor on the basis attached to a tilted analyzer.

    The second analyzer is rotated by ``delta_rad`` about the beam axis
    relative to the first, and its basis is labeled so that the branch
    deflected towards +z' carries the primed '+' label.  Concretely the
    basis images are

        spin-down  ->  ( cos(delta/2), sin(delta/2))
        spin-up    ->  (-sin(delta/2), cos(delta/2))

    so at delta = 0 a spin-down state maps onto the primed '+' branch.  The
    map is orthogonal (norm and inner products preserved) but has
    determinant -1: it is an outcome labeling convention, not a rotation
    operator.  The label flip relative to the textbook spin labeling is
    exposed as the ensemble-level convention switch.
    """
    c = math.cos(0.5 * delta_rad)
    sn = math.sin(0.5 * delta_rad)
    a = complex(s.amp_plus)
    b = complex(s.amp_minus)
    return Spinor(-sn * a + c * b, c * a + sn * b)


def antisymmetrize_singlet(orient_a: SpinOrientation) -> tuple[TwoBodySpinor, float]:
    """Antisymmetrized opposite-spin product state and its global phase.

    Particle A is given the spinor of ``orient_a`` and particle B the
    antipodal one (pi - theta, phi - pi).  The antisymmetrized, normalized
    product equals exp(i*phase) times the singlet state; the returned phase
    is phi_A + pi wrapped into [-pi, pi), i.e. the factor -e^{i phi_A}.

    Returns ``(two_body_state, phase)`` where the state still carries the
    phase (``exp(-i*phase) * state`` is the canonical singlet).
    """
    chi_a = spinor_from_orientation(orient_a)
    chi_b = spinor_from_orientation(opposite_orientation(orient_a))
    # components of chi_a (x) chi_b - chi_b (x) chi_a, first slot = particle A
    pp = chi_a.amp_plus * chi_b.amp_plus - chi_b.amp_plus * chi_a.amp_plus
    pm = chi_a.amp_plus * chi_b.amp_minus - chi_b.amp_plus * chi_a.amp_minus
    mp = chi_a.amp_minus * chi_b.amp_plus - chi_b.amp_minus * chi_a.amp_plus
    mm = chi_a.amp_minus * chi_b.amp_minus - chi_b.amp_minus * chi_a.amp_minus
    norm = math.sqrt(abs(pp) ** 2 + abs(pm) ** 2 + abs(mp) ** 2 + abs(mm) ** 2)
    state = TwoBodySpinor(pp / norm, pm / norm, mp / norm, mm / norm)
    phase = cmath.phase(state.overlap(SINGLET))
    return state, phase

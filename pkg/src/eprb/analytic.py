"""Closed-form wave functions and densities for the two-step experiment.

Everything here is analytic.  The initial transverse state of each atom is
a round Gaussian packet in the (x, z) plane; after the first magnet the
spin-up and spin-down branches of atom A separate into packets displaced by
+-(z_delta + u t) along z, each carrying a transverse momentum phase
exp(+- i m u z / hbar).  The time-only phases that multiply each branch of
the analytic solution are set identically to zero: they are not fixed by
the model and cancel in every observable implemented here (densities,
branch weights, trajectory fields).

All functions broadcast over numpy arrays so the test-suite quadrature
oracles can evaluate them on grids.  Units are SI throughout; planar
densities are 1/m^2 and line densities 1/m.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import HBAR, DerivedParams, SpinOrientation, Spinor, TwoBodySpinor

_GL8_NODES, _GL8_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class PlanePoint:
    """A point (or array of points) in the transverse (x, z) plane, meters."""

    x_m: object
    z_m: object

    def __post_init__(self):
        if not (np.all(np.isfinite(self.x_m)) and np.all(np.isfinite(self.z_m))):
            raise ValueError("plane coordinates must be finite")


@dataclass(frozen=True)
class BranchWeights:
    """Probabilities of the two branches behind the tilted analyzer."""

    p_plus: float
    p_minus: float

    def __post_init__(self):
        if abs((self.p_plus + self.p_minus) - 1.0) > 1e-12:
            raise ValueError("branch weights must sum to 1")


@dataclass(frozen=True)
class ConditionalWaveB:
    """Spin state and spatial packet of atom B right after A is detected."""

    spinor: Spinor
    packet: Callable[[PlanePoint], object]


def gaussian_packet(r: PlanePoint, sigma0: float):
    """Round transverse packet (2 pi sigma0^2)^(-1/2) exp(-(x^2+z^2)/(4 sigma0^2)).

    Real and positive; its squared modulus integrates to 1 over the plane.
    """
    if sigma0 <= 0.0:
        raise ValueError("sigma0 must be > 0")
    s2 = sigma0 * sigma0
    norm = (2.0 * np.pi * s2) ** -0.5
    return norm * np.exp(-(np.square(r.x_m) + np.square(r.z_m)) / (4.0 * s2))


def deflected_packet(
    r: PlanePoint,
    t: float,
    sign: int,
    d: DerivedParams,
    sigma0: float,
    mass: float,
):
    """Post-magnet packet of one spin branch at time ``t`` after magnet exit.

    The branch of spin sign ``sign`` (+1 or -1) is the initial packet
    displaced to z = sign*(z_delta + u t) and boosted by the transverse
    momentum phase exp(i * sign * m u z / hbar).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    shift = sign * (d.z_delta_m + d.u_m_per_s * t)
    modulus = gaussian_packet(PlanePoint(r.x_m, np.asarray(r.z_m) - shift), sigma0)
    phase = np.exp(1j * (sign * mass * d.u_m_per_s / HBAR) * np.asarray(r.z_m))
    return modulus * phase


def two_body_wave_after_magnet(
    r_a: PlanePoint,
    r_b: PlanePoint,
    t: float,
    d: DerivedParams,
    sigma0: float,
    mass: float,
) -> TwoBodySpinor:
    """Pointwise pair amplitudes at time ``t`` after A leaves its magnet.

    Only the (+,-) and (-,+) spin components are populated:
    (1/sqrt(2)) f(r_B) (f+(r_A,t) |+->  -  f-(r_A,t) |-+>).
    The returned amplitudes are a wave-function field, not a normalized
    spinor; integrating the squared modulus over both planes gives 1.
    """
    fb = gaussian_packet(r_b, sigma0)
    fp = deflected_packet(r_a, t, +1, d, sigma0, mass)
    fm = deflected_packet(r_a, t, -1, d, sigma0, mass)
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    amp_pm = inv_sqrt2 * fb * fp
    amp_mp = -inv_sqrt2 * fb * fm
    zero = np.zeros_like(amp_pm)
    return TwoBodySpinor(amp_pp=zero, amp_pm=amp_pm, amp_mp=amp_mp, amp_mm=zero)


def _gauss1d(z, center, sigma0):
    s2 = sigma0 * sigma0
    return (2.0 * np.pi * s2) ** -0.5 * np.exp(
        -np.square(np.asarray(z) - center) / (2.0 * s2)
    )


def pair_density_after_magnet(z_a, z_b, t: float, d: DerivedParams, sigma0: float):
    """Joint position density of the pair in (z_A, z_B) at time ``t``.

    The x coordinates are already integrated out: the result is the product
    of a fixed width-sigma0 Gaussian in z_B and an equal-weight two-Gaussian
    mixture in z_A centered at +-(z_delta + u t).
    """
    shift = d.z_delta_m + d.u_m_per_s * t
    mix_a = 0.5 * (_gauss1d(z_a, shift, sigma0) + _gauss1d(z_a, -shift, sigma0))
    return _gauss1d(z_b, 0.0, sigma0) * mix_a


def marginal_a(z_a, t: float, d: DerivedParams, sigma0: float):
    """z-density of atom A at time ``t`` after the magnet: a bimodal mixture.

    Identical to the beam profile of a lone, unpolarized atom behind a
    Stern-Gerlach magnet; entanglement with B leaves it unchanged.
    """
    shift = d.z_delta_m + d.u_m_per_s * t
    return 0.5 * (_gauss1d(z_a, shift, sigma0) + _gauss1d(z_a, -shift, sigma0))


def marginal_b(z_b, sigma0: float, t: float = 0.0):
    """z-density of atom B: the unchanged initial Gaussian of width sigma0.

    ``t`` is accepted so the time-independence claim is directly testable;
    the closed form (the z_A mixture integrates to 1 at every time) does not
    involve it.
    """
    del t
    return _gauss1d(z_b, 0.0, sigma0)


def polarized_beam_marginal(z, t: float, theta0: float, d: DerivedParams, sigma0: float):
    """z-density behind the magnet for a beam polarized at polar angle theta0.

    cos^2(theta0/2) of the weight travels with the upper packet and
    sin^2(theta0/2) with the lower one.
    """
    shift = d.z_delta_m + d.u_m_per_s * t
    c2 = 0.5 * (1.0 + np.cos(theta0))
    s2 = 0.5 * (1.0 - np.cos(theta0))
    return c2 * _gauss1d(z, shift, sigma0) + s2 * _gauss1d(z, -shift, sigma0)


def unpolarized_beam_marginal(z, t: float, d: DerivedParams, sigma0: float):
    """z-density behind the magnet for an unpolarized beam.

    Averages :func:`polarized_beam_marginal` over the isotropic spin prior
    (uniform in cos(theta0)) by Gauss-Legendre quadrature; the integrand is
    linear in cos(theta0) so the 8-node rule is exact to rounding.
    """
    z = np.asarray(z, dtype=float)
    acc = np.zeros_like(z, dtype=float)
    for v, w in zip(_GL8_NODES, _GL8_WEIGHTS):
        acc = acc + w * polarized_beam_marginal(z, t, float(np.arccos(v)), d, sigma0)
    return 0.5 * acc


def spot_separation(t: float, d: DerivedParams) -> float:
    """Distance between the two impact spots at time ``t`` after the magnet."""
    if t < 0.0:
        raise ValueError("t must be >= 0")
    return 2.0 * (d.z_delta_m + d.u_m_per_s * t)


def conditional_b_after_a(outcome_a: int, sigma0: float) -> ConditionalWaveB:
    """State of atom B immediately after A's outcome is registered.

    B's spin collapses to the sign opposite to A's outcome while its spatial
    packet is untouched (still the initial Gaussian).
    """
    if outcome_a not in (1, -1):
        raise ValueError("outcome_a must be +1 or -1")
    spinor = Spinor(0.0j, 1.0 + 0.0j) if outcome_a == 1 else Spinor(1.0 + 0.0j, 0.0j)
    return ConditionalWaveB(spinor=spinor, packet=lambda r: gaussian_packet(r, sigma0))


def analyzer_branch_weights(outcome_a: int, delta_rad: float) -> BranchWeights:
    """Branch probabilities for B behind its analyzer tilted by ``delta_rad``.

    Given A = +, B is spin-down and splits as (cos^2(delta/2),
    sin^2(delta/2)) onto the primed (+', -') branches; given A = - the two
    weights swap.
    """
    if outcome_a not in (1, -1):
        raise ValueError("outcome_a must be +1 or -1")
    c2 = np.cos(0.5 * delta_rad) ** 2
    s2 = np.sin(0.5 * delta_rad) ** 2
    if outcome_a == 1:
        return BranchWeights(p_plus=float(c2), p_minus=float(s2))
    return BranchWeights(p_plus=float(s2), p_minus=float(c2))


def effective_wave_a(
    r: PlanePoint,
    t: float,
    orient0: SpinOrientation,
    d: DerivedParams,
    sigma0: float,
    mass: float,
) -> Spinor:
    """Single-particle wave of atom A with initial spin ``orient0``.

    The spin-up amplitude rides the upward-deflected packet and the
    spin-down amplitude the downward one:
    cos(theta0/2) f+ |+>  +  sin(theta0/2) e^{i phi0} f- |->.
    Pointwise amplitudes; the squared modulus integrates to 1.
    """
    half = 0.5 * orient0.theta_rad
    fp = deflected_packet(r, t, +1, d, sigma0, mass)
    fm = deflected_packet(r, t, -1, d, sigma0, mass)
    return Spinor(
        np.cos(half) * fp,
        np.sin(half) * np.exp(1j * orient0.phi_rad) * fm,
    )


def effective_wave_b(r: PlanePoint, orient_b: SpinOrientation, sigma0: float) -> Spinor:
    """Single-particle wave of atom B during step 1.

    B keeps its initial spatial packet; only its spin orientation evolves
    (driven by A's position).  The wave factorizes as packet times the
    spinor of ``orient_b``.
    """
    f = gaussian_packet(r, sigma0)
    half = 0.5 * orient_b.theta_rad
    return Spinor(
        f * np.cos(half),
        f * (np.sin(half) * np.exp(1j * orient_b.phi_rad)),
    )

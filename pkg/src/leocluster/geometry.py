"""Spherical-shell geometry of the constellation.

Angular limits, chord distances, contact-angle distributions for leaders
and followers, cap-segment areas, and uniform sampling on the sphere and
on spherical caps.  Distances are kilometres, angles radians.
"""

import math
from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np
from scipy import integrate as _sci_integrate

from ._backend import NUMBA_ENABLED, njit
from ._kernels import (chord_m_from_cos, contact_cdf_scalar,
                       contact_pdf_scalar, follower_cos_angle, shell_chord_m)
from ._rng import (DOMAIN_GEOMETRY, U0, U1, _block, dbl_at_vec)


@dataclass(frozen=True)
class ConstellationConfig:
    """Spatial model: leaders uniform on the shell, followers uniform on a
    cap of half-angle ``cap_half_angle_rad`` around their leader."""

    earth_radius_km: float
    altitude_km: float
    n_leaders: int
    n_followers: int
    cap_half_angle_rad: float
    max_contact_angle_rad: float

    def __post_init__(self):
        if self.earth_radius_km <= 0 or self.altitude_km <= 0:
            raise ValueError("radii must be positive")
        if self.n_leaders < 1:
            raise ValueError("n_leaders must be at least 1")
        if self.n_followers < 0:
            raise ValueError("n_followers must be non-negative")
        if not 0.0 < self.cap_half_angle_rad < math.pi / 2:
            raise ValueError("cap_half_angle_rad must lie in (0, pi/2)")
        if not 0.0 < self.max_contact_angle_rad < math.pi / 2:
            raise ValueError("max_contact_angle_rad must lie in (0, pi/2)")

    @property
    def shell_radius_km(self) -> float:
        return self.earth_radius_km + self.altitude_km


@dataclass(frozen=True)
class SphericalDirection:
    """Direction relative to the leader axis; fields may be arrays."""

    polar_rad: float
    azimuth_rad: float


@dataclass(frozen=True)
class MixedAngularDistribution:
    """Angular law with an optional point mass plus a continuous density."""

    atom_weight: float
    atom_location_rad: float
    density: Callable[[float], float]
    support: Tuple[float, float]
    cdf: Callable[[float], float]


# ---------------------------------------------------------------------------
# angular limits and chords
# ---------------------------------------------------------------------------

def max_contact_angle(d_max_km: float, cfg: ConstellationConfig) -> float:
    """Central angle at which the ground distance reaches ``d_max_km``."""
    re = cfg.earth_radius_km
    rs = cfg.shell_radius_km
    arg = (re * re + rs * rs - d_max_km * d_max_km) / (2.0 * re * rs)
    if arg > 1.0 + 1e-12 or arg < -1.0 - 1e-12:
        raise ValueError(f"distance {d_max_km} km is outside the reachable range")
    return math.acos(min(1.0, max(-1.0, arg)))


def follower_los_limit(cfg: ConstellationConfig) -> float:
    """Largest leader contact angle keeping every cap follower above the
    user's horizon; compare against ``max_contact_angle_rad``."""
    return math.acos(cfg.earth_radius_km / cfg.shell_radius_km) - cfg.cap_half_angle_rad


def chord_leader_user(theta: float, cfg: ConstellationConfig) -> float:
    """Euclidean leader-user distance at contact angle theta, km."""
    return chord_m_from_cos(math.cos(theta), cfg.earth_radius_km, cfg.shell_radius_km)


def chord_follower_user(theta: float, psi: float, phi: float,
                        cfg: ConstellationConfig) -> float:
    """Euclidean follower-user distance for a follower at cap coordinates
    (psi, phi) and a user at contact angle theta, km."""
    ca = follower_cos_angle(math.sin(theta), math.cos(theta),
                            math.sin(psi), math.cos(psi), math.cos(phi))
    return chord_m_from_cos(ca, cfg.earth_radius_km, cfg.shell_radius_km)


def chord_leader_follower(psi: float, cfg: ConstellationConfig) -> float:
    """Euclidean distance between two shell points a central angle psi
    apart, km."""
    return shell_chord_m(math.cos(psi), cfg.shell_radius_km)


# ---------------------------------------------------------------------------
# contact-angle laws
# ---------------------------------------------------------------------------

def leader_contact_cdf(theta: float, cfg: ConstellationConfig) -> float:
    """P(nearest-leader contact angle <= theta) under the uniform shell
    placement (void probability of the matching cap)."""
    return contact_cdf_scalar(theta, float(cfg.n_leaders))


def leader_contact_pdf(theta: float, cfg: ConstellationConfig) -> float:
    """Density of the nearest-leader contact angle."""
    return contact_pdf_scalar(theta, float(cfg.n_leaders))


def contact_quantile(q: float, cfg: ConstellationConfig) -> float:
    """Inverse of ``leader_contact_cdf`` (quadrature break-point helper)."""
    if not 0.0 <= q < 1.0:
        raise ValueError("quantile must lie in [0, 1)")
    arg = 2.0 * (1.0 - q) ** (1.0 / cfg.n_leaders) - 1.0
    return math.acos(min(1.0, max(-1.0, arg)))


def cap_segment_area(theta_c: float, theta_o: float,
                     cfg: ConstellationConfig) -> float:
    """Area of the one-sided portion of a shell cap of half-angle theta_c
    intercepted to angular depth theta_o from its near rim, km^2.

    Quadrature of the chord-arc integral; the integrand has a square-root
    endpoint so the interval is split at 90% of the upper limit.
    """
    if theta_o < 0.0 or theta_o > 2.0 * theta_c or 2.0 * theta_c > math.pi:
        raise ValueError("need 0 <= theta_o <= 2*theta_c <= pi")
    if theta_o == 0.0:
        return 0.0
    rs = cfg.shell_radius_km
    upper = rs * math.sin(theta_c)
    lower = min(rs * math.cos(theta_c) * math.tan(theta_c - theta_o), upper)
    s2 = (rs * math.sin(theta_c)) ** 2

    def integrand(ell):
        arg = s2 - ell * ell
        if arg <= 0.0:
            return 0.0
        return 2.0 * rs * math.asin(math.sqrt(arg) / rs)

    pts = [0.9 * upper] if lower < 0.9 * upper else None
    val, _ = _sci_integrate.quad(integrand, lower, upper, points=pts,
                                 epsabs=1e-9 * rs * rs, epsrel=1e-10, limit=200)
    return val


def _one_sided_term(delta: float, cap: float) -> float:
    if abs(delta) >= cap:
        return 0.0
    t = math.tan(delta)
    arg = math.sin(cap) ** 2 - (math.cos(cap) * t) ** 2
    if arg <= 0.0:
        return 0.0
    return math.asin(math.sqrt(arg)) / math.cos(delta) ** 2


def follower_contact_pdf(theta: float, theta_lu: float,
                         cfg: ConstellationConfig) -> float:
    """Conditional density of the follower-user contact angle given the
    leader contact angle, from the cap-segment construction.

    Piecewise: a single term on |theta_lu - theta| <= cap; inside the cap
    (theta_lu < cap) a two-term difference on [0, cap - theta_lu].
    Out-of-support angles return 0 so enclosing quadratures are safe.
    """
    cap = cfg.cap_half_angle_rad
    if theta < 0.0:
        return 0.0
    pref = math.cos(cap) / (math.pi * (1.0 - math.cos(cap)))
    if theta_lu >= cap:
        if theta < theta_lu - cap or theta > theta_lu + cap:
            return 0.0
        return pref * _one_sided_term(theta_lu - theta, cap)
    if theta > theta_lu + cap:
        return 0.0
    if theta >= cap - theta_lu:
        return pref * _one_sided_term(theta_lu - theta, cap)
    return pref * (_one_sided_term(theta_lu - theta, cap)
                   - _one_sided_term(theta_lu + theta, cap))


def extreme_contact_laws(cfg: ConstellationConfig
                         ) -> Tuple[MixedAngularDistribution, MixedAngularDistribution]:
    """Laws of the nearest and farthest cap points' contact angles.

    The nearest-point law carries a point mass at zero (user under the
    cap); both continuous parts are shifted copies of the leader law.
    """
    cap = cfg.cap_half_angle_rad
    tmax = cfg.max_contact_angle_rad
    n = float(cfg.n_leaders)
    atom = contact_cdf_scalar(cap, n)

    def min_density(theta: float) -> float:
        if theta <= 0.0 or theta > tmax - cap:
            return 0.0
        return contact_pdf_scalar(theta + cap, n)

    def min_cdf(theta: float) -> float:
        if theta < 0.0:
            return 0.0
        return contact_cdf_scalar(min(theta + cap, tmax), n)

    def max_density(theta: float) -> float:
        if theta < cap or theta > tmax + cap:
            return 0.0
        return contact_pdf_scalar(theta - cap, n)

    def max_cdf(theta: float) -> float:
        return contact_cdf_scalar(min(max(theta - cap, 0.0), tmax), n)

    min_law = MixedAngularDistribution(
        atom_weight=atom, atom_location_rad=0.0, density=min_density,
        support=(0.0, tmax - cap), cdf=min_cdf)
    max_law = MixedAngularDistribution(
        atom_weight=0.0, atom_location_rad=0.0, density=max_density,
        support=(cap, tmax + cap), cdf=max_cdf)
    return min_law, max_law


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------

@njit
def _nearest_angle_kernel(seed, domain, t0, n, n_leaders, out):
    inv53 = 1.0 / 9007199254740992.0
    u11 = np.uint64(11)
    for i in range(n):
        trial = np.uint64(t0 + i)
        best = -1.0
        k = 0
        j = np.uint64(0)
        while k < n_leaders:
            x0, x1, x2, x3 = _block(seed, domain, trial, j)
            j += U1
            c = 2.0 * (float(x0 >> u11) * inv53) - 1.0
            if c > best:
                best = c
            k += 1
            if k < n_leaders:
                c = 2.0 * (float(x1 >> u11) * inv53) - 1.0
                if c > best:
                    best = c
                k += 1
            if k < n_leaders:
                c = 2.0 * (float(x2 >> u11) * inv53) - 1.0
                if c > best:
                    best = c
                k += 1
            if k < n_leaders:
                c = 2.0 * (float(x3 >> u11) * inv53) - 1.0
                if c > best:
                    best = c
                k += 1
        out[i] = math.acos(min(1.0, max(-1.0, best)))


def _nearest_angle_numpy(seed, domain, t0, n, n_leaders):
    from ._rng import _blocks_vec
    trials = np.arange(t0, t0 + n, dtype=np.uint64)
    best = np.full(n, -1.0)
    nblocks = (n_leaders + 3) // 4
    for j in range(nblocks):
        xs = _blocks_vec(seed, domain, trials, np.full(n, j, dtype=np.uint64))
        for lane in range(4):
            if 4 * j + lane >= n_leaders:
                break
            c = 2.0 * ((xs[lane] >> np.uint64(11)).astype(np.float64)
                       / 9007199254740992.0) - 1.0
            np.maximum(best, c, out=best)
    return np.arccos(np.clip(best, -1.0, 1.0))


def sample_nearest_leader_angle(stream, cfg: ConstellationConfig, n: int = None):
    """Minimum contact angle over all leaders, sampled by placing every
    leader uniformly on the shell (kept independent of the closed-form
    law so it can act as that law's oracle)."""
    scalar = n is None
    count = 1 if scalar else int(n)
    t0 = int(stream.take(count)[0])
    if NUMBA_ENABLED:
        out = np.empty(count, dtype=np.float64)
        _nearest_angle_kernel(stream.seed, np.uint64(stream.domain),
                              np.uint64(t0), count, int(cfg.n_leaders), out)
    else:
        out = _nearest_angle_numpy(stream.seed, stream.domain, t0, count,
                                   int(cfg.n_leaders))
    return float(out[0]) if scalar else out


def sample_follower_direction(stream, cfg: ConstellationConfig, n: int = None):
    """Uniform draw on the follower cap: cos(psi) uniform on
    [cos(cap), 1], azimuth uniform on [0, 2*pi)."""
    scalar = n is None
    count = 1 if scalar else int(n)
    trials = stream.take(count)
    u_psi = dbl_at_vec(stream.seed, stream.domain, trials,
                       np.zeros(count, dtype=np.uint64))
    u_phi = dbl_at_vec(stream.seed, stream.domain, trials,
                       np.ones(count, dtype=np.uint64))
    one_minus_cos = 2.0 * math.sin(cfg.cap_half_angle_rad / 2.0) ** 2
    psi = np.arccos(np.clip(1.0 - u_psi * one_minus_cos, -1.0, 1.0))
    phi = 2.0 * math.pi * u_phi
    if scalar:
        return SphericalDirection(float(psi[0]), float(phi[0]))
    return SphericalDirection(psi, phi)

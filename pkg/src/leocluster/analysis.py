"""Analytical outage probability and average data rate.

Outage uses the exact fading CDF series; rate expectations use the matched
Gamma density.  All integrals run through one adaptive-quadrature wrapper
with nested tolerances (each inner level 10x tighter than its enclosing
level).  Fading integrals truncate at the Gamma quantile 1 - 1e-9.
"""

import math
import warnings
from dataclasses import dataclass, replace

from scipy import integrate as _sci_integrate
from scipy.optimize import brentq
from scipy.special import gammainc

from . import channel, geometry
from ._kernels import (chord_m_from_cos, contact_pdf_scalar, gamma_pdf_scalar,
                       oi_bound, oi_cond_leader, oi_follower_psi, oi_leader,
                       ri_cluster_theta, ri_fading, shell_chord_m, sr_cdf_scalar)
from .errors import QuadratureError

KM = 1e3

ESTIMATE_KINDS = ("analytic", "lower_bound", "upper_bound", "midpoint", "monte_carlo")


@dataclass(frozen=True)
class PerformanceEstimate:
    """A performance number plus how it was obtained."""

    value: float
    kind: str = "analytic"
    ci_half_width: float = 0.0
    trials: int = 0

    def __post_init__(self):
        if self.kind not in ESTIMATE_KINDS:
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        if self.ci_half_width < 0 or self.trials < 0:
            raise ValueError("ci_half_width and trials must be non-negative")


@dataclass(frozen=True)
class ScenarioParams:
    """Full evaluation scenario: constellation, three link budgets, fading
    parameters and the coverage threshold."""

    cfg: geometry.ConstellationConfig
    lu: channel.LinkBudget
    fu: channel.LinkBudget
    lf: channel.LinkBudget
    fading: channel.ShadowedRicianParams
    gamma_th_db: float

    @property
    def gamma_th_linear(self) -> float:
        return channel.db_to_linear(self.gamma_th_db)


def with_lu_power_w(s: ScenarioParams, watts: float) -> ScenarioParams:
    """Scenario copy with the leader-user transmit power replaced."""
    if watts <= 0:
        raise ValueError("leader power must be positive")
    return replace(s, lu=replace(s.lu, tx_power_dbw=channel.linear_to_db(watts)))


# ---------------------------------------------------------------------------
# quadrature engine
# ---------------------------------------------------------------------------

def integrate(f, lower, upper, abs_tol=1e-8, rel_tol=1e-8, points=None,
              limit=200, args=()):
    """Adaptive quadrature with error <= max(abs_tol, rel_tol*|result|).

    Raises QuadratureError (best estimate attached) when the subdivision
    limit is hit or the integrand misbehaves.
    """
    if abs_tol <= 0 or rel_tol <= 0:
        raise ValueError("tolerances must be positive")
    if points is not None:
        if math.isinf(lower) or math.isinf(upper):
            points = None
        else:
            points = [p for p in points if lower < p < upper] or None
    out = _sci_integrate.quad(f, lower, upper, args=args, epsabs=abs_tol,
                              epsrel=rel_tol, limit=limit, points=points,
                              full_output=1)
    if len(out) >= 4:
        raise QuadratureError(str(out[3]), estimate=out[0], abserr=out[1])
    return out[0]


def gamma_fading_cutoff(p: channel.ShadowedRicianParams, mass=1e-9) -> float:
    """Upper truncation point for fading integrals: the matched-Gamma
    quantile at 1 - mass, by bracketed root finding on the regularised
    incomplete gamma."""
    q = 1.0 - mass
    hi = p.m2 * (p.m1 + 1.0)
    while gammainc(p.m1, hi / p.m2) < q:
        hi *= 2.0
    return brentq(lambda w: gammainc(p.m1, w / p.m2) - q, 0.0, hi,
                  xtol=1e-12, rtol=1e-12)


def _theta_points(s: ScenarioParams, shift: float = 0.0):
    """Break points where the contact density concentrates (shifted when
    the integration variable is offset from the contact angle)."""
    pts = []
    for q in (0.5, 0.99, 0.9999):
        try:
            pts.append(geometry.contact_quantile(q, s.cfg) + shift)
        except ValueError:
            pass
    return pts


def _clip_probability(value, tol):
    if value < -1e-6 - tol or value > 1.0 + 1e-6 + tol:
        raise QuadratureError(f"probability estimate {value} outside [0, 1]",
                              estimate=value)
    return min(1.0, max(0.0, value))


def _geom_args(s: ScenarioParams):
    return s.cfg.earth_radius_km * KM, s.cfg.shell_radius_km * KM


# ---------------------------------------------------------------------------
# outage
# ---------------------------------------------------------------------------

def outage_leader(s: ScenarioParams, tol: float = 1e-6) -> PerformanceEstimate:
    """Outage probability of the direct leader-user link."""
    re_m, rs_m = _geom_args(s)
    f = s.fading
    args = (s.gamma_th_linear, channel.composite_gain(s.lu), re_m, rs_m,
            float(s.cfg.n_leaders), f.omega, f.two_b0, f.m)
    val = integrate(oi_leader, 0.0, s.cfg.max_contact_angle_rad,
                    abs_tol=tol, rel_tol=tol, points=_theta_points(s), args=args)
    return PerformanceEstimate(_clip_probability(val, tol), "analytic")


def outage_follower_given_theta(theta: float, s: ScenarioParams,
                                tol: float = 1e-6) -> float:
    """Outage probability of one cap follower's downlink conditioned on
    the leader contact angle (tol is the enclosing level's tolerance)."""
    re_m, rs_m = _geom_args(s)
    f = s.fading
    cap = s.cfg.cap_half_angle_rad
    xi_fu = channel.composite_gain(s.fu)
    sin_t, cos_t = math.sin(theta), math.cos(theta)

    def over_phi(phi):
        return integrate(oi_follower_psi, 0.0, cap,
                         abs_tol=tol * 0.01, rel_tol=tol * 0.01,
                         args=(math.cos(phi), sin_t, cos_t, s.gamma_th_linear,
                               xi_fu, re_m, rs_m, f.omega, f.two_b0, f.m))

    raw = integrate(over_phi, 0.0, 2.0 * math.pi,
                    abs_tol=tol * 0.1, rel_tol=tol * 0.1)
    norm = 2.0 * math.pi * 2.0 * math.sin(cap / 2.0) ** 2
    return min(1.0, max(0.0, raw / norm))


def outage_cluster(s: ScenarioParams, tol: float = 1e-6) -> PerformanceEstimate:
    """Outage probability of the whole cluster: every follower downlink and
    the direct link simultaneously below threshold."""
    nf = s.cfg.n_followers
    if nf == 0:
        return outage_leader(s, tol)
    re_m, rs_m = _geom_args(s)
    f = s.fading
    xi_lu = channel.composite_gain(s.lu)
    cond_args = (s.gamma_th_linear, xi_lu, re_m, rs_m, f.omega, f.two_b0, f.m)
    nl = float(s.cfg.n_leaders)

    def over_theta(theta):
        p_fu = outage_follower_given_theta(theta, s, tol)
        p_cond = oi_cond_leader(theta, *cond_args)
        return (p_fu ** nf) * p_cond * contact_pdf_scalar(theta, nl)

    val = integrate(over_theta, 0.0, s.cfg.max_contact_angle_rad,
                    abs_tol=tol, rel_tol=tol, points=_theta_points(s))
    return PerformanceEstimate(_clip_probability(val, tol), "analytic")


def outage_cluster_bounds(s: ScenarioParams, tol: float = 1e-6):
    """Single-integral lower/upper envelopes of the cluster outage from the
    nearest/farthest-cap-point angle laws (the nearest-point law's mass at
    zero contributes the unweighted conditional-leader integral term)."""
    re_m, rs_m = _geom_args(s)
    f = s.fading
    cap = s.cfg.cap_half_angle_rad
    tmax = s.cfg.max_contact_angle_rad
    xi_lu = channel.composite_gain(s.lu)
    xi_fu = channel.composite_gain(s.fu)
    nf = float(s.cfg.n_followers)
    nl = float(s.cfg.n_leaders)
    gam = s.gamma_th_linear
    sr = (f.omega, f.two_b0, f.m)

    atom = geometry.leader_contact_cdf(cap, s.cfg)
    cond_int = integrate(oi_cond_leader, 0.0, cap, abs_tol=tol * 0.1,
                         rel_tol=tol * 0.1,
                         args=(gam, xi_lu, re_m, rs_m) + sr)
    r0 = chord_m_from_cos(1.0, re_m, rs_m)
    p_fu_at_zero = sr_cdf_scalar(gam * r0 * r0 / xi_fu, *sr) ** nf
    lower_val = atom * cond_int * p_fu_at_zero
    lower_val += integrate(
        oi_bound, 0.0, tmax - cap, abs_tol=tol, rel_tol=tol,
        points=_theta_points(s, shift=-cap),
        args=(cap, gam, xi_lu, xi_fu, nf, re_m, rs_m, nl) + sr)
    upper_val = integrate(
        oi_bound, cap, tmax + cap, abs_tol=tol, rel_tol=tol,
        points=_theta_points(s, shift=cap),
        args=(-cap, gam, xi_lu, xi_fu, nf, re_m, rs_m, nl) + sr)
    lower = PerformanceEstimate(_clip_probability(lower_val, tol), "lower_bound")
    upper = PerformanceEstimate(_clip_probability(upper_val, tol), "upper_bound")
    return lower, upper


# ---------------------------------------------------------------------------
# rate
# ---------------------------------------------------------------------------

def _rate_fading_bits(snr_coeff, s, tol, w_cut):
    """E_w[log2(1 + snr_coeff * w)] under the matched-Gamma fading."""
    f = s.fading
    return integrate(ri_fading, 0.0, w_cut, abs_tol=tol, rel_tol=tol,
                     args=(snr_coeff, f.m1, f.m2))


def rate_leader(s: ScenarioParams, tol: float = 1e-6) -> PerformanceEstimate:
    """Average Shannon rate of the direct leader-user link, bit/s."""
    re_m, rs_m = _geom_args(s)
    xi_lu = channel.composite_gain(s.lu)
    nl = float(s.cfg.n_leaders)
    w_cut = gamma_fading_cutoff(s.fading)

    def over_theta(theta):
        r = chord_m_from_cos(math.cos(theta), re_m, rs_m)
        bits = _rate_fading_bits(xi_lu / (r * r), s, tol * 0.1, w_cut)
        return bits * contact_pdf_scalar(theta, nl)

    bits = integrate(over_theta, 0.0, s.cfg.max_contact_angle_rad,
                     abs_tol=tol, rel_tol=tol, points=_theta_points(s))
    return PerformanceEstimate(max(0.0, bits) * s.lu.bandwidth_hz, "analytic")


def follower_rate_bound_bits(s: ScenarioParams, law: geometry.MixedAngularDistribution,
                             tol: float = 1e-6) -> float:
    """Per-follower downlink rate in bits under an extreme-angle law
    (point mass included)."""
    re_m, rs_m = _geom_args(s)
    xi_fu = channel.composite_gain(s.fu)
    w_cut = gamma_fading_cutoff(s.fading)

    def bits_at(theta):
        r = chord_m_from_cos(math.cos(theta), re_m, rs_m)
        return _rate_fading_bits(xi_fu / (r * r), s, tol * 0.1, w_cut)

    lo, hi = law.support
    # the contact density concentration sits at quantile - cap (nearest-point
    # law) or quantile + cap (farthest-point law)
    shift = -s.cfg.cap_half_angle_rad if law.atom_weight > 0.0 else s.cfg.cap_half_angle_rad
    val = integrate(lambda t: bits_at(t) * law.density(t), lo, hi,
                    abs_tol=tol, rel_tol=tol,
                    points=_theta_points(s, shift=shift))
    if law.atom_weight > 0.0:
        val += law.atom_weight * bits_at(law.atom_location_rad)
    return max(0.0, val)


def rate_cluster_bounds(s: ScenarioParams, tol: float = 1e-6):
    """Lower/upper envelopes of the cluster rate from the extreme-angle
    laws (relay links assumed non-limiting), plus their midpoint."""
    cap = s.cfg.cap_half_angle_rad
    tmax = s.cfg.max_contact_angle_rad
    if cap >= tmax:
        raise ValueError("cap half-angle must be below the maximum contact angle")
    if cap / tmax > 0.1:
        warnings.warn("cap is not small relative to the contact range; "
                      "the rate envelopes degrade", stacklevel=2)
    min_law, max_law = geometry.extreme_contact_laws(s.cfg)
    base = rate_leader(s, tol).value
    nf = s.cfg.n_followers
    bw = s.fu.bandwidth_hz
    upper_val = nf * bw * follower_rate_bound_bits(s, min_law, tol) + base
    lower_val = nf * bw * follower_rate_bound_bits(s, max_law, tol) + base
    lower = PerformanceEstimate(lower_val, "lower_bound")
    upper = PerformanceEstimate(upper_val, "upper_bound")
    midpoint = PerformanceEstimate(0.5 * (lower_val + upper_val), "midpoint")
    return lower, upper, midpoint


def rate_cluster(s: ScenarioParams, tol: float = 1e-3) -> PerformanceEstimate:
    """Average cluster rate with per-follower relay bottlenecks, bit/s.

    Four nested quadratures (fading power, azimuth, cap polar angle,
    contact angle); expect minutes at tight tolerances, so the default is
    coarse.  The relay/downlink minimum is evaluated pointwise.
    """
    nf = s.cfg.n_followers
    base = rate_leader(s, min(tol, 1e-3))
    if nf == 0:
        return base
    re_m, rs_m = _geom_args(s)
    cap = s.cfg.cap_half_angle_rad
    tmax = s.cfg.max_contact_angle_rad
    nl = float(s.cfg.n_leaders)
    xi_fu = channel.composite_gain(s.fu)
    xi_lf = channel.composite_gain(s.lf)
    band_ratio = s.lf.bandwidth_hz / s.fu.bandwidth_hz
    f = s.fading
    w_cut = gamma_fading_cutoff(f)
    t_pts = _theta_points(s)

    def expected_bits(w):
        def over_phi(phi):
            cos_phi = math.cos(phi)

            def over_psi(psi):
                r_lf = shell_chord_m(math.cos(psi), rs_m)
                isl_bits = math.inf if r_lf <= 0.0 else math.log2(1.0 + xi_lf / (r_lf * r_lf))
                inner = integrate(ri_cluster_theta, 0.0, tmax,
                                  abs_tol=tol * 1e-3, rel_tol=tol * 1e-3,
                                  points=t_pts,
                                  args=(w, math.sin(psi), math.cos(psi), cos_phi,
                                        isl_bits, band_ratio, xi_fu, re_m, rs_m, nl))
                return math.sin(psi) * inner

            return integrate(over_psi, 0.0, cap, abs_tol=tol * 1e-2,
                             rel_tol=tol * 1e-2)

        raw = integrate(over_phi, 0.0, 2.0 * math.pi, abs_tol=tol * 0.1,
                        rel_tol=tol * 0.1)
        return raw / (2.0 * math.pi * 2.0 * math.sin(cap / 2.0) ** 2)

    bits = integrate(lambda w: expected_bits(w) * gamma_pdf_scalar(w, f.m1, f.m2),
                     0.0, w_cut, abs_tol=tol, rel_tol=tol, limit=100)
    value = nf * s.fu.bandwidth_hz * max(0.0, bits) + base.value
    return PerformanceEstimate(value, "analytic")

"""Scalar numeric kernels shared by the analytic and simulation paths.

Everything here is plain float math so the same source runs compiled
(numba backend) or interpreted (numpy backend).  Angles are radians,
distances metres, powers linear watts.
"""

import math

from ._backend import njit
from .errors import SeriesConvergenceError

INV_LN2 = 1.4426950408889634

# Series controls for the shadowed-Rician CDF: stop once a term falls below
# REL_STOP of the running sum (terms decay geometrically with ratio
# omega / (2 b0 m + omega) < 1), hard cap at MAX_TERMS with a tail check.
_SR_REL_STOP = 1e-12
_SR_MAX_TERMS = 500
_SR_TAIL_TOL = 1e-9


@njit(inline="always")
def contact_cdf_scalar(theta, n_leaders):
    if theta <= 0.0:
        return 0.0
    if theta >= math.pi:
        return 1.0
    return 1.0 - ((1.0 + math.cos(theta)) * 0.5) ** n_leaders


@njit(inline="always")
def contact_pdf_scalar(theta, n_leaders):
    if theta <= 0.0 or theta >= math.pi:
        return 0.0
    c = math.cos(theta)
    return 0.5 * n_leaders * math.sin(theta) * ((1.0 + c) * 0.5) ** (n_leaders - 1.0)


@njit(inline="always")
def chord_m_from_cos(cos_angle, re_m, rs_m):
    """Chord between a ground point and a shell point separated by a
    central angle with the given cosine."""
    dr = rs_m - re_m
    s = 1.0 - cos_angle
    if s < 0.0:
        s = 0.0
    return math.sqrt(dr * dr + 2.0 * re_m * rs_m * s)


@njit(inline="always")
def shell_chord_m(cos_angle, rs_m):
    """Chord between two shell points separated by a central angle."""
    s = 1.0 - cos_angle
    if s < 0.0:
        s = 0.0
    return rs_m * math.sqrt(2.0 * s)


@njit(inline="always")
def follower_cos_angle(sin_t, cos_t, sin_p, cos_p, cos_phi):
    """Cosine of the user-follower central angle for a user offset by the
    leader contact angle and a follower at cap coordinates (psi, phi)."""
    c = sin_t * sin_p * cos_phi + cos_t * cos_p
    if c > 1.0:
        c = 1.0
    elif c < -1.0:
        c = -1.0
    return c


@njit
def sr_cdf_scalar(w, omega, two_b0, m):
    """CDF of the shadowed-Rician power at w.

    Series of lower-incomplete-gamma terms; the Pochhammer/factorial ratio
    is carried in log space and each regularised gamma P(z+1, x) via the
    Poisson-mass recurrence, so the evaluation is overflow-free for any
    positive (omega, 2 b0, m).
    """
    if w <= 0.0:
        return 0.0
    x = w / two_b0
    if omega == 0.0:
        return -math.expm1(-x)
    denom = two_b0 * m + omega
    beta = omega / denom
    log_pref = m * math.log(two_b0 * m / denom)
    # Poisson masses v_k = e^-x x^k / k!; P(z+1, x) = 1 - sum_{k<=z} v_k.
    # For x > 700 with z capped at 500 every P is 1 within ~1e-30.
    if x > 700.0:
        v = 0.0
        q = 0.0
    else:
        v = math.exp(-x)
        q = v
    p = 1.0 - q
    if p < 0.0:
        p = 0.0
    logc = 0.0
    term = math.exp(log_pref) * p
    total = term
    prev = term
    z = 0
    while z < _SR_MAX_TERMS:
        z += 1
        logc += math.log(beta) + math.log(m + z - 1.0) - math.log(float(z))
        if v > 0.0:
            v *= x / z
            q += v
            p = 1.0 - q
            if p < 0.0:
                p = 0.0
        term = math.exp(log_pref + logc) * p
        total += term
        if z >= 10 and term < _SR_REL_STOP * total and term <= prev:
            if total > 1.0:
                total = 1.0
            return total
        prev = term
    ratio = beta * (m + _SR_MAX_TERMS) / (_SR_MAX_TERMS + 1.0)
    tail = 1.0
    if ratio < 1.0:
        tail = term * ratio / (1.0 - ratio)
    if tail > _SR_TAIL_TOL:
        raise SeriesConvergenceError(
            "shadowed-Rician CDF series hit the term cap with a large tail")
    if total > 1.0:
        total = 1.0
    return total


@njit(inline="always")
def gamma_pdf_scalar(w, m1, m2):
    """Gamma(m1, m2) density used as the tractable fading approximation."""
    if w <= 0.0:
        return 0.0
    return math.exp((m1 - 1.0) * math.log(w) - w / m2
                    - m1 * math.log(m2) - math.lgamma(m1))


# ---------------------------------------------------------------------------
# quadrature integrands (called through scipy.integrate.quad)
# ---------------------------------------------------------------------------

@njit
def oi_leader(theta, gamma_th, xi_lu, re_m, rs_m, n_leaders, omega, two_b0, m):
    """Leader-only outage integrand over the contact angle."""
    r = chord_m_from_cos(math.cos(theta), re_m, rs_m)
    fw = sr_cdf_scalar(gamma_th * r * r / xi_lu, omega, two_b0, m)
    return fw * contact_pdf_scalar(theta, n_leaders)


@njit
def oi_follower_psi(psi, cos_phi, sin_t, cos_t, gamma_th, xi_fu, re_m, rs_m,
                    omega, two_b0, m):
    """Inner polar integrand of the conditional follower outage
    (cap density normalisation applied by the caller)."""
    ca = follower_cos_angle(sin_t, cos_t, math.sin(psi), math.cos(psi), cos_phi)
    r = chord_m_from_cos(ca, re_m, rs_m)
    fw = sr_cdf_scalar(gamma_th * r * r / xi_fu, omega, two_b0, m)
    return math.sin(psi) * fw


@njit
def oi_bound(theta, shift, gamma_th, xi_lu, xi_fu, n_followers, re_m, rs_m,
             n_leaders, omega, two_b0, m):
    """Outage-bound integrand: follower block at the extreme angle theta,
    leader conditional term and contact density at theta + shift."""
    tl = theta + shift
    r_b = chord_m_from_cos(math.cos(theta), re_m, rs_m)
    p_fu = sr_cdf_scalar(gamma_th * r_b * r_b / xi_fu, omega, two_b0, m) ** n_followers
    r_l = chord_m_from_cos(math.cos(tl), re_m, rs_m)
    p_cond = sr_cdf_scalar(gamma_th * r_l * r_l / xi_lu, omega, two_b0, m)
    return p_fu * p_cond * contact_pdf_scalar(tl, n_leaders)


@njit
def oi_cond_leader(theta, gamma_th, xi_lu, re_m, rs_m, omega, two_b0, m):
    """Conditional leader outage at a fixed contact angle."""
    r = chord_m_from_cos(math.cos(theta), re_m, rs_m)
    return sr_cdf_scalar(gamma_th * r * r / xi_lu, omega, two_b0, m)


@njit
def ri_fading(w, snr_coeff, m1, m2):
    """Shannon-rate integrand over the fading power at fixed geometry,
    in bits (bandwidth applied by the caller)."""
    return gamma_pdf_scalar(w, m1, m2) * math.log(1.0 + snr_coeff * w) * INV_LN2


@njit
def ri_isl(psi, xi_lf, rs_m):
    """Leader-to-follower rate integrand over the cap polar angle, in bits
    times the unnormalised cap density sin(psi)."""
    r = shell_chord_m(math.cos(psi), rs_m)
    if r <= 0.0:
        return 0.0
    return math.sin(psi) * math.log(1.0 + xi_lf / (r * r)) * INV_LN2


@njit
def ri_cluster_theta(theta, w, sin_p, cos_p, cos_phi, isl_bits, band_ratio,
                     xi_fu, re_m, rs_m, n_leaders):
    """Innermost integrand of the relayed-rate expectation: contact density
    times the bottleneck of the relay and downlink rates, in units of the
    follower-link bandwidth."""
    ca = follower_cos_angle(math.sin(theta), math.cos(theta), sin_p, cos_p, cos_phi)
    r = chord_m_from_cos(ca, re_m, rs_m)
    fu_bits = math.log(1.0 + xi_fu * w / (r * r)) * INV_LN2
    rate = isl_bits * band_ratio
    if fu_bits < rate:
        rate = fu_bits
    return rate * contact_pdf_scalar(theta, n_leaders)

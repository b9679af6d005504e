"""Link-budget SNR computation and the shadowed-Rician fading model.

The exact fading CDF is an incomplete-gamma series; the tractable density
used for rate expectations is a moment-matched Gamma.  dB quantities are
converted at this boundary; everything downstream is linear.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._kernels import gamma_pdf_scalar, sr_cdf_scalar
from ._rng import sr_power_at_vec


@dataclass(frozen=True)
class LinkBudget:
    """Per-link radio parameters; rain attenuation is 0 dB on
    inter-satellite links."""

    tx_power_dbw: float
    antenna_gain_dbi: float
    wavelength_m: float
    rain_attenuation_db: float
    noise_power_dbm: float
    bandwidth_hz: float

    def __post_init__(self):
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be positive")
        if self.bandwidth_hz <= 0:
            raise ValueError("bandwidth_hz must be positive")
        if self.rain_attenuation_db > 0:
            raise ValueError("rain_attenuation_db must be <= 0 dB")


@dataclass(frozen=True)
class ShadowedRicianParams:
    """Fading parameters: line-of-sight power omega, multipath power
    two_b0, Nakagami shape m, plus the matched Gamma shape/scale."""

    omega: float
    two_b0: float
    m: float
    m1: float
    m2: float

    def __post_init__(self):
        if self.omega < 0 or self.two_b0 <= 0 or self.m <= 0:
            raise ValueError("fading powers and shape must be positive")
        target = self.two_b0 + self.omega
        if abs(self.m1 * self.m2 - target) > 1e-12 * target:
            raise ValueError("m1 * m2 must equal two_b0 + omega")

    @property
    def mean_power(self) -> float:
        return self.two_b0 + self.omega


def gamma_approx(omega: float, two_b0: float, m: float) -> ShadowedRicianParams:
    """Moment-matched Gamma shape/scale for the shadowed-Rician power."""
    if omega < 0 or two_b0 <= 0 or m <= 0:
        raise ValueError("fading powers and shape must be positive")
    total = two_b0 + omega
    denom = m * two_b0 * two_b0 + 2.0 * m * two_b0 * omega + omega * omega
    m1 = m * total * total / denom
    m2 = denom / (m * total)
    return ShadowedRicianParams(omega=omega, two_b0=two_b0, m=m, m1=m1, m2=m2)


# ---------------------------------------------------------------------------
# dB plumbing and SNR
# ---------------------------------------------------------------------------

def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    if x <= 0:
        raise ValueError("linear value must be positive")
    return 10.0 * math.log10(x)


def dbm_to_watts(x_dbm: float) -> float:
    return db_to_linear(x_dbm - 30.0)


def composite_gain(link: LinkBudget) -> float:
    """Combined link factor rho*G*zeta*(wavelength/(4*pi*sigma))^2 so the
    received SNR is gain * fading / distance^2 (distance in metres)."""
    rho = db_to_linear(link.tx_power_dbw)
    g = db_to_linear(link.antenna_gain_dbi)
    zeta = db_to_linear(link.rain_attenuation_db)
    sigma = math.sqrt(dbm_to_watts(link.noise_power_dbm))
    return rho * g * zeta * (link.wavelength_m / (4.0 * math.pi * sigma)) ** 2


def snr(xi: float, fading_w: float, r_m: float) -> float:
    """Received SNR at distance r_m metres."""
    if r_m <= 0:
        raise ValueError("distance must be positive")
    if xi < 0 or fading_w < 0:
        raise ValueError("gain and fading power must be non-negative")
    return xi * fading_w / (r_m * r_m)


# ---------------------------------------------------------------------------
# fading model
# ---------------------------------------------------------------------------

def sr_cdf(w, p: ShadowedRicianParams):
    """Exact shadowed-Rician power CDF (series evaluation)."""
    if np.ndim(w) == 0:
        return sr_cdf_scalar(float(w), p.omega, p.two_b0, p.m)
    arr = np.asarray(w, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.float64)
    flat = arr.ravel()
    res = out.ravel()
    for i in range(flat.size):
        res[i] = sr_cdf_scalar(flat[i], p.omega, p.two_b0, p.m)
    return out


def gamma_pdf(w, p: ShadowedRicianParams):
    """Matched-Gamma fading density."""
    if np.ndim(w) == 0:
        return gamma_pdf_scalar(float(w), p.m1, p.m2)
    arr = np.asarray(w, dtype=np.float64)
    out = np.empty(arr.shape, dtype=np.float64)
    flat = arr.ravel()
    res = out.ravel()
    for i in range(flat.size):
        res[i] = gamma_pdf_scalar(flat[i], p.m1, p.m2)
    return out


def sample_sr_power(stream, p: ShadowedRicianParams, n: int = None):
    """Exact compositional fading draw: Gaussian diffuse part plus a
    Nakagami-shadowed line-of-sight amplitude (independent of both the
    series CDF and the Gamma approximation, so it can act as the oracle
    for either)."""
    scalar = n is None
    count = 1 if scalar else int(n)
    trials = stream.take(count)
    w, _ = sr_power_at_vec(stream.seed, stream.domain, trials,
                           np.zeros(count, dtype=np.uint64),
                           p.omega, p.two_b0 / 2.0, p.m)
    return float(w[0]) if scalar else w

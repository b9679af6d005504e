import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.special import gammainc, hyp1f1

from leocluster import LinkBudget, SampleStream, channel
from leocluster.montecarlo import ks_statistic

FADING = channel.gamma_approx(1.29, 0.316, 19.4)

LU = LinkBudget(20.0, 30.0, 0.015, -2.0, -94.0, 1e7)


# ---------------------------------------------------------------------------
# dB plumbing
# ---------------------------------------------------------------------------

def test_db_conversions():
    assert channel.db_to_linear(0.0) == 1.0
    assert channel.db_to_linear(20.0) == pytest.approx(100.0)
    assert channel.dbm_to_watts(-94.0) == pytest.approx(3.981e-13, rel=1e-3)
    for x in (1e-8, 0.5, 3.0, 2.6e11):
        assert channel.db_to_linear(channel.linear_to_db(x)) == pytest.approx(x, rel=1e-12)
    with pytest.raises(ValueError):
        channel.linear_to_db(0.0)
    with pytest.raises(ValueError):
        channel.linear_to_db(-2.0)


def test_composite_gain_default_downlink():
    # independent conversion chain
    sigma = math.sqrt(10.0 ** ((-94.0 - 30.0) / 10.0))
    expected = (10.0 ** 2.0) * (10.0 ** 3.0) * (10.0 ** -0.2) \
        * (0.015 / (4.0 * math.pi * sigma)) ** 2
    assert expected == pytest.approx(2.26e11, rel=0.01)
    assert channel.composite_gain(LU) == pytest.approx(expected, rel=1e-12)


def test_composite_gain_unity_factors():
    link = LinkBudget(0.0, 0.0, 0.015, 0.0, 30.0, 1e7)  # 30 dBm = 0 dBW noise
    assert channel.composite_gain(link) == pytest.approx(
        (0.015 / (4 * math.pi)) ** 2, rel=1e-12)


def test_composite_gain_linear_in_power():
    louder = LinkBudget(20.0 + 10 * math.log10(2.0), 30.0, 0.015, -2.0, -94.0, 1e7)
    assert channel.composite_gain(louder) == pytest.approx(
        2.0 * channel.composite_gain(LU), rel=1e-12)


def test_link_budget_invariants():
    with pytest.raises(ValueError):
        LinkBudget(20.0, 30.0, 0.0, -2.0, -94.0, 1e7)
    with pytest.raises(ValueError):
        LinkBudget(20.0, 30.0, 0.015, 2.0, -94.0, 1e7)
    with pytest.raises(ValueError):
        LinkBudget(20.0, 30.0, 0.015, -2.0, -94.0, 0.0)


def test_snr():
    assert channel.snr(2.26e11, 0.0, 6e5) == 0.0
    assert channel.snr(2.26e11, 1.0, 6e5) == pytest.approx(0.627, rel=0.02)
    base = channel.snr(1e11, 1.3, 8e5)
    assert channel.snr(1e11, 1.3, 4e5) == pytest.approx(4 * base, rel=1e-12)
    with pytest.raises(ValueError):
        channel.snr(1e11, 1.0, 0.0)


def test_snr_homogeneity():
    rng = np.random.default_rng(0)
    for _ in range(50):
        xi, w, r = rng.uniform(1, 10, 3)
        assert channel.snr(2 * xi, w, r) == pytest.approx(2 * channel.snr(xi, w, r))
        assert channel.snr(xi, 2 * w, r) == pytest.approx(2 * channel.snr(xi, w, r))
        assert channel.snr(xi, w, 2 * r) == pytest.approx(channel.snr(xi, w, r) / 4)


# ---------------------------------------------------------------------------
# fading power CDF
# ---------------------------------------------------------------------------

def test_sr_cdf_endpoints():
    assert channel.sr_cdf(0.0, FADING) == 0.0
    assert channel.sr_cdf(50.0 * FADING.mean_power, FADING) == pytest.approx(1.0, abs=1e-6)


def test_sr_cdf_monotone_grid():
    grid = np.linspace(0.0, 20.0 * FADING.mean_power, 1000)
    vals = channel.sr_cdf(grid, FADING)
    assert np.all(np.diff(vals) >= 0.0)
    assert np.all((0.0 <= vals) & (vals <= 1.0))


def test_sr_cdf_against_density_integral():
    # independent route: confluent-hypergeometric density, quadrature CDF
    om, tb, m = FADING.omega, FADING.two_b0, FADING.m

    def pdf(w):
        return (1.0 / tb) * ((tb * m / (tb * m + om)) ** m) * math.exp(-w / tb) \
            * hyp1f1(m, 1.0, om * w / (tb * (tb * m + om)))

    for w in (0.2, 0.537, 1.0, 1.606, 3.0, 6.0):
        ref, _ = quad(pdf, 0.0, w, limit=300)
        assert channel.sr_cdf(w, FADING) == pytest.approx(ref, abs=1e-12)


def test_sr_cdf_against_sampler():
    n = 10**7
    w = channel.sample_sr_power(SampleStream(99, 6), FADING, n)
    empirical = np.searchsorted(np.sort(w), FADING.mean_power) / n
    assert channel.sr_cdf(FADING.mean_power, FADING) == pytest.approx(empirical, abs=0.02)


def test_sr_cdf_sampler_ks():
    n = 10**6
    w = channel.sample_sr_power(SampleStream(5, 6), FADING, n)
    ks = ks_statistic(w, lambda x: channel.sr_cdf(x, FADING))
    assert ks < 0.005


def test_sr_cdf_rayleigh_limit():
    # no line-of-sight power: exponential with mean two_b0
    p = channel.gamma_approx(0.0, 0.316, 19.4)
    w = channel.sample_sr_power(SampleStream(8, 6), p, 10**6)
    ks = ks_statistic(w, lambda x: -math.expm1(-max(x, 0.0) / 0.316))
    assert ks < 0.003
    assert channel.sr_cdf(1.0, p) == pytest.approx(-math.expm1(-1.0 / 0.316), rel=1e-12)


def test_sr_series_nonconvergence_raises():
    from leocluster.errors import SeriesConvergenceError
    bad = channel.ShadowedRicianParams.__new__(channel.ShadowedRicianParams)
    object.__setattr__(bad, "omega", 1e6)
    object.__setattr__(bad, "two_b0", 2e-9)
    object.__setattr__(bad, "m", 1.0)
    object.__setattr__(bad, "m1", 1.0)
    object.__setattr__(bad, "m2", 1.0)
    with pytest.raises(SeriesConvergenceError):
        channel.sr_cdf(1.0, bad)


# ---------------------------------------------------------------------------
# matched Gamma approximation
# ---------------------------------------------------------------------------

def test_gamma_approx_defaults():
    assert FADING.m1 == pytest.approx(2.577, abs=1e-3)
    assert FADING.m2 == pytest.approx(0.6232, abs=1e-4)
    assert FADING.m1 * FADING.m2 == pytest.approx(1.606, rel=1e-12)


def test_gamma_approx_no_los_limit():
    p = channel.gamma_approx(1e-12, 0.316, 19.4)
    assert p.m1 == pytest.approx(1.0, abs=1e-10)
    assert p.m2 == pytest.approx(0.316, abs=1e-10)


def test_gamma_approx_product_identity():
    rng = np.random.default_rng(17)
    for _ in range(100):
        om, tb, m = rng.uniform(0.05, 30.0, 3)
        p = channel.gamma_approx(om, tb, m)
        assert abs(p.m1 * p.m2 - (tb + om)) <= 1e-12 * (tb + om)


def test_shadowed_rician_params_identity_enforced():
    with pytest.raises(ValueError):
        channel.ShadowedRicianParams(1.29, 0.316, 19.4, m1=2.0, m2=1.0)


def test_gamma_pdf_properties():
    total, _ = quad(lambda w: channel.gamma_pdf(w, FADING), 0.0, np.inf, limit=300)
    assert total == pytest.approx(1.0, abs=1e-9)
    mean, _ = quad(lambda w: w * channel.gamma_pdf(w, FADING), 0.0, np.inf, limit=300)
    assert mean == pytest.approx(FADING.m1 * FADING.m2, abs=1e-6)
    assert channel.gamma_pdf(0.0, FADING) == 0.0


def test_gamma_vs_exact_cdf_sup_distance():
    grid = np.linspace(1e-6, 12.0, 3000)
    exact = channel.sr_cdf(grid, FADING)
    approx = gammainc(FADING.m1, grid / FADING.m2)
    assert float(np.max(np.abs(exact - approx))) <= 0.03


def test_sampler_mean_power():
    w = channel.sample_sr_power(SampleStream(123, 6), FADING, 10**7)
    assert float(np.mean(w)) == pytest.approx(FADING.mean_power, abs=0.003)


def test_sampler_deterministic():
    a = channel.sample_sr_power(SampleStream(4, 6), FADING, 100)
    b = channel.sample_sr_power(SampleStream(4, 6), FADING, 100)
    assert np.array_equal(a, b)

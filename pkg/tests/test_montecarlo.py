import dataclasses
import math

import numpy as np
import pytest

from leocluster import analysis, channel, geometry, montecarlo
from leocluster.montecarlo import SimulationPlan
from conftest import make_scenario


@pytest.fixture(scope="module")
def s():
    return make_scenario()


# ---------------------------------------------------------------------------
# determinism and estimator mechanics
# ---------------------------------------------------------------------------

def test_outage_reproducible_across_runs_and_batches(s):
    a = montecarlo.simulate_outage(SimulationPlan(s, 30_000, 7, batch_size=30_000))
    b = montecarlo.simulate_outage(SimulationPlan(s, 30_000, 7, batch_size=7_001))
    c = montecarlo.simulate_outage(SimulationPlan(s, 30_000, 7, batch_size=1_000))
    assert a.value == b.value == c.value
    assert a.ci_half_width == b.ci_half_width
    d = montecarlo.simulate_outage(SimulationPlan(s, 30_000, 8))
    assert d.value != a.value


def test_rate_reproducible_across_batches(s):
    a = montecarlo.simulate_rate(SimulationPlan(s, 30_000, 7, batch_size=30_000))
    b = montecarlo.simulate_rate(SimulationPlan(s, 30_000, 7, batch_size=999))
    assert a.value == b.value
    assert a.ci_half_width == b.ci_half_width


def test_zero_threshold_gives_rule_of_three_interval(s):
    sc = dataclasses.replace(s, gamma_th_db=-100.0)
    est = montecarlo.simulate_outage(SimulationPlan(sc, 10_000, 5))
    assert est.value == 0.0
    assert est.ci_half_width == pytest.approx(3.0 / 10_000)


def test_ci_shrinks_like_root_n(s):
    small = montecarlo.simulate_outage(SimulationPlan(s, 10_000, 13))
    large = montecarlo.simulate_outage(SimulationPlan(s, 1_000_000, 13))
    ratio = small.ci_half_width / large.ci_half_width
    assert ratio == pytest.approx(10.0, rel=0.2)


def test_plan_validation(s):
    with pytest.raises(ValueError):
        SimulationPlan(s, 0, 1)
    with pytest.raises(ValueError):
        SimulationPlan(s, 10, 1, batch_size=0)
    with pytest.raises(ValueError):
        SimulationPlan(s, 10, 1, fading_mode="weird")


# ---------------------------------------------------------------------------
# agreement with the analytic path
# ---------------------------------------------------------------------------

def test_leader_only_outage_matches_analytic():
    leader_only = make_scenario(n_followers=0)
    analytic = analysis.outage_leader(leader_only)
    mc = montecarlo.simulate_outage(SimulationPlan(leader_only, 400_000, 23))
    assert abs(analytic.value - mc.value) <= mc.ci_half_width


def test_leader_only_rate_matches_analytic():
    leader_only = make_scenario(n_followers=0)
    analytic = analysis.rate_leader(leader_only)
    mc = montecarlo.simulate_rate(SimulationPlan(leader_only, 400_000, 23))
    assert abs(analytic.value - mc.value) <= mc.ci_half_width


def test_rate_scales_with_all_bandwidths(s):
    doubled = make_scenario(bandwidth_lu_hz=2e7, bandwidth_fu_hz=2e7,
                            bandwidth_lf_hz=2e8)
    a = montecarlo.simulate_rate(SimulationPlan(s, 20_000, 3))
    b = montecarlo.simulate_rate(SimulationPlan(doubled, 20_000, 3))
    assert b.value == pytest.approx(2.0 * a.value, rel=1e-12)


def test_rate_saturated_relay_ignores_relay_power():
    # once the relay is never the bottleneck the exact power is irrelevant
    a = montecarlo.simulate_rate(SimulationPlan(make_scenario(lf_power_dbw=600.0),
                                                20_000, 3))
    b = montecarlo.simulate_rate(SimulationPlan(make_scenario(lf_power_dbw=700.0),
                                                20_000, 3))
    assert a.value == b.value


def test_gamma_fading_mode_for_outage_differs(s):
    exact = montecarlo.simulate_outage(SimulationPlan(s, 50_000, 3))
    approx = montecarlo.simulate_outage(SimulationPlan(s, 50_000, 3,
                                                       fading_mode="gamma"))
    assert exact.value != approx.value  # different fading models, same streams


def test_rejection_counting():
    # one leader: most draws land beyond the allowed contact range
    sc = make_scenario(n_leaders=1, n_followers=0)
    est, details = montecarlo.simulate_outage(SimulationPlan(sc, 5_000, 5),
                                              details=True)
    f_max = geometry.leader_contact_cdf(sc.cfg.max_contact_angle_rad, sc.cfg)
    expected = 5_000 * (1 - f_max) / f_max
    assert details["rejections"] == pytest.approx(expected, rel=0.2)
    assert 0.0 <= est.value <= 1.0


def test_toy_closed_form_coverage():
    # single leader, unit fading: the conditioned outage is a closed-form
    # ratio of contact-law masses; the interval should cover it in at
    # least 95 of 100 reseeded runs
    sc = make_scenario(n_leaders=1, n_followers=0, gamma_th_db=-17.0)
    xi = channel.composite_gain(sc.lu)
    r_crit_km = math.sqrt(xi / sc.gamma_th_linear) / 1e3
    theta_crit = geometry.max_contact_angle(r_crit_km, sc.cfg)
    tmax = sc.cfg.max_contact_angle_rad
    f = lambda t: geometry.leader_contact_cdf(t, sc.cfg)
    truth = (f(tmax) - f(min(theta_crit, tmax))) / f(tmax)
    assert 0.05 < truth < 0.95
    hits = 0
    for seed in range(100):
        est = montecarlo.simulate_outage(
            SimulationPlan(sc, 20_000, seed, fading_mode="unit"))
        if abs(est.value - truth) <= est.ci_half_width:
            hits += 1
    assert hits >= 95


# ---------------------------------------------------------------------------
# per-trial substreams and replay
# ---------------------------------------------------------------------------

def test_trials_are_prefix_stable(s):
    # adding a trial never changes earlier trials' contributions
    p20 = montecarlo.simulate_outage(SimulationPlan(s, 20, 9)).value
    p21 = montecarlo.simulate_outage(SimulationPlan(s, 21, 9)).value
    flag_20 = p21 * 21 - p20 * 20
    assert flag_20 == pytest.approx(0.0, abs=1e-9) or \
        flag_20 == pytest.approx(1.0, abs=1e-9)


def test_replay_matches_batch_flags(s):
    n = 200
    plan = SimulationPlan(s, n, 77)
    means = [montecarlo.simulate_outage(SimulationPlan(s, k, 77)).value * k
             for k in range(1, n + 1)]
    flags = np.rint(np.diff([0.0] + means)).astype(int)
    for idx in (0, 3, 57, 199):
        rec = montecarlo.replay_trial(plan, idx, kind="outage")
        assert rec.outage_flag == bool(flags[idx])
        assert len(rec.follower_dirs) == s.cfg.n_followers
        assert len(rec.fading_draws) == s.cfg.n_followers + 1
        assert len(rec.snr_values) == s.cfg.n_followers + 1


def test_replay_rate_matches_batch(s):
    r3 = montecarlo.simulate_rate(SimulationPlan(s, 3, 13)).value * 3
    r4 = montecarlo.simulate_rate(SimulationPlan(s, 4, 13)).value * 4
    rec = montecarlo.replay_trial(SimulationPlan(s, 4, 13), 3, kind="rate")
    assert rec.cluster_rate == pytest.approx(r4 - r3, rel=1e-9)
    assert rec.outage_flag is None


# ---------------------------------------------------------------------------
# empirical distribution helpers
# ---------------------------------------------------------------------------

def test_empirical_distribution_step():
    ecdf = montecarlo.empirical_distribution([0.4], [0.0, 0.39, 0.4, 0.41, 1.0])
    assert list(ecdf) == [0.0, 0.0, 1.0, 1.0, 1.0]
    with pytest.raises(ValueError):
        montecarlo.empirical_distribution([], [0.0])


def test_empirical_distribution_against_contact_law(s):
    from leocluster import SampleStream
    th = geometry.sample_nearest_leader_angle(SampleStream(12, 3), s.cfg, 10**5)
    grid = np.linspace(0.0, 0.3, 400)
    ecdf = montecarlo.empirical_distribution(th, grid)
    exact = [geometry.leader_contact_cdf(t, s.cfg) for t in grid]
    assert float(np.max(np.abs(ecdf - exact))) < 0.01


def test_ks_statistic_handles_atoms():
    # half the mass at zero, half uniform on [0, 1]
    rng = np.random.default_rng(0)
    xs = np.where(rng.random(200_000) < 0.5, 0.0, rng.random(200_000))
    cdf = lambda t: 0.0 if t < 0 else (0.5 + 0.5 * min(t, 1.0))
    ks = montecarlo.ks_statistic(xs, cdf, atoms=[(0.0, 0.5)])
    assert ks < 0.01


def test_contact_law_report_structure(s):
    rows = montecarlo.contact_law_ks_report(s, 20_000, 3)
    laws = [r["law"] for r in rows]
    assert laws == ["leader_contact", "follower_conditional",
                    "follower_conditional", "extreme_min_contact",
                    "extreme_max_contact"]
    for r in rows:
        assert r["n_samples"] == 20_000
        assert 0.0 <= r["ks"] <= 1.0

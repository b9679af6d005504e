"""Seeded simulation of the full system model.

Independent of the analytic path: leaders and cap followers are placed by
direct sampling and per-link fading is drawn, so the estimates act as the
oracle for every closed-form expression.  Trials own counter-based
substreams, making results independent of batch size, scheduling and
thread count.  Trials are conditioned on the contact angle staying within
range; rejected draws are redrawn and counted.

Draw order inside a trial: contact-angle uniforms until accepted, leader
fading, then per follower polar/azimuth uniforms and fading (the outage
path stops examining followers once one link is up).
"""

import math
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from ._backend import NUMBA_ENABLED, njit
from ._kernels import chord_m_from_cos, follower_cos_angle, shell_chord_m
from ._rng import (DOMAIN_LEMMA_EXTREME, DOMAIN_LEMMA_FOLLOWER,
                   DOMAIN_LEMMA_LEADER, DOMAIN_OUTAGE, DOMAIN_RATE, U1, U2,
                   SampleStream, dbl_at, dbl_at_vec, gamma_at, gamma_at_vec,
                   sr_power_at, sr_power_at_vec)
from .analysis import KM, PerformanceEstimate, ScenarioParams
from . import channel, geometry
from .geometry import SphericalDirection

Z99 = 2.5758293035489004  # two-sided 99% normal quantile

_MODE_SR = 0
_MODE_GAMMA = 1
_MODE_UNIT = 2
_MODES = {"sr": _MODE_SR, "gamma": _MODE_GAMMA, "unit": _MODE_UNIT}


@dataclass(frozen=True)
class SimulationPlan:
    """What to simulate: scenario, trial count, stream seed and batching.

    ``fading_mode`` "auto" draws exact shadowed-Rician fading for outage
    and matched-Gamma fading for rate (mirroring the analytic split);
    "sr", "gamma" or "unit" force one model for either simulation.
    """

    scenario: ScenarioParams
    trials: int
    seed: int
    batch_size: int = 100_000
    fading_mode: str = "auto"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.fading_mode not in ("auto", "sr", "gamma", "unit"):
            raise ValueError(f"unknown fading mode {self.fading_mode!r}")


@dataclass(frozen=True)
class TrialRecord:
    """Reconstruction of a single trial's draws (NaN entries mark follower
    links the outage path never had to examine)."""

    theta_lu: float
    follower_dirs: List[SphericalDirection]
    fading_draws: List[float]
    snr_values: List[float]
    outage_flag: Optional[bool]
    cluster_rate: Optional[float]


def _mode_for(plan: SimulationPlan, purpose: str) -> int:
    if plan.fading_mode == "auto":
        return _MODE_SR if purpose == "outage" else _MODE_GAMMA
    return _MODES[plan.fading_mode]


def _scenario_floats(s: ScenarioParams):
    f = s.fading
    return (float(s.cfg.n_leaders), s.cfg.max_contact_angle_rad,
            2.0 * math.sin(s.cfg.cap_half_angle_rad / 2.0) ** 2,
            s.cfg.n_followers, s.gamma_th_linear,
            channel.composite_gain(s.lu), channel.composite_gain(s.fu),
            channel.composite_gain(s.lf),
            s.cfg.earth_radius_km * KM, s.cfg.shell_radius_km * KM,
            f.omega, f.two_b0 / 2.0, f.m, f.m1, f.m2)


# ---------------------------------------------------------------------------
# scalar kernels (numba backend)
# ---------------------------------------------------------------------------

@njit(inline="always")
def _fading_draw(seed, domain, trial, cur, mode, omega, b0, m, m1, m2):
    if mode == 0:
        return sr_power_at(seed, domain, trial, cur, omega, b0, m)
    elif mode == 1:
        return gamma_at(seed, domain, trial, cur, m1, m2)
    return 1.0, cur


@njit(inline="always")
def _contact_draw(seed, domain, trial, cur, inv_nl, tmax):
    rejected = 0
    while True:
        u = dbl_at(seed, domain, trial, cur)
        cur = cur + U1
        arg = 2.0 * (1.0 - u) ** inv_nl - 1.0
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        theta = math.acos(arg)
        if theta <= tmax:
            return theta, cur, rejected
        rejected += 1


@njit
def _outage_kernel(seed, domain, t0, n, flags, nl, tmax, omc_cap, nf,
                   gamma_th, xi_lu, xi_fu, re_m, rs_m, mode,
                   omega, b0, m, m1, m2):
    inv_nl = 1.0 / nl
    rejections = 0
    two_pi = 2.0 * math.pi
    for i in range(n):
        trial = np.uint64(t0 + i)
        cur = np.uint64(0)
        theta, cur, rej = _contact_draw(seed, domain, trial, cur, inv_nl, tmax)
        rejections += rej
        w, cur = _fading_draw(seed, domain, trial, cur, mode, omega, b0, m, m1, m2)
        ct = math.cos(theta)
        st = math.sin(theta)
        r = chord_m_from_cos(ct, re_m, rs_m)
        down = xi_lu * w < gamma_th * r * r
        if down:
            for _k in range(nf):
                u_psi = dbl_at(seed, domain, trial, cur)
                u_phi = dbl_at(seed, domain, trial, cur + U1)
                cur = cur + U2
                wf, cur = _fading_draw(seed, domain, trial, cur, mode,
                                       omega, b0, m, m1, m2)
                cp = 1.0 - u_psi * omc_cap
                if cp > 1.0:
                    cp = 1.0
                sp = math.sqrt(max(0.0, 1.0 - cp * cp))
                ca = follower_cos_angle(st, ct, sp, cp, math.cos(two_pi * u_phi))
                rf = chord_m_from_cos(ca, re_m, rs_m)
                if xi_fu * wf >= gamma_th * rf * rf:
                    down = False
                    break
        flags[i] = 1 if down else 0
    return rejections


@njit
def _rate_kernel(seed, domain, t0, n, rates, nl, tmax, omc_cap, nf,
                 xi_lu, xi_fu, xi_lf, b_lu, b_fu, b_lf, re_m, rs_m, mode,
                 omega, b0, m, m1, m2):
    inv_nl = 1.0 / nl
    inv_ln2 = 1.4426950408889634
    rejections = 0
    two_pi = 2.0 * math.pi
    for i in range(n):
        trial = np.uint64(t0 + i)
        cur = np.uint64(0)
        theta, cur, rej = _contact_draw(seed, domain, trial, cur, inv_nl, tmax)
        rejections += rej
        w, cur = _fading_draw(seed, domain, trial, cur, mode, omega, b0, m, m1, m2)
        ct = math.cos(theta)
        st = math.sin(theta)
        r = chord_m_from_cos(ct, re_m, rs_m)
        total = b_lu * math.log(1.0 + xi_lu * w / (r * r)) * inv_ln2
        for _k in range(nf):
            u_psi = dbl_at(seed, domain, trial, cur)
            u_phi = dbl_at(seed, domain, trial, cur + U1)
            cur = cur + U2
            wf, cur = _fading_draw(seed, domain, trial, cur, mode,
                                   omega, b0, m, m1, m2)
            cp = 1.0 - u_psi * omc_cap
            if cp > 1.0:
                cp = 1.0
            sp = math.sqrt(max(0.0, 1.0 - cp * cp))
            r_lf = shell_chord_m(cp, rs_m)
            if r_lf > 0.0:
                isl = b_lf * math.log(1.0 + xi_lf / (r_lf * r_lf)) * inv_ln2
            else:
                isl = math.inf
            ca = follower_cos_angle(st, ct, sp, cp, math.cos(two_pi * u_phi))
            rf = chord_m_from_cos(ca, re_m, rs_m)
            fu_rate = b_fu * math.log(1.0 + xi_fu * wf / (rf * rf)) * inv_ln2
            total += min(isl, fu_rate)
        rates[i] = total
    return rejections


# ---------------------------------------------------------------------------
# vectorised twins (numpy backend)
# ---------------------------------------------------------------------------

def _fading_vec(seed, domain, trials, cursors, mode, omega, b0, m, m1, m2):
    if mode == _MODE_SR:
        return sr_power_at_vec(seed, domain, trials, cursors, omega, b0, m)
    if mode == _MODE_GAMMA:
        return gamma_at_vec(seed, domain, trials, cursors, m1, m2)
    return np.ones(trials.size), np.asarray(cursors, dtype=np.uint64)


def _contact_vec(seed, domain, trials, cursors, inv_nl, tmax):
    n = trials.size
    theta = np.empty(n)
    pending = np.ones(n, dtype=bool)
    rejections = 0
    while pending.any():
        idx = np.nonzero(pending)[0]
        u = dbl_at_vec(seed, domain, trials[idx], cursors[idx])
        cursors[idx] += U1
        arg = np.clip(2.0 * (1.0 - u) ** inv_nl - 1.0, -1.0, 1.0)
        th = np.arccos(arg)
        ok = th <= tmax
        hit = idx[ok]
        theta[hit] = th[ok]
        pending[hit] = False
        rejections += int((~ok).sum())
    return theta, rejections


def _follower_geom_vec(u_psi, u_phi, st, ct, omc_cap, re_m, rs_m):
    cp = np.minimum(1.0 - u_psi * omc_cap, 1.0)
    sp = np.sqrt(np.maximum(0.0, 1.0 - cp * cp))
    ca = np.clip(st * sp * np.cos(2.0 * math.pi * u_phi) + ct * cp, -1.0, 1.0)
    rf = np.sqrt((rs_m - re_m) ** 2 + 2.0 * re_m * rs_m * np.maximum(0.0, 1.0 - ca))
    return cp, rf


def _outage_numpy(seed, domain, t0, n, nl, tmax, omc_cap, nf, gamma_th,
                  xi_lu, xi_fu, re_m, rs_m, mode, omega, b0, m, m1, m2):
    trials = np.arange(t0, t0 + n, dtype=np.uint64)
    cursors = np.zeros(n, dtype=np.uint64)
    theta, rejections = _contact_vec(seed, domain, trials, cursors, 1.0 / nl, tmax)
    w, cursors = _fading_vec(seed, domain, trials, cursors, mode, omega, b0, m, m1, m2)
    ct = np.cos(theta)
    st = np.sin(theta)
    r = np.sqrt((rs_m - re_m) ** 2 + 2.0 * re_m * rs_m * (1.0 - ct))
    down = xi_lu * w < gamma_th * r * r
    pending = down.copy()
    for _k in range(nf):
        idx = np.nonzero(pending)[0]
        if idx.size == 0:
            break
        t_sub = trials[idx]
        cur = cursors[idx]
        u_psi = dbl_at_vec(seed, domain, t_sub, cur)
        u_phi = dbl_at_vec(seed, domain, t_sub, cur + U1)
        cur = cur + U2
        wf, cur = _fading_vec(seed, domain, t_sub, cur, mode, omega, b0, m, m1, m2)
        cursors[idx] = cur
        _cp, rf = _follower_geom_vec(u_psi, u_phi, st[idx], ct[idx],
                                     omc_cap, re_m, rs_m)
        up = xi_fu * wf >= gamma_th * rf * rf
        down[idx[up]] = False
        pending[idx[up]] = False
    return down.astype(np.uint8), rejections


def _rate_numpy(seed, domain, t0, n, nl, tmax, omc_cap, nf, xi_lu, xi_fu,
                xi_lf, b_lu, b_fu, b_lf, re_m, rs_m, mode,
                omega, b0, m, m1, m2):
    trials = np.arange(t0, t0 + n, dtype=np.uint64)
    cursors = np.zeros(n, dtype=np.uint64)
    theta, rejections = _contact_vec(seed, domain, trials, cursors, 1.0 / nl, tmax)
    w, cursors = _fading_vec(seed, domain, trials, cursors, mode, omega, b0, m, m1, m2)
    ct = np.cos(theta)
    st = np.sin(theta)
    r = np.sqrt((rs_m - re_m) ** 2 + 2.0 * re_m * rs_m * (1.0 - ct))
    total = b_lu * np.log2(1.0 + xi_lu * w / (r * r))
    for _k in range(nf):
        u_psi = dbl_at_vec(seed, domain, trials, cursors)
        u_phi = dbl_at_vec(seed, domain, trials, cursors + U1)
        cursors = cursors + U2
        wf, cursors = _fading_vec(seed, domain, trials, cursors, mode,
                                  omega, b0, m, m1, m2)
        cp, rf = _follower_geom_vec(u_psi, u_phi, st, ct, omc_cap, re_m, rs_m)
        r_lf = rs_m * np.sqrt(2.0 * np.maximum(0.0, 1.0 - cp))
        with np.errstate(divide="ignore"):
            isl = np.where(r_lf > 0.0,
                           b_lf * np.log2(1.0 + xi_lf / np.where(r_lf > 0.0, r_lf, 1.0) ** 2),
                           np.inf)
        fu_rate = b_fu * np.log2(1.0 + xi_fu * wf / (rf * rf))
        total += np.minimum(isl, fu_rate)
    return total, rejections


# ---------------------------------------------------------------------------
# public estimators
# ---------------------------------------------------------------------------

def _proportion_estimate(successes: int, n: int) -> PerformanceEstimate:
    p = successes / n
    if successes == 0 or successes == n:
        ci = 3.0 / n
    else:
        ci = Z99 * math.sqrt(p * (1.0 - p) / n)
    return PerformanceEstimate(p, "monte_carlo", ci, n)


def _mean_estimate(values: np.ndarray) -> PerformanceEstimate:
    n = values.size
    mean = float(np.mean(values))
    sd = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return PerformanceEstimate(mean, "monte_carlo", Z99 * sd / math.sqrt(n), n)


def simulate_outage(plan: SimulationPlan, details: bool = False):
    """Empirical cluster outage probability with a 99% confidence
    half-width; deterministic given (seed, scenario, trials)."""
    s = plan.scenario
    (nl, tmax, omc, nf, gam, xi_lu, xi_fu, _xi_lf, re_m, rs_m,
     omega, b0, m, m1, m2) = _scenario_floats(s)
    mode = _mode_for(plan, "outage")
    seed = np.uint64(plan.seed & 0xFFFFFFFFFFFFFFFF)
    flags = np.zeros(plan.trials, dtype=np.uint8)
    rejections = 0
    for t0 in range(0, plan.trials, plan.batch_size):
        nb = min(plan.batch_size, plan.trials - t0)
        if NUMBA_ENABLED:
            rejections += _outage_kernel(
                seed, np.uint64(DOMAIN_OUTAGE), np.uint64(t0), nb,
                flags[t0:t0 + nb], nl, tmax, omc, nf, gam, xi_lu, xi_fu,
                re_m, rs_m, mode, omega, b0, m, m1, m2)
        else:
            batch, rej = _outage_numpy(
                seed, DOMAIN_OUTAGE, t0, nb, nl, tmax, omc, nf, gam,
                xi_lu, xi_fu, re_m, rs_m, mode, omega, b0, m, m1, m2)
            flags[t0:t0 + nb] = batch
            rejections += rej
    est = _proportion_estimate(int(flags.sum()), plan.trials)
    if details:
        return est, {"rejections": rejections}
    return est


def simulate_rate(plan: SimulationPlan, details: bool = False):
    """Empirical average cluster rate (leader link plus per-follower
    relay/downlink bottlenecks) with a 99% confidence half-width."""
    s = plan.scenario
    (nl, tmax, omc, nf, _gam, xi_lu, xi_fu, xi_lf, re_m, rs_m,
     omega, b0, m, m1, m2) = _scenario_floats(s)
    mode = _mode_for(plan, "rate")
    seed = np.uint64(plan.seed & 0xFFFFFFFFFFFFFFFF)
    rates = np.zeros(plan.trials, dtype=np.float64)
    b_lu, b_fu, b_lf = s.lu.bandwidth_hz, s.fu.bandwidth_hz, s.lf.bandwidth_hz
    rejections = 0
    for t0 in range(0, plan.trials, plan.batch_size):
        nb = min(plan.batch_size, plan.trials - t0)
        if NUMBA_ENABLED:
            rejections += _rate_kernel(
                seed, np.uint64(DOMAIN_RATE), np.uint64(t0), nb,
                rates[t0:t0 + nb], nl, tmax, omc, nf, xi_lu, xi_fu, xi_lf,
                b_lu, b_fu, b_lf, re_m, rs_m, mode, omega, b0, m, m1, m2)
        else:
            batch, rej = _rate_numpy(
                seed, DOMAIN_RATE, t0, nb, nl, tmax, omc, nf, xi_lu, xi_fu,
                xi_lf, b_lu, b_fu, b_lf, re_m, rs_m, mode, omega, b0, m, m1, m2)
            rates[t0:t0 + nb] = batch
            rejections += rej
    est = _mean_estimate(rates)
    if details:
        return est, {"rejections": rejections}
    return est


def replay_trial(plan: SimulationPlan, index: int, kind: str = "outage") -> TrialRecord:
    """Reconstruct one trial's draws (free with counter-based streams)."""
    if kind not in ("outage", "rate"):
        raise ValueError("kind must be 'outage' or 'rate'")
    s = plan.scenario
    (nl, tmax, omc, nf, gam, xi_lu, xi_fu, xi_lf, re_m, rs_m,
     omega, b0, m, m1, m2) = _scenario_floats(s)
    mode = _mode_for(plan, kind)
    seed = np.uint64(plan.seed & 0xFFFFFFFFFFFFFFFF)
    domain = DOMAIN_OUTAGE if kind == "outage" else DOMAIN_RATE
    trial = np.array([index], dtype=np.uint64)
    cur = np.zeros(1, dtype=np.uint64)
    theta, _rej = _contact_vec(seed, domain, trial, cur, 1.0 / nl, tmax)
    w, cur = _fading_vec(seed, domain, trial, cur, mode, omega, b0, m, m1, m2)
    theta = float(theta[0])
    r = chord_m_from_cos(math.cos(theta), re_m, rs_m)
    snr_lead = xi_lu * float(w[0]) / (r * r)
    dirs, fadings, snrs = [], [float(w[0])], [snr_lead]
    examined = kind == "rate" or snr_lead < gam
    rate_total = s.lu.bandwidth_hz * math.log2(1.0 + snr_lead)
    alive = not examined
    for _k in range(nf):
        if not examined:
            dirs.append(SphericalDirection(math.nan, math.nan))
            fadings.append(math.nan)
            snrs.append(math.nan)
            continue
        u_psi = float(dbl_at_vec(seed, domain, trial, cur)[0])
        u_phi = float(dbl_at_vec(seed, domain, trial, cur + U1)[0])
        cur = cur + U2
        wf, cur = _fading_vec(seed, domain, trial, cur, mode, omega, b0, m, m1, m2)
        wf = float(wf[0])
        cp = min(1.0, 1.0 - u_psi * omc)
        psi = math.acos(max(-1.0, cp))
        phi = 2.0 * math.pi * u_phi
        ca = follower_cos_angle(math.sin(theta), math.cos(theta),
                                math.sin(psi), cp, math.cos(phi))
        rf = chord_m_from_cos(ca, re_m, rs_m)
        s_fu = xi_fu * wf / (rf * rf)
        dirs.append(SphericalDirection(psi, phi))
        fadings.append(wf)
        snrs.append(s_fu)
        if kind == "rate":
            r_lf = shell_chord_m(cp, rs_m)
            isl = math.inf if r_lf <= 0.0 else \
                s.lf.bandwidth_hz * math.log2(1.0 + xi_lf / (r_lf * r_lf))
            rate_total += min(isl, s.fu.bandwidth_hz * math.log2(1.0 + s_fu))
        elif s_fu >= gam:
            alive = True
            examined = False
    if kind == "outage":
        return TrialRecord(theta, dirs, fadings, snrs,
                           outage_flag=not alive and snr_lead < gam,
                           cluster_rate=None)
    return TrialRecord(theta, dirs, fadings, snrs,
                       outage_flag=None, cluster_rate=rate_total)


# ---------------------------------------------------------------------------
# empirical-law helpers
# ---------------------------------------------------------------------------

def empirical_distribution(samples, grid) -> np.ndarray:
    """Empirical CDF of the samples evaluated on the grid."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    if xs.size == 0:
        raise ValueError("samples must be non-empty")
    return np.searchsorted(xs, np.asarray(grid, dtype=np.float64),
                           side="right") / xs.size


def ks_statistic(samples, cdf, atoms=()) -> float:
    """Kolmogorov-Smirnov sup-distance between samples and a (possibly
    mixed) CDF; ``atoms`` lists (location, weight) point masses so left
    limits are handled exactly."""
    xs = np.sort(np.asarray(samples, dtype=np.float64))
    n = xs.size
    vals, counts = np.unique(xs, return_counts=True)
    hi = np.cumsum(counts) / n
    lo = hi - counts / n
    f_right = np.array([cdf(v) for v in vals])
    f_left = f_right.copy()
    for loc, weight in atoms:
        f_left[vals == loc] -= weight
    return float(max(np.max(np.abs(hi - f_right)), np.max(np.abs(f_left - lo))))


KS_BOUND = 0.005


def conditional_follower_cdf_grid(s: ScenarioParams, theta_lu: float,
                                  n_grid: int = 20001):
    """Numeric CDF of the closed-form conditional follower-angle density
    (cumulative trapezoid on a fine grid)."""
    from scipy.integrate import cumulative_trapezoid
    cap = s.cfg.cap_half_angle_rad
    lo = 0.0 if theta_lu < cap else theta_lu - cap
    hi = theta_lu + cap
    grid = np.linspace(lo, hi, n_grid)
    pdf = np.array([geometry.follower_contact_pdf(t, theta_lu, s.cfg)
                    for t in grid])
    cdf = np.concatenate([[0.0], cumulative_trapezoid(pdf, grid)])
    return grid, cdf


def contact_law_ks_report(s: ScenarioParams, n_samples: int, seed: int):
    """KS distances between sampled contact angles and each closed-form
    law: nearest-leader, conditional follower (user inside and outside the
    cap), and the two cap-extreme laws.  Sampling places every leader
    explicitly so the checks stay independent of the closed forms."""
    cfg = s.cfg
    cap = cfg.cap_half_angle_rad
    rows = []

    stream = SampleStream(seed, DOMAIN_LEMMA_LEADER)
    th = geometry.sample_nearest_leader_angle(stream, cfg, n_samples)
    ks = ks_statistic(th, lambda t: geometry.leader_contact_cdf(t, cfg))
    rows.append({"law": "leader_contact", "theta_lu_rad": math.nan, "ks": ks,
                 "n_samples": n_samples, "bound": KS_BOUND,
                 "status": "pass" if ks < KS_BOUND else "fail"})

    fstream = SampleStream(seed, DOMAIN_LEMMA_FOLLOWER)
    for frac in (0.5, 2.0):
        theta_lu = frac * cap
        d = geometry.sample_follower_direction(fstream, cfg, n_samples)
        tf = np.arccos(np.clip(
            math.cos(theta_lu) * np.cos(d.polar_rad)
            + math.sin(theta_lu) * np.sin(d.polar_rad) * np.cos(d.azimuth_rad),
            -1.0, 1.0))
        grid, cdf = conditional_follower_cdf_grid(s, theta_lu)
        ks = ks_statistic(tf, lambda t: float(np.interp(t, grid, cdf,
                                                        left=0.0, right=cdf[-1])))
        rows.append({"law": "follower_conditional", "theta_lu_rad": theta_lu,
                     "ks": ks, "n_samples": n_samples, "bound": KS_BOUND,
                     "status": "pass" if ks < KS_BOUND else "fail"})

    estream = SampleStream(seed, DOMAIN_LEMMA_EXTREME)
    th2 = geometry.sample_nearest_leader_angle(estream, cfg, n_samples)
    min_law, max_law = geometry.extreme_contact_laws(cfg)
    ks_min = ks_statistic(np.maximum(th2 - cap, 0.0), min_law.cdf,
                          atoms=[(0.0, min_law.atom_weight)])
    ks_max = ks_statistic(th2 + cap, max_law.cdf)
    for name, ks in (("extreme_min_contact", ks_min), ("extreme_max_contact", ks_max)):
        rows.append({"law": name, "theta_lu_rad": math.nan, "ks": ks,
                     "n_samples": n_samples, "bound": KS_BOUND,
                     "status": "pass" if ks < KS_BOUND else "fail"})
    return rows

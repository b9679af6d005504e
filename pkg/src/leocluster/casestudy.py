"""Architecture comparison under a shared leader power budget.

The single-satellite architecture spends the whole budget on the direct
link; the relay-cluster architecture carves out per-follower ISL power,
chosen so each relay link's average rate balances the follower downlink
rate.  All rates here come from the closed-form midpoint estimator, so
sweeps stay cheap.  When the budget cannot power the requested followers
the count is reduced, never silently rescaled.
"""

import math
from dataclasses import dataclass, replace
from typing import List, Sequence

from . import channel, geometry
from ._kernels import ri_isl
from .analysis import (KM, ScenarioParams, follower_rate_bound_bits,
                       integrate, rate_leader, with_lu_power_w)
from .errors import InfeasiblePowerBudget

BRACKET_FLOOR_DBW = -60.0
_MAX_BISECT = 200
_WIDTH_TOL_W = 1e-10
_RESIDUAL_REL = 1e-6


@dataclass(frozen=True)
class PowerSplit:
    """Leader budget allocation; the linear-domain identity
    total = direct + n * isl is enforced at construction."""

    total_lu_power_dbw: float
    direct_lu_power_dbw: float
    isl_power_per_follower_dbw: float
    effective_n_followers: int

    def __post_init__(self):
        if self.effective_n_followers < 0:
            raise ValueError("effective_n_followers must be non-negative")
        total = channel.db_to_linear(self.total_lu_power_dbw)
        direct = channel.db_to_linear(self.direct_lu_power_dbw)
        isl = channel.db_to_linear(self.isl_power_per_follower_dbw)
        if abs(direct + self.effective_n_followers * isl - total) > 1e-9 * total:
            raise ValueError("power split violates the linear budget identity")

    @classmethod
    def from_linear(cls, total_w: float, isl_w: float, n: int) -> "PowerSplit":
        direct_w = total_w - n * isl_w
        if direct_w <= 0.0 or isl_w <= 0.0:
            raise ValueError("split powers must stay positive")
        return cls(channel.linear_to_db(total_w),
                   channel.linear_to_db(direct_w),
                   channel.linear_to_db(isl_w), n)


@dataclass(frozen=True)
class ArchComparisonRow:
    sweep_var: float
    rate_nf: float
    rate_lf: float
    rho_lf_dbw: float
    rho_lf_w: float
    n_followers_effective: int


def isl_rate_bits(s: ScenarioParams, isl_power_w: float, tol: float = 1e-9) -> float:
    """Relay-link spectral efficiency averaged over the cap polar law,
    bits (one-dimensional quadrature; the relay rate depends only on the
    polar offset)."""
    if isl_power_w <= 0.0:
        return 0.0
    lf = replace(s.lf, tx_power_dbw=channel.linear_to_db(isl_power_w))
    xi = channel.composite_gain(lf)
    rs_m = s.cfg.shell_radius_km * KM
    cap = s.cfg.cap_half_angle_rad
    raw = integrate(ri_isl, 0.0, cap, abs_tol=tol, rel_tol=tol, limit=400,
                    args=(xi, rs_m))
    return raw / (2.0 * math.sin(cap / 2.0) ** 2)


def follower_rate_mid_bits(s: ScenarioParams, tol: float = 1e-6) -> float:
    """Per-follower downlink rate in bits: midpoint of the extreme-angle
    envelopes."""
    min_law, max_law = geometry.extreme_contact_laws(s.cfg)
    return 0.5 * (follower_rate_bound_bits(s, min_law, tol)
                  + follower_rate_bound_bits(s, max_law, tol))


def _balance_isl_power_w(s: ScenarioParams, tol: float = 1e-6):
    """Bisection for the ISL power equating relay and downlink average
    rates; returns (power_w, target_rate, residual)."""
    target = s.fu.bandwidth_hz * follower_rate_mid_bits(s, tol)
    lo = channel.db_to_linear(BRACKET_FLOOR_DBW)
    hi = channel.db_to_linear(s.lu.tx_power_dbw)

    def g(rho_w):
        return s.lf.bandwidth_hz * isl_rate_bits(s, rho_w) - target

    if target <= 0.0 or g(lo) >= 0.0:
        return lo, target, g(lo)
    g_hi = g(hi)
    if g_hi < 0.0:
        raise InfeasiblePowerBudget(
            "relay links cannot match the downlink rate even with the full budget",
            required_w=math.inf, available_w=hi)
    mid = 0.5 * (lo + hi)
    residual = g(mid)
    for _ in range(_MAX_BISECT):
        if residual < 0.0:
            lo = mid
        else:
            hi = mid
        mid = 0.5 * (lo + hi)
        residual = g(mid)
        if hi - lo < _WIDTH_TOL_W and abs(residual) < _RESIDUAL_REL * target:
            break
    return mid, target, residual


def solve_isl_power(s: ScenarioParams, tol: float = 1e-6) -> PowerSplit:
    """ISL power per follower from the rate-balance rule, plus the
    remaining direct-link power."""
    rho1_w = channel.db_to_linear(s.lu.tx_power_dbw)
    rho_star, target, residual = _balance_isl_power_w(s, tol)
    if target > 0.0 and abs(residual) >= _RESIDUAL_REL * target \
            and rho_star > channel.db_to_linear(BRACKET_FLOOR_DBW):
        raise ArithmeticError("rate-balance bisection did not converge")
    nf = s.cfg.n_followers
    required = nf * rho_star
    if required >= rho1_w:
        err = InfeasiblePowerBudget(
            f"{nf} followers need {required:.6g} W of ISL power but only "
            f"{rho1_w:.6g} W is budgeted",
            required_w=required, available_w=rho1_w)
        err.isl_power_w = rho_star
        raise err
    return PowerSplit.from_linear(rho1_w, rho_star, nf)


def reduce_followers(s: ScenarioParams, isl_power_w: float) -> PowerSplit:
    """Largest follower count the budget can power at the given per-link
    ISL power (0 degenerates to the single-satellite architecture)."""
    rho1_w = channel.db_to_linear(s.lu.tx_power_dbw)
    k = int(math.floor(rho1_w / isl_power_w))
    while k > 0 and k * isl_power_w >= rho1_w:
        k -= 1
    n_eff = max(0, min(s.cfg.n_followers - 1, k))
    if n_eff == 0:
        return PowerSplit(s.lu.tx_power_dbw, s.lu.tx_power_dbw,
                          channel.linear_to_db(isl_power_w), 0)
    return PowerSplit.from_linear(rho1_w, isl_power_w, n_eff)


def _effective_count(n_requested: int, isl_w: float, rho1_w: float) -> int:
    if n_requested * isl_w < rho1_w:
        return n_requested
    k = int(math.floor(rho1_w / isl_w))
    while k > 0 and k * isl_w >= rho1_w:
        k -= 1
    return max(0, min(n_requested - 1, k))


def compare_architectures(s: ScenarioParams, sweep: Sequence[float],
                          sweep_kind: str = "n_followers",
                          tol: float = 1e-6) -> List[ArchComparisonRow]:
    """Rate of the no-follower architecture versus the relay cluster at
    each sweep point.

    ``n_followers`` sweeps solve the ISL power by rate balance once (the
    balance is per link, independent of the count); ``lf_power_dbw``
    sweeps take the ISL power as given, so the per-follower contribution
    is the smaller of the relay and downlink average rates.
    """
    if sweep_kind not in ("n_followers", "lf_power_dbw"):
        raise ValueError(f"unknown sweep kind {sweep_kind!r}")
    rho1_w = channel.db_to_linear(s.lu.tx_power_dbw)
    rate_nf = rate_leader(s, tol).value
    downlink_rate = s.fu.bandwidth_hz * follower_rate_mid_bits(s, tol)
    rows: List[ArchComparisonRow] = []

    def lf_rate(n_eff: int, isl_w: float) -> float:
        if n_eff == 0:
            return rate_nf
        per_follower = min(s.lf.bandwidth_hz * isl_rate_bits(s, isl_w),
                           downlink_rate)
        direct = rate_leader(with_lu_power_w(s, rho1_w - n_eff * isl_w), tol).value
        return direct + n_eff * per_follower

    if sweep_kind == "n_followers":
        rho_star, _target, _res = _balance_isl_power_w(s, tol)
        for v in sweep:
            n = int(round(v))
            n_eff = _effective_count(n, rho_star, rho1_w)
            rows.append(ArchComparisonRow(
                sweep_var=float(n), rate_nf=rate_nf,
                rate_lf=lf_rate(n_eff, rho_star),
                rho_lf_dbw=channel.linear_to_db(rho_star),
                rho_lf_w=rho_star, n_followers_effective=n_eff))
    else:
        for v in sweep:
            isl_w = channel.db_to_linear(float(v))
            n_eff = _effective_count(s.cfg.n_followers, isl_w, rho1_w)
            rows.append(ArchComparisonRow(
                sweep_var=float(v), rate_nf=rate_nf,
                rate_lf=lf_rate(n_eff, isl_w),
                rho_lf_dbw=float(v), rho_lf_w=isl_w,
                n_followers_effective=n_eff))
    return rows

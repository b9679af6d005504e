"""Defaults and flat key=value configuration handling.

Config files use one ``key = value`` pair per line, UTF-8, with ``#``
comments.  Units at this boundary: km, degrees, dBW/dBm/dBi, Hz; angles
are converted to radians when the scenario is assembled and every other
quantity is converted to linear units downstream.
"""

import math
import warnings

from . import channel, geometry
from .analysis import ScenarioParams
from .errors import ConfigError

DEFAULTS = {
    "earth_radius_km": 6371.0,
    "altitude_km": 600.0,
    "n_leaders": 1000,
    "n_followers": 10,
    "cap_half_angle_deg": 1.0,
    "max_contact_angle_deg": 45.0,
    "gamma_th_db": -5.0,
    "lu_power_dbw": 20.0,
    "fu_power_dbw": 15.0,
    "lf_power_dbw": 5.0,
    "lu_gain_dbi": 30.0,
    "fu_gain_dbi": 30.0,
    "lf_gain_dbi": 30.0,
    "lu_wavelength_m": 0.015,
    "fu_wavelength_m": 0.015,
    "lf_wavelength_m": 0.015,
    "rain_u_db": -2.0,
    "rain_f_db": 0.0,
    "noise_u_dbm": -94.0,
    "noise_f_dbm": -84.0,
    "sr_omega": 1.29,
    "sr_b0": 0.158,
    "sr_m": 19.4,
    "bandwidth_lu_hz": 1.0e7,
    "bandwidth_fu_hz": 1.0e7,
    # ISLs run far wider than the ground links; a common value would make
    # the relay hop the bottleneck, which the rate envelopes assume away.
    "bandwidth_lf_hz": 1.0e8,
}

INT_KEYS = ("n_leaders", "n_followers")


def _parse_value(key: str, text: str, where: str):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{where}: cannot parse value {text!r} for key {key!r}")
    if key in INT_KEYS:
        if value != int(value):
            raise ConfigError(f"{where}: key {key!r} must be an integer")
        return int(value)
    return value


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse key=value lines into a value dict (defaults not applied)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in DEFAULTS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, val, f"{source}:{lineno}")
    return values


def parse_override(item: str) -> tuple:
    """Parse one ``key=value`` command-line override."""
    if "=" not in item:
        raise ConfigError(f"override {item!r} must look like key=value")
    key, _, val = item.partition("=")
    key = key.strip()
    if key not in DEFAULTS:
        raise ConfigError(f"unknown override key {key!r}")
    return key, _parse_value(key, val.strip(), f"--set {key}")


def scenario_from_values(values: dict) -> ScenarioParams:
    """Assemble a scenario from a complete value dict; range violations
    raise, out-of-regime geometry only warns."""
    v = dict(DEFAULTS)
    v.update(values)
    try:
        cfg = geometry.ConstellationConfig(
            earth_radius_km=v["earth_radius_km"],
            altitude_km=v["altitude_km"],
            n_leaders=int(v["n_leaders"]),
            n_followers=int(v["n_followers"]),
            cap_half_angle_rad=math.radians(v["cap_half_angle_deg"]),
            max_contact_angle_rad=math.radians(v["max_contact_angle_deg"]))
        lu = channel.LinkBudget(v["lu_power_dbw"], v["lu_gain_dbi"],
                                v["lu_wavelength_m"], v["rain_u_db"],
                                v["noise_u_dbm"], v["bandwidth_lu_hz"])
        fu = channel.LinkBudget(v["fu_power_dbw"], v["fu_gain_dbi"],
                                v["fu_wavelength_m"], v["rain_u_db"],
                                v["noise_u_dbm"], v["bandwidth_fu_hz"])
        lf = channel.LinkBudget(v["lf_power_dbw"], v["lf_gain_dbi"],
                                v["lf_wavelength_m"], v["rain_f_db"],
                                v["noise_f_dbm"], v["bandwidth_lf_hz"])
        fading = channel.gamma_approx(v["sr_omega"], 2.0 * v["sr_b0"], v["sr_m"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    limit = geometry.follower_los_limit(cfg)
    if cfg.max_contact_angle_rad > limit:
        warnings.warn(
            f"max contact angle {math.degrees(cfg.max_contact_angle_rad):.2f} deg "
            f"exceeds the follower line-of-sight limit "
            f"{math.degrees(limit):.2f} deg; evaluating as configured",
            stacklevel=2)
    return ScenarioParams(cfg=cfg, lu=lu, fu=fu, lf=lf, fading=fading,
                          gamma_th_db=v["gamma_th_db"])


def scenario_to_values(s: ScenarioParams) -> dict:
    """Inverse of scenario_from_values (for sweeps and overrides)."""
    return {
        "earth_radius_km": s.cfg.earth_radius_km,
        "altitude_km": s.cfg.altitude_km,
        "n_leaders": s.cfg.n_leaders,
        "n_followers": s.cfg.n_followers,
        "cap_half_angle_deg": math.degrees(s.cfg.cap_half_angle_rad),
        "max_contact_angle_deg": math.degrees(s.cfg.max_contact_angle_rad),
        "gamma_th_db": s.gamma_th_db,
        "lu_power_dbw": s.lu.tx_power_dbw,
        "fu_power_dbw": s.fu.tx_power_dbw,
        "lf_power_dbw": s.lf.tx_power_dbw,
        "lu_gain_dbi": s.lu.antenna_gain_dbi,
        "fu_gain_dbi": s.fu.antenna_gain_dbi,
        "lf_gain_dbi": s.lf.antenna_gain_dbi,
        "lu_wavelength_m": s.lu.wavelength_m,
        "fu_wavelength_m": s.fu.wavelength_m,
        "lf_wavelength_m": s.lf.wavelength_m,
        "rain_u_db": s.lu.rain_attenuation_db,
        "rain_f_db": s.lf.rain_attenuation_db,
        "noise_u_dbm": s.lu.noise_power_dbm,
        "noise_f_dbm": s.lf.noise_power_dbm,
        "sr_omega": s.fading.omega,
        "sr_b0": s.fading.two_b0 / 2.0,
        "sr_m": s.fading.m,
        "bandwidth_lu_hz": s.lu.bandwidth_hz,
        "bandwidth_fu_hz": s.fu.bandwidth_hz,
        "bandwidth_lf_hz": s.lf.bandwidth_hz,
    }


def load_config(path: str = None, overrides: dict = None) -> ScenarioParams:
    """Load a scenario: file values (if any) on top of the defaults, then
    explicit overrides."""
    values = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        values = parse_config_text(text, source=str(path))
    if overrides:
        for key in overrides:
            if key not in DEFAULTS:
                raise ConfigError(f"unknown override key {key!r}")
        values.update(overrides)
    return scenario_from_values(values)


def default_scenario(**value_overrides) -> ScenarioParams:
    """Scenario at the documented defaults with keyword tweaks."""
    return scenario_from_values(value_overrides)

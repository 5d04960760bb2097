"""Run configuration: a flat INI file with sections, plus overrides.

Layout (all policy keys have defaults)::

    [system]
    antennas = 10
    snr_db = 15
    horizon_slots = 20000
    seed = 1
    channel_model = rayleigh    ; or fixed_unit (calibration runs)

    [users]
    coherence = 100,100,100,5,5 ; explicit block lengths, or...
    velocity = 16.67,0.83       ; ...derived from mobility (m/s)
    carrier_freq = 2.6e9
    cell_radius = 1000
    arrival_rate = 1.5          ; scalar broadcast or per-user list
    packet_bits = 3

    [policy]
    kind = gap                  ; gap|tdca|pldca|qqs|tqqs|plqqs|tdma|full_sm|random_k
    theta = 3                   ; odd; defaults to 3 for pl* kinds, else 1
    period = 1
    groups = 2
    t_stc =                     ; cap on single-user frames; empty = user coherence
    k_random = 10
    subset_limit = 12

    [admission]
    enabled = false
    v =
    w_max =

Explicit coherence wins over velocity when both are present.
"""

from __future__ import annotations

import configparser
from typing import Dict, List, Optional, Sequence

from .channel import UserProfile, coherence_from_velocity
from .engine import AdmissionControl, RunConfig
from .errors import ConfigError
from .schedulers import PolicyConfig

_DEFAULT_CARRIER_FREQ = 2.6e9
_DEFAULT_CELL_RADIUS = 1000.0


def _float_list(raw: str, key: str) -> List[float]:
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(key, f"not a number list: {raw!r} ({exc})") from None


def _get(parser: configparser.ConfigParser, section: str, key: str,
         cast, default=None, required: bool = False):
    raw = parser.get(section, key, fallback=None)
    if raw is None or raw.strip() == "":
        if required:
            raise ConfigError(f"{section}.{key}", "missing required key")
        return default
    try:
        return cast(raw.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"{section}.{key}", f"bad value {raw!r} ({exc})") from None


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _build_users(parser: configparser.ConfigParser) -> List[UserProfile]:
    coh_raw = parser.get("users", "coherence", fallback=None)
    vel_raw = parser.get("users", "velocity", fallback=None)
    if not coh_raw and not vel_raw:
        raise ConfigError("users.coherence", "need coherence or velocity")

    if coh_raw and coh_raw.strip():
        values = _float_list(coh_raw, "users.coherence")
        coherence = [int(round(v)) for v in values]
        velocities: List[Optional[float]] = [None] * len(coherence)
    else:
        velocities = _float_list(vel_raw, "users.velocity")
        fc = _get(parser, "users", "carrier_freq", float, _DEFAULT_CARRIER_FREQ)
        radius = _get(parser, "users", "cell_radius", float, _DEFAULT_CELL_RADIUS)
        coherence = [coherence_from_velocity(v, fc, radius) for v in velocities]

    n = len(coherence)
    rate_raw = parser.get("users", "arrival_rate", fallback="0")
    rates = _float_list(rate_raw, "users.arrival_rate")
    if len(rates) == 1:
        rates = rates * n
    if len(rates) != n:
        raise ConfigError("users.arrival_rate",
                          f"{len(rates)} rates for {n} users")

    return [UserProfile(user_id=i + 1, coherence_len=coherence[i],
                        arrival_rate=rates[i], velocity=velocities[i])
            for i in range(n)]


def _build_policy(parser: configparser.ConfigParser) -> PolicyConfig:
    kind = _get(parser, "policy", "kind", str, required=True).lower()
    theta_default = 3 if kind in ("pldca", "plqqs") else 1
    return PolicyConfig(
        kind=kind,
        theta=_get(parser, "policy", "theta", int, theta_default),
        reschedule_period=_get(parser, "policy", "period", int, 1),
        num_groups=_get(parser, "policy", "groups", int, 2),
        t_stc=_get(parser, "policy", "t_stc", int, None),
        k_random=_get(parser, "policy", "k_random", int, 10),
        subset_limit=_get(parser, "policy", "subset_limit", int, 12))


def _build_admission(parser: configparser.ConfigParser) -> Optional[AdmissionControl]:
    if not parser.has_section("admission"):
        return None
    if not _get(parser, "admission", "enabled", _parse_bool, False):
        return None
    v = _get(parser, "admission", "v", float, required=True)
    w = _get(parser, "admission", "w_max", float, v)
    return AdmissionControl(threshold_v=v, grant_w_max=w)


def apply_overrides(parser: configparser.ConfigParser,
                    overrides: Sequence[str]):
    """Apply ``section.key=value`` strings on top of the parsed file."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError("--set", f"expected section.key=value, got {item!r}")
        target, value = item.split("=", 1)
        if "." not in target:
            raise ConfigError("--set", f"expected section.key=value, got {item!r}")
        section, key = target.split(".", 1)
        if not parser.has_section(section):
            parser.add_section(section)
        parser.set(section.strip(), key.strip(), value.strip())


def load_run_config(path: str, overrides: Sequence[str] = (),
                    seed: Optional[int] = None,
                    output_dir: Optional[str] = None) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None

    apply_overrides(parser, overrides)

    config = RunConfig(
        antennas=_get(parser, "system", "antennas", int, required=True),
        users=_build_users(parser),
        policy=_build_policy(parser),
        horizon_slots=_get(parser, "system", "horizon_slots", int, required=True),
        seed=_get(parser, "system", "seed", int, 0),
        snr_db=_get(parser, "system", "snr_db", float, 15.0),
        packet_bits=_get(parser, "users", "packet_bits", float, 3.0),
        channel_model=_get(parser, "system", "channel_model", str, "rayleigh"),
        admission=_build_admission(parser),
        output_dir=output_dir)
    if seed is not None:
        import dataclasses
        config = dataclasses.replace(config, seed=seed)
    return config


def summary_pairs(config: RunConfig) -> Dict[str, str]:
    """Config echo written into summary files."""
    pairs = {
        "policy": config.policy.kind,
        "antennas": str(config.antennas),
        "snr_db": repr(config.snr_db),
        "seed": str(config.seed),
        "horizon_slots": str(config.horizon_slots),
        "num_users": str(len(config.users)),
    }
    if config.admission is not None:
        pairs["admission_v"] = repr(config.admission.threshold_v)
        pairs["admission_w_max"] = repr(config.admission.grant_w_max)
    return pairs

"""Frame-by-frame simulation loop, metrics, and the capacity estimator.

A run tiles the slot axis with variable-length frames: decide, transmit,
update queues, repeat until the configured horizon is covered. Randomness
is split into purpose-keyed substreams of one master seed so that the
arrival process is identical no matter which scheduler is running, and
channel draws are keyed per frame.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .channel import ChannelBlock, UserProfile, fixed_unit_block, sample_block
from .errors import ConfigError, ParameterError
from .queueing import UserQueue
from .schedulers import PolicyConfig, Scheduler, allocate_bits

_PURPOSE = {"arrivals": 0, "channel": 1, "policy": 2}

CHANNEL_MODELS = ("rayleigh", "fixed_unit")


def substream(seed: int, purpose: str, index: Optional[int] = None) -> np.random.Generator:
    """Deterministic generator for one (purpose, index) slice of a run."""
    key = (_PURPOSE[purpose],) if index is None else (_PURPOSE[purpose], index)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))


@dataclass
class AdmissionControl:
    """Virtual arrival rule for capacity estimation: any queue below
    ``threshold_v`` at a frame start is granted ``grant_w_max`` bits."""

    threshold_v: float
    grant_w_max: float

    def __post_init__(self):
        if self.threshold_v <= 0:
            raise ParameterError("threshold_v must be > 0")
        if self.grant_w_max < 0:
            raise ParameterError("grant_w_max must be >= 0")


@dataclass
class RunConfig:
    antennas: int
    users: List[UserProfile]
    policy: PolicyConfig
    horizon_slots: int
    seed: int
    snr_db: float = 15.0
    packet_bits: float = 3.0
    channel_model: str = "rayleigh"
    admission: Optional[AdmissionControl] = None
    output_dir: Optional[str] = None

    def __post_init__(self):
        if self.antennas < 1:
            raise ConfigError("system.antennas", "must be >= 1")
        if self.horizon_slots < 0:
            raise ConfigError("system.horizon_slots", "must be >= 0")
        if self.seed < 0:
            raise ConfigError("system.seed", "must be >= 0")
        if not np.isfinite(self.snr_db):
            raise ConfigError("system.snr_db", "must be finite")
        if not self.users:
            raise ConfigError("users", "at least one user required")
        if self.packet_bits <= 0:
            raise ConfigError("users.packet_bits", "must be > 0")
        if self.channel_model not in CHANNEL_MODELS:
            raise ConfigError("system.channel_model",
                              f"unknown model {self.channel_model!r}")
        for u in self.users:
            if u.arrival_rate > self.packet_bits:
                raise ConfigError(
                    "users.arrival_rate",
                    f"user {u.user_id}: rate {u.arrival_rate} exceeds packet_bits "
                    f"{self.packet_bits} (per-slot packet probability > 1)")

    @property
    def total_power(self) -> float:
        return 1.0

    @property
    def noise_var(self) -> float:
        return 10.0 ** (-self.snr_db / 10.0)

    @property
    def coherence(self) -> List[int]:
        return [u.coherence_len for u in self.users]


@dataclass
class FrameRecord:
    frame_index: int
    t_start: int
    frame_len: int
    mode: str
    scheduled: Tuple[int, ...]
    allocated_bits: Tuple[float, ...]   # per scheduled user
    served_bits: Tuple[float, ...]      # per scheduled user
    arrived_bits: Tuple[float, ...]     # per user (all users)
    objective: float


@dataclass
class RunSummary:
    total_slots: int
    num_frames: int
    sum_rate: float                      # actually served bits per slot
    stability_slope: float               # total-backlog drift, final half
    admitted_rate: Optional[float]
    per_user_delay: Tuple[float, ...]
    per_user_mean_queue: Tuple[float, ...]
    per_user_arrived: Tuple[float, ...]
    per_user_served: Tuple[float, ...]
    per_user_final_backlog: Tuple[float, ...]
    per_user_delay_convergence: Tuple[float, ...]  # last-quartile swing / final

    @property
    def mean_delay(self) -> float:
        return float(np.mean(self.per_user_delay)) if self.per_user_delay else 0.0

    @property
    def max_user_delay(self) -> float:
        return float(np.max(self.per_user_delay)) if self.per_user_delay else 0.0


@dataclass
class SimResult:
    frames: List[FrameRecord]
    slot_queue: np.ndarray      # (num_users, total_slots) backlog at each slot
    slot_hol: np.ndarray        # (num_users, total_slots) head-of-line age
    slot_arrivals: np.ndarray   # (num_users, total_slots) bits arriving per slot
    summary: RunSummary


def _draw_block(config: RunConfig, num_rows: int, frame_index: int,
                block_start: int) -> ChannelBlock:
    if config.channel_model == "fixed_unit":
        return fixed_unit_block(num_rows, config.antennas, block_start)
    rng = substream(config.seed, "channel", frame_index)
    return sample_block(num_rows, config.antennas, rng, block_start)


def run_simulation(config: RunConfig) -> SimResult:
    """Run one seeded simulation to at least ``horizon_slots`` slots."""
    n = len(config.users)
    coherence = config.coherence
    power, noise = config.total_power, config.noise_var
    packet_probs = np.array([u.arrival_rate / config.packet_bits
                             for u in config.users])

    scheduler = Scheduler(config.policy, coherence, power, noise)
    queues = [UserQueue() for _ in range(n)]
    arrivals_rng = substream(config.seed, "arrivals")
    policy_rng = substream(config.seed, "policy")

    frames: List[FrameRecord] = []
    q_parts: List[List[np.ndarray]] = [[] for _ in range(n)]
    hol_parts: List[List[np.ndarray]] = [[] for _ in range(n)]
    arr_parts: List[List[np.ndarray]] = [[] for _ in range(n)]
    admitted_total = 0.0

    t = 0
    k = 0
    while t < config.horizon_slots:
        backlogs = [q.backlog_bits for q in queues]

        grants: Optional[List[float]] = None
        if config.admission is not None:
            grants = [config.admission.grant_w_max
                      if q.backlog_bits < config.admission.threshold_v else 0.0
                      for q in queues]

        if scheduler.needs_genie:
            block = _draw_block(config, n, k, t)
            decision = scheduler.decide(backlogs, genie_gains=block.gains,
                                        rng=policy_rng)
            used_gains = block.gains[list(decision.scheduled)] \
                if decision.scheduled else None
        else:
            decision = scheduler.decide(backlogs, rng=policy_rng)
            used_gains = None
            if decision.scheduled:
                used_gains = _draw_block(config, len(decision.scheduled), k, t).gains

        frame_len = decision.frame_len
        beta = decision.allocated_bits
        if beta is None:
            beta = allocate_bits(decision.scheduled, decision.mode, frame_len,
                                 used_gains, power, noise)
        beta_by_user: Dict[int, float] = dict(zip(decision.scheduled, beta))

        # Measurements use the state at the frame start: service lands at the
        # frame boundary, so queues are frozen inside the frame while head
        # ages keep growing.
        for u in range(n):
            q_parts[u].append(np.full(frame_len, queues[u].backlog_bits))
            hol_parts[u].append(queues[u].record_delay_window(t, frame_len))

        if grants is not None:
            arrival_events = [[(t, g)] if g > 0 else [] for g in grants]
            admitted_total += sum(grants)
        else:
            u_mat = arrivals_rng.random((frame_len, n))
            arrival_events = [
                [(t + int(s), config.packet_bits)
                 for s in np.nonzero(u_mat[:, u] < packet_probs[u])[0]]
                for u in range(n)
            ]

        served: List[float] = []
        arrived: List[float] = []
        for u in range(n):
            s = queues[u].apply_frame(beta_by_user.get(u, 0.0),
                                      arrival_events[u], t, frame_len)
            if u in beta_by_user:
                served.append(s)
            arrived.append(float(sum(b for _, b in arrival_events[u])))
            per_slot = np.zeros(frame_len)
            for slot, bits in arrival_events[u]:
                per_slot[slot - t] += bits
            arr_parts[u].append(per_slot)

        frames.append(FrameRecord(
            frame_index=k, t_start=t, frame_len=frame_len, mode=decision.mode,
            scheduled=decision.scheduled, allocated_bits=tuple(beta),
            served_bits=tuple(served), arrived_bits=tuple(arrived),
            objective=decision.objective))
        t += frame_len
        k += 1

    slot_queue = _stack(q_parts, n, t)
    slot_hol = _stack(hol_parts, n, t)
    slot_arrivals = _stack(arr_parts, n, t)
    summary = _summarize(config, queues, frames, slot_queue, slot_hol,
                         admitted_total, t)
    return SimResult(frames=frames, slot_queue=slot_queue, slot_hol=slot_hol,
                     slot_arrivals=slot_arrivals, summary=summary)


def _stack(parts: List[List[np.ndarray]], n: int, total: int) -> np.ndarray:
    if total == 0:
        return np.zeros((n, 0))
    return np.stack([np.concatenate(p) for p in parts])


def _summarize(config: RunConfig, queues: List[UserQueue],
               frames: List[FrameRecord], slot_queue: np.ndarray,
               slot_hol: np.ndarray, admitted_total: float,
               total_slots: int) -> RunSummary:
    n = len(queues)
    total_served = sum(q.total_served for q in queues)
    sum_rate = total_served / total_slots if total_slots else 0.0
    admitted_rate = None
    if config.admission is not None:
        admitted_rate = admitted_total / total_slots if total_slots else 0.0

    slope = 0.0
    if total_slots >= 4:
        tail = np.sum(slot_queue, axis=0)[total_slots // 2:]
        slope = float(np.polyfit(np.arange(tail.size), tail, 1)[0])

    convergence = []
    for u in range(n):
        if total_slots == 0:
            convergence.append(0.0)
            continue
        running = np.cumsum(slot_hol[u]) / np.arange(1, total_slots + 1)
        quarter = running[(3 * total_slots) // 4:]
        final = running[-1]
        swing = float(quarter.max() - quarter.min()) if quarter.size else 0.0
        convergence.append(swing / final if final > 0 else 0.0)

    return RunSummary(
        total_slots=total_slots,
        num_frames=len(frames),
        sum_rate=sum_rate,
        stability_slope=slope,
        admitted_rate=admitted_rate,
        per_user_delay=tuple(q.time_average_delay for q in queues),
        per_user_mean_queue=tuple(float(np.mean(slot_queue[u])) if total_slots
                                  else 0.0 for u in range(n)),
        per_user_arrived=tuple(q.total_arrived for q in queues),
        per_user_served=tuple(q.total_served for q in queues),
        per_user_final_backlog=tuple(q.backlog_bits for q in queues),
        per_user_delay_convergence=tuple(convergence))


def default_admission(config: RunConfig) -> AdmissionControl:
    """Capacity-run defaults: V = 100 x mean arrival rate x max coherence."""
    rates = [u.arrival_rate for u in config.users]
    mean_rate = sum(rates) / len(rates)
    if mean_rate <= 0:
        raise ConfigError("admission.v",
                          "no arrival rates to derive V from; set it explicitly")
    v = 100.0 * mean_rate * max(config.coherence)
    return AdmissionControl(threshold_v=v, grant_w_max=v)


def estimate_capacity(config: RunConfig, v: Optional[float] = None,
                      w_max: Optional[float] = None) -> float:
    """Time-average admitted bits/slot under the virtual arrival rule.

    Grows toward the policy's ergodic sum capacity as V increases; the
    stochastic arrival process is replaced entirely by threshold grants.
    """
    if v is None:
        admission = default_admission(config)
        if w_max is not None:
            admission = AdmissionControl(admission.threshold_v, w_max)
    else:
        admission = AdmissionControl(v, v if w_max is None else w_max)
    run_cfg = dataclasses.replace(config, admission=admission)
    result = run_simulation(run_cfg)
    return float(result.summary.admitted_rate)


@dataclass
class SweepPoint:
    axis: str
    value: float
    seed: int
    summary: RunSummary


_POLICY_AXES = {"period": "reschedule_period", "theta": "theta",
                "groups": "num_groups", "t_stc": "t_stc",
                "k_random": "k_random", "subset_limit": "subset_limit"}
_SYSTEM_AXES = {"antennas": int, "snr_db": float, "horizon_slots": int,
                "seed": int, "packet_bits": float}


def _with_axis(config: RunConfig, axis: str, value: float) -> RunConfig:
    if axis in _POLICY_AXES:
        policy = dataclasses.replace(config.policy,
                                     **{_POLICY_AXES[axis]: int(value)})
        return dataclasses.replace(config, policy=policy)
    if axis in _SYSTEM_AXES:
        return dataclasses.replace(config, **{axis: _SYSTEM_AXES[axis](value)})
    if axis == "users":
        proto = config.users[0]
        users = [dataclasses.replace(proto, user_id=i + 1)
                 for i in range(int(value))]
        return dataclasses.replace(config, users=users)
    if axis == "arrival_rate":
        users = [dataclasses.replace(u, arrival_rate=float(value))
                 for u in config.users]
        return dataclasses.replace(config, users=users)
    if axis == "v":
        w = config.admission.grant_w_max if config.admission else float(value)
        return dataclasses.replace(config,
                                   admission=AdmissionControl(float(value), w))
    if axis == "w_max":
        if config.admission is None:
            raise ConfigError("sweep.axis", "w_max sweep requires admission.v")
        return dataclasses.replace(
            config, admission=AdmissionControl(config.admission.threshold_v,
                                               float(value)))
    raise ConfigError("sweep.axis", f"unknown sweep axis {axis!r}")


def sweep(config: RunConfig, axis: str, values: Sequence[float]) -> List[SweepPoint]:
    """One independent run per axis value, returned in axis order.

    Seeds derive from the master seed plus the value's position in the
    input, so reordering the requested values never changes any run.
    """
    points = []
    for idx, value in enumerate(values):
        cfg = _with_axis(config, axis, value)
        if axis != "seed":
            cfg = dataclasses.replace(cfg, seed=config.seed + idx)
        result = run_simulation(cfg)
        points.append(SweepPoint(axis=axis, value=float(value), seed=cfg.seed,
                                 summary=result.summary))
    return sorted(points, key=lambda p: p.value)

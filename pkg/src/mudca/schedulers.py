"""User-scheduling policies over a common decision interface.

Every policy turns queue states (and, for genie policies, a fresh channel
draw) into a SchedulingDecision: which users transmit, in which mode, for
how many channel uses, and how many service bits each gets.

Frame anatomy shared by all policies: a multiplexed frame spans the minimum
coherence length of its users and spends one pilot slot per scheduled user
before payload; a single-user frame runs open loop (no pilots) for a fixed
length. Allocated bits follow directly:

    multiplexed:  beta_n = (T_k - |S|) * sm_rate_n
    single user:  beta   = T_k * stc_rate

The genie-aided rule (``gap``) maximizes the queue-weighted per-slot service
sum(Q_n^theta * beta_n / T_k) by exhaustive subset search using the same
channel realization the transmission will see. Its derivatives reschedule
only every T frames (``tdca``) or raise queue weights to an odd power theta
(``pldca``) for delay fairness. The quantized-coherence heuristic (``qqs``
family) needs no channel knowledge: it buckets users by coherence length,
grows a greedy prefix per bucket, and compares buckets on their pre-log
queue scores.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import ConfigError, DegenerateChannelError, ParameterError
from .precoding import stc_rate, zero_forcing

MODE_SM = "SM"
MODE_STC = "STC"
MODE_IDLE = "IDLE"

GENIE_KINDS = ("gap", "tdca", "pldca")
HEURISTIC_KINDS = ("qqs", "tqqs", "plqqs")
BASELINE_KINDS = ("tdma", "full_sm", "random_k")
ALL_KINDS = GENIE_KINDS + HEURISTIC_KINDS + BASELINE_KINDS


@dataclass
class SchedulingDecision:
    scheduled: Tuple[int, ...]          # user indices, ascending
    mode: str                           # MODE_SM / MODE_STC / MODE_IDLE
    frame_len: int
    allocated_bits: Optional[Tuple[float, ...]]  # per scheduled user; None until rated
    objective: float = 0.0

    def __post_init__(self):
        if self.mode == MODE_SM and len(self.scheduled) < 2:
            raise ParameterError("multiplexed mode requires at least two users")
        if self.mode == MODE_STC and len(self.scheduled) != 1:
            raise ParameterError("single-user mode requires exactly one user")
        if self.mode == MODE_IDLE and (self.scheduled or self.frame_len != 1):
            raise ParameterError("idle frames are empty and one slot long")
        if self.frame_len < 1:
            raise ParameterError("frame_len must be >= 1")


@dataclass
class PolicyConfig:
    kind: str
    theta: int = 1
    reschedule_period: int = 1
    num_groups: int = 2
    t_stc: Optional[int] = None     # cap on single-user frame length; None = user coherence
    k_random: int = 10
    subset_limit: int = 12

    def __post_init__(self):
        if self.kind not in ALL_KINDS:
            raise ConfigError("policy.kind", f"unknown policy {self.kind!r}")
        if self.theta < 1 or self.theta % 2 == 0:
            raise ConfigError("policy.theta", "theta must be an odd integer >= 1")
        if self.reschedule_period < 1:
            raise ConfigError("policy.period", "period must be >= 1")
        if self.num_groups < 1:
            raise ConfigError("policy.groups", "groups must be >= 1")
        if self.t_stc is not None and self.t_stc < 1:
            raise ConfigError("policy.t_stc", "t_stc must be >= 1")
        if self.k_random < 1:
            raise ConfigError("policy.k_random", "k_random must be >= 1")
        if self.subset_limit < 1:
            raise ConfigError("policy.subset_limit", "subset_limit must be >= 1")

    @property
    def needs_genie(self) -> bool:
        return self.kind in GENIE_KINDS


def stc_frame_len(coherence_len: int, t_stc: Optional[int]) -> int:
    """Single-user frame length: the user's own block, capped if configured."""
    return coherence_len if t_stc is None else min(coherence_len, t_stc)


def allocate_bits(scheduled: Sequence[int], mode: str, frame_len: int,
                  gains: np.ndarray, total_power: float,
                  noise_var: float) -> Tuple[float, ...]:
    """Service bits per scheduled user for a fixed set, mode, and frame.

    ``gains`` holds one row per scheduled user (same order). Degenerate
    channels and frames fully consumed by pilots yield zero bits.
    """
    if mode == MODE_IDLE:
        return ()
    if mode == MODE_STC:
        rate = stc_rate(gains[0], total_power, gains.shape[1], noise_var)
        return (frame_len * rate,)
    payload = frame_len - len(scheduled)
    if payload <= 0:
        return (0.0,) * len(scheduled)
    try:
        zf = zero_forcing(gains, total_power, noise_var)
    except DegenerateChannelError:
        return (0.0,) * len(scheduled)
    return tuple(payload * r for r in zf.per_user_sm_rate)


def _idle_decision() -> SchedulingDecision:
    return SchedulingDecision(scheduled=(), mode=MODE_IDLE, frame_len=1,
                              allocated_bits=(), objective=0.0)


def gap_decide(backlogs: Sequence[float], coherence: Sequence[int],
               genie_gains: np.ndarray, total_power: float, noise_var: float,
               t_stc: Optional[int] = None, theta: int = 1,
               subset_limit: int = 12) -> SchedulingDecision:
    """Exhaustive drift-maximizing rule with genie channel knowledge.

    Scores every nonempty user subset by sum(Q_n^theta * beta_n / T_k) and
    returns the best, idling when no subset scores above zero. Ties resolve
    to the smaller, lexicographically-first subset (search order).
    """
    n = len(backlogs)
    if n > subset_limit:
        raise ConfigError(
            "policy.kind",
            f"exhaustive subset search over {n} users exceeds the limit of "
            f"{subset_limit}; use the qqs family for large systems")
    if genie_gains.shape[0] != n:
        raise ParameterError("genie channel must cover every user")

    weights = np.asarray(backlogs, dtype=float) ** theta
    best_obj = 0.0
    best: Optional[Tuple[Tuple[int, ...], str, int, Tuple[float, ...]]] = None

    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            if size == 1:
                mode = MODE_STC
                t_k = stc_frame_len(coherence[subset[0]], t_stc)
            else:
                mode = MODE_SM
                t_k = min(coherence[i] for i in subset)
            beta = allocate_bits(subset, mode, t_k, genie_gains[list(subset)],
                                 total_power, noise_var)
            obj = sum(weights[i] * b for i, b in zip(subset, beta)) / t_k
            if obj > best_obj:
                best_obj = obj
                best = (subset, mode, t_k, beta)

    if best is None:
        return _idle_decision()
    subset, mode, t_k, beta = best
    return SchedulingDecision(scheduled=subset, mode=mode, frame_len=t_k,
                              allocated_bits=beta, objective=best_obj)


def greedy_prefix_len(sorted_weights: Sequence[float], mean_coherence: float) -> int:
    """Length of the greedy prefix over descending queue weights.

    Starting from the heaviest queue, user i+1 joins while the marginal
    pre-log gain (1 - (i+1)/T_bar) * w_{i+1} - (1/T_bar) * sum(w_1..w_i)
    stays positive. With weights sorted descending the marginal gain is
    nonincreasing, so this stop equals the prefix-score argmax.
    """
    count = 1
    cum = float(sorted_weights[0])
    while count < len(sorted_weights):
        nxt = float(sorted_weights[count])
        gain = (1.0 - (count + 1) / mean_coherence) * nxt - cum / mean_coherence
        if gain <= 0.0:
            break
        cum += nxt
        count += 1
    return count


def qqs_decide(backlogs: Sequence[float], coherence: Sequence[int],
               num_groups: int, t_stc: Optional[int] = None,
               theta: int = 1) -> SchedulingDecision:
    """Quantized-coherence queue-driven heuristic (no channel knowledge).

    Users are bucketed by coherence length into ``num_groups`` uniform bins
    (half-open on the left so boundary values land in exactly one bin). Each
    bucket proposes either its greedy prefix (multiplexed) or its single
    heaviest queue (open loop), whichever scores higher; buckets then compete
    on those pre-log scores.
    """
    n = len(backlogs)
    weights = np.asarray(backlogs, dtype=float) ** theta
    if not np.any(weights > 0):
        return _idle_decision()

    t_max = max(coherence)
    best_score = 0.0
    best: Optional[Tuple[Tuple[int, ...], str]] = None

    for k in range(1, num_groups + 1):
        # Integer-exact membership test: (k-1)/K * T_max < T_n <= k/K * T_max.
        members = [i for i in range(n)
                   if (k - 1) * t_max < coherence[i] * num_groups <= k * t_max]
        if not members:
            continue
        members.sort(key=lambda i: (-weights[i], i))
        mean_coh = sum(coherence[i] for i in members) / len(members)

        prefix_len = greedy_prefix_len([weights[i] for i in members], mean_coh)
        prefix = members[:prefix_len]
        prefix_score = (1.0 - prefix_len / mean_coh) * sum(weights[i] for i in prefix)
        single_score = weights[members[0]]

        if single_score >= prefix_score:
            group_score, group_set, group_mode = single_score, (members[0],), MODE_STC
        else:
            group_score, group_set, group_mode = prefix_score, tuple(sorted(prefix)), MODE_SM

        if group_score > best_score:
            best_score = group_score
            best = (group_set, group_mode)

    if best is None:
        return _idle_decision()
    chosen, mode = best
    if mode == MODE_STC:
        frame = stc_frame_len(coherence[chosen[0]], t_stc)
    else:
        frame = min(coherence[i] for i in chosen)
    return SchedulingDecision(scheduled=chosen, mode=mode, frame_len=frame,
                              allocated_bits=None, objective=best_score)


@dataclass
class Scheduler:
    """Stateful per-run dispatcher over all policy kinds.

    Carries the periodic-rescheduling cache (tdca/tqqs), the round-robin
    pointer (tdma), and the configuration. Genie policies return decisions
    with allocated bits already computed from the supplied channel draw;
    queue-only policies leave allocation to the caller.
    """

    config: PolicyConfig
    coherence: Sequence[int]
    total_power: float
    noise_var: float
    _cached: Optional[Tuple[Tuple[int, ...], str]] = field(default=None, init=False)
    _frames_since_decision: int = field(default=0, init=False)
    _rr_next: int = field(default=0, init=False)

    def __post_init__(self):
        n = len(self.coherence)
        if self.config.kind in GENIE_KINDS and n > self.config.subset_limit:
            raise ConfigError(
                "policy.kind",
                f"{self.config.kind} over {n} users exceeds the subset search "
                f"limit of {self.config.subset_limit}; use the qqs family")

    @property
    def needs_genie(self) -> bool:
        return self.config.needs_genie

    def decide(self, backlogs: Sequence[float],
               genie_gains: Optional[np.ndarray] = None,
               rng: Optional[np.random.Generator] = None) -> SchedulingDecision:
        kind = self.config.kind
        if kind in ("gap", "pldca"):
            return self._gap(backlogs, genie_gains)
        if kind == "tdca":
            return self._periodic(backlogs, genie_gains, genie=True)
        if kind in ("qqs", "plqqs"):
            return self._qqs(backlogs)
        if kind == "tqqs":
            return self._periodic(backlogs, genie_gains, genie=False)
        if kind == "tdma":
            return self._tdma()
        if kind == "full_sm":
            return self._full_sm()
        return self._random_k(rng)

    # -- policy bodies ----------------------------------------------------

    def _gap(self, backlogs, genie_gains) -> SchedulingDecision:
        return gap_decide(backlogs, self.coherence, genie_gains,
                          self.total_power, self.noise_var,
                          t_stc=self.config.t_stc, theta=self.config.theta,
                          subset_limit=self.config.subset_limit)

    def _qqs(self, backlogs) -> SchedulingDecision:
        return qqs_decide(backlogs, self.coherence, self.config.num_groups,
                          t_stc=self.config.t_stc, theta=self.config.theta)

    def _periodic(self, backlogs, genie_gains, genie: bool) -> SchedulingDecision:
        """Re-decide every ``reschedule_period`` frames, else reuse the cached
        user set (lazily: the set is kept even if its queues drain)."""
        if self._frames_since_decision % self.config.reschedule_period == 0:
            decision = self._gap(backlogs, genie_gains) if genie else self._qqs(backlogs)
            self._cached = (decision.scheduled, decision.mode)
            self._frames_since_decision = 1
            return decision
        self._frames_since_decision += 1
        scheduled, mode = self._cached
        if mode == MODE_IDLE:
            return _idle_decision()
        if mode == MODE_STC:
            frame = stc_frame_len(self.coherence[scheduled[0]], self.config.t_stc)
        else:
            frame = min(self.coherence[i] for i in scheduled)
        beta = None
        if genie:
            beta = allocate_bits(scheduled, mode, frame,
                                 genie_gains[list(scheduled)],
                                 self.total_power, self.noise_var)
        return SchedulingDecision(scheduled=scheduled, mode=mode, frame_len=frame,
                                  allocated_bits=beta, objective=0.0)

    def _tdma(self) -> SchedulingDecision:
        user = self._rr_next
        self._rr_next = (self._rr_next + 1) % len(self.coherence)
        frame = stc_frame_len(self.coherence[user], self.config.t_stc)
        return SchedulingDecision(scheduled=(user,), mode=MODE_STC,
                                  frame_len=frame, allocated_bits=None)

    def _full_sm(self) -> SchedulingDecision:
        n = len(self.coherence)
        if n == 1:
            return SchedulingDecision(scheduled=(0,), mode=MODE_STC,
                                      frame_len=stc_frame_len(self.coherence[0],
                                                              self.config.t_stc),
                                      allocated_bits=None)
        return SchedulingDecision(scheduled=tuple(range(n)), mode=MODE_SM,
                                  frame_len=min(self.coherence),
                                  allocated_bits=None)

    def _random_k(self, rng: Optional[np.random.Generator]) -> SchedulingDecision:
        if rng is None:
            raise ParameterError("random_k requires a generator")
        n = len(self.coherence)
        k = min(self.config.k_random, n)
        chosen = tuple(sorted(int(i) for i in rng.choice(n, size=k, replace=False)))
        if k == 1:
            return SchedulingDecision(scheduled=chosen, mode=MODE_STC,
                                      frame_len=stc_frame_len(self.coherence[chosen[0]],
                                                              self.config.t_stc),
                                      allocated_bits=None)
        return SchedulingDecision(scheduled=chosen, mode=MODE_SM,
                                  frame_len=min(self.coherence[i] for i in chosen),
                                  allocated_bits=None)

"""Closed-form calculators for pilot-overhead throughput arithmetic.

These are the back-of-the-envelope quantities that motivate overhead-aware
scheduling: spatial degrees of freedom discounted by training overhead, and
the sum rate of a fixed time-sharing schedule under unit per-user rates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

from .errors import ParameterError

FRACTION_TOL = 1e-9


@dataclass
class TimeShareMode:
    """One transmission mode of a time-sharing schedule.

    ``coherences`` holds the block length of each user in the mode (same
    order as ``user_ids``). Modes with a single user run open loop and pay
    no training overhead.
    """

    fraction: float
    coherences: Sequence[int]
    user_ids: Optional[List[int]] = field(default=None)

    def __post_init__(self):
        if not self.coherences:
            raise ParameterError("mode must contain at least one user")
        if self.fraction < 0:
            raise ParameterError("mode fraction must be >= 0")
        for t in self.coherences:
            if t < 1:
                raise ParameterError("coherence lengths must be >= 1")
        if self.user_ids is not None and len(self.user_ids) != len(self.coherences):
            raise ParameterError("user_ids and coherences must align")


def training_dof(coherence: float, num_scheduled: int,
                 num_antennas: Optional[int] = None,
                 unbounded_antennas: bool = False) -> float:
    """Spatial DoF after discounting one training slot per scheduled user.

    Returns max(0, (T - N_s) / T) * min(M, N_s); with ``unbounded_antennas``
    the antenna cap is dropped. Maximized over N_s at half the block length.
    """
    if coherence < 1:
        raise ParameterError("coherence must be >= 1")
    if num_scheduled < 0:
        raise ParameterError("num_scheduled must be >= 0")
    if not unbounded_antennas:
        if num_antennas is None:
            raise ParameterError("num_antennas required unless unbounded_antennas")
        if num_antennas < 1:
            raise ParameterError("num_antennas must be >= 1")
    overhead_factor = max(0.0, (coherence - num_scheduled) / coherence)
    spatial = num_scheduled if unbounded_antennas else min(num_antennas, num_scheduled)
    return overhead_factor * spatial


def timeshare_sum_rate(modes: Sequence[TimeShareMode]) -> float:
    """Sum rate of a time-sharing schedule with unit per-user rates.

    Each multiplexed mode loses one pilot slot per member user per block, so
    its per-user efficiency is 1 - sum(1/T_n) (clamped at 0); single-user
    modes are overhead free. Mode fractions must sum to 1.
    """
    if not modes:
        raise ParameterError("at least one mode required")
    total = sum(m.fraction for m in modes)
    if abs(total - 1.0) > FRACTION_TOL:
        raise ParameterError(f"mode fractions sum to {total!r}, expected 1")

    rate = 0.0
    for mode in modes:
        if len(mode.coherences) > 1:
            efficiency = 1.0 - sum(1.0 / t for t in mode.coherences)
        else:
            efficiency = 1.0
        rate += len(mode.coherences) * mode.fraction * max(0.0, efficiency)
    return rate

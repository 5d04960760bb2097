"""Block-fading channel draws and mobility-to-coherence conversion.

Every user's channel vector stays constant over its own coherence length
(counted in channel uses) and is redrawn independently afterwards. The
simulator redraws channels per frame, so this module only has to produce
one i.i.d. Rayleigh matrix at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ParameterError

# Engineering value; keeps derived coherence lengths aligned with the usual
# round numbers (e.g. B_c = 75 kHz for a 1 km cell).
SPEED_OF_LIGHT = 3.0e8  # m/s


@dataclass
class UserProfile:
    """Static per-user parameters: identity, coherence length, traffic rate.

    ``coherence_len`` is the resolved block length in channel uses. When a
    profile is built from a velocity, the velocity is kept for reference but
    an explicitly given coherence length always wins.
    """

    user_id: int
    coherence_len: int
    arrival_rate: float = 0.0  # bits per channel use
    velocity: Optional[float] = None  # m/s, informational once resolved

    def __post_init__(self):
        if self.coherence_len < 1:
            raise ParameterError(f"user {self.user_id}: coherence_len must be >= 1")
        if self.arrival_rate < 0:
            raise ParameterError(f"user {self.user_id}: arrival_rate must be >= 0")

    @classmethod
    def from_velocity(cls, user_id: int, velocity: float, carrier_freq: float,
                      cell_radius: float, arrival_rate: float = 0.0) -> "UserProfile":
        t = coherence_from_velocity(velocity, carrier_freq, cell_radius)
        return cls(user_id=user_id, coherence_len=t,
                   arrival_rate=arrival_rate, velocity=velocity)


@dataclass
class ChannelBlock:
    """One fading-block realization: rows are user channel vectors."""

    gains: np.ndarray  # (num_users, num_antennas) complex
    block_start: int = 0

    @property
    def num_users(self) -> int:
        return self.gains.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.gains.shape[1]


def coherence_from_velocity(velocity: float, carrier_freq: float,
                            cell_radius: float) -> int:
    """Convert user mobility into a block length in channel uses.

    Block length = coherence bandwidth x coherence time, with
    B_c = c / (4 * cell_radius) and T_c = c / (8 * f_c * v), rounded to the
    nearest integer and floored at 1.
    """
    if velocity <= 0:
        raise ParameterError("velocity must be > 0")
    if carrier_freq <= 0:
        raise ParameterError("carrier_freq must be > 0")
    if cell_radius <= 0:
        raise ParameterError("cell_radius must be > 0")
    b_c = SPEED_OF_LIGHT / (4.0 * cell_radius)
    t_c = SPEED_OF_LIGHT / (8.0 * carrier_freq * velocity)
    return max(1, int(round(b_c * t_c)))


def sample_block(num_users: int, num_antennas: int, rng: np.random.Generator,
                 block_start: int = 0) -> ChannelBlock:
    """Draw one i.i.d. CN(0, 1) channel matrix (unit variance per entry)."""
    if num_users < 1:
        raise ParameterError("num_users must be >= 1")
    if num_antennas < 1:
        raise ParameterError("num_antennas must be >= 1")
    re = rng.standard_normal((num_users, num_antennas))
    im = rng.standard_normal((num_users, num_antennas))
    gains = (re + 1j * im) / math.sqrt(2.0)
    return ChannelBlock(gains=gains, block_start=block_start)


def fixed_unit_block(num_users: int, num_antennas: int,
                     block_start: int = 0) -> ChannelBlock:
    """Deterministic all-ones channel, used for closed-form calibration runs.

    Only meaningful for single-user transmission: duplicated rows are rank
    deficient under zero-forcing.
    """
    if num_users < 1:
        raise ParameterError("num_users must be >= 1")
    if num_antennas < 1:
        raise ParameterError("num_antennas must be >= 1")
    gains = np.ones((num_users, num_antennas), dtype=complex)
    return ChannelBlock(gains=gains, block_start=block_start)

"""Zero-forcing precoding and the per-mode link rates.

Rates are in bits per channel use (log base 2 throughout). The SINR is
evaluated from the full signal/interference expression rather than assuming
ideal inter-user cancellation, so the orthogonality of zero-forcing shows up
as a testable property instead of a built-in assumption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .channel import ChannelBlock
from .errors import DegenerateChannelError, ParameterError

# Relative singular-value cutoff below which a channel matrix is treated as
# rank deficient. I.i.d. Gaussian matrices are almost surely full rank, so
# this only guards pathological inputs (duplicated rows, zero channels).
RANK_TOL = 1e-10


@dataclass
class PrecodeResult:
    precoder: np.ndarray       # (num_antennas, num_users) complex
    power_scale: float         # amplitude normalization; scale**2 * ||W||_F**2 = P
    per_user_sinr: np.ndarray  # (num_users,) nonnegative
    per_user_sm_rate: np.ndarray  # log2(1 + sinr), bits/channel use


def _as_matrix(channel: Union[ChannelBlock, np.ndarray]) -> np.ndarray:
    gains = channel.gains if isinstance(channel, ChannelBlock) else np.asarray(channel)
    if gains.ndim != 2:
        raise ParameterError("channel matrix must be 2-D (users x antennas)")
    return gains


def zero_forcing(channel: Union[ChannelBlock, np.ndarray], total_power: float,
                 noise_var: float) -> PrecodeResult:
    """Compute W = H^H (H H^H)^-1 with sum-power normalization.

    Raises DegenerateChannelError when the matrix has more rows than columns
    or its smallest singular value falls below RANK_TOL times the largest.
    """
    h = _as_matrix(channel)
    num_users, num_antennas = h.shape
    if total_power <= 0:
        raise ParameterError("total_power must be > 0")
    if noise_var <= 0:
        raise ParameterError("noise_var must be > 0")
    if num_users > num_antennas:
        raise DegenerateChannelError(
            f"cannot zero-force {num_users} users with {num_antennas} antennas")

    svals = np.linalg.svd(h, compute_uv=False)
    if svals[0] <= 0 or svals[-1] <= RANK_TOL * svals[0]:
        raise DegenerateChannelError("channel matrix is numerically rank deficient")

    gram = h @ h.conj().T
    w = h.conj().T @ np.linalg.inv(gram)
    trace_wwh = float(np.sum(np.abs(w) ** 2).real)
    scale_sq = total_power / trace_wwh

    effective = h @ w  # ~ identity for exact zero-forcing
    diag = np.abs(np.diag(effective)) ** 2
    row_power = np.sum(np.abs(effective) ** 2, axis=1)
    interference = np.maximum(row_power - diag, 0.0)
    sinr = scale_sq * diag / (scale_sq * interference + noise_var)
    rate = np.log2(1.0 + sinr)

    return PrecodeResult(precoder=w, power_scale=math.sqrt(scale_sq),
                         per_user_sinr=sinr, per_user_sm_rate=rate)


def stc_rate(user_channel_row: np.ndarray, total_power: float,
             num_antennas: int, noise_var: float) -> float:
    """Single-user open-loop (space-time coded) rate.

    No transmit channel knowledge, so power spreads over all antennas:
    rate = log2(1 + ||h||^2 * P / (M * sigma^2)).
    """
    row = np.asarray(user_channel_row).reshape(-1)
    if row.shape[0] != num_antennas:
        raise ParameterError(
            f"channel row has {row.shape[0]} entries, expected {num_antennas}")
    if total_power <= 0:
        raise ParameterError("total_power must be > 0")
    if noise_var <= 0:
        raise ParameterError("noise_var must be > 0")
    gain = float(np.sum(np.abs(row) ** 2).real)
    return math.log2(1.0 + gain * total_power / (num_antennas * noise_var))

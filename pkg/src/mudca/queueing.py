"""Per-user bit queues with packet-level delay tracking.

The queue evolves frame by frame: the scheduler allocates a (possibly
fractional) number of service bits, the queue drains at most its current
backlog, and the frame's arrivals are appended afterwards. Packets keep
their true arrival slots so head-of-line delay stays meaningful even though
service is applied at frame granularity.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import ParameterError


@dataclass
class ArrivalModel:
    """Bernoulli packet arrivals: one packet of ``packet_bits`` per slot with
    probability ``packet_prob``, giving mean rate p * L bits/slot."""

    packet_prob: float
    packet_bits: float

    def __post_init__(self):
        if not 0.0 <= self.packet_prob <= 1.0:
            raise ParameterError("packet_prob must be in [0, 1]")
        if self.packet_bits <= 0:
            raise ParameterError("packet_bits must be > 0")

    @property
    def rate(self) -> float:
        return self.packet_prob * self.packet_bits


def generate_arrivals(model: ArrivalModel, num_slots: int,
                      rng: np.random.Generator) -> List[Tuple[int, float]]:
    """Draw (slot, bits) arrival events for ``num_slots`` consecutive slots."""
    if num_slots < 0:
        raise ParameterError("num_slots must be >= 0")
    if num_slots == 0:
        return []
    hits = np.nonzero(rng.random(num_slots) < model.packet_prob)[0]
    return [(int(s), model.packet_bits) for s in hits]


class UserQueue:
    """Bit queue with a packet FIFO for head-of-line delay accounting.

    ``backlog_bits`` is the authoritative queue size, updated with exactly
    one subtraction per frame (service) plus one addition per arriving
    packet; the FIFO remainders track it to within float crumbs and exist
    only to attribute delay to arrival times.
    """

    def __init__(self):
        self.backlog_bits: float = 0.0
        self.packet_fifo: deque = deque()  # entries: [arrival_slot, remaining_bits]
        self.cumulative_delay_sum: float = 0.0
        self.delay_samples: int = 0
        self.total_arrived: float = 0.0
        self.total_served: float = 0.0

    def head_arrival_slot(self) -> Optional[int]:
        return self.packet_fifo[0][0] if self.packet_fifo else None

    def apply_frame(self, allocated_bits: float,
                    frame_arrivals: Iterable[Tuple[int, float]],
                    frame_start: int, frame_len: int) -> float:
        """Serve up to ``allocated_bits``, then append the frame's arrivals.

        Returns the actual number of bits served (min of backlog and
        allocation). Arrival slots must be nondecreasing and within
        [frame_start, frame_start + frame_len).
        """
        if allocated_bits < 0:
            raise ParameterError("allocated_bits must be >= 0")
        if frame_len < 1:
            raise ParameterError("frame_len must be >= 1")

        served = min(self.backlog_bits, allocated_bits)
        if served == self.backlog_bits:
            # Queue emptied: drop all packets so no float crumbs linger.
            self.backlog_bits = 0.0
            self.packet_fifo.clear()
        else:
            self.backlog_bits = self.backlog_bits - served
            self._drain_fifo(served)
        self.total_served += served

        arrived = 0.0
        for slot, bits in frame_arrivals:
            if not frame_start <= slot < frame_start + frame_len:
                raise ParameterError(
                    f"arrival slot {slot} outside frame [{frame_start}, "
                    f"{frame_start + frame_len})")
            self.packet_fifo.append([slot, bits])
            arrived += bits
        # One subtraction and one addition per frame: replaying the recorded
        # (served, arrived) pairs in frame order reproduces the backlog
        # bitwise, which is what the conservation checks assert.
        self.backlog_bits += arrived
        self.total_arrived += arrived
        return served

    def _drain_fifo(self, amount: float):
        need = amount
        while need > 0.0 and self.packet_fifo:
            head = self.packet_fifo[0]
            if head[1] <= need:
                need -= head[1]
                self.packet_fifo.popleft()
            else:
                head[1] -= need
                need = 0.0

    def sample_delay(self, now: int) -> Tuple[int, float]:
        """Record one head-of-line delay sample at slot ``now``.

        Empty queues contribute a zero sample, keeping the running mean
        defined at every slot. Returns (hol_delay, running_mean).
        """
        head = self.head_arrival_slot()
        hol = 0 if head is None else now - head
        self.cumulative_delay_sum += hol
        self.delay_samples += 1
        return hol, self.cumulative_delay_sum / self.delay_samples

    def record_delay_window(self, start: int, length: int) -> np.ndarray:
        """Batch form of sample_delay over slots [start, start + length).

        The queue is frozen between frame boundaries, so only the head's age
        advances; sums of integer-valued delays are exact, making this
        bit-identical to ``length`` repeated sample_delay calls.
        """
        head = self.head_arrival_slot()
        if head is None:
            hol = np.zeros(length)
        else:
            hol = np.arange(start - head, start - head + length, dtype=float)
        self.cumulative_delay_sum += float(hol.sum())
        self.delay_samples += length
        return hol

    @property
    def time_average_delay(self) -> float:
        if self.delay_samples == 0:
            return 0.0
        return self.cumulative_delay_sum / self.delay_samples

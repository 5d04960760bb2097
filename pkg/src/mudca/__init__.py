"""MU-MIMO downlink scheduling simulator with channel-acquisition overhead.

Frame-based simulation of a multi-antenna base station serving single-antenna
users whose channels must be re-estimated once per fading block: scheduling
more users costs more pilot slots. Implements the genie-aided
drift-maximizing rule with periodic and power-law variants, the
quantized-coherence heuristic family, simple baselines, queue/delay
bookkeeping, a virtual-arrival capacity estimator, and closed-form
pilot-overhead arithmetic.
"""

from .analytic import TimeShareMode, timeshare_sum_rate, training_dof
from .channel import (ChannelBlock, UserProfile, coherence_from_velocity,
                      sample_block)
from .engine import (AdmissionControl, FrameRecord, RunConfig, RunSummary,
                     SimResult, estimate_capacity, run_simulation, sweep)
from .errors import ConfigError, DegenerateChannelError, ParameterError
from .precoding import PrecodeResult, stc_rate, zero_forcing
from .queueing import ArrivalModel, UserQueue, generate_arrivals
from .schedulers import (PolicyConfig, Scheduler, SchedulingDecision,
                         gap_decide, qqs_decide)

__all__ = [
    "AdmissionControl", "ArrivalModel", "ChannelBlock", "ConfigError",
    "DegenerateChannelError", "FrameRecord", "ParameterError", "PolicyConfig",
    "PrecodeResult", "RunConfig", "RunSummary", "Scheduler",
    "SchedulingDecision", "SimResult", "TimeShareMode", "UserProfile",
    "UserQueue", "coherence_from_velocity", "estimate_capacity",
    "gap_decide", "generate_arrivals", "qqs_decide", "run_simulation",
    "sample_block", "stc_rate", "sweep", "timeshare_sum_rate", "training_dof",
    "zero_forcing",
]

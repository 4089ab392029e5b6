"""envres: effective-envelope admission control and reservation simulation.

Per-hop delay bounds from arrival-envelope algebra, an RSVP-style
reservation protocol anchored at a Mobile IPv6 home agent, and a
deterministic discrete-event simulator that validates the bounds
empirically.
"""

from .envelope import (
    UNBOUNDED,
    FlowSpec,
    PiecewiseEnvelope,
    StatEnvelope,
    effective_envelope,
    eval_envelope,
    leaky_bucket_envelope,
    sum_envelopes,
)
from .node import AdmissionMode, DelayBound, RouterState, busy_period, local_delay_bound

__version__ = "0.1.0"

__all__ = [
    "UNBOUNDED",
    "FlowSpec",
    "PiecewiseEnvelope",
    "StatEnvelope",
    "effective_envelope",
    "eval_envelope",
    "leaky_bucket_envelope",
    "sum_envelopes",
    "AdmissionMode",
    "DelayBound",
    "RouterState",
    "busy_period",
    "local_delay_bound",
    "__version__",
]

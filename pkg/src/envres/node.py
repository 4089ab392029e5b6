"""Per-router reservation state and the local maximum-delay-bound computation.

Each router models one work-conserving FIFO output link of rate C.  For a
candidate flow it aggregates every flow it would then be carrying into an
envelope G (deterministic sum or statistical effective envelope, depending
on the admission mode) and returns the horizontal-deviation bound

    d = max_{0 <= t <= busy_period} (G(t) - C*t) / C   (clipped at 0)
      + packet_size / C

The packet term accounts for the one-packet slack a packetized FIFO can
add over the fluid bound.  Routers also keep the tentative/admitted
bookkeeping the reservation protocol needs between the bound report and
the home agent's final decision.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .envelope import (
    FlowSpec,
    PiecewiseEnvelope,
    StatEnvelope,
    effective_envelope,
    sum_envelopes,
)
from .errors import DuplicateFlowError, InstabilityError, ParameterError, UnknownReservationError

Envelope = Union[PiecewiseEnvelope, StatEnvelope]

#: golden-section / bisection target in seconds
_TIME_TOL = 1e-9
_GRID_POINTS = 1024
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class AdmissionMode(enum.Enum):
    DETERMINISTIC = "deterministic"
    EFFECTIVE = "effective"


@dataclass(frozen=True)
class DelayBound:
    """Local worst-case delay at one router, with the search diagnostics."""

    value: float
    busy_period: float
    achieved_at: float

    def __post_init__(self):
        if self.value < 0 or not 0.0 <= self.achieved_at <= self.busy_period:
            raise ParameterError("inconsistent delay bound")


def busy_period(capacity: float, env: Envelope) -> float:
    """Smallest t > 0 with env(t) <= capacity * t (0 if never backlogged).

    Piecewise-linear envelopes are solved exactly at a segment crossing;
    statistical envelopes by scan plus bracketed bisection to 1e-9 s.
    Raises InstabilityError when the long-run rate reaches capacity.
    """
    if capacity <= 0:
        raise ParameterError("capacity must be > 0")
    if env.long_run_rate >= capacity:
        raise InstabilityError(
            f"long-run rate {env.long_run_rate} >= capacity {capacity}"
        )
    if isinstance(env, PiecewiseEnvelope):
        return _busy_period_pwl(capacity, env)
    return _busy_period_stat(capacity, env)


def _busy_period_pwl(capacity: float, env: PiecewiseEnvelope) -> float:
    bounds = (0.0,) + env.breakpoints + (math.inf,)
    for i, (off, rate) in enumerate(env.segments):
        start, end = bounds[i], bounds[i + 1]
        if rate < capacity:
            t_cross = off / (capacity - rate)
            if t_cross <= start:
                return start
            if t_cross <= end:
                return t_cross
        elif rate == capacity and off == 0.0:
            return start
        # rate >= capacity with a positive offset: above the service line here
    raise AssertionError("stable envelope must cross the service line")


def _busy_period_stat(capacity: float, env: StatEnvelope) -> float:
    hi = _busy_period_pwl(capacity, env.deterministic_part)
    if hi == 0.0:
        return 0.0

    def f(t: float) -> float:
        return env.value(t) - capacity * t

    pts = sorted({p for p in env.breakpoints if 0.0 < p < hi}
                 | set(np.linspace(0.0, hi, _GRID_POINTS + 1)))
    lo = 0.0
    for p in pts:
        if p == 0.0:
            continue
        if f(p) <= 0.0:
            hi = p
            break
        lo = p
    if lo == 0.0 and f(0.0) <= 0.0:
        # zero aggregate burst: backlogged only if G climbs above C*t later,
        # which the scan above would have found
        return 0.0
    while hi - lo > _TIME_TOL:
        mid = 0.5 * (lo + hi)
        if f(mid) <= 0.0:
            hi = mid
        else:
            lo = mid
    return hi


def _argmax_pwl(capacity: float, env: PiecewiseEnvelope, bp: float) -> tuple[float, float]:
    """Exact max of (G(t) - C*t)/C over [0, bp] for concave piecewise-linear G."""
    candidates = [0.0, bp] + [t for t in env.breakpoints if 0.0 < t < bp]
    best_t, best_v = 0.0, -math.inf
    for t in candidates:
        v = (env.value(t) - capacity * t) / capacity
        if v > best_v:
            best_t, best_v = t, v
    return best_t, max(best_v, 0.0)


def _argmax_stat(capacity: float, env: StatEnvelope, bp: float) -> tuple[float, float]:
    """Grid over [0, bp] plus member kinks, then golden-section refinement."""

    def f(t: float) -> float:
        return (env.value(t) - capacity * t) / capacity

    pts = sorted({t for t in env.breakpoints if 0.0 < t < bp}
                 | set(np.linspace(0.0, bp, _GRID_POINTS + 1)))
    vals = [f(t) for t in pts]
    i = max(range(len(pts)), key=vals.__getitem__)
    lo = pts[i - 1] if i > 0 else pts[i]
    hi = pts[i + 1] if i + 1 < len(pts) else pts[i]
    a, b = lo, hi
    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > _TIME_TOL:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    t_star = 0.5 * (a + b)
    best_t, best_v = max(
        [(pts[i], vals[i]), (t_star, f(t_star))], key=lambda tv: tv[1]
    )
    return best_t, max(best_v, 0.0)


@dataclass
class _Entry:
    nonce: int
    spec: FlowSpec
    expires_at: float = math.inf


@dataclass
class RouterState:
    """Reservation ledger and bound calculator for one router output link.

    Mutated only by its owning simulation actor; bound computations are
    pure reads.  ``tentative`` entries expire after ``tentative_timeout``
    seconds of simulated time unless a decision arrives first.
    """

    router_id: str
    capacity: float
    node_epsilon: float
    packet_size: float = 0.0
    mode: AdmissionMode = AdmissionMode.EFFECTIVE
    tentative_timeout: float = 2.0
    admitted: dict[str, _Entry] = field(default_factory=dict)
    tentative: dict[str, _Entry] = field(default_factory=dict)
    # decision history per (flow_id, nonce): absorbs at-least-once duplicates
    _decided: dict[tuple[str, int], str] = field(default_factory=dict)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ParameterError(f"router {self.router_id}: capacity must be > 0")
        if not 0.0 < self.node_epsilon < 1.0:
            raise ParameterError(f"router {self.router_id}: node_epsilon must lie in (0, 1)")
        if self.packet_size < 0:
            raise ParameterError(f"router {self.router_id}: packet_size must be >= 0")

    # -- bound computation ------------------------------------------------

    def _load_with(self, candidate: FlowSpec) -> list[FlowSpec]:
        """Carried flow set if the candidate is accepted.

        An admitted entry under the same flow id is superseded, not double
        counted: handover re-reservation through a shared router replaces
        the old copy.
        """
        specs = [e.spec for fid, e in self.admitted.items() if fid != candidate.flow_id]
        specs += [e.spec for fid, e in self.tentative.items() if fid != candidate.flow_id]
        specs.append(candidate)
        return specs

    def aggregate_envelope(self, specs: list[FlowSpec]) -> Envelope:
        if self.mode is AdmissionMode.DETERMINISTIC:
            return sum_envelopes([s.envelope() for s in specs])
        return effective_envelope(specs, self.node_epsilon)

    def local_delay_bound(self, candidate: FlowSpec) -> DelayBound:
        """Worst-case local delay if the candidate joined this router now."""
        specs = self._load_with(candidate)
        if sum(s.sustained_rate for s in specs) >= self.capacity:
            raise InstabilityError(
                f"router {self.router_id}: sustained load would reach capacity"
            )
        env = self.aggregate_envelope(specs)
        bp = busy_period(self.capacity, env)
        if bp == 0.0:
            t_star, queueing = 0.0, 0.0
        elif isinstance(env, PiecewiseEnvelope):
            t_star, queueing = _argmax_pwl(self.capacity, env, bp)
        else:
            t_star, queueing = _argmax_stat(self.capacity, env, bp)
        return DelayBound(
            value=queueing + self.packet_size / self.capacity,
            busy_period=bp,
            achieved_at=t_star,
        )

    # -- reservation state machine ----------------------------------------

    def reserve_tentative(self, candidate: FlowSpec, nonce: int, now: float = 0.0) -> DelayBound:
        """Compute the bound including the candidate and hold it tentatively.

        No state changes on error.  A flow id already tentative (any nonce)
        or an already-decided (flow_id, nonce) pair is a duplicate.
        """
        fid = candidate.flow_id
        if fid in self.tentative:
            raise DuplicateFlowError(f"router {self.router_id}: {fid} already tentative")
        if (fid, nonce) in self._decided:
            raise DuplicateFlowError(f"router {self.router_id}: replay of ({fid}, {nonce})")
        admitted_entry = self.admitted.get(fid)
        if admitted_entry is not None and admitted_entry.nonce == nonce:
            raise DuplicateFlowError(f"router {self.router_id}: ({fid}, {nonce}) already admitted")
        bound = self.local_delay_bound(candidate)
        self.tentative[fid] = _Entry(nonce, candidate, now + self.tentative_timeout)
        return bound

    def commit(self, flow_id: str, nonce: int) -> None:
        """Move a tentative reservation to admitted; idempotent on repeats.

        A commit arriving after the same reservation was already decided
        (committed, released, expired or superseded) is absorbed silently:
        decision delivery is at-least-once.
        """
        key = (flow_id, nonce)
        if key in self._decided:
            return
        entry = self.tentative.get(flow_id)
        if entry is not None and entry.nonce == nonce:
            del self.tentative[flow_id]
            old = self.admitted.get(flow_id)
            if old is not None and old.nonce != nonce:
                # handover re-reservation through a shared router: the new
                # copy replaces the old one, whose teardown becomes a no-op
                self._decided[(flow_id, old.nonce)] = "superseded"
            self.admitted[flow_id] = _Entry(nonce, entry.spec)
            self._decided[key] = "commit"
            return
        raise UnknownReservationError(
            f"router {self.router_id}: commit for unknown ({flow_id}, {nonce})"
        )

    def release(self, flow_id: str, nonce: int) -> None:
        """Remove a reservation wherever it resides; idempotent on repeats."""
        key = (flow_id, nonce)
        if self._decided.get(key) in ("release", "expired", "superseded"):
            return
        entry = self.tentative.get(flow_id)
        if entry is not None and entry.nonce == nonce:
            del self.tentative[flow_id]
            self._decided[key] = "release"
            return
        entry = self.admitted.get(flow_id)
        if entry is not None and entry.nonce == nonce:
            del self.admitted[flow_id]
            self._decided[key] = "release"
            return
        raise UnknownReservationError(
            f"router {self.router_id}: release for unknown ({flow_id}, {nonce})"
        )

    def expire_tentative(self, flow_id: str, nonce: int) -> bool:
        """Drop a tentative entry whose decision never arrived (timer path)."""
        entry = self.tentative.get(flow_id)
        if entry is not None and entry.nonce == nonce:
            del self.tentative[flow_id]
            self._decided[(flow_id, nonce)] = "expired"
            return True
        return False

    def reservation_state(self) -> tuple[dict[str, tuple[int, str]], dict[str, tuple[int, str]]]:
        """Snapshot of (admitted, tentative) as {flow_id: (nonce, flow_id)} for tests."""
        return (
            {fid: (e.nonce, e.spec.flow_id) for fid, e in self.admitted.items()},
            {fid: (e.nonce, e.spec.flow_id) for fid, e in self.tentative.items()},
        )

    @property
    def reserved_rate(self) -> float:
        return sum(e.spec.sustained_rate for e in self.admitted.values()) + sum(
            e.spec.sustained_rate for e in self.tentative.values()
        )


def local_delay_bound(router: RouterState, candidate: FlowSpec) -> DelayBound:
    """Module-level alias of RouterState.local_delay_bound."""
    return router.local_delay_bound(candidate)


def reserve_tentative(router: RouterState, candidate: FlowSpec, nonce: int, now: float = 0.0) -> DelayBound:
    return router.reserve_tentative(candidate, nonce, now)


def commit(router: RouterState, flow_id: str, nonce: int) -> None:
    router.commit(flow_id, nonce)


def release(router: RouterState, flow_id: str, nonce: int) -> None:
    router.release(flow_id, nonce)

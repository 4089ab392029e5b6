"""Arrival-envelope algebra for leaky-bucket regulated flows.

A flow regulated by a leaky bucket with peak rate P, burst sigma and
sustained rate rho can emit at most

    A*(t) = min(P * t, sigma + rho * t)

bits in any window of length t.  Aggregates of flows are bounded either
deterministically (pointwise sum of the per-flow envelopes) or
statistically: assuming independent, stationary flows, the aggregate
exceeds

    G_eps(t) = min( sum_i A*_i(t),
                    (sum_i rho_i) * t + sqrt( (ln(1/eps) / 2) * sum_i A*_i(t)^2 ) )

with probability at most eps at any fixed t (Hoeffding's inequality
applied to the bounded per-flow arrivals).  G_eps is what buys
multiplexing gain: it grows like sqrt(N) in the burst term instead of N.

Units are fixed throughout the package: time in seconds, data in bits,
rates in bits/second.  An unbounded peak rate is represented by
``math.inf``; the peak segment is simply never constructed, so evaluation
never multiplies infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError

UNBOUNDED = math.inf


@dataclass(frozen=True)
class FlowSpec:
    """Leaky-bucket traffic contract plus QoS targets for one flow.

    peak_rate may be ``UNBOUNDED`` (math.inf); epsilon is the admissible
    probability of exceeding a delay bound; app_delay_bound is the
    end-to-end delay the application requires, in seconds.
    """

    flow_id: str
    peak_rate: float
    sustained_rate: float
    burst: float
    epsilon: float
    app_delay_bound: float

    def __post_init__(self):
        if not self.sustained_rate > 0:
            raise ParameterError(f"flow {self.flow_id}: sustained_rate must be > 0")
        if self.burst < 0:
            raise ParameterError(f"flow {self.flow_id}: burst must be >= 0")
        if self.peak_rate < self.sustained_rate:
            raise ParameterError(
                f"flow {self.flow_id}: peak_rate {self.peak_rate} below "
                f"sustained_rate {self.sustained_rate}"
            )
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError(f"flow {self.flow_id}: epsilon must lie in (0, 1)")
        if not self.app_delay_bound > 0:
            raise ParameterError(f"flow {self.flow_id}: app_delay_bound must be > 0")

    @property
    def has_peak(self) -> bool:
        return math.isfinite(self.peak_rate)

    def envelope(self) -> "PiecewiseEnvelope":
        return leaky_bucket_envelope(self.peak_rate, self.burst, self.sustained_rate)


def _canonicalize(segments: Iterable[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    """Reduce (offset, rate) affine pieces to the canonical min-envelope form.

    Canonical form: rates strictly decreasing, offsets strictly increasing,
    and every retained segment attains the minimum on a nondegenerate
    interval of t >= 0.  Comparisons are exact (inputs are user constants).
    """
    segs = sorted(set(segments), key=lambda s: (s[1], s[0]))  # by rate asc, offset asc
    if not segs:
        raise ParameterError("envelope needs at least one segment")
    for off, rate in segs:
        if off < 0 or rate < 0 or not (math.isfinite(off) and math.isfinite(rate)):
            raise ParameterError(f"segment ({off}, {rate}) must be finite and nonnegative")

    # Drop pointwise-dominated segments: scanning by ascending rate, a
    # segment survives only if its offset is strictly below every offset
    # already kept (those have lower-or-equal rate).
    kept: list[tuple[float, float]] = []
    min_offset = math.inf
    for off, rate in segs:
        if off < min_offset:
            kept.append((off, rate))
            min_offset = off
    kept.reverse()  # now rate strictly decreasing, offset strictly increasing

    # Drop segments whose active interval is empty: with neighbours a, c the
    # middle segment b only matters if cross(a,b) < cross(b,c), equivalently
    # cross(a,c) > cross(a,b).
    hull: list[tuple[float, float]] = []
    for seg in kept:
        while len(hull) >= 2:
            (oa, ra), (ob, rb) = hull[-2], hull[-1]
            oc, rc = seg
            # cross(a,c) <= cross(a,b)  <=>  (oc-oa)*(ra-rb) <= (ob-oa)*(ra-rc)
            if (oc - oa) * (ra - rb) <= (ob - oa) * (ra - rc):
                hull.pop()
            else:
                break
        hull.append(seg)
    return tuple(hull)


@dataclass(frozen=True)
class PiecewiseEnvelope:
    """Concave nondecreasing envelope: value(t) = min_i (offset_i + rate_i * t).

    Segments are stored in canonical form (strictly decreasing rate,
    strictly increasing offset); construction canonicalizes.
    """

    segments: tuple[tuple[float, float], ...]

    def __init__(self, segments: Iterable[tuple[float, float]]):
        object.__setattr__(self, "segments", _canonicalize(segments))

    def value(self, t: float) -> float:
        if t < 0:
            raise ParameterError(f"envelope evaluated at negative time {t}")
        return min(off + rate * t for off, rate in self.segments)

    def values(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized evaluation on an array of times (all >= 0)."""
        ts = np.asarray(ts, dtype=float)
        if ts.size and ts.min() < 0:
            raise ParameterError("envelope evaluated at negative time")
        out = np.full(ts.shape, np.inf)
        for off, rate in self.segments:
            np.minimum(out, off + rate * ts, out=out)
        return out

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Times where the active segment changes (exact crossing points)."""
        pts = []
        for (o1, r1), (o2, r2) in zip(self.segments, self.segments[1:]):
            pts.append((o2 - o1) / (r1 - r2))
        return tuple(pts)

    @property
    def long_run_rate(self) -> float:
        """Slope for large t: the last (lowest) canonical rate."""
        return self.segments[-1][1]

    @property
    def burst(self) -> float:
        """Value at t = 0: the minimum offset."""
        return self.segments[0][0]


def leaky_bucket_envelope(peak_rate: float, burst: float, sustained_rate: float) -> PiecewiseEnvelope:
    """Envelope A*(t) = min(P*t, sigma + rho*t) of one regulated flow.

    With P unbounded (math.inf) or P == rho the result degenerates to a
    single segment.  Raises ParameterError on invalid parameters.
    """
    if not sustained_rate > 0:
        raise ParameterError("sustained_rate must be > 0")
    if burst < 0:
        raise ParameterError("burst must be >= 0")
    if peak_rate < sustained_rate:
        raise ParameterError("peak_rate must be >= sustained_rate (or math.inf)")
    segs = [(burst, sustained_rate)]
    if math.isfinite(peak_rate):
        segs.append((0.0, peak_rate))
    return PiecewiseEnvelope(segs)


def eval_envelope(env: PiecewiseEnvelope, t: float) -> float:
    """Value of the envelope at time t >= 0, in bits."""
    return env.value(t)


def sum_envelopes(envs: Sequence[PiecewiseEnvelope]) -> PiecewiseEnvelope:
    """Pointwise sum of envelopes, re-canonicalized.

    The sum of concave piecewise-linear functions is concave piecewise
    linear with breakpoints the union of the members' breakpoints; on each
    interval the segment is the sum of the members' active segments.
    """
    if not envs:
        raise ParameterError("sum_envelopes needs a non-empty list")
    cuts = sorted({bp for env in envs for bp in env.breakpoints})
    # Representative time inside each interval picks every member's active segment.
    bounds = [0.0] + cuts
    segs = []
    for i, lo in enumerate(bounds):
        hi = bounds[i + 1] if i + 1 < len(bounds) else lo + 1.0
        mid = 0.5 * (lo + hi) if hi > lo else lo
        off = rate = 0.0
        for env in envs:
            o, r = _active_segment(env, mid)
            off += o
            rate += r
        segs.append((off, rate))
    return PiecewiseEnvelope(segs)


def _active_segment(env: PiecewiseEnvelope, t: float) -> tuple[float, float]:
    best = env.segments[0]
    best_v = best[0] + best[1] * t
    for off, rate in env.segments[1:]:
        v = off + rate * t
        if v < best_v:
            best, best_v = (off, rate), v
    return best


@dataclass(frozen=True)
class StatEnvelope:
    """Statistical aggregate envelope G_eps(t) for a multiplexed flow set.

    Evaluation takes the minimum of the deterministic sum and the
    Hoeffding term; it is therefore never above the deterministic part
    and never negative.  Member envelopes are retained so that
    sum_i A*_i(t)^2 can be evaluated at any t.
    """

    deterministic_part: PiecewiseEnvelope
    mean_rate_sum: float
    members: tuple[PiecewiseEnvelope, ...]
    epsilon: float
    _half_log: float = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ParameterError("epsilon must lie in (0, 1)")
        object.__setattr__(self, "_half_log", 0.5 * math.log(1.0 / self.epsilon))

    def value(self, t: float) -> float:
        det = self.deterministic_part.value(t)
        sq = sum(env.value(t) ** 2 for env in self.members)
        return min(det, self.mean_rate_sum * t + math.sqrt(self._half_log * sq))

    def values(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        det = self.deterministic_part.values(ts)
        sq = np.zeros(ts.shape)
        for env in self.members:
            sq += env.values(ts) ** 2
        return np.minimum(det, self.mean_rate_sum * ts + np.sqrt(self._half_log * sq))

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Union of member kinks: the only points where G can be non-smooth."""
        return tuple(sorted({bp for env in self.members for bp in env.breakpoints}))

    @property
    def long_run_rate(self) -> float:
        """Stability-relevant slope for large t (the deterministic branch wins)."""
        return self.mean_rate_sum


def effective_envelope(specs: Sequence[FlowSpec], epsilon: float) -> StatEnvelope:
    """Statistical envelope of a non-empty flow set at violation budget epsilon."""
    if not specs:
        raise ParameterError("effective_envelope needs a non-empty flow list")
    if not 0.0 < epsilon < 1.0:
        raise ParameterError("epsilon must lie in (0, 1)")
    members = tuple(s.envelope() for s in specs)
    return StatEnvelope(
        deterministic_part=sum_envelopes(members),
        mean_rate_sum=sum(s.sustained_rate for s in specs),
        members=members,
        epsilon=epsilon,
    )

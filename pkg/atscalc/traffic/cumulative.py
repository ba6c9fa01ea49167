from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import Curve, CurveError, Segment
from atscalc.minplus.rational import INF, Number
from atscalc.traffic.packet_sequence import PacketSequence, subsequence


@dataclass(frozen=True)
class CumulativeFunction:
    """Left-continuous, non-decreasing R(t) with R(0) = 0, in data units."""
    curve: Curve

    def __post_init__(self):
        c = self.curve
        if c.is_periodic or not c.is_finite():
            raise CurveError("Cumulative functions must be finite and non-periodic")
        if not c.in_f0() or not c.is_wide_sense_increasing():
            raise CurveError("Cumulative functions must start at 0 and be non-decreasing")
        for prev, seg in zip(c.segments, c.segments[1:]):
            if prev.open_value(seg.start) != seg.value:
                raise CurveError(f"Cumulative function is not left-continuous at {seg.start}")

    def __call__(self, t) -> Number:
        return self.curve.value(t)

    def right_limit(self, t) -> Number:
        return self.curve.right_limit(t)

    def event_times(self) -> list:
        """Instants where R jumps or changes slope."""
        return [s.start for s in self.curve.segments if s.start > 0 or s.jump > 0]

    def total(self) -> Number:
        """Limit of R at +∞ (finite only for a final slope of 0)."""
        last = self.curve.segments[-1]
        if last.slope != 0:
            return INF
        return last.value + last.jump


def cumulative_of(seq: PacketSequence, flow: Optional[str] = None) -> CumulativeFunction:
    """R(t) = Σ L_n·1{M_n < t}, optionally for a single flow."""
    seq = subsequence(seq, flow)
    zero = Fraction(0)
    per_time = {}
    for p in seq:
        per_time[p.time] = per_time.get(p.time, zero) + p.size

    segments = []
    if zero not in per_time:
        segments.append(Segment(zero, zero, zero))
    running = zero
    for t in sorted(per_time):
        segments.append(Segment(t, running, zero, per_time[t]))
        running += per_time[t]
    return CumulativeFunction(Curve(tuple(segments)))

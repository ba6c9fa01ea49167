"""Piecewise-affine curves with jumps, an ultimately-affine tail and an
optional periodic extension (used only by the staircase).

A curve is an ordered tuple of segments. Segment ``k`` starts at ``t_k``;
``value`` is f(t_k), ``jump`` is f(t_k+) - f(t_k) and on the open interval
(t_k, t_{k+1}) the curve is ``value + jump + slope * (t - t_k)``. The last
segment extends to +∞ with its slope (the tail slope). A tail slope equal
to ``INF`` encodes f = +∞ after the last start. Since every segment carries
its own start value, a curve may also jump at t_k from the left
(f(t_k) differs from the limit of the previous segment).

Operator results may be non-monotone or leave 𝔉₀ (the FIFO residual, the
pseudo-inverse); the public constructors below always produce wide-sense
increasing curves with f(0) = 0.
"""
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from atscalc.minplus.rational import INF, Number, from_json, is_inf, q, to_json


class CurveError(ValueError):
    """Raised for malformed curves or unsupported operator inputs."""
    pass


class PeriodicHorizonError(CurveError):
    """Raised when a periodic curve reaches an operator that needs a finite horizon."""
    pass


@dataclass(frozen=True)
class Segment:
    start: Fraction
    value: Number
    slope: Number
    jump: Fraction = Fraction(0)

    def open_value(self, t) -> Number:
        """Value on the open part of the segment (t > start)."""
        if is_inf(self.slope) or is_inf(self.value):
            return INF
        return self.value + self.jump + self.slope * (t - self.start)

    def to_json(self) -> dict:
        return {
            "t": to_json(self.start),
            "v": to_json(self.value),
            "slope": to_json(self.slope),
            "jump": to_json(self.jump),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Segment":
        return cls(
            start=from_json(doc["t"]),
            value=from_json(doc["v"]),
            slope=from_json(doc["slope"]),
            jump=from_json(doc.get("jump", {"n": 0, "d": 1})),
        )


@dataclass(frozen=True)
class Periodicity:
    """f(t + length) = f(t) + increment for all t ≥ start."""
    start: Fraction
    length: Fraction
    increment: Fraction

    def to_json(self) -> dict:
        return {
            "start": to_json(self.start),
            "length": to_json(self.length),
            "increment": to_json(self.increment),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "Periodicity":
        return cls(from_json(doc["start"]), from_json(doc["length"]), from_json(doc["increment"]))


@dataclass(frozen=True)
class Curve:
    segments: tuple
    periodic: Optional[Periodicity] = None
    _starts: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        segments = tuple(self.segments)
        object.__setattr__(self, "segments", segments)
        if not segments:
            raise CurveError("A curve needs at least one segment")
        if segments[0].start != 0:
            raise CurveError(f"First segment must start at 0, got {segments[0].start}")

        starts = tuple(seg.start for seg in segments)
        for prev, nxt in zip(starts, starts[1:]):
            if nxt <= prev:
                raise CurveError(f"Segment starts must be strictly increasing ({prev} then {nxt})")
        for seg in segments[:-1]:
            if is_inf(seg.slope) or is_inf(seg.value) or is_inf(seg.jump):
                raise CurveError("Only the last segment may carry an infinite value or slope")
        if is_inf(segments[-1].jump):
            raise CurveError("Jumps must be finite")

        if self.periodic is not None:
            p = self.periodic
            if p.length <= 0 or p.start < 0:
                raise CurveError(f"Bad periodicity {p}")
            if p.start not in starts:
                raise CurveError("The periodic window must begin at a segment start")
            if starts[-1] >= p.start + p.length:
                raise CurveError("Base segments must end before the first repeated period")
            if any(is_inf(s.slope) or is_inf(s.value) for s in segments):
                raise CurveError("Periodic curves must be finite")
        object.__setattr__(self, "_starts", starts)

    # ---------------------------------------------------------
    # Evaluation
    # ---------------------------------------------------------
    def __call__(self, t) -> Number:
        return self.value(t)

    @property
    def starts(self) -> tuple:
        return self._starts

    @property
    def tail_slope(self) -> Number:
        return self.segments[-1].slope

    @property
    def is_periodic(self) -> bool:
        return self.periodic is not None

    def _base_value(self, t) -> Number:
        idx = bisect_right(self._starts, t) - 1
        seg = self.segments[idx]
        if t == seg.start:
            return seg.value
        return seg.open_value(t)

    def _base_left_limit(self, t) -> Number:
        idx = bisect_left(self._starts, t) - 1
        return self.segments[idx].open_value(t)

    def _base_right_limit(self, t) -> Number:
        idx = bisect_right(self._starts, t) - 1
        return self.segments[idx].open_value(t)

    def _fold(self, t, left: bool):
        """Map t into the base window; returns (t', number of periods)."""
        p = self.periodic
        if p is None or t < p.start + p.length or (left and t == p.start + p.length):
            return t, 0
        offset = (t - p.start) / p.length
        n = offset.numerator // offset.denominator
        if left and offset.denominator == 1:
            n -= 1
        return t - n * p.length, n

    def value(self, t) -> Number:
        t = q(t)
        if t < 0:
            raise CurveError(f"Curves are defined on t >= 0, got {t}")
        t0, n = self._fold(t, left=False)
        v = self._base_value(t0)
        return v if n == 0 else v + n * self.periodic.increment

    def left_limit(self, t) -> Number:
        t = q(t)
        if t <= 0:
            raise CurveError("Left limit requires t > 0")
        t0, n = self._fold(t, left=True)
        v = self._base_left_limit(t0)
        return v if n == 0 else v + n * self.periodic.increment

    def right_limit(self, t) -> Number:
        t = q(t)
        t0, n = self._fold(t, left=False)
        v = self._base_right_limit(t0)
        return v if n == 0 else v + n * self.periodic.increment

    def slope_after(self, t) -> Number:
        """Slope of the piece immediately to the right of t."""
        t0, _ = self._fold(q(t), left=False)
        idx = bisect_right(self._starts, t0) - 1
        return self.segments[idx].slope

    def next_break_after(self, t) -> Optional[Fraction]:
        """First breakpoint strictly after t, None when t lies in the tail."""
        t = q(t)
        t0, n = self._fold(t, left=False)
        idx = bisect_right(self._starts, t0)
        if idx < len(self._starts):
            nxt = self._starts[idx]
        elif self.periodic is not None:
            nxt = self.periodic.start + self.periodic.length
        else:
            return None
        return nxt if n == 0 else nxt + n * self.periodic.length

    # ---------------------------------------------------------
    # Structure
    # ---------------------------------------------------------
    def breakpoints(self, horizon=None) -> list:
        if self.periodic is None:
            pts = list(self._starts)
        else:
            if horizon is None:
                raise PeriodicHorizonError("Breakpoints of a periodic curve need a horizon")
            pts = list(self.unroll(horizon)._starts)
        if horizon is not None:
            pts = [t for t in pts if t <= horizon]
        return pts

    def unroll(self, horizon) -> "Curve":
        """
        Expand the periodic extension into explicit segments.

        The result is exact on [0, horizon]; its tail continues from the
        first repeated period past the horizon with the long-term rate.
        """
        if self.periodic is None:
            return self
        horizon = q(horizon)
        p = self.periodic
        base = [seg for seg in self.segments if seg.start >= p.start]
        prefix = [seg for seg in self.segments if seg.start < p.start]
        out = list(prefix)
        n = 0
        while True:
            shift, lift = n * p.length, n * p.increment
            for seg in base:
                out.append(Segment(seg.start + shift, seg.value + lift, seg.slope, seg.jump))
            if p.start + shift > horizon:
                break
            n += 1
        last = out[-1]
        out[-1] = Segment(last.start, last.value, p.increment / p.length, last.jump)
        return Curve(tuple(_dedupe_starts(out))).normalized()

    def truncate(self, horizon) -> "Curve":
        """Drop segments starting after horizon; exact on [0, horizon]."""
        horizon = q(horizon)
        curve = self.unroll(horizon) if self.periodic else self
        kept = tuple(seg for seg in curve.segments if seg.start <= horizon)
        return Curve(kept)

    def normalized(self) -> "Curve":
        """Merge segments that continue their predecessor without a break."""
        merged = [self.segments[0]]
        for seg in self.segments[1:]:
            prev = merged[-1]
            if (
                not is_inf(prev.slope)
                and not is_inf(seg.slope)
                and not is_inf(seg.value)
                and seg.jump == 0
                and seg.slope == prev.slope
                and seg.value == prev.open_value(seg.start)
            ):
                continue
            merged.append(seg)
        return Curve(tuple(merged), self.periodic)

    # ---------------------------------------------------------
    # Predicates
    # ---------------------------------------------------------
    def is_finite(self) -> bool:
        last = self.segments[-1]
        return not (is_inf(last.slope) or is_inf(last.value))

    def in_f0(self) -> bool:
        return self.segments[0].value == 0

    def is_wide_sense_increasing(self) -> bool:
        for idx, seg in enumerate(self.segments):
            if seg.jump < 0:
                return False
            if not is_inf(seg.slope) and seg.slope < 0:
                return False
            if idx > 0:
                prev = self.segments[idx - 1]
                if not is_inf(seg.value) and prev.open_value(seg.start) > seg.value:
                    return False
        if self.periodic is not None:
            p = self.periodic
            if p.increment < 0:
                return False
            end = p.start + p.length
            if self._base_left_limit(end) > self._base_value(p.start) + p.increment:
                return False
        return True

    # ---------------------------------------------------------
    # Serialization
    # ---------------------------------------------------------
    def to_json(self) -> dict:
        doc = {
            "segments": [seg.to_json() for seg in self.segments],
            "tail_slope": to_json(self.tail_slope),
        }
        if self.periodic is not None:
            doc["period"] = self.periodic.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "Curve":
        try:
            segments = [Segment.from_json(s) for s in doc["segments"]]
        except (KeyError, TypeError) as e:
            raise CurveError(f"Malformed curve document: {e}") from e
        tail = from_json(doc["tail_slope"]) if "tail_slope" in doc else segments[-1].slope
        if tail != segments[-1].slope:
            raise CurveError(f"tail_slope {tail} disagrees with last segment slope {segments[-1].slope}")
        periodic = Periodicity.from_json(doc["period"]) if "period" in doc else None
        return cls(tuple(segments), periodic)


def _dedupe_starts(segments: Sequence[Segment]) -> list:
    out = []
    for seg in segments:
        if out and out[-1].start == seg.start:
            out[-1] = seg
        else:
            out.append(seg)
    return out


def make_curve(segments, periodic: Optional[Periodicity] = None) -> Curve:
    """Build a curve from (start, value, slope, jump) tuples."""
    return Curve(tuple(Segment(q(t), _qv(v), _qv(s), q(j)) for t, v, s, j in segments), periodic)


def _qv(value):
    return value if is_inf(value) else q(value)


def _require_non_negative(**params):
    for name, val in params.items():
        if val < 0:
            raise CurveError(f"{name} must be >= 0, got {val}")


# ---------------------------------------------------------
# Constructors
# ---------------------------------------------------------
def zero_curve() -> Curve:
    return Curve((Segment(Fraction(0), Fraction(0), Fraction(0)),))


def leaky_bucket(r, b) -> Curve:
    """γ_{r,b}: 0 at t = 0 (pre-jump value), r*t + b for t > 0."""
    r, b = q(r), q(b)
    _require_non_negative(r=r, b=b)
    return Curve((Segment(Fraction(0), Fraction(0), r, b),))


def rate_latency(R, T) -> Curve:
    """β_{R,T}: t ↦ R * max(t - T, 0)."""
    R, T = q(R), q(T)
    _require_non_negative(R=R, T=T)
    if T == 0:
        return Curve((Segment(Fraction(0), Fraction(0), R),))
    return Curve((Segment(Fraction(0), Fraction(0), Fraction(0)), Segment(T, Fraction(0), R)))


def bounded_delay(D) -> Curve:
    """δ_D: 0 on [0, D], +∞ after."""
    D = q(D)
    _require_non_negative(D=D)
    if D == 0:
        return Curve((Segment(Fraction(0), Fraction(0), INF),))
    return Curve((Segment(Fraction(0), Fraction(0), Fraction(0)), Segment(D, Fraction(0), INF)))


def staircase(L, I) -> Curve:
    """β_sc: t ↦ floor(t / I) * L, taking the post-jump value at multiples of I."""
    L, I = q(L), q(I)
    if L <= 0 or I <= 0:
        raise CurveError(f"staircase needs L > 0 and I > 0, got L={L}, I={I}")
    return Curve((Segment(Fraction(0), Fraction(0), Fraction(0)),), Periodicity(Fraction(0), I, L))


def constant_after(L, I, closed: bool = True) -> Curve:
    """
    L once t reaches I, 0 before.

    With ``closed`` the value at I is L (L·1{t ≥ I}, i.e. min(L, β_sc));
    otherwise it is 0 (L·1{t > I}, i.e. L ∧ δ_I).
    """
    L, I = q(L), q(I)
    if L <= 0 or I <= 0:
        raise CurveError(f"constant_after needs L > 0 and I > 0, got L={L}, I={I}")
    zero = Fraction(0)
    if closed:
        tail = Segment(I, L, zero)
    else:
        tail = Segment(I, zero, zero, L)
    return Curve((Segment(zero, zero, zero), tail))


def agrees_on(f: Curve, g: Curve, horizon) -> bool:
    """Exact equality of two curves on [0, horizon] (values and one-sided limits)."""
    horizon = q(horizon)
    f, g = f.truncate(horizon), g.truncate(horizon)
    pts = sorted({t for t in f.starts + g.starts if t <= horizon} | {horizon})
    for i, t in enumerate(pts):
        if f.value(t) != g.value(t):
            return False
        if t > 0 and f.left_limit(t) != g.left_limit(t):
            return False
        if t < horizon and f.right_limit(t) != g.right_limit(t):
            return False
        if i + 1 < len(pts):
            mid = (t + pts[i + 1]) / 2
            if f.value(mid) != g.value(mid):
                return False
    return True

"""Piece decomposition and lower/upper envelopes.

Every finite curve is split into point pieces (the value at a breakpoint)
and open pieces (an affine function on an open interval, described by its
right limit at the left end). Convolutions are envelopes of pairwise piece
convolutions; pointwise min/max are envelopes of the union of pieces. The
envelope is computed per elementary interval between piece endpoints, with
explicit crossing detection, so the result is exact.
"""
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Optional

from atscalc.minplus.curve import Curve, CurveError, Segment
from atscalc.minplus.rational import INF, Number, is_inf

MIN = "min"
MAX = "max"


@dataclass(frozen=True)
class PointPiece:
    t: Fraction
    v: Number


@dataclass(frozen=True)
class OpenPiece:
    a: Fraction
    b: Optional[Fraction]  # None is +∞
    v: Number  # right limit at a
    slope: Fraction

    def at(self, x) -> Number:
        if is_inf(self.v):
            return INF
        return self.v + self.slope * (x - self.a)


def pieces_of(curve: Curve, upto: Optional[Fraction] = None) -> List:
    """Split a non-periodic curve into pieces, optionally restricted to [0, upto]."""
    if curve.is_periodic:
        raise CurveError("Unroll periodic curves before splitting them into pieces")
    out = []
    segs = curve.segments
    for idx, seg in enumerate(segs):
        if upto is not None and seg.start > upto:
            break
        end = segs[idx + 1].start if idx + 1 < len(segs) else None
        if upto is not None and (end is None or end > upto):
            end = upto
        out.append(PointPiece(seg.start, seg.value))
        if end is not None and end == seg.start:
            continue
        if is_inf(seg.slope) or is_inf(seg.value):
            out.append(OpenPiece(seg.start, end, INF, Fraction(0)))
        else:
            out.append(OpenPiece(seg.start, end, seg.value + seg.jump, seg.slope))
    if upto is not None:
        out.append(PointPiece(upto, curve.value(upto)))
    return out


def reflect(pieces: Iterable) -> List:
    """x ↦ -g(-x) for pieces of g on a bounded domain."""
    out = []
    for p in pieces:
        if isinstance(p, PointPiece):
            if is_inf(p.v):
                raise CurveError("Cannot reflect an infinite value")
            out.append(PointPiece(-p.t, -p.v))
        else:
            if p.b is None or is_inf(p.v):
                raise CurveError("Reflection needs finite pieces on a bounded domain")
            out.append(OpenPiece(-p.b, -p.a, -(p.v + p.slope * (p.b - p.a)), p.slope))
    return out


def convolve_pieces(p, r, mode: str) -> List:
    """Min-plus (mode=min) or max-plus (mode=max) convolution of two pieces."""
    p_inf = is_inf(p.v)
    r_inf = is_inf(r.v)
    if p_inf or r_inf:
        if mode == MIN:
            return []
        return [_inf_sum(p, r)]

    if isinstance(p, PointPiece) and isinstance(r, PointPiece):
        return [PointPiece(p.t + r.t, p.v + r.v)]
    if isinstance(p, PointPiece):
        p, r = r, p
    if isinstance(r, PointPiece):
        b = None if p.b is None else p.b + r.t
        return [OpenPiece(p.a + r.t, b, p.v + r.v, p.slope)]

    # Both open: spend the argument on the preferred slope first
    first, second = p, r
    if (mode == MIN and r.slope < p.slope) or (mode == MAX and r.slope > p.slope):
        first, second = r, p
    lo = first.a + second.a
    if first.b is None:
        return [OpenPiece(lo, None, first.v + second.v, first.slope)]
    mid = first.b + second.a
    v_mid = first.v + first.slope * (first.b - first.a) + second.v
    hi = None if second.b is None else first.b + second.b
    return [
        OpenPiece(lo, mid, first.v + second.v, first.slope),
        PointPiece(mid, v_mid),
        OpenPiece(mid, hi, v_mid, second.slope),
    ]


def _inf_sum(p, r):
    if isinstance(p, PointPiece) and isinstance(r, PointPiece):
        return PointPiece(p.t + r.t, INF)
    lo_p = p.t if isinstance(p, PointPiece) else p.a
    lo_r = r.t if isinstance(r, PointPiece) else r.a
    hi_p = p.t if isinstance(p, PointPiece) else p.b
    hi_r = r.t if isinstance(r, PointPiece) else r.b
    hi = None if hi_p is None or hi_r is None else hi_p + hi_r
    return OpenPiece(lo_p + lo_r, hi, INF, Fraction(0))


def _line_envelope(lines, width, mode):
    """
    Envelope of lines (v0, slope) on the interval (0, width), width None for +∞.

    Returns [(offset, v_at_offset, slope), ...] with offset 0 first; the value
    is continuous at every later offset.
    """
    lines = set(lines)
    if mode == MIN:
        cur = min(lines)
    else:
        cur = max(lines)
    x = Fraction(0)
    out = [(x, cur[0], cur[1])]
    while True:
        cur_v, cur_s = cur
        best = None
        for v0, s in lines:
            if (mode == MIN and s >= cur_s) or (mode == MAX and s <= cur_s):
                continue
            # both lines written as v0 + s * offset
            cross = (v0 - cur_v) / (cur_s - s)
            if cross <= x or (width is not None and cross >= width):
                continue
            key = (cross, s) if mode == MIN else (cross, -s)
            if best is None or key < best[0]:
                best = (key, (v0, s))
        if best is None:
            return out
        x = best[0][0]
        cur = best[1]
        out.append((x, cur[0] + cur[1] * x, cur[1]))


def envelope(pieces: Iterable, mode: str) -> Curve:
    """Lower (min) or upper (max) envelope of pieces, clipped to [0, +∞)."""
    lo = Fraction(0)
    points = {}
    opens = []
    for piece in pieces:
        if isinstance(piece, PointPiece):
            if piece.t < lo:
                continue
            points.setdefault(piece.t, []).append(piece.v)
            continue
        if piece.b is not None and piece.b <= lo:
            continue
        if piece.a < lo:
            points.setdefault(lo, []).append(piece.at(lo))
            piece = OpenPiece(lo, piece.b, piece.at(lo), piece.slope)
        opens.append(piece)

    ends = set(points)
    ends.add(lo)
    for o in opens:
        ends.add(o.a)
        if o.b is not None:
            ends.add(o.b)
    ends = sorted(ends)
    n = len(ends)

    values = [list(points.get(e, ())) for e in ends]
    lines = [[] for _ in range(n)]
    for o in opens:
        first = bisect_left(ends, o.a)
        stop_point = n if o.b is None else bisect_left(ends, o.b)
        for i in range(first + 1, stop_point):
            values[i].append(o.at(ends[i]))
        for i in range(first, stop_point):
            lines[i].append(o)

    pick = min if mode == MIN else max
    segments: List[Segment] = []
    for i, e in enumerate(ends):
        cands = values[i]
        if cands:
            val = pick(cands)
        elif mode == MIN:
            val = INF
        else:
            raise CurveError(f"Upper envelope undefined at {e}")

        width = ends[i + 1] - e if i + 1 < n else None
        if any(is_inf(o.v) for o in lines[i]):
            interval_inf = mode == MAX
        else:
            interval_inf = False
        finite = [(o.at(e), o.slope) for o in lines[i] if not is_inf(o.v)]
        if interval_inf or not finite:
            if mode == MAX and not interval_inf:
                raise CurveError(f"Upper envelope undefined after {e}")
            segments.append(Segment(e, val, INF, Fraction(0)))
            for j in range(i + 1, n):
                has_inf = any(is_inf(o.v) for o in lines[j])
                has_finite = any(not is_inf(o.v) for o in lines[j])
                if (mode == MIN and has_finite) or (mode == MAX and not has_inf):
                    raise CurveError("Finite values after an infinite region are not representable")
            break

        hull = _line_envelope(finite, width, mode)
        _, first_v, first_s = hull[0]
        if is_inf(val):
            raise CurveError(f"Infinite value at {e} followed by finite values")
        segments.append(Segment(e, val, first_s, first_v - val))
        for off, v, s in hull[1:]:
            segments.append(Segment(e + off, v, s, Fraction(0)))
    return Curve(tuple(segments)).normalized()

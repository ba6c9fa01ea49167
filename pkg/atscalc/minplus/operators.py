"""Min-plus / max-plus operators on exact piecewise-affine curves.

Binary operators accept periodic curves (the staircase) only together with a
``horizon``; the periodic operand is unrolled and the result is exact on
[0, horizon].
"""
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import (
    Curve,
    CurveError,
    PeriodicHorizonError,
    Periodicity,
    Segment,
    agrees_on,
    zero_curve,
)
from atscalc.minplus.envelope import MAX, MIN, convolve_pieces, envelope, pieces_of, reflect
from atscalc.minplus.rational import INF, Number, floor_q, is_inf, q
from atscalc.utils.logger import get_logger

logger = get_logger("minplus")

MAX_CLOSURE_ITERATIONS = 64


class ClosureNotConverged(CurveError):
    """Raised when the super-additive closure misses its fixpoint within the cap."""

    def __init__(self, partial: Curve, iterations: int):
        super().__init__(f"Closure did not converge within {iterations} iterations")
        self.partial = partial
        self.iterations = iterations


def _finite(f: Curve, horizon) -> Curve:
    if not f.is_periodic:
        return f
    if horizon is None:
        raise PeriodicHorizonError("This operator needs a horizon for periodic curves")
    return f.unroll(q(horizon))


# ---------------------------------------------------------
# Convolutions
# ---------------------------------------------------------
def _convolve(f: Curve, g: Curve, mode: str) -> Curve:
    pf, pg = pieces_of(f), pieces_of(g)
    pieces = [piece for a in pf for b in pg for piece in convolve_pieces(a, b, mode)]
    return envelope(pieces, mode)


def min_plus_conv(f: Curve, g: Curve, horizon=None) -> Curve:
    """(f ⊗ g)(t) = inf_{0 ≤ s ≤ t} f(s) + g(t - s)."""
    return _convolve(_finite(f, horizon), _finite(g, horizon), MIN)


def max_plus_conv(f: Curve, g: Curve, horizon=None) -> Curve:
    """(f ⊗̄ g)(t) = sup_{0 ≤ s ≤ t} f(s) + g(t - s)."""
    return _convolve(_finite(f, horizon), _finite(g, horizon), MAX)


def max_plus_deconv(f: Curve, g: Optional[Curve] = None, horizon=None) -> Curve:
    """
    (f ⊘̄ g)(t) = inf_{0 ≤ u ≤ horizon} f(t + u) - g(u).

    With g the zero function this is the lower non-decreasing closure
    t ↦ inf_{s ≥ t} f(s), exact as long as the horizon passes the last
    breakpoint of f and the tail of f is non-decreasing.

    Raises:
        CurveError: If the horizon does not pass the last breakpoint of f,
            or f ends with a decreasing tail.
    """
    if horizon is None:
        raise CurveError("max_plus_deconv needs a horizon")
    horizon = q(horizon)
    f = _finite(f, horizon)
    g = zero_curve() if g is None else _finite(g, horizon)
    if horizon <= f.starts[-1]:
        raise CurveError(f"Horizon {horizon} must exceed the last breakpoint {f.starts[-1]}")
    tail = f.tail_slope
    if not is_inf(tail) and tail < 0:
        raise CurveError("Decreasing tail: the closure is -∞")
    pg = reflect(pieces_of(g, upto=horizon))
    pieces = [piece for a in pieces_of(f) for b in pg for piece in convolve_pieces(a, b, MIN)]
    return envelope(pieces, MIN)


# ---------------------------------------------------------
# Pointwise operations
# ---------------------------------------------------------
def pointwise_min(f: Curve, g: Curve, horizon=None) -> Curve:
    f, g = _finite(f, horizon), _finite(g, horizon)
    return envelope(pieces_of(f) + pieces_of(g), MIN)


def pointwise_max(f: Curve, g: Curve, horizon=None) -> Curve:
    f, g = _finite(f, horizon), _finite(g, horizon)
    return envelope(pieces_of(f) + pieces_of(g), MAX)


def positive_part(f: Curve, horizon=None) -> Curve:
    return pointwise_max(_finite(f, horizon), zero_curve())


def _combine(f: Curve, g: Curve, sign: int) -> Curve:
    starts = sorted(set(f.starts) | set(g.starts))
    segments = []
    for t in starts:
        fv, gv = f.value(t), g.value(t)
        fr, gr = f.right_limit(t), g.right_limit(t)
        fs, gs = f.slope_after(t), g.slope_after(t)
        if any(is_inf(x) for x in (fv, gv, fr, gr, fs, gs)):
            if sign < 0:
                raise CurveError("Cannot subtract curves with infinite values")
            segments.append(Segment(t, fv + gv, INF))
            break
        v = fv + sign * gv
        segments.append(Segment(t, v, fs + sign * gs, fr + sign * gr - v))
    return Curve(tuple(segments)).normalized()


def add(f: Curve, g: Curve, horizon=None) -> Curve:
    return _combine(_finite(f, horizon), _finite(g, horizon), 1)


def subtract(f: Curve, g: Curve, horizon=None) -> Curve:
    """f - g; the result may be negative or non-monotone."""
    return _combine(_finite(f, horizon), _finite(g, horizon), -1)


def shift_right(f: Curve, theta) -> Curve:
    """t ↦ f(t - θ) for t ≥ θ, 0 before."""
    theta = q(theta)
    if theta < 0:
        raise CurveError(f"Shift must be >= 0, got {theta}")
    if theta == 0:
        return f
    zero = Fraction(0)
    shifted = [Segment(s.start + theta, s.value, s.slope, s.jump) for s in f.segments]
    periodic = None
    if f.periodic is not None:
        p = f.periodic
        periodic = Periodicity(p.start + theta, p.length, p.increment)
    return Curve((Segment(zero, zero, zero),) + tuple(shifted), periodic).normalized()


def restrict_after(f: Curve, theta, horizon=None) -> Curve:
    """t ↦ f(t)·1{t > θ}."""
    theta = q(theta)
    f = _finite(f, horizon)
    zero = Fraction(0)
    head_slope = f.slope_after(theta)
    head_right = f.right_limit(theta)
    if is_inf(head_slope) or is_inf(head_right):
        head = Segment(theta, zero, INF)
    else:
        head = Segment(theta, zero, head_slope, head_right)
    tail = tuple(s for s in f.segments if s.start > theta) if not is_inf(head.slope) else ()
    lead = (Segment(zero, zero, zero),) if theta > 0 else ()
    return Curve(lead + (head,) + tail).normalized()


# ---------------------------------------------------------
# Inverses
# ---------------------------------------------------------
def _finite_for_level(f: Curve, w) -> Curve:
    if not f.is_periodic:
        return f
    p = f.periodic
    if p.increment <= 0:
        raise CurveError("Periodic curve without growth has no inverse")
    periods = floor_q(max(q(w), Fraction(0)) / p.increment) + 3
    return f.unroll(p.start + periods * p.length)


def _next_start(f: Curve, idx: int):
    return f.segments[idx + 1].start if idx + 1 < len(f.segments) else None


def lower_inverse(f: Curve, w) -> Number:
    """inf{s ≥ 0 : f(s) ≥ w}; INF when f never reaches w."""
    if is_inf(w):
        return INF
    w = q(w)
    f = _finite_for_level(f, w)
    for idx, seg in enumerate(f.segments):
        end = _next_start(f, idx)
        if seg.value >= w or is_inf(seg.slope):
            return seg.start
        right = seg.value + seg.jump
        if right >= w:
            return seg.start
        if seg.slope > 0:
            x = seg.start + (w - right) / seg.slope
            if end is None or x < end:
                return x
        elif end is None:
            return INF
    return INF


def upper_inverse(f: Curve, w) -> Number:
    """sup{s ≥ 0 : f(s) ≤ w} for wide-sense increasing f; INF when unbounded."""
    w = q(w)
    f = _finite_for_level(f, w)
    for idx, seg in enumerate(f.segments):
        end = _next_start(f, idx)
        if seg.value > w or is_inf(seg.slope):
            return seg.start
        right = seg.value + seg.jump
        if right > w:
            return seg.start
        if seg.slope > 0:
            x = seg.start + (w - right) / seg.slope
            if end is None or x < end:
                return x
        elif end is None:
            return INF
    return INF


def _levels(f: Curve) -> list:
    levels = {Fraction(0)}
    for idx, seg in enumerate(f.segments):
        end = _next_start(f, idx)
        candidates = [seg.value, seg.value + seg.jump if not is_inf(seg.value) else INF]
        if end is not None:
            candidates.append(seg.open_value(end))
        levels.update(v for v in candidates if not is_inf(v) and v >= 0)
    return sorted(levels)


def pseudo_inverse(f: Curve, horizon=None) -> Curve:
    """
    Pseudo-inverse w ↦ sup{s ≥ 0 : f(s) ≤ w}.

    For a leaky bucket this is |w - b|⁺ / r. When f stays at or below some
    level forever the result is +∞ from that level on.

    Raises:
        CurveError: If f is not wide-sense increasing.
    """
    f = _finite(f, horizon)
    if not f.is_wide_sense_increasing():
        raise CurveError("pseudo_inverse needs a wide-sense increasing curve")
    levels = _levels(f)
    segments = []
    for i, w in enumerate(levels):
        gw = upper_inverse(f, w)
        if is_inf(gw):
            logger.warning(f"Pseudo-inverse is unbounded from level {w}")
            segments.append(Segment(w, INF, INF))
            break
        nxt = levels[i + 1] if i + 1 < len(levels) else None
        if nxt is None:
            m1, m2 = w + 1, w + 2
        else:
            m1, m2 = w + (nxt - w) / 3, w + 2 * (nxt - w) / 3
        g1, g2 = upper_inverse(f, m1), upper_inverse(f, m2)
        if is_inf(g1) or is_inf(g2):
            logger.warning(f"Pseudo-inverse is unbounded above level {w}")
            segments.append(Segment(w, gw, INF))
            break
        slope = (g2 - g1) / (m2 - m1)
        right = g1 - slope * (m1 - w)
        segments.append(Segment(w, gw, slope, right - gw))
    return Curve(tuple(segments)).normalized()


# ---------------------------------------------------------
# Closure, deviation, rate
# ---------------------------------------------------------
def super_additive_closure(f: Curve, horizon, max_iterations: int = MAX_CLOSURE_ITERATIONS) -> Curve:
    """
    Iterate g ← g ∨ (g ⊗̄ g) on [0, horizon] until it stops changing.

    Raises:
        ClosureNotConverged: After ``max_iterations`` rounds, with the partial curve.
    """
    horizon = q(horizon)
    g = f.truncate(horizon)
    for iteration in range(1, max_iterations + 1):
        nxt = pointwise_max(g, max_plus_conv(g, g)).truncate(horizon)
        if agrees_on(nxt, g, horizon):
            logger.debug(f"Closure converged after {iteration} iterations on [0, {horizon}]")
            return nxt
        g = nxt
    logger.warning(f"Closure did not converge within {max_iterations} iterations")
    raise ClosureNotConverged(g, max_iterations)


def long_term_rate(f: Curve) -> Number:
    """Tail slope, or increment/period for periodic curves."""
    if f.periodic is not None:
        return f.periodic.increment / f.periodic.length
    return f.tail_slope


def horizontal_deviation(alpha: Curve, beta: Curve, horizon=None) -> Number:
    """
    h(α, β) = sup_t inf{d ≥ 0 : α(t) ≤ β(t + d)}.

    Evaluated on the candidate set made of the breakpoints of α and the
    instants where α crosses a breakpoint level of β; between candidates the
    delay is affine, so its one-sided limits at candidates give the supremum.
    """
    rate_a, rate_b = long_term_rate(alpha), long_term_rate(beta)
    if is_inf(rate_a) or (not is_inf(rate_b) and rate_a > rate_b):
        return INF
    alpha, beta = _finite(alpha, horizon), _finite(beta, horizon)

    candidates = set(alpha.starts)
    for level in _levels(beta):
        for t in (lower_inverse(alpha, level), upper_inverse(alpha, level)):
            if not is_inf(t):
                candidates.add(t)
    times = sorted(candidates)

    def delay(t) -> Number:
        w = alpha.value(t)
        s = lower_inverse(beta, w)
        return INF if is_inf(s) else s - t

    best = Fraction(0)
    for i, t in enumerate(times):
        nxt = times[i + 1] if i + 1 < len(times) else None
        if nxt is None:
            m1, m2 = t + 1, t + 2
        else:
            m1, m2 = t + (nxt - t) / 3, t + 2 * (nxt - t) / 3
        samples = (delay(t), delay(m1), delay(m2))
        if any(is_inf(v) for v in samples):
            return INF
        at_t, d1, d2 = samples
        slope = (d2 - d1) / (m2 - m1)
        best = max(best, at_t, d1 - slope * (m1 - t))
        if nxt is None:
            if slope > 0:
                return INF
        else:
            best = max(best, d2 + slope * (nxt - m2))
    return best

"""Brute-force references evaluated on a rational grid."""
from fractions import Fraction

from hypothesis import strategies as st

from atscalc.minplus.curve import make_curve

GRID = 4


def grid_points(upto, grid: int = GRID) -> list:
    return [Fraction(k, grid) for k in range(int(upto * grid) + 1)]


def convolution(f, g, t, best, grid: int = GRID):
    """
    inf (best=min) or sup (best=max) over 0 ≤ s ≤ t of f(s) + g(t - s).

    Breakpoints of f and g lie on the grid and so does t, so the extremum is
    reached at a grid s, possibly as a one-sided limit.
    """
    candidates = []
    for s in grid_points(t, grid):
        u = t - s
        candidates.append(f.value(s) + g.value(u))
        if s < t:
            candidates.append(f.right_limit(s) + g.left_limit(u))
        if s > 0:
            candidates.append(f.left_limit(s) + g.right_limit(u))
    return best(candidates)


@st.composite
def grid_curves(draw, max_segments: int = 4, max_slope: int = 3, max_jump: int = 2):
    """Wide-sense increasing curves in 𝔉₀ with breakpoints on the 1/4 grid."""
    n = draw(st.integers(1, max_segments))
    gaps = draw(st.lists(st.integers(1, 4), min_size=n - 1, max_size=n - 1))
    starts = [Fraction(0)]
    for gap in gaps:
        starts.append(starts[-1] + Fraction(gap, GRID))
    rows = []
    value = Fraction(0)
    for idx, start in enumerate(starts):
        slope = Fraction(draw(st.integers(0, max_slope)), draw(st.sampled_from([1, 2])))
        jump = Fraction(draw(st.integers(0, max_jump)), 2)
        if idx > 0:
            prev_start, prev_value, prev_slope, prev_jump = rows[-1]
            value = prev_value + prev_jump + prev_slope * (start - prev_start)
            value += Fraction(draw(st.integers(0, 1)), 2)
        rows.append((start, value, slope, jump))
    return make_curve(rows)


def deconvolution(f, g, t, horizon, grid: int = GRID):
    """inf over 0 ≤ u ≤ horizon of f(t + u) - g(u), one-sided limits included."""
    candidates = []
    for u in grid_points(horizon, grid):
        candidates.append(f.value(t + u) - g.value(u))
        if u < horizon:
            candidates.append(f.right_limit(t + u) - g.right_limit(u))
        if u > 0:
            candidates.append(f.left_limit(t + u) - g.left_limit(u))
    return min(candidates)


def deviation_from_rate_latency(alpha, R, T, grid: int = GRID):
    """
    sup_t of the delay to reach α(t) under R·(t - T)⁺, for α with slopes ≤ R.

    The delay T + α(t)/R - t cannot grow along a piece, so the sup is read at
    grid instants and just to their right.
    """
    def delay(v, t):
        return max(Fraction(0), T + v / R - t)

    best = Fraction(0)
    for s in grid_points(alpha.starts[-1] + 1, grid):
        v = alpha.value(s)
        if v > 0:
            best = max(best, delay(v, s))
        after = alpha.right_limit(s)
        if after > 0 or alpha.slope_after(s) > 0:
            best = max(best, delay(after, s))
    return best

"""Service-curve and strict-service-curve checks on packet trajectories.

The universal quantifiers over continuous time reduce to finite candidate
sets because the cumulative functions are left-continuous steps and the
curves are wide-sense increasing.
"""
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import Curve
from atscalc.minplus.rational import is_inf, to_json
from atscalc.traffic.cumulative import CumulativeFunction
from atscalc.utils.logger import get_logger
from atscalc.verify.backlog import backlogged_periods

logger = get_logger("service_checks")

PASS = "pass"
VIOLATION = "violation"


@dataclass(frozen=True)
class Witness:
    s: Fraction
    t: Fraction
    lhs: Fraction
    rhs: Fraction

    def to_json(self) -> dict:
        return {k: to_json(getattr(self, k)) for k in ("s", "t", "lhs", "rhs")}


@dataclass(frozen=True)
class CheckReport:
    claim: str
    verdict: str
    witness: Optional[Witness] = None
    params: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == PASS

    def to_json(self) -> dict:
        return {
            "claim": self.claim,
            "verdict": self.verdict,
            "witness": None if self.witness is None else self.witness.to_json(),
            "params": self.params,
        }


def _event_times(fn: CumulativeFunction) -> list:
    return [seg.start for seg in fn.curve.segments if seg.jump > 0]


def _last_break_before(beta: Curve, x: Fraction) -> Fraction:
    pts = beta.breakpoints(horizon=x)
    before = [p for p in pts if p < x]
    return before[-1] if before else Fraction(0)


def _inner_witness(outflow, beta, lo, hi, cell_end, count) -> Witness:
    """
    The window (lo, hi] has output increment ``count`` below β((hi - lo)-);
    pull s just right of lo, staying inside (lo, cell_end), until β(hi - s)
    exceeds the count.
    """
    x = hi - lo
    pb = _last_break_before(beta, x)
    limits = [(cell_end - lo) / 2, (x - pb) / 2]
    slope = beta.slope_after(pb)
    if slope > 0:
        limits.append((beta.left_limit(x) - count) / (2 * slope))
    s = lo + min(limits)
    return Witness(s, hi, outflow(hi) - outflow(s), beta.value(hi - s))


def _rate_latency_params(beta: Curve):
    """(R, T) when ``beta`` has the shape built by ``rate_latency``, else None."""
    if beta.is_periodic or any(seg.value != 0 or seg.jump != 0 for seg in beta.segments):
        return None
    segs = beta.segments
    if len(segs) == 1 and not is_inf(segs[0].slope):
        return segs[0].slope, Fraction(0)
    if len(segs) == 2 and segs[0].slope == 0 and not is_inf(segs[1].slope):
        return segs[1].slope, segs[1].start
    return None


def _staircase_params(beta: Curve):
    """(L, I) when ``beta`` has the shape built by ``staircase``, else None."""
    p = beta.periodic
    if p is None or p.start != 0 or len(beta.segments) != 1 or p.increment <= 0:
        return None
    seg = beta.segments[0]
    if seg.value != 0 or seg.slope != 0 or seg.jump != 0:
        return None
    return p.increment, p.length


class _PrefixMax:
    """Fenwick tree over slots 0..size-1 answering the max of the first i slots."""

    def __init__(self, size: int):
        self.tree = [None] * (size + 1)

    def update(self, slot: int, item) -> None:
        i = slot + 1
        while i < len(self.tree):
            if self.tree[i] is None or item > self.tree[i]:
                self.tree[i] = item
            i += i & -i

    def query(self, count: int):
        best = None
        i = count
        while i > 0:
            item = self.tree[i]
            if item is not None and (best is None or item > best):
                best = item
            i -= i & -i
        return best


# A sweep gets the grid g_0 < ... < g_m of one backlogged period and the
# output values on it, and returns the first violating (k, l) or None;
# k = -1 stands for s = g_0 itself.
def _pairwise_sweep(beta: Curve):
    def sweep(grid, values):
        start = grid[0]
        for l in range(len(grid) - 1):
            hi = grid[l + 1]
            if values[l + 1] - values[0] < beta.value(hi - start):
                return -1, l
            for k in range(l + 1):
                if values[l + 1] - values[k + 1] < beta.left_limit(hi - grid[k]):
                    return k, l
        return None
    return sweep


def _rate_latency_sweep(R: Fraction, T: Fraction):
    """
    For t - s > T the condition reads R_out(t) - R(t - T) ≥ R_out(s) - R·s,
    so each t only needs the running max of the right side over cells with
    g_k < t - T.
    """
    def sweep(grid, values):
        start = grid[0]
        best, best_k, ptr = None, None, 0
        for l in range(len(grid) - 1):
            hi = grid[l + 1]
            if values[l + 1] - values[0] < R * max(hi - start - T, 0):
                return -1, l
            while grid[ptr] < hi - T:
                key = values[ptr + 1] - R * grid[ptr]
                if best is None or key > best:
                    best, best_k = key, ptr
                ptr += 1
            if best is not None and values[l + 1] - R * (hi - T) < best:
                return best_k, l
        return None
    return sweep


def _staircase_sweep(L: Fraction, I: Fraction):
    """
    With g - g_0 = q·I + r (0 ≤ r < I), the left limit of floor(x / I)·L at
    g_{l+1} - g_k is L·(q_{l+1} - q_k - 1), plus L when r_{l+1} > r_k. Cells
    are kept in two prefix-max trees keyed by residue rank, one per side.
    """
    def sweep(grid, values):
        start = grid[0]
        quot, rem = [], []
        for g in grid:
            n = (g - start) // I
            quot.append(n)
            rem.append(g - start - n * I)
        ranks = sorted(set(rem))
        size = len(ranks)
        below, above = _PrefixMax(size), _PrefixMax(size)
        for l in range(len(grid) - 1):
            slot = bisect_left(ranks, rem[l])
            item = (values[l + 1] - L * quot[l], l)
            below.update(slot, item)
            above.update(size - 1 - slot, item)

            if values[l + 1] - values[0] < L * quot[l + 1]:
                return -1, l
            target = values[l + 1] - L * (quot[l + 1] - 1)
            cut = bisect_left(ranks, rem[l + 1])
            lower = below.query(cut)
            if lower is not None and target < lower[0] + L:
                return lower[1], l
            upper = above.query(size - cut)
            if upper is not None and target < upper[0]:
                return upper[1], l
        return None
    return sweep


def _sweep_for(beta: Curve):
    params = _rate_latency_params(beta)
    if params is not None:
        return _rate_latency_sweep(*params)
    params = _staircase_params(beta)
    if params is not None:
        return _staircase_sweep(*params)
    return _pairwise_sweep(beta)


def check_strict_sc(inflow: CumulativeFunction, outflow: CumulativeFunction, beta: Curve,
                    claim: str = "strict_service_curve") -> CheckReport:
    """
    Check R_out(t) - R_out(s) ≥ β(t - s) whenever (s, t] lies in a backlogged period.

    In a period (S, E] with grid S = g_0 < g_1 < ... < g_m = E made of the
    output events, R_out is constant on each cell (g_k, g_{k+1}]. For s in
    cell k and t in cell l ≥ k the increment is R_out(g_{l+1}) - R_out(g_{k+1})
    and the largest t - s tends to g_{l+1} - g_k, so it is compared with the
    left limit of β there. s = S itself is compared with β(g_{l+1} - S).

    Rate-latency and staircase curves are swept in O(m log m) per period;
    any other curve is compared on every pair of cells.
    """
    sweep = _sweep_for(beta)
    departures = _event_times(outflow)
    for period in backlogged_periods(inflow, outflow):
        start, end = period.start, period.end
        if is_inf(end):
            end = departures[-1] if departures and departures[-1] > start else start
            if end == start:
                continue
        inner = departures[bisect_left(departures, start):bisect_right(departures, end)]
        grid = sorted({start, end}.union(inner))
        values = [outflow(g) for g in grid]
        hit = sweep(grid, values)
        if hit is None:
            continue
        k, l = hit
        hi = grid[l + 1]
        if k < 0:
            return _violation(claim, beta, Witness(start, hi, values[l + 1] - values[0], beta.value(hi - start)))
        w = _inner_witness(outflow, beta, grid[k], hi, grid[k + 1], values[l + 1] - values[k + 1])
        return _violation(claim, beta, w)
    return CheckReport(claim, PASS, params={"beta": beta.to_json()})


def _violation(claim: str, beta: Curve, witness: Witness) -> CheckReport:
    logger.info(f"{claim}: violated on ({witness.s}, {witness.t}]: {witness.lhs} < {witness.rhs}")
    return CheckReport(claim, VIOLATION, witness, {"beta": beta.to_json()})


def check_sc(inflow: CumulativeFunction, outflow: CumulativeFunction, beta: Curve,
             claim: str = "service_curve") -> CheckReport:
    """
    Check R_out(t) ≥ inf_{0 ≤ s ≤ t} R_in(s) + β(t - s).

    The right side is non-decreasing in t while R_out is constant between
    departures, so t ranges over departure instants. For a fixed t the
    infimum is reached at s in {0, t} or at an arrival instant ≤ t.
    """
    arrivals = sorted(set(_event_times(inflow)))
    for t in _event_times(outflow):
        upto = arrivals[:bisect_right(arrivals, t)]
        best = None
        for s in [Fraction(0), t] + upto:
            v = inflow(s) + beta.value(t - s)
            if best is None or v < best[0]:
                best = (v, s)
        lhs = outflow(t)
        if lhs < best[0]:
            return _violation(claim, beta, Witness(best[1], t, lhs, best[0]))
    return CheckReport(claim, PASS, params={"beta": beta.to_json()})

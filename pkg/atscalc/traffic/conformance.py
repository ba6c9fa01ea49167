from collections import Counter, defaultdict, deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import Curve, leaky_bucket
from atscalc.minplus.rational import is_inf, q
from atscalc.traffic.cumulative import cumulative_of
from atscalc.traffic.packet_sequence import PacketSequence, subsequence
from atscalc.utils.logger import get_logger

logger = get_logger("conformance")


class PairingError(ValueError):
    """Raised when an output packet cannot be matched to an input packet."""
    pass


class LossyPairingError(PairingError):
    """Raised when input and output do not carry the same (size, flow) multiset."""
    pass


class OversizedPacketError(ValueError):
    """Raised when a packet exceeds the burst of its flow's contract."""
    pass


@dataclass(frozen=True)
class FlowContract:
    """Leaky-bucket contract γ_{r,b} of one flow."""
    flow: str
    rate: Fraction
    burst: Fraction

    def __post_init__(self):
        object.__setattr__(self, "flow", str(self.flow))
        object.__setattr__(self, "rate", q(self.rate))
        object.__setattr__(self, "burst", q(self.burst))
        if self.rate <= 0:
            raise ValueError(f"Flow {self.flow}: rate must be > 0, got {self.rate}")
        if self.burst < 0:
            raise ValueError(f"Flow {self.flow}: burst must be >= 0, got {self.burst}")

    @property
    def interval(self) -> Fraction:
        """I = b / r, the spacing of back-to-back burst-size packets."""
        return self.burst / self.rate

    @property
    def curve(self) -> Curve:
        return leaky_bucket(self.rate, self.burst)

    def require_fits(self, size) -> None:
        if size > self.burst:
            raise OversizedPacketError(
                f"Flow {self.flow}: packet of size {size} exceeds burst {self.burst}"
            )


@dataclass(frozen=True)
class ConformanceResult:
    """Outcome of an arrival-curve check; a violation carries a concrete (s, t) pair."""
    ok: bool
    s: Optional[Fraction] = None
    t: Optional[Fraction] = None
    excess: Optional[Fraction] = None

    def to_json(self) -> dict:
        if self.ok:
            return {"ok": True}
        return {"ok": False, "s": str(self.s), "t": str(self.t), "excess": str(self.excess)}


def _is_plain_leaky_bucket(alpha: Curve) -> bool:
    if alpha.is_periodic or len(alpha.segments) != 1:
        return False
    seg = alpha.segments[0]
    return seg.value == 0 and not is_inf(seg.slope)


def _witness(seq: PacketSequence, alpha: Curve, i: int, j: int, count: Fraction) -> ConformanceResult:
    """Turn a violating packet window [i, j] into an exact (s, t) pair."""
    cumulative = cumulative_of(seq)
    s = seq.times[i]
    x = seq.times[j] - s
    bound = alpha.right_limit(x)
    limits = []
    nxt_break = alpha.next_break_after(x)
    if nxt_break is not None:
        limits.append(nxt_break - x)
    later = [t for t in seq.times if t > seq.times[j]]
    if later:
        limits.append(later[0] - seq.times[j])
    slope = alpha.slope_after(x)
    if slope > 0:
        limits.append((count - bound) / slope)
    delta = min(limits) / 2 if limits else Fraction(1)
    t = seq.times[j] + delta
    excess = cumulative(t) - cumulative(s) - alpha.value(t - s)
    return ConformanceResult(False, s, t, excess)


def check_arrival_curve(seq: PacketSequence, alpha: Curve, flow: Optional[str] = None) -> ConformanceResult:
    """
    Check R(t) - R(s) ≤ α(t - s) for all s < t.

    For a left-continuous step R it is enough to look at windows that start
    at a packet instant and end just after another one, comparing the data in
    the window with the right limit of α at the window length.

    Returns:
        ConformanceResult: ok, or the first violating (s, t) with its excess.
    """
    seq = subsequence(seq, flow)
    n = len(seq)
    if n == 0:
        return ConformanceResult(True)
    times, sizes = seq.times, seq.sizes

    if _is_plain_leaky_bucket(alpha):
        seg = alpha.segments[0]
        r, b = seg.slope, seg.jump
        prefix = Fraction(0)
        best_i, best_key = 0, None
        for j in range(n):
            key = prefix - r * times[j]
            if best_key is None or key < best_key:
                best_i, best_key = j, key
            prefix += sizes[j]
            window = prefix - r * times[j] - best_key
            if window > b:
                count = sum(sizes[best_i:j + 1], Fraction(0))
                return _witness(seq, alpha, best_i, j, count)
        return ConformanceResult(True)

    for j in range(n):
        count = Fraction(0)
        for i in range(j, -1, -1):
            count += sizes[i]
            bound = alpha.right_limit(times[j] - times[i])
            if not is_inf(bound) and count > bound:
                return _witness(seq, alpha, i, j, count)
    return ConformanceResult(True)


def check_lossless(in_seq: PacketSequence, out_seq: PacketSequence) -> None:
    """Raise LossyPairingError unless both sides carry the same (size, flow) multiset."""
    ins = Counter(zip(in_seq.sizes, in_seq.flows))
    outs = Counter(zip(out_seq.sizes, out_seq.flows))
    if ins != outs:
        missing = ins - outs
        extra = outs - ins
        raise LossyPairingError(f"Lossy pairing: missing {dict(missing)}, unexpected {dict(extra)}")


def packet_delays(in_seq: PacketSequence, out_seq: PacketSequence) -> list:
    """
    Per-packet delays, indexed like ``in_seq``.

    Packets are paired per flow in order of appearance, which is the pairing
    of any FIFO-per-flow system.

    Raises:
        LossyPairingError: If the (size, flow) multisets differ.
        PairingError: If per-flow order pairs packets of different sizes.
    """
    check_lossless(in_seq, out_seq)
    pending = defaultdict(deque)
    for p in in_seq:
        pending[p.flow].append(p)
    delays = [None] * len(in_seq)
    for p in out_seq:
        src = pending[p.flow].popleft()
        if src.size != p.size:
            raise PairingError(
                f"Flow {p.flow}: output packet {p.index} (size {p.size}) pairs with input {src.index} (size {src.size})"
            )
        delays[src.index] = p.time - src.time
    return delays


def is_fifo(in_seq: PacketSequence, out_seq: PacketSequence) -> bool:
    """Global order preserved (list positions) and causal under that pairing."""
    check_lossless(in_seq, out_seq)
    if list(zip(in_seq.flows, in_seq.sizes)) != list(zip(out_seq.flows, out_seq.sizes)):
        return False
    return all(o >= i for i, o in zip(in_seq.times, out_seq.times))


def is_fifo_per_flow(in_seq: PacketSequence, out_seq: PacketSequence) -> bool:
    """Every flow keeps its packet order and no packet leaves before it arrives."""
    check_lossless(in_seq, out_seq)
    for flow in in_seq.flow_ids():
        sub_in, sub_out = subsequence(in_seq, flow), subsequence(out_seq, flow)
        if sub_in.sizes != sub_out.sizes:
            return False
        if any(o < i for i, o in zip(sub_in.times, sub_out.times)):
            return False
    return True


def max_delay(in_seq: PacketSequence, out_seq: PacketSequence):
    delays = packet_delays(in_seq, out_seq)
    return max(delays) if delays else Fraction(0)


def is_causal(in_seq: PacketSequence, out_seq: PacketSequence) -> bool:
    return all(d >= 0 for d in packet_delays(in_seq, out_seq))


def minimal_burst(seq: PacketSequence, rate, flow: Optional[str] = None) -> Fraction:
    """Smallest b such that γ_{rate,b} is an arrival curve of ``seq`` (max window excess over rate)."""
    seq = subsequence(seq, flow)
    rate = q(rate)
    best = Fraction(0)
    prefix = Fraction(0)
    low = None
    for t, size in zip(seq.times, seq.sizes):
        key = prefix - rate * t
        low = key if low is None else min(low, key)
        prefix += size
        best = max(best, prefix - rate * t - low)
    return best

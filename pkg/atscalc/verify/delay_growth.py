from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from atscalc.minplus.rational import to_json
from atscalc.traffic.conformance import packet_delays
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger

logger = get_logger("delay_growth")

MIN_PERIODS = 3
MIN_EQUAL_TAIL = 2


@dataclass(frozen=True)
class GrowthReport:
    """Delay of the first packet of period k, δ_k = offset + increment * k for k ≥ k0."""
    increment: Fraction
    offset: Fraction
    k0: int
    affine: bool
    delays: tuple = field(repr=False)
    residuals: tuple = field(repr=False)

    def to_json(self) -> dict:
        return {
            "increment": to_json(self.increment),
            "offset": to_json(self.offset),
            "k0": self.k0,
            "affine": self.affine,
            "delays": [to_json(x) for x in self.delays],
            "residuals": [to_json(x) for x in self.residuals],
        }


def delay_growth(inflow: PacketSequence, outflow: PacketSequence, period: int = 6) -> GrowthReport:
    """
    Per-period increment of the delay of packets 0, period, 2*period, ...

    The increment is the last difference; k0 is the first period from which
    every difference equals it. Growth counts as eventually affine when at
    least two trailing differences agree.

    Raises:
        ValueError: If fewer than three periods are available.
    """
    if period < 1:
        raise ValueError(f"period must be >= 1, got {period}")
    all_delays = packet_delays(inflow, outflow)
    delays = tuple(all_delays[i] for i in range(0, len(all_delays), period))
    if len(delays) < MIN_PERIODS:
        raise ValueError(f"Need at least {MIN_PERIODS} periods, got {len(delays)}")

    diffs = [b - a for a, b in zip(delays, delays[1:])]
    increment = diffs[-1]
    k0 = len(diffs)
    while k0 > 0 and diffs[k0 - 1] == increment:
        k0 -= 1
    offset = delays[k0] - increment * k0
    residuals = tuple(d - (offset + increment * k) for k, d in enumerate(delays))
    affine = len(diffs) - k0 >= MIN_EQUAL_TAIL
    if not affine:
        logger.warning(f"Delay growth is not affine over the last periods; residuals {residuals[-4:]}")
    logger.debug(f"Delay growth: increment {increment}, offset {offset}, from period {k0}")
    return GrowthReport(increment, offset, k0, affine, delays, residuals)


def departure_bounds_check(B: PacketSequence, D: PacketSequence, interval) -> Optional[int]:
    """
    Lower bounds on the departures of a Spring trajectory: with 0-based
    indices, D_{2h} ≥ B_0 + hI and D_{2h+1} ≥ B_0 + (h+1)I.

    Returns:
        Optional[int]: The first index that breaks its bound, or None.
    """
    interval = Fraction(interval)
    if not len(B):
        return None
    first = B.times[0]
    for n, dep in enumerate(D.times):
        h, odd = divmod(n, 2)
        bound = first + (h + odd) * interval
        if dep < bound:
            logger.warning(f"Packet {n} departs at {dep}, before {bound}")
            return n
    return None

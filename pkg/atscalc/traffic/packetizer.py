from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from atscalc.minplus.operators import lower_inverse
from atscalc.minplus.rational import is_inf, q
from atscalc.traffic.cumulative import CumulativeFunction
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger

logger = get_logger("packetizer")


@dataclass(frozen=True)
class Packetization:
    released: PacketSequence
    never_released: tuple


def packetize(
    fluid: CumulativeFunction,
    sizes: Sequence,
    flows: Optional[Sequence] = None,
    flow: str = "fluid",
) -> Packetization:
    """
    Release each packet once the fluid output has delivered its last bit.

    Args:
        fluid: Fluid cumulative output.
        sizes: Packet sizes in emission order.
        flows: Optional per-packet flow ids (defaults to ``flow`` for all).

    Returns:
        Packetization: released packets, plus the indices of packets whose
        boundary the fluid never reaches.
    """
    sizes = [q(s) for s in sizes]
    flows = list(flows) if flows is not None else [flow] * len(sizes)
    released = []
    stuck = []
    boundary = Fraction(0)
    for idx, (size, fid) in enumerate(zip(sizes, flows)):
        boundary += size
        t = lower_inverse(fluid.curve, boundary)
        if is_inf(t):
            stuck.append(idx)
            continue
        released.append((t, size, fid))
    if stuck:
        logger.warning(f"Fluid never reaches the boundary of packets {stuck}")
    return Packetization(PacketSequence.from_packets(released), tuple(stuck))

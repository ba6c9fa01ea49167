from dataclasses import dataclass
from fractions import Fraction

from atscalc.adversary.spring import SpringParams, trajectory3
from atscalc.minplus.rational import ceil_q, q, to_json
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger

logger = get_logger("insertion")


@dataclass(frozen=True)
class XmTrajectory:
    """Trajectory 3 with one packet of flow ``flow`` slipped in behind a delayed f1 packet."""
    sequence: PacketSequence
    M: Fraction
    k: int
    insert_index: int
    insert_time: Fraction
    flow: str
    size: Fraction
    guaranteed_delay: Fraction

    def to_json(self) -> dict:
        return {
            "M": to_json(self.M),
            "k": self.k,
            "insert_index": self.insert_index,
            "insert_time": to_json(self.insert_time),
            "flow": self.flow,
            "size": to_json(self.size),
            "guaranteed_delay": to_json(self.guaranteed_delay),
            "sequence": self.sequence.to_json(),
        }


def insertion_period(p: SpringParams, M) -> int:
    """k = ceil((M - d + I) / (d - 3ε)) + 1."""
    return ceil_q((q(M) - p.d + p.I) / (p.d - 3 * p.eps)) + 1


def trajectory_xm(p: SpringParams, M, L_g, g: str = "g") -> XmTrajectory:
    """
    Insert one packet of flow g, size L_g, midway between the first and the
    second packet of period k of Trajectory 3.

    The first packet of period k cannot leave before B_0 + 3kI, and the IR
    cannot release the inserted packet before it; the gap between that
    instant and the insertion time is the reported guaranteed delay.

    Raises:
        ValueError: If M ≤ 0, or L_g is not in (0, b].
    """
    M, L_g = q(M), q(L_g)
    if M <= 0:
        raise ValueError(f"M must be > 0, got {M}")
    if not 0 < L_g <= p.b:
        raise ValueError(f"L_g must lie in (0, b={p.b}], got {L_g}")
    k = insertion_period(p, M)
    base = trajectory3(p, k + 1)
    before, after = 6 * k, 6 * k + 1
    t = (base.times[before] + base.times[after]) / 2
    rows = [(x.time, x.size, x.flow) for x in base]
    rows.insert(after, (t, L_g, g))
    guaranteed = base.times[0] + 3 * k * p.I - t
    if guaranteed < M:
        logger.warning(f"x_M for M={M}: guaranteed delay {guaranteed} falls short of M")
    logger.info(f"x_M for M={M}: k={k}, packet of {g} inserted at {t} (index {after})")
    return XmTrajectory(PacketSequence.from_packets(rows), M, k, after, t, g, L_g, guaranteed)

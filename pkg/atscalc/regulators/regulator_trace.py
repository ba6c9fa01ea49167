from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from atscalc.minplus.rational import to_json
from atscalc.traffic.conformance import FlowContract
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger
from atscalc.utils.rational_csv import write_rational_csv

logger = get_logger("regulator_trace")

TRACE_FIELDS = ["index", "arrival", "departure", "flow", "size", "hol_wait", "eligibility", "binding", "token"]
TRACE_RATIONALS = {"arrival", "departure", "size", "hol_wait", "eligibility", "token"}

ARRIVAL = "arrival"
FIFO = "fifo"
SHAPING = "shaping"


def binding_term(arrival, previous, eligibility) -> str:
    """Which term of max(arrival, previous departure, eligibility) sets the departure."""
    if eligibility > max(arrival, previous):
        return SHAPING
    if previous > arrival:
        return FIFO
    return ARRIVAL


def bucket_levels(departures: PacketSequence, contracts: Mapping[str, FlowContract]) -> tuple:
    """
    Token level of each packet's flow right after the packet leaves.

    Buckets start full at b_f, refill at r_f up to b_f and are charged
    L_n at the departure instant.
    """
    tokens = {}
    last = {}
    levels = []
    for p in departures:
        c = contracts[p.flow]
        level = tokens.get(p.flow, c.burst)
        prev = last.get(p.flow, Fraction(0))
        level = min(c.burst, level + c.rate * (p.time - prev)) - p.size
        tokens[p.flow], last[p.flow] = level, p.time
        levels.append(level)
    return tuple(levels)


@dataclass(frozen=True)
class RegulatorTrace:
    """Departures of a single-FIFO regulator plus per-packet diagnostics (indexed like the input)."""
    arrivals: PacketSequence
    departures: PacketSequence
    eligibility: tuple
    tokens: tuple
    binding: tuple

    def __len__(self) -> int:
        return len(self.departures)

    def delays(self) -> list:
        return [d - a for a, d in zip(self.arrivals.times, self.departures.times)]

    def hol_waits(self) -> list:
        """departure - max(arrival, previous departure)."""
        waits = []
        prev = Fraction(0)
        for a, d in zip(self.arrivals.times, self.departures.times):
            waits.append(d - max(a, prev))
            prev = d
        return waits

    def rows(self) -> list:
        rows = []
        for p, a, w, e, tok, bind in zip(
            self.departures, self.arrivals.times, self.hol_waits(), self.eligibility, self.tokens, self.binding
        ):
            rows.append({
                "index": p.index,
                "arrival": a,
                "departure": p.time,
                "flow": p.flow,
                "size": p.size,
                "hol_wait": w,
                "eligibility": e,
                "binding": bind,
                "token": tok,
            })
        return rows

    def to_json(self) -> dict:
        packets = []
        for row in self.rows():
            packets.append({
                k: (to_json(v) if k in TRACE_RATIONALS and v is not None else v) for k, v in row.items()
            })
        return {"packets": packets}

    def to_csv(self, path) -> None:
        count = write_rational_csv(path, TRACE_FIELDS, TRACE_RATIONALS, self.rows())
        logger.info(f"Regulator trace with {count} packets written to {path}")

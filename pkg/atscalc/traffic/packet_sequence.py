import csv
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Optional

from atscalc.minplus.rational import from_json, q, to_json
from atscalc.utils.logger import get_logger

logger = get_logger("packet_sequence")

CSV_HEADER = ["index", "time_n", "time_d", "size_n", "size_d", "flow"]


class SequenceError(ValueError):
    """Raised when a packet sequence breaks its ordering or size invariants."""
    pass


class Packet(NamedTuple):
    index: int
    time: Fraction
    size: Fraction
    flow: str


@dataclass(frozen=True)
class PacketSequence:
    """
    Packets seen at one observation point, in list order.

    Equal timestamps are allowed; list order is the authoritative packet
    order (for FIFO checks and for regulator queues).
    """
    times: tuple
    sizes: tuple
    flows: tuple

    def __post_init__(self):
        times = tuple(q(t) for t in self.times)
        sizes = tuple(q(s) for s in self.sizes)
        flows = tuple(str(f) for f in self.flows)
        if not (len(times) == len(sizes) == len(flows)):
            raise SequenceError(
                f"Length mismatch: {len(times)} times, {len(sizes)} sizes, {len(flows)} flows"
            )
        for idx, (prev, nxt) in enumerate(zip(times, times[1:])):
            if nxt < prev:
                raise SequenceError(f"Times must be non-decreasing (index {idx + 1}: {prev} then {nxt})")
        if times and times[0] < 0:
            raise SequenceError(f"Times must be >= 0, got {times[0]}")
        for idx, size in enumerate(sizes):
            if size <= 0:
                raise SequenceError(f"Packet {idx} has non-positive size {size}")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "flows", flows)

    @classmethod
    def empty(cls) -> "PacketSequence":
        return cls((), (), ())

    @classmethod
    def from_packets(cls, packets: Iterable) -> "PacketSequence":
        """Build from (time, size, flow) triples."""
        rows = list(packets)
        return cls(tuple(r[0] for r in rows), tuple(r[1] for r in rows), tuple(r[2] for r in rows))

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self) -> Iterator[Packet]:
        for idx, (t, size, flow) in enumerate(zip(self.times, self.sizes, self.flows)):
            yield Packet(idx, t, size, flow)

    def flow_ids(self) -> list:
        """Distinct flow ids in order of first appearance."""
        seen = {}
        for flow in self.flows:
            seen.setdefault(flow, None)
        return list(seen)

    def with_times(self, times) -> "PacketSequence":
        return PacketSequence(tuple(times), self.sizes, self.flows)

    def total_size(self) -> Fraction:
        return sum(self.sizes, Fraction(0))

    # ---------------------------------------------------------
    # Serialization
    # ---------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "packets": [
                {"index": p.index, "time": to_json(p.time), "size": to_json(p.size), "flow": p.flow}
                for p in self
            ]
        }

    @classmethod
    def from_json(cls, doc: dict) -> "PacketSequence":
        rows = sorted(doc.get("packets", []), key=lambda r: r["index"])
        return cls.from_packets((from_json(r["time"]), from_json(r["size"]), r["flow"]) for r in rows)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(CSV_HEADER)
            for p in self:
                writer.writerow([
                    p.index, p.time.numerator, p.time.denominator,
                    p.size.numerator, p.size.denominator, p.flow,
                ])
        logger.debug(f"Wrote {len(self)} packets to {path}")

    @classmethod
    def from_csv(cls, path) -> "PacketSequence":
        with open(path, "r", newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = set(CSV_HEADER) - set(reader.fieldnames or ())
            if missing:
                raise SequenceError(f"CSV {path} lacks columns {sorted(missing)}")
            rows = sorted(reader, key=lambda r: int(r["index"]))
        return cls.from_packets(
            (
                Fraction(int(r["time_n"]), int(r["time_d"])),
                Fraction(int(r["size_n"]), int(r["size_d"])),
                r["flow"],
            )
            for r in rows
        )


def subsequence(seq: PacketSequence, flow: Optional[str]) -> PacketSequence:
    """Order-preserving filter on one flow; None keeps everything."""
    if flow is None:
        return seq
    return PacketSequence.from_packets((p.time, p.size, p.flow) for p in seq if p.flow == flow)


def merge_by_time(*sequences: PacketSequence) -> PacketSequence:
    """Stable merge of sequences by time; ties keep argument order."""
    rows = []
    for rank, seq in enumerate(sequences):
        rows.extend((p.time, rank, p.index, p.size, p.flow) for p in seq)
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    return PacketSequence.from_packets((r[0], r[3], r[4]) for r in rows)

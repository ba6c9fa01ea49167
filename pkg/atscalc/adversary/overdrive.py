from atscalc.traffic.conformance import FlowContract
from atscalc.traffic.packet_sequence import PacketSequence


def overdrive_trajectory(f: str, contract: FlowContract, n: int) -> PacketSequence:
    """n packets of size b_f at twice the contract rate: 0, I/2, I, 3I/2, ..."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    half = contract.interval / 2
    return PacketSequence.from_packets((k * half, contract.burst, f) for k in range(n))

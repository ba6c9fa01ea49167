from fractions import Fraction
from typing import Optional, Sequence

from atscalc.minplus.operators import upper_inverse
from atscalc.traffic.conformance import FlowContract


def pi_operator(departures: Sequence, sizes: Sequence, contract: FlowContract, n: int) -> Optional[Fraction]:
    """
    Earliest shaping-conformant release of packet n (1-based) of one flow.

        Π(D, L)_n = max_{1 ≤ m ≤ n-1} D_m + γ↓(L_m + ... + L_n)

    with γ↓ the pseudo-inverse of the contract's leaky bucket. This is the
    literal O(n) evaluation; the regulators keep an incremental form.

    Args:
        departures: D_1 .. D_{n-1} (at least n - 1 entries).
        sizes: L_1 .. L_n (at least n entries).
        contract: Leaky-bucket shaping contract of the flow.
        n: Packet index, starting at 1.

    Returns:
        Optional[Fraction]: The maximum, or None for n = 1 (empty max, no constraint).
    """
    if n < 1:
        raise ValueError(f"Packet index starts at 1, got {n}")
    if len(departures) < n - 1 or len(sizes) < n:
        raise ValueError(f"Prefixes too short for n={n}: {len(departures)} departures, {len(sizes)} sizes")
    if n == 1:
        return None
    gamma = contract.curve
    best = None
    # m runs from n-1 down to 1 so the window sum grows by one size per step
    window = Fraction(sizes[n - 1])
    for m in range(n - 1, 0, -1):
        window += sizes[m - 1]
        candidate = departures[m - 1] + upper_inverse(gamma, window)
        if best is None or candidate > best:
            best = candidate
    return best

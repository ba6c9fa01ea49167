"""Per-Flow Regulator (PFR) and the per-flow shaping state shared with the IR.

A regulator is a FIFO queue whose head packet n leaves at

    D_n = max(B_n, D_{n-1}, E_n)

where E_n is the earliest release allowed by the packet's flow contract,
given the earlier departures of the same flow. Two equivalent ways of
tracking E_n are kept: the max-plus form over past departures
(``MaxPlusShaper``) and the token-bucket form (``TokenBucketShaper``).
"""
import logging
from fractions import Fraction
from typing import Callable, Mapping

from atscalc.regulators.pi_operator import pi_operator
from atscalc.regulators.regulator_trace import RegulatorTrace, binding_term, bucket_levels
from atscalc.traffic.conformance import FlowContract
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger

logger = get_logger("per_flow_regulator")


class MultiFlowInputError(ValueError):
    """Raised when a per-flow regulator receives packets of another flow."""
    pass


class MaxPlusShaper:
    """
    Incremental form of Π for one flow.

    With S_n the flow's prefix sum and γ↓(x) = |x - b|⁺ / r,

        Π_n = max(D_{n-1}, max_{m<n} (D_m - S_{m-1}/r) + (S_n - b)/r)

    so only the last departure, the running max and S_{n-1} are kept.
    ``literal`` recomputes Π over the whole history instead.
    """

    def __init__(self, contract: FlowContract, literal: bool = False):
        self.contract = contract
        self.literal = literal
        self.last_departure = Fraction(0)
        self.prefix = Fraction(0)
        self.best = None
        self.history = []
        self.sizes = []

    def eligibility(self, size: Fraction) -> Fraction:
        c = self.contract
        if self.literal:
            n = len(self.history) + 1
            pi = pi_operator(self.history, self.sizes + [size], c, n)
        elif self.best is None:
            pi = None
        else:
            pi = max(self.last_departure, self.best + (self.prefix + size - c.burst) / c.rate)
        # D_0 = 0: an empty max does not constrain
        return Fraction(0) if pi is None else pi

    def release(self, time: Fraction, size: Fraction) -> None:
        key = time - self.prefix / self.contract.rate
        self.best = key if self.best is None else max(self.best, key)
        self.prefix += size
        self.last_departure = time
        if self.literal:
            self.history.append(time)
            self.sizes.append(size)

    @property
    def level(self):
        return None


class TokenBucketShaper:
    """
    Token form: E_n = (L_n - Λ_{f,prev}) / r + D_{f,prev}, with Λ_{f,0} = b
    and D_{f,prev} = 0 before the flow's first packet.
    """

    def __init__(self, contract: FlowContract):
        self.contract = contract
        self.tokens = contract.burst
        self.last_departure = Fraction(0)

    def eligibility(self, size: Fraction) -> Fraction:
        return max(Fraction(0), (size - self.tokens) / self.contract.rate + self.last_departure)

    def release(self, time: Fraction, size: Fraction) -> None:
        c = self.contract
        refill = self.tokens + c.rate * (time - self.last_departure)
        self.tokens = min(c.burst, refill) - size
        self.last_departure = time

    @property
    def level(self):
        return self.tokens


def fifo_fold(seq: PacketSequence, contracts: Mapping[str, FlowContract], make_shaper: Callable) -> RegulatorTrace:
    """
    Run a single FIFO queue over ``seq`` releasing each head packet at
    max(arrival, previous departure, shaping eligibility of its flow).

    Ties keep list order.
    """
    shapers = {}
    departures, eligibility, tokens, binding = [], [], [], []
    prev = Fraction(0)
    native_tokens = True
    trace_packets = logger.isEnabledFor(logging.DEBUG)
    for p in seq:
        contract = contracts[p.flow]
        contract.require_fits(p.size)
        shaper = shapers.get(p.flow)
        if shaper is None:
            shaper = shapers[p.flow] = make_shaper(contract)
        elig = shaper.eligibility(p.size)
        dep = max(p.time, prev, elig)
        binding.append(binding_term(p.time, prev, elig))
        shaper.release(dep, p.size)
        departures.append(dep)
        eligibility.append(elig)
        if shaper.level is None:
            native_tokens = False
        tokens.append(shaper.level)
        prev = dep
        if trace_packets:
            logger.debug(f"Packet {p.index} ({p.flow}) arrives {p.time}, eligible {elig}, departs {dep}")

    out = seq.with_times(departures)
    if not native_tokens:
        tokens = list(bucket_levels(out, contracts))
    return RegulatorTrace(seq, out, tuple(eligibility), tuple(tokens), tuple(binding))


class PerFlowRegulator:
    """FIFO shaper dedicated to one flow."""

    def __init__(self, contract: FlowContract, literal_pi: bool = False):
        self.contract = contract
        self.literal_pi = literal_pi

    def process(self, seq: PacketSequence) -> RegulatorTrace:
        """
        Raises:
            MultiFlowInputError: If a packet belongs to another flow.
            OversizedPacketError: If a packet exceeds the contract's burst.
        """
        foreign = [f for f in seq.flow_ids() if f != self.contract.flow]
        if foreign:
            raise MultiFlowInputError(
                f"PFR for flow {self.contract.flow} received packets of {foreign}"
            )
        trace = fifo_fold(
            seq,
            {self.contract.flow: self.contract},
            lambda c: MaxPlusShaper(c, literal=self.literal_pi),
        )
        logger.debug(f"PFR {self.contract.flow}: {len(seq)} packets processed")
        return trace


def pfr_process(seq: PacketSequence, contract: FlowContract) -> RegulatorTrace:
    return PerFlowRegulator(contract).process(seq)

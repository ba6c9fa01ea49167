from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from atscalc.regulators.per_flow_regulator import MaxPlusShaper, TokenBucketShaper, fifo_fold
from atscalc.regulators.regulator_trace import RegulatorTrace
from atscalc.traffic.conformance import FlowContract, check_arrival_curve
from atscalc.traffic.packet_sequence import PacketSequence, subsequence
from atscalc.utils.logger import get_logger

logger = get_logger("interleaved_regulator")

MAX_PLUS = "max_plus"
TOKENS = "tokens"


class MissingContractError(KeyError):
    """Raised when a packet's flow has no contract in the IR configuration."""
    pass


@dataclass(frozen=True)
class IRConfig:
    """Leaky-bucket contract per flow of the aggregate."""
    contracts: Mapping[str, FlowContract] = field(default_factory=dict)

    @classmethod
    def of(cls, contracts: Iterable[FlowContract]) -> "IRConfig":
        return cls({c.flow: c for c in contracts})

    @classmethod
    def uniform(cls, flows: Iterable[str], rate, burst) -> "IRConfig":
        return cls.of(FlowContract(f, rate, burst) for f in flows)

    def contract_for(self, flow: str) -> FlowContract:
        try:
            return self.contracts[flow]
        except KeyError:
            raise MissingContractError(f"No contract configured for flow {flow}") from None

    def require_flows(self, seq: PacketSequence) -> None:
        """
        Raises:
            MissingContractError: If a flow of ``seq`` is not configured.
        """
        for flow in set(seq.flows):
            self.contract_for(flow)

    @property
    def max_interval(self) -> Fraction:
        """I^max = max_f b_f / r_f."""
        return max(c.interval for c in self.contracts.values())


class InterleavedRegulator:
    """
    Single FIFO shaping an aggregate: only the head packet is examined and it
    blocks everything behind it until its own flow contract allows release.
    """

    def __init__(self, cfg: IRConfig, model: str = MAX_PLUS, literal_pi: bool = False):
        if model not in (MAX_PLUS, TOKENS):
            raise ValueError(f"Unknown IR model {model!r}")
        self.cfg = cfg
        self.model = model
        self.literal_pi = literal_pi

    def _make_shaper(self, contract: FlowContract):
        if self.model == TOKENS:
            return TokenBucketShaper(contract)
        return MaxPlusShaper(contract, literal=self.literal_pi)

    def process(self, seq: PacketSequence) -> RegulatorTrace:
        # packet sizes are checked by the fold
        self.cfg.require_flows(seq)
        trace = fifo_fold(seq, self.cfg.contracts, self._make_shaper)
        logger.debug(f"IR ({self.model}) processed {len(seq)} packets of {len(seq.flow_ids())} flows")
        return trace


def ir_process_max_plus(seq: PacketSequence, cfg: IRConfig, literal_pi: bool = False) -> RegulatorTrace:
    """Max-plus recurrence over per-flow shaper states; ``literal_pi`` evaluates Π over the whole flow history."""
    return InterleavedRegulator(cfg, MAX_PLUS, literal_pi).process(seq)


def ir_process_tokens(seq: PacketSequence, cfg: IRConfig) -> RegulatorTrace:
    """Token-bucket levels per flow, released at the head of the queue."""
    return InterleavedRegulator(cfg, TOKENS).process(seq)


# Alternative names of the two IR models
ir_process_leboudec = ir_process_max_plus
ir_process_boyer = ir_process_tokens


def earliest_release_violations(trace: RegulatorTrace, cfg: IRConfig, deltas: Optional[Iterable] = None) -> list:
    """
    Perturbation check of the earliest-release property.

    Each departure is moved earlier by every amount in ``deltas``; the move
    must break FIFO order, causality or the flow's contract. Returns the
    (index, delta) pairs for which nothing broke, which should be none.
    """
    deltas = [Fraction(d) for d in (deltas or (Fraction(1, 1000), Fraction(1, 10), Fraction(1)))]
    arrivals = trace.arrivals.times
    times = list(trace.departures.times)
    survivors = []
    for idx, dep in enumerate(times):
        flow = trace.departures.flows[idx]
        contract = cfg.contract_for(flow)
        for delta in deltas:
            moved = dep - delta
            if moved < arrivals[idx]:
                continue
            if idx > 0 and moved < times[idx - 1]:
                continue
            perturbed = trace.departures.with_times(times[:idx] + [moved] + times[idx + 1:])
            if check_arrival_curve(subsequence(perturbed, flow), contract.curve).ok:
                survivors.append((idx, delta))
    if survivors:
        logger.warning(f"Departures that could leave earlier: {survivors}")
    return survivors

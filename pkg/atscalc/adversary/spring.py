"""Spring: three leaky-bucket flows, a non-FIFO stage and an interleaved
regulator whose delays grow without bound.

Per period k (offsets plus kτ, every packet of size b):

    A times   d, I+ε, d+I, 2I+ε, 2I+2ε, 3I+2ε    flows f1 f2 f1 f2 f3 f3
    S1 delay  0, d,   0,   0,    d,     0
    B times   d, d+I, d+I+ε, 2I+ε, 2I+2ε+d, 3I+2ε   flows f1 f1 f2 f2 f3 f3

Trajectory 2 feeds the same A through an order-preserving stage that
produces the same B instants, with f2 and f1 exchanged at the 2nd and 3rd
position of every period.
"""
from dataclasses import dataclass
from fractions import Fraction

from atscalc.minplus.rational import from_json, q, to_json
from atscalc.traffic.conformance import FlowContract
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.utils.logger import get_logger

logger = get_logger("spring")

FLOWS = ("f1", "f2", "f3")

SOURCE_FLOWS = ("f1", "f2", "f1", "f2", "f3", "f3")
TRAJECTORY1_B_FLOWS = ("f1", "f1", "f2", "f2", "f3", "f3")
TRAJECTORY2_B_FLOWS = ("f1", "f2", "f1", "f2", "f3", "f3")

TRAJECTORY1 = "trajectory1"
TRAJECTORY2 = "trajectory2"


class InvalidSpringParameters(ValueError):
    """Raised when r, b, D, d, ε break the Spring inequalities."""
    pass


@dataclass(frozen=True)
class SpringParams:
    r: Fraction
    b: Fraction
    Dcap: Fraction
    I: Fraction
    d: Fraction
    eps: Fraction
    tau: Fraction

    @classmethod
    def direct(cls, r, b, Dcap, d, eps) -> "SpringParams":
        """
        Build from explicit d and ε, checking

            0 < d < min(I, D),  0 < ε < min(I - d, d/3),  τ = 3I + 3ε - d.

        Raises:
            InvalidSpringParameters: If any strict inequality fails.
        """
        r, b, Dcap, d, eps = q(r), q(b), q(Dcap), q(d), q(eps)
        if r <= 0 or b <= 0 or Dcap <= 0:
            raise InvalidSpringParameters(f"r, b and D must be > 0 (r={r}, b={b}, D={Dcap})")
        I = b / r
        if not 0 < d < min(I, Dcap):
            raise InvalidSpringParameters(f"Need 0 < d < min(I, D) = {min(I, Dcap)}, got d={d}")
        if not 0 < eps < min(I - d, d / 3):
            raise InvalidSpringParameters(f"Need 0 < eps < min(I - d, d/3) = {min(I - d, d / 3)}, got eps={eps}")
        return cls(r, b, Dcap, I, d, eps, 3 * I + 3 * eps - d)

    @property
    def contract_flows(self) -> tuple:
        return tuple(FlowContract(f, self.r, self.b) for f in FLOWS)

    @property
    def drift(self) -> Fraction:
        """3I - τ = d - 3ε, the delay gained by flow f1 every period."""
        return 3 * self.I - self.tau

    def to_json(self) -> dict:
        return {name: to_json(getattr(self, name)) for name in ("r", "b", "Dcap", "I", "d", "eps", "tau")}

    @classmethod
    def from_json(cls, doc: dict) -> "SpringParams":
        return cls.direct(*(from_json(doc[k]) for k in ("r", "b", "Dcap", "d", "eps")))


def spring_params(r, b, Dcap, d_fraction=Fraction(17, 20), eps_fraction=Fraction(1, 3)) -> SpringParams:
    """
    d = d_fraction * min(I, D) and ε = eps_fraction * min(I - d, d/3).

    Raises:
        InvalidSpringParameters: For non-positive inputs or fractions outside (0, 1).
    """
    r, b, Dcap = q(r), q(b), q(Dcap)
    d_fraction, eps_fraction = q(d_fraction), q(eps_fraction)
    for name, frac in (("d_fraction", d_fraction), ("eps_fraction", eps_fraction)):
        if not 0 < frac < 1:
            raise InvalidSpringParameters(f"{name} must lie in (0, 1), got {frac}")
    if r <= 0 or b <= 0 or Dcap <= 0:
        raise InvalidSpringParameters(f"r, b and D must be > 0 (r={r}, b={b}, D={Dcap})")
    I = b / r
    d = d_fraction * min(I, Dcap)
    eps = eps_fraction * min(I - d, d / 3)
    return SpringParams.direct(r, b, Dcap, d, eps)


@dataclass(frozen=True)
class TrajectoryBundle:
    """
    Source output A, regulator input B and the delays of the stage between.

    ``s_delays`` is indexed like A.
    """
    A: PacketSequence
    B: PacketSequence
    s_delays: tuple
    params: SpringParams
    label: str

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "params": self.params.to_json(),
            "A": self.A.to_json(),
            "B": self.B.to_json(),
            "s_delays": [to_json(x) for x in self.s_delays],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "TrajectoryBundle":
        return cls(
            A=PacketSequence.from_json(doc["A"]),
            B=PacketSequence.from_json(doc["B"]),
            s_delays=tuple(from_json(x) for x in doc["s_delays"]),
            params=SpringParams.from_json(doc["params"]),
            label=doc["label"],
        )


def _source_offsets(p: SpringParams) -> tuple:
    I, d, eps = p.I, p.d, p.eps
    return (d, I + eps, d + I, 2 * I + eps, 2 * I + 2 * eps, 3 * I + 2 * eps)


def _build(p: SpringParams, n_periods: int, delays: tuple, label: str) -> TrajectoryBundle:
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    offsets = _source_offsets(p)
    a_rows, b_rows, s_delays = [], [], []
    for k in range(n_periods):
        base = k * p.tau
        period = []
        for j, (offset, flow, delay) in enumerate(zip(offsets, SOURCE_FLOWS, delays)):
            t = base + offset
            a_rows.append((t, p.b, flow))
            s_delays.append(delay)
            period.append((t + delay, j))
        period.sort()
        b_rows.extend((t, p.b, SOURCE_FLOWS[j]) for t, j in period)
    bundle = TrajectoryBundle(
        A=PacketSequence.from_packets(a_rows),
        B=PacketSequence.from_packets(b_rows),
        s_delays=tuple(s_delays),
        params=p,
        label=label,
    )
    logger.debug(f"{label}: {n_periods} periods, {len(bundle.A)} packets, tau={p.tau}")
    return bundle


def trajectory1(p: SpringParams, n_periods: int) -> TrajectoryBundle:
    """Sources conformant, S1 FIFO per flow but not FIFO."""
    delays = (Fraction(0), p.d, Fraction(0), Fraction(0), p.d, Fraction(0))
    return _build(p, n_periods, delays, TRAJECTORY1)


def trajectory2(p: SpringParams, n_periods: int) -> TrajectoryBundle:
    """Same A and same B instants as trajectory1, through a FIFO stage."""
    delays = (Fraction(0), p.d - p.eps, p.eps, Fraction(0), p.d, Fraction(0))
    return _build(p, n_periods, delays, TRAJECTORY2)


def trajectory3(p: SpringParams, n_periods: int) -> PacketSequence:
    """Trajectory 1's regulator input, fed to the IR directly."""
    return trajectory1(p, n_periods).B

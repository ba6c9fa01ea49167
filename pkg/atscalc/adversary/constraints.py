from dataclasses import dataclass, field
from fractions import Fraction

from atscalc.adversary.spring import (
    FLOWS,
    TRAJECTORY1,
    TRAJECTORY1_B_FLOWS,
    TRAJECTORY2,
    TRAJECTORY2_B_FLOWS,
    TrajectoryBundle,
)
from atscalc.minplus.curve import leaky_bucket
from atscalc.traffic.conformance import (
    PairingError,
    check_arrival_curve,
    check_lossless,
    is_fifo,
    is_fifo_per_flow,
    packet_delays,
)
from atscalc.utils.logger import get_logger

logger = get_logger("constraints")


@dataclass(frozen=True)
class ConstraintItem:
    name: str
    ok: bool
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


@dataclass
class ConstraintReport:
    label: str
    items: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(item.ok for item in self.items)

    def failures(self) -> list:
        return [item.name for item in self.items if not item.ok]

    def item(self, name: str) -> ConstraintItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def add(self, name: str, ok: bool, detail: str = "") -> None:
        self.items.append(ConstraintItem(name, bool(ok), detail))

    def to_json(self) -> dict:
        return {"label": self.label, "ok": self.ok, "items": [it.to_json() for it in self.items]}


def _equalities(bundle: TrajectoryBundle) -> list:
    """(name, lhs, rhs) for every per-period identity of the construction."""
    p = bundle.params
    A, B = bundle.A.times, bundle.B.times
    periods = len(A) // 6
    out = [("drift", 3 * p.I - p.tau, p.d - 3 * p.eps)]
    for k in range(periods):
        base = 6 * k - 1
        out.append((f"A2-A1[{k}]", A[base + 2] - A[base + 1], p.I + p.eps - p.d))
        out.append((f"A3-A1[{k}]", A[base + 3] - A[base + 1], p.I))
        if bundle.label == TRAJECTORY1:
            out.append((f"B3-A2[{k}]", B[base + 3] - A[base + 2], p.d))
            out.append((f"B2-A3[{k}]", B[base + 2] - A[base + 3], Fraction(0)))
        elif bundle.label == TRAJECTORY2:
            out.append((f"B2-A2[{k}]", B[base + 2] - A[base + 2], p.d - p.eps))
        if k + 1 < periods:
            out.append((f"A1'-A3[{k}]", A[6 * (k + 1)] - A[base + 3], p.tau - p.I))
            out.append((f"B1'-B6[{k}]", B[6 * (k + 1)] - B[base + 6], p.eps))
    return out


def constraint_check(bundle: TrajectoryBundle) -> ConstraintReport:
    """
    Check the premises a Spring bundle must meet: conformant sources, a
    causal lossless FIFO-per-flow stage with delays in [0, d], d < D, the
    ordering of the stage for the bundle's label, and every per-period
    identity of the construction.
    """
    p = bundle.params
    report = ConstraintReport(bundle.label)
    gamma = leaky_bucket(p.r, p.b)

    for flow in FLOWS:
        res = check_arrival_curve(bundle.A, gamma, flow)
        report.add(f"source_conformance[{flow}]", res.ok, "" if res.ok else f"window ({res.s}, {res.t}] exceeds by {res.excess}")

    strictly = all(x < y for x, y in zip(bundle.A.times, bundle.A.times[1:]))
    report.add("source_order", strictly, "A times strictly increase")

    try:
        check_lossless(bundle.A, bundle.B)
        measured = packet_delays(bundle.A, bundle.B)
        report.add("lossless", True)
    except PairingError as e:
        report.add("lossless", False, str(e))
        measured = None

    if measured is not None:
        report.add("fifo_per_flow", is_fifo_per_flow(bundle.A, bundle.B))
        fifo = is_fifo(bundle.A, bundle.B)
        if bundle.label == TRAJECTORY1:
            report.add("stage_not_fifo", not fifo, "S1 reorders flows")
        elif bundle.label == TRAJECTORY2:
            report.add("stage_fifo", fifo, "S2 preserves order")
        report.add("recorded_delays", list(bundle.s_delays) == measured)

    observed = list(bundle.s_delays) + (measured or [])
    worst = max(observed) if observed else Fraction(0)
    in_range = all(0 <= x <= p.d for x in observed)
    report.add("delay_bound", in_range and p.d < p.Dcap, f"max delay {worst}, d={p.d}, D={p.Dcap}")

    expected_flows = {TRAJECTORY1: TRAJECTORY1_B_FLOWS, TRAJECTORY2: TRAJECTORY2_B_FLOWS}.get(bundle.label)
    if expected_flows is not None:
        flows_ok = all(
            bundle.B.flows[i] == expected_flows[i % 6] for i in range(len(bundle.B))
        )
        report.add("regulator_input_flows", flows_ok)

    bad = [(name, lhs, rhs) for name, lhs, rhs in _equalities(bundle) if lhs != rhs]
    report.add("construction_identities", not bad, "" if not bad else f"first mismatch {bad[0]}")

    if report.ok:
        logger.info(f"{bundle.label}: all {len(report.items)} constraint items hold")
    else:
        logger.warning(f"{bundle.label}: failing items {report.failures()}")
    return report

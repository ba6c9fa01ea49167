"""Experiments that confirm or refute service-curve claims about the IR on
the Spring family of trajectories."""
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from atscalc.adversary.insertion import trajectory_xm
from atscalc.adversary.spring import SpringParams, spring_params, trajectory2, trajectory3
from atscalc.minplus.curve import Curve, agrees_on, constant_after, leaky_bucket, rate_latency, staircase
from atscalc.minplus.operators import long_term_rate
from atscalc.minplus.rational import Number, is_inf, q, to_json
from atscalc.regulators.interleaved_regulator import IRConfig, ir_process_max_plus
from atscalc.traffic.conformance import FlowContract, check_arrival_curve
from atscalc.traffic.cumulative import cumulative_of
from atscalc.utils.logger import get_logger
from atscalc.verify.delay_growth import delay_growth
from atscalc.verify.residual import first_packet_delay_bound, fifo_residual
from atscalc.verify.service_checks import check_sc

logger = get_logger("experiments")

THETA_GRID_MULTIPLES = 20


class InfeasibleParametersError(ValueError):
    """Raised when experiment parameters break the construction's preconditions."""
    pass


# ---------------------------------------------------------
# Strict service curves of an IR configuration
# ---------------------------------------------------------
@dataclass(frozen=True)
class IRServiceCurves:
    L_min: Fraction
    I_max: Fraction
    base: Curve
    staircase: Curve
    rate_latency: Curve


def ir_strict_service_curves(cfg: IRConfig, L_min, closed: bool = True) -> IRServiceCurves:
    """
    β_0 = L^min once t reaches I^max, its closure β_sc(t) = floor(t / I^max)·L^min,
    and the rate-latency minorant β_{L^min/I^max, I^max}.
    """
    L_min = q(L_min)
    I_max = cfg.max_interval
    return IRServiceCurves(
        L_min=L_min,
        I_max=I_max,
        base=constant_after(L_min, I_max, closed=closed),
        staircase=staircase(L_min, I_max),
        rate_latency=rate_latency(L_min / I_max, I_max),
    )


def spring_ir_config(p: SpringParams, extra: Iterable[FlowContract] = ()) -> IRConfig:
    """Every Spring flow shaped by γ_{r,b}, plus optional extra flows."""
    return IRConfig.of(list(p.contract_flows) + list(extra))


# ---------------------------------------------------------
# Trajectories 2 and 3: same aggregate input, different fates
# ---------------------------------------------------------
@dataclass
class SameInputReport:
    n_periods: int
    same_aggregate_input: bool
    trajectory2_growth: object
    trajectory3_growth: object
    trajectory2_max_delay: Fraction
    d: Fraction
    sum_of_shaping_curves: object

    @property
    def ok(self) -> bool:
        """Aggregate inputs agree, Trajectory 2 stays within d, Trajectory 3 drifts and refutes Σσ_f."""
        return (
            self.same_aggregate_input
            and self.trajectory2_growth.increment == 0
            and self.trajectory2_max_delay <= self.d
            and self.trajectory3_growth.increment > 0
            and not self.sum_of_shaping_curves.ok
        )

    def to_json(self) -> dict:
        return {
            "n_periods": self.n_periods,
            "same_aggregate_input": self.same_aggregate_input,
            "trajectory2_growth": self.trajectory2_growth.to_json(),
            "trajectory3_growth": self.trajectory3_growth.to_json(),
            "trajectory2_max_delay": to_json(self.trajectory2_max_delay),
            "d": to_json(self.d),
            "sum_of_shaping_curves": self.sum_of_shaping_curves.to_json(),
            "ok": self.ok,
        }


def thm4_experiment(p: SpringParams, n_periods: int = 50) -> SameInputReport:
    """
    Trajectories 2 and 3 present the IR with the same aggregate input. The
    IR keeps Trajectory 2 within d while Trajectory 3's delay grows by
    d - 3ε per period, so Σσ_f = γ_{3r,3b} is no service curve on Trajectory 3.
    """
    cfg = spring_ir_config(p)
    b2 = trajectory2(p, n_periods).B
    b3 = trajectory3(p, n_periods)
    horizon = max(b2.times[-1], b3.times[-1]) + 1
    same = agrees_on(cumulative_of(b2).curve, cumulative_of(b3).curve, horizon)

    d2 = ir_process_max_plus(b2, cfg).departures
    d3 = ir_process_max_plus(b3, cfg).departures
    growth2 = delay_growth(b2, d2)
    growth3 = delay_growth(b3, d3)
    max2 = max(d - a for a, d in zip(b2.times, d2.times))

    sigma = leaky_bucket(3 * p.r, 3 * p.b)
    sc = check_sc(cumulative_of(b3), cumulative_of(d3), sigma, claim="sum_of_shaping_curves")
    report = SameInputReport(n_periods, same, growth2, growth3, max2, p.d, sc)
    logger.info(
        f"Trajectory 2 increment {growth2.increment}, Trajectory 3 increment {growth3.increment}, "
        f"sum of shaping curves {sc.verdict}"
    )
    return report


# ---------------------------------------------------------
# Individual service curve of a fourth flow g
# ---------------------------------------------------------
@dataclass
class CandidateVerdict:
    name: str
    delay_bound: Number
    refuted: bool

    def to_json(self) -> dict:
        return {"name": self.name, "delay_bound": to_json(self.delay_bound), "refuted": self.refuted}


@dataclass
class XmDelayReport:
    M: Fraction
    k: int
    b1: Fraction
    insert_index: int
    measured_delay: Fraction
    guaranteed_delay: Fraction
    f1_conformant: bool
    candidates: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.f1_conformant and self.measured_delay >= self.M

    def to_json(self) -> dict:
        return {
            "M": to_json(self.M),
            "k": self.k,
            "b1": to_json(self.b1),
            "insert_index": self.insert_index,
            "measured_delay": to_json(self.measured_delay),
            "guaranteed_delay": to_json(self.guaranteed_delay),
            "f1_conformant": self.f1_conformant,
            "candidates": [c.to_json() for c in self.candidates],
            "ok": self.ok,
        }


def default_b1(p: SpringParams) -> Fraction:
    """b_1 = b + r·D, the f1 burst at the IR input that Spring's D corresponds to."""
    return p.b + p.r * p.Dcap


def thm6_experiment(p: SpringParams, b1=None, M=None, L_g=None, candidates: Optional[dict] = None,
                    g: str = "g") -> XmDelayReport:
    """
    Run the x_M trajectory through the IR and measure the delay of the
    single packet of g. A candidate individual service curve β_g promises a
    delay of at most inf{t : β_g(t) ≥ L_g}; it is refuted when the measured
    delay exceeds that promise.

    Raises:
        InfeasibleParametersError: If b1 ≤ b + r·d (then f1 is not
            γ_{r,b1}-constrained on Trajectory 3) or L_g is not in (0, b].
    """
    b1 = default_b1(p) if b1 is None else q(b1)
    M = 10 * p.I if M is None else q(M)
    L_g = p.b if L_g is None else q(L_g)
    if b1 <= p.b:
        raise InfeasibleParametersError(f"Need b1 > b = {p.b}, got {b1}")
    if b1 <= p.b + p.r * p.d:
        raise InfeasibleParametersError(f"Need b1 > b + r*d = {p.b + p.r * p.d}, got {b1}")
    if not 0 < L_g <= p.b:
        raise InfeasibleParametersError(f"L_g must lie in (0, b={p.b}], got {L_g}")
    if candidates is None:
        candidates = {
            "rate_latency(r, I)": rate_latency(p.r, p.I),
            "constant(L_g)": constant_after(L_g, p.I),
        }

    xm = trajectory_xm(p, M, L_g, g)
    cfg = spring_ir_config(p, [FlowContract(g, p.r, p.b)])
    out = ir_process_max_plus(xm.sequence, cfg).departures
    measured = out.times[xm.insert_index] - xm.insert_time
    f1_ok = check_arrival_curve(xm.sequence, leaky_bucket(p.r, b1), "f1").ok

    verdicts = []
    for name, curve in candidates.items():
        bound = first_packet_delay_bound(curve, L_g, strict=True)
        verdicts.append(CandidateVerdict(name, bound, not is_inf(bound) and measured > bound))
    report = XmDelayReport(M, xm.k, b1, xm.insert_index, measured, xm.guaranteed_delay, f1_ok, verdicts)
    logger.info(f"x_M with M={M}: k={xm.k}, packet of {g} delayed by {measured} (guaranteed {xm.guaranteed_delay})")
    return report


# ---------------------------------------------------------
# Long-term rate of an individual service curve
# ---------------------------------------------------------
@dataclass
class ThetaDiagnostic:
    theta: Fraction
    delay_bound: Number

    def to_json(self) -> dict:
        return {"theta": to_json(self.theta), "delay_bound": to_json(self.delay_bound)}


@dataclass
class RateLimitReport:
    long_term_rate: Number
    limit_rate: Fraction
    flagged: bool
    refuting_theta: Optional[Fraction]
    diagnostics: list
    witness_delay: Optional[Fraction] = None
    witness_bound: Optional[Fraction] = None

    @property
    def witness_ok(self) -> Optional[bool]:
        if self.witness_delay is None:
            return None
        return self.witness_delay > self.witness_bound

    def to_json(self) -> dict:
        return {
            "long_term_rate": to_json(self.long_term_rate),
            "limit_rate": to_json(self.limit_rate),
            "flagged": self.flagged,
            "refuting_theta": None if self.refuting_theta is None else to_json(self.refuting_theta),
            "diagnostics": [d.to_json() for d in self.diagnostics],
            "witness_delay": None if self.witness_delay is None else to_json(self.witness_delay),
            "witness_bound": None if self.witness_bound is None else to_json(self.witness_bound),
        }


def default_theta_grid(p: SpringParams) -> list:
    return [k * p.I for k in range(THETA_GRID_MULTIPLES + 1)]


def thm7_experiment(p: SpringParams, candidate: Curve, theta_grid: Optional[Iterable] = None,
                    eps_prime=None, L_g=None, replay: bool = True) -> RateLimitReport:
    """
    Check a candidate individual service curve β against the 3r limit.

    For each θ of the grid the FIFO residual of β against α = γ_{3r, 3b+ε'}
    is closed from below and turned into a first-packet delay bound. A
    candidate is flagged when its long-term rate exceeds 3r; the first θ
    with a finite bound is then the refuting θ, and with ``replay`` the
    bound u is beaten on an x_M trajectory with M = u + I built for
    D = ε'/r (so that f1 is γ_{r, b+ε'}-constrained).
    """
    theta_grid = default_theta_grid(p) if theta_grid is None else [q(t) for t in theta_grid]
    eps_prime = p.eps if eps_prime is None else q(eps_prime)
    L_g = p.b if L_g is None else q(L_g)
    alpha = leaky_bucket(3 * p.r, 3 * p.b + eps_prime)
    horizon = max(theta_grid) + THETA_GRID_MULTIPLES * p.I if candidate.is_periodic else None

    rate = long_term_rate(candidate)
    limit = 3 * p.r
    flagged = is_inf(rate) or rate > limit

    diagnostics = []
    for theta in theta_grid:
        residual = fifo_residual(candidate, alpha, theta, horizon)
        diagnostics.append(ThetaDiagnostic(theta, first_packet_delay_bound(residual.closure, L_g)))
    finite = [d for d in diagnostics if not is_inf(d.delay_bound)]
    refuting = finite[0] if flagged and finite else None
    report = RateLimitReport(rate, limit, flagged, None if refuting is None else refuting.theta, diagnostics)

    if refuting is not None and replay:
        witness_params = spring_params(p.r, p.b, eps_prime / p.r)
        m = refuting.delay_bound + witness_params.I
        replayed = thm6_experiment(witness_params, b1=p.b + eps_prime, M=m, L_g=L_g, candidates={})
        report.witness_delay = replayed.measured_delay
        report.witness_bound = refuting.delay_bound
    logger.info(
        f"Candidate rate {rate} vs 3r = {limit}: flagged={flagged}, refuting theta={report.refuting_theta}"
    )
    return report

"""Orchestration behind the CLI subcommands.

Each ``cmd_*`` takes a validated ScenarioConfig, writes its files under
``<out_dir>/<command>/`` and returns a CommandOutcome whose exit code is 0
when the experiment comes out as expected and 2 when a claim is violated.
"""
import os
from dataclasses import dataclass, field

from atscalc.adversary.constraints import constraint_check
from atscalc.adversary.overdrive import overdrive_trajectory
from atscalc.adversary.spring import FLOWS, trajectory1
from atscalc.minplus.curve import agrees_on, leaky_bucket
from atscalc.minplus.operators import super_additive_closure
from atscalc.minplus.rational import decimal_text, to_json
from atscalc.regulators.interleaved_regulator import IRConfig, ir_process_max_plus
from atscalc.runner.emitters import ensure_dir, figure_rows, write_figure_csv, write_json
from atscalc.runner.scenario_config import ScenarioConfig
from atscalc.traffic.conformance import FlowContract, minimal_burst
from atscalc.traffic.cumulative import cumulative_of
from atscalc.utils.logger import get_logger
from atscalc.verify.backlog import backlogged_periods
from atscalc.verify.delay_growth import MIN_PERIODS, delay_growth, departure_bounds_check
from atscalc.verify.experiments import (
    ir_strict_service_curves,
    spring_ir_config,
    thm4_experiment,
    thm6_experiment,
    thm7_experiment,
)
from atscalc.verify.randomized import (
    equivalence_suite,
    ir_shaping_suite,
    pfr_shaping_suite,
    strict_service_suite,
)
from atscalc.verify.service_checks import check_strict_sc

logger = get_logger("commands")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VIOLATION = 2

CLOSURE_PERIODS = 20


@dataclass
class CommandOutcome:
    name: str
    exit_code: int
    files: list = field(default_factory=list)
    summary: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"name": self.name, "exit_code": self.exit_code, "files": self.files, "summary": self.summary}


def _out(cfg: ScenarioConfig, name: str) -> str:
    return ensure_dir(os.path.join(cfg.output.out_dir, name))


def _code(ok: bool) -> int:
    return EXIT_OK if ok else EXIT_VIOLATION


# ---------------------------------------------------------
# Spring (unbounded delay, input/output curve data)
# ---------------------------------------------------------
def cmd_spring(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "spring")
    bundle = trajectory1(p, cfg.n_periods)
    constraints = constraint_check(bundle)
    trace = ir_process_max_plus(bundle.B, spring_ir_config(p))

    growth = None
    if cfg.n_periods >= MIN_PERIODS:
        growth = delay_growth(bundle.B, trace.departures)
    bound_break = departure_bounds_check(bundle.B, trace.departures, p.I)

    inflow, outflow = cumulative_of(bundle.B), cumulative_of(trace.departures)
    bursts = {f: minimal_burst(bundle.B, p.r, f) for f in FLOWS}
    alpha = leaky_bucket(len(FLOWS) * p.r, sum(bursts.values()))
    beta = ir_strict_service_curves(spring_ir_config(p), p.b).rate_latency
    periods = backlogged_periods(inflow, outflow)
    anchor = periods[0].start if periods else None

    files = [
        os.path.join(out, "trace.csv"),
        write_figure_csv(os.path.join(out, "figure.csv"), figure_rows(inflow, outflow, alpha, beta, anchor)),
        write_json(os.path.join(out, "bundle.json"), bundle.to_json()),
    ]
    trace.to_csv(files[0])

    ok = constraints.ok and bound_break is None and (growth is None or growth.increment == p.drift)
    report = {
        "params": p.to_json(),
        "n_periods": cfg.n_periods,
        "constraints": constraints.to_json(),
        "growth": None if growth is None else growth.to_json(),
        "expected_increment": to_json(p.drift),
        "departure_bound_violation": bound_break,
        "regulator_input_bursts": {f: to_json(b) for f, b in bursts.items()},
        "ok": ok,
    }
    files.append(write_json(os.path.join(out, "report.json"), report))
    summary = [
        ("constraints", "pass" if constraints.ok else f"fail {constraints.failures()}"),
        ("delay increment", "n/a" if growth is None else str(growth.increment)),
        ("expected increment", str(p.drift)),
        ("max delay", decimal_text(max(trace.delays()))),
        ("departure lower bounds", "hold" if bound_break is None else f"break at {bound_break}"),
    ]
    return CommandOutcome("spring", _code(ok), files, summary)


# ---------------------------------------------------------
# Strict service curves of the IR
# ---------------------------------------------------------
def cmd_strict_sc(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "strict_sc")
    ir_cfg = spring_ir_config(p)
    seq = trajectory1(p, cfg.n_periods).B
    departures = ir_process_max_plus(seq, ir_cfg).departures
    curves = ir_strict_service_curves(ir_cfg, p.b)
    inflow, outflow = cumulative_of(seq), cumulative_of(departures)
    spring_checks = [
        check_strict_sc(inflow, outflow, curves.staircase, claim="staircase"),
        check_strict_sc(inflow, outflow, curves.rate_latency, claim="rate_latency"),
    ]
    horizon = CLOSURE_PERIODS * curves.I_max
    closure_ok = agrees_on(super_additive_closure(curves.base, horizon), curves.staircase, horizon)
    suite = strict_service_suite(
        cfg.seed,
        cfg.random.strict_sc_count,
        cfg.workers,
        max_packets=cfg.random.max_packets,
        max_flows=cfg.random.max_flows,
    )
    ok = all(c.ok for c in spring_checks) and closure_ok and suite.ok
    report = {
        "spring": [c.to_json() for c in spring_checks],
        "closure_matches_staircase": closure_ok,
        "random": suite.to_json(),
        "ok": ok,
    }
    files = [write_json(os.path.join(out, "report.json"), report)]
    summary = [(f"spring vs {c.claim}", c.verdict) for c in spring_checks]
    summary += [
        ("closure of base curve", "staircase" if closure_ok else "differs"),
        (f"random trajectories ({suite.count})", f"{len(suite.failures)} violations"),
    ]
    return CommandOutcome("strict-sc", _code(ok), files, summary)


# ---------------------------------------------------------
# Overdrive: strict service curves stay below every shaping curve
# ---------------------------------------------------------
def cmd_prop2(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "prop2")
    contract = FlowContract("f", p.r, p.b)
    seq = overdrive_trajectory("f", contract, cfg.prop2.n)
    departures = ir_process_max_plus(seq, IRConfig.of([contract])).departures
    expected = [k * p.I for k in range(cfg.prop2.n)]
    departures_match = list(departures.times) == expected
    candidate = cfg.prop2.candidate.build()
    check = check_strict_sc(cumulative_of(seq), cumulative_of(departures), candidate, claim="prop2_candidate")
    report = {
        "departures": [to_json(t) for t in departures.times],
        "departures_match": departures_match,
        "check": check.to_json(),
    }
    files = [write_json(os.path.join(out, "report.json"), report)]
    summary = [
        ("departures 0, I, 2I, ...", "yes" if departures_match else "no"),
        ("candidate", check.verdict),
    ]
    if check.witness is not None:
        w = check.witness
        summary.append(("witness", f"({w.s}, {w.t}]: {w.lhs} < {w.rhs}"))
    return CommandOutcome("prop2", _code(check.ok), files, summary)


# ---------------------------------------------------------
# x_M: unbounded delay of a fourth flow's first packet
# ---------------------------------------------------------
def cmd_xm(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "xm")
    report = thm6_experiment(p, b1=cfg.xm.b1, M=cfg.xm.M, L_g=cfg.xm.L_g)
    files = [write_json(os.path.join(out, "report.json"), report.to_json())]
    summary = [
        ("M", str(report.M)),
        ("k", str(report.k)),
        ("measured delay", str(report.measured_delay)),
        ("guaranteed delay", str(report.guaranteed_delay)),
    ]
    summary += [(f"candidate {c.name}", "refuted" if c.refuted else "not refuted") for c in report.candidates]
    return CommandOutcome("xm", _code(report.ok), files, summary)


# ---------------------------------------------------------
# FIFO residuals and the 3r limit
# ---------------------------------------------------------
def cmd_residual(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "residual")
    section = cfg.residual
    results = {}
    summary = []
    ok = True
    for name, spec in section.candidates.items():
        report = thm7_experiment(p, spec.build(), section.theta_grid, section.eps_prime, replay=section.replay)
        results[name] = report.to_json()
        if report.flagged and section.replay and not report.witness_ok:
            ok = False
        verdict = "flagged" if report.flagged else "not flagged"
        if report.refuting_theta is not None:
            verdict += f" (theta={report.refuting_theta})"
        summary.append((name, verdict))
    files = [write_json(os.path.join(out, "report.json"), {"candidates": results, "ok": ok})]
    return CommandOutcome("residual", _code(ok), files, summary)


# ---------------------------------------------------------
# Randomized suites
# ---------------------------------------------------------
def cmd_equivalence(cfg: ScenarioConfig) -> CommandOutcome:
    out = _out(cfg, "equivalence")
    suite = equivalence_suite(
        cfg.seed, cfg.count, cfg.workers, max_packets=cfg.random.max_packets, max_flows=cfg.random.max_flows
    )
    files = [write_json(os.path.join(out, "report.json"), suite.to_json())]
    summary = [("sequences", str(suite.count)), ("mismatches", str(len(suite.failures)))]
    return CommandOutcome("equivalence", _code(suite.ok), files, summary)


def cmd_shaping(cfg: ScenarioConfig) -> CommandOutcome:
    out = _out(cfg, "shaping")
    count, packets = cfg.random.shaping_count, cfg.random.max_packets
    suites = [
        pfr_shaping_suite(cfg.seed, count, cfg.workers, max_packets=packets),
        ir_shaping_suite(cfg.seed, count, cfg.workers, max_packets=packets, max_flows=cfg.random.max_flows),
    ]
    files = [write_json(os.path.join(out, "report.json"), {"suites": [s.to_json() for s in suites]})]
    summary = [(s.name, f"{len(s.failures)} of {s.count} cases differ") for s in suites]
    return CommandOutcome("shaping", _code(all(s.ok for s in suites)), files, summary)


def cmd_thm4(cfg: ScenarioConfig) -> CommandOutcome:
    p = cfg.spring.params()
    out = _out(cfg, "thm4")
    report = thm4_experiment(p, max(cfg.n_periods, MIN_PERIODS))
    files = [write_json(os.path.join(out, "report.json"), report.to_json())]
    summary = [
        ("same aggregate input", str(report.same_aggregate_input)),
        ("trajectory 2 increment", str(report.trajectory2_growth.increment)),
        ("trajectory 3 increment", str(report.trajectory3_growth.increment)),
        ("sum of shaping curves", report.sum_of_shaping_curves.verdict),
    ]
    return CommandOutcome("thm4", _code(report.ok), files, summary)


# ---------------------------------------------------------
# Everything
# ---------------------------------------------------------
COMMANDS = {
    "spring": cmd_spring,
    "strict-sc": cmd_strict_sc,
    "prop2": cmd_prop2,
    "xm": cmd_xm,
    "residual": cmd_residual,
    "equivalence": cmd_equivalence,
    "shaping": cmd_shaping,
    "thm4": cmd_thm4,
}

# prop2 checks a curve that must fail
EXPECTED_EXIT = {"prop2": EXIT_VIOLATION}


def cmd_report_all(cfg: ScenarioConfig) -> CommandOutcome:
    """Run every command; passes when each one ends with its expected exit code."""
    out = _out(cfg, "report_all")
    outcomes = []
    for name, command in COMMANDS.items():
        logger.info(f"report-all: running {name}")
        outcomes.append(command(cfg))
    rows = []
    ok = True
    for o in outcomes:
        expected = EXPECTED_EXIT.get(o.name, EXIT_OK)
        matches = o.exit_code == expected
        ok = ok and matches
        rows.append((o.name, f"exit {o.exit_code} ({'as expected' if matches else f'expected {expected}'})"))
    files = [write_json(os.path.join(out, "report.json"), {"commands": [o.to_json() for o in outcomes], "ok": ok})]
    for o in outcomes:
        files.extend(o.files)
    return CommandOutcome("report-all", _code(ok), files, rows)

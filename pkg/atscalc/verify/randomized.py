"""Seeded random trajectories and the randomized suites built on them.

Every case draws from its own ``random.Random(f"{seed}:{index}")`` so a
suite gives the same verdicts whatever the number of worker processes.
"""
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from tqdm import tqdm

from atscalc.regulators.interleaved_regulator import IRConfig, ir_process_tokens, ir_process_max_plus
from atscalc.regulators.per_flow_regulator import TokenBucketShaper, pfr_process
from atscalc.traffic.conformance import FlowContract, max_delay
from atscalc.traffic.cumulative import cumulative_of
from atscalc.traffic.packet_sequence import PacketSequence, merge_by_time
from atscalc.utils.logger import get_logger
from atscalc.verify.experiments import ir_strict_service_curves
from atscalc.verify.service_checks import check_strict_sc

logger = get_logger("randomized")

GRID = 8
MAX_FLOWS = 5
MAX_PACKETS = 200
CHUNK = 250


# ---------------------------------------------------------
# Generators
# ---------------------------------------------------------
def random_rational(rng: random.Random, lo, hi, denominator: int = GRID) -> Fraction:
    """Uniform on the 1/denominator grid of [lo, hi]."""
    return Fraction(rng.randint(int(lo * denominator), int(hi * denominator)), denominator)


def random_ir_config(rng: random.Random, max_flows: int = MAX_FLOWS) -> IRConfig:
    contracts = []
    for i in range(rng.randint(1, max_flows)):
        rate = Fraction(rng.randint(1, 8), rng.randint(1, 4))
        burst = Fraction(rng.randint(2, 12), 4)
        contracts.append(FlowContract(f"f{i + 1}", rate, burst))
    return IRConfig.of(contracts)


def random_sizes_between(rng: random.Random, lo: Fraction, hi: Fraction) -> Fraction:
    return lo + (hi - lo) * Fraction(rng.randint(0, 4), 4)


def random_sequence(rng: random.Random, cfg: IRConfig, n_packets: int, L_min: Optional[Fraction] = None) -> PacketSequence:
    """
    Arbitrary (not necessarily conformant) aggregate input on a 1/8 grid;
    sizes lie in [L_min, b_f]. Zero gaps produce simultaneous arrivals.
    """
    flows = sorted(cfg.contracts)
    low = L_min if L_min is not None else min(c.burst for c in cfg.contracts.values()) / 4
    spread = cfg.max_interval
    t = Fraction(0)
    rows = []
    for _ in range(n_packets):
        if rng.random() > 0.2:
            t += random_rational(rng, 0, spread)
        flow = rng.choice(flows)
        rows.append((t, random_sizes_between(rng, low, cfg.contracts[flow].burst), flow))
    return PacketSequence.from_packets(rows)


def conformant_source(rng: random.Random, contract: FlowContract, n_packets: int) -> PacketSequence:
    """Packets no earlier than the contract allows, with random idle gaps."""
    shaper = TokenBucketShaper(contract)
    t = Fraction(0)
    rows = []
    for _ in range(n_packets):
        size = random_sizes_between(rng, contract.burst / 4, contract.burst)
        if rng.random() < 0.5:
            t += random_rational(rng, 0, contract.interval)
        t = max(t, shaper.eligibility(size))
        shaper.release(t, size)
        rows.append((t, size, contract.flow))
    return PacketSequence.from_packets(rows)


def fifo_upstream(rng: random.Random, seq: PacketSequence, bound: Fraction) -> PacketSequence:
    """B_n = max(A_n + δ_n, B_{n-1}) with δ_n drawn in [0, bound]."""
    times = []
    prev = Fraction(0)
    for t in seq.times:
        prev = max(t + random_rational(rng, 0, bound), prev)
        times.append(prev)
    return seq.with_times(times)


# ---------------------------------------------------------
# Suites
# ---------------------------------------------------------
@dataclass
class SuiteReport:
    name: str
    seed: int
    count: int
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "seed": self.seed,
            "count": self.count,
            "failures": [{"case": i, "detail": d} for i, d in self.failures],
            "ok": self.ok,
        }


def resolve_workers(workers: int) -> int:
    """0 means one worker per CPU."""
    return workers if workers > 0 else (os.cpu_count() or 1)


def _run_cases(case: Callable, seed: int, indices: range, kwargs: dict) -> list:
    return [(i, case(random.Random(f"{seed}:{i}"), **kwargs)) for i in indices]


def run_suite(name: str, case: Callable, seed: int, count: int, workers: int = 1, **kwargs) -> SuiteReport:
    """
    Run ``case(rng, **kwargs)`` for ``count`` seeded cases; a case returns
    None when it holds or a short text describing the failure.

    More than one worker fans chunks of cases out to worker processes, so
    ``case`` must then be a module-level function.
    """
    workers = resolve_workers(workers)
    results = {}
    progress = tqdm(total=count, desc=name, unit="case", disable=not sys.stderr.isatty())
    if workers == 1:
        for i in range(count):
            results[i] = case(random.Random(f"{seed}:{i}"), **kwargs)
            progress.update(1)
    elif count:
        size = max(1, min(CHUNK, -(-count // (4 * workers))))
        chunks = [range(lo, min(lo + size, count)) for lo in range(0, count, size)]
        with ProcessPoolExecutor(max_workers=min(workers, len(chunks))) as executor:
            futures = [executor.submit(_run_cases, case, seed, chunk, kwargs) for chunk in chunks]
            for future in as_completed(futures):
                done = future.result()
                results.update(done)
                progress.update(len(done))
    progress.close()

    failures = [(i, results[i]) for i in range(count) if results[i] is not None]
    report = SuiteReport(name, seed, count, failures)
    if failures:
        logger.warning(f"{name}: {len(failures)} of {count} cases failed, first {failures[0]}")
    else:
        logger.info(f"{name}: all {count} cases hold (seed {seed}, {workers} workers)")
    return report


def equivalence_case(rng: random.Random, max_packets: int = MAX_PACKETS, max_flows: int = MAX_FLOWS) -> Optional[str]:
    cfg = random_ir_config(rng, max_flows)
    seq = random_sequence(rng, cfg, rng.randint(1, max_packets))
    left = ir_process_max_plus(seq, cfg).departures.times
    right = ir_process_tokens(seq, cfg).departures.times
    for idx, (a, b) in enumerate(zip(left, right)):
        if a != b:
            return f"packet {idx}: max-plus model {a}, token model {b}"
    return None


def strict_service_case(rng: random.Random, max_packets: int = MAX_PACKETS, max_flows: int = MAX_FLOWS) -> Optional[str]:
    cfg = random_ir_config(rng, max_flows)
    L_min = min(c.burst for c in cfg.contracts.values()) / 2
    seq = random_sequence(rng, cfg, rng.randint(1, max_packets), L_min)
    out = ir_process_max_plus(seq, cfg).departures
    curves = ir_strict_service_curves(cfg, L_min)
    inflow, outflow = cumulative_of(seq), cumulative_of(out)
    for name, beta in (("staircase", curves.staircase), ("rate_latency", curves.rate_latency)):
        report = check_strict_sc(inflow, outflow, beta, claim=name)
        if not report.ok:
            w = report.witness
            return f"{name} violated on ({w.s}, {w.t}]: {w.lhs} < {w.rhs}"
    return None


def pfr_shaping_case(rng: random.Random, max_packets: int = MAX_PACKETS) -> Optional[str]:
    contract = random_ir_config(rng, 1).contract_for("f1")
    source = conformant_source(rng, contract, rng.randint(1, max_packets))
    upstream = fifo_upstream(rng, source, 2 * contract.interval)
    out = pfr_process(upstream, contract).departures
    alone, total = max_delay(source, upstream), max_delay(source, out)
    return None if alone == total else f"FIFO alone {alone}, FIFO + PFR {total}"


def ir_shaping_case(rng: random.Random, max_packets: int = MAX_PACKETS, max_flows: int = MAX_FLOWS) -> Optional[str]:
    cfg = random_ir_config(rng, max_flows)
    per_flow = max(1, rng.randint(1, max_packets) // len(cfg.contracts))
    source = merge_by_time(*(conformant_source(rng, c, per_flow) for c in cfg.contracts.values()))
    upstream = fifo_upstream(rng, source, 2 * cfg.max_interval)
    out = ir_process_max_plus(upstream, cfg).departures
    alone, total = max_delay(source, upstream), max_delay(source, out)
    return None if alone == total else f"FIFO alone {alone}, FIFO + IR {total}"


def equivalence_suite(seed: int, count: int, workers: int = 1, **kwargs) -> SuiteReport:
    return run_suite("equivalence", equivalence_case, seed, count, workers, **kwargs)


def strict_service_suite(seed: int, count: int, workers: int = 1, **kwargs) -> SuiteReport:
    return run_suite("strict_service", strict_service_case, seed, count, workers, **kwargs)


def pfr_shaping_suite(seed: int, count: int, workers: int = 1, **kwargs) -> SuiteReport:
    return run_suite("pfr_shaping_for_free", pfr_shaping_case, seed, count, workers, **kwargs)


def ir_shaping_suite(seed: int, count: int, workers: int = 1, **kwargs) -> SuiteReport:
    return run_suite("ir_shaping_for_free", ir_shaping_case, seed, count, workers, **kwargs)

import random
import time
from fractions import Fraction

import pytest

from atscalc.adversary.overdrive import overdrive_trajectory
from atscalc.adversary.spring import trajectory1, trajectory3
from atscalc.minplus.curve import Curve, Segment, agrees_on, constant_after, leaky_bucket, rate_latency, staircase
from atscalc.minplus.rational import INF
from atscalc.regulators.interleaved_regulator import IRConfig, ir_process_max_plus
from atscalc.traffic.conformance import FlowContract
from atscalc.traffic.cumulative import cumulative_of
from atscalc.traffic.packet_sequence import PacketSequence
from atscalc.verify.backlog import BackloggedPeriod, CausalityError, backlogged_periods
from atscalc.verify.delay_growth import delay_growth, departure_bounds_check
from atscalc.verify.experiments import ir_strict_service_curves
from atscalc.verify.randomized import fifo_upstream, random_ir_config, random_sequence
from atscalc.verify.residual import fifo_residual, first_packet_delay_bound
from atscalc.verify.service_checks import PASS, VIOLATION, check_sc, check_strict_sc

F = Fraction


def seq(*rows):
    return PacketSequence.from_packets(rows)


def overdrive_io(n=10):
    contract = FlowContract("f", 1, 1)
    arrivals = overdrive_trajectory("f", contract, n)
    departures = ir_process_max_plus(arrivals, IRConfig.of([contract])).departures
    return arrivals, departures


# ---------------------------------------------------------
# Backlogged periods
# ---------------------------------------------------------
def test_backlogged_periods():
    inflow = cumulative_of(seq((0, 1, "a"), (2, 1, "a")))
    outflow = cumulative_of(seq((1, 1, "a"), (3, 1, "a")))
    assert backlogged_periods(inflow, outflow) == [BackloggedPeriod(F(0), F(1)), BackloggedPeriod(F(2), F(3))]
    assert BackloggedPeriod(F(0), F(1)).contains(1)
    assert not BackloggedPeriod(F(0), F(1)).contains(0)


def test_backlog_that_never_clears():
    periods = backlogged_periods(cumulative_of(seq((0, 2, "a"))), cumulative_of(seq((1, 1, "a"))))
    assert periods == [BackloggedPeriod(F(0), INF)]
    assert periods[0].contains(100)


def test_backlog_rejects_output_ahead_of_input():
    with pytest.raises(CausalityError):
        backlogged_periods(cumulative_of(seq((1, 1, "a"))), cumulative_of(seq((0, 1, "a"))))


# ---------------------------------------------------------
# Strict service curves
# ---------------------------------------------------------
def test_overdrive_output_is_one_packet_per_interval():
    _, departures = overdrive_io()
    assert list(departures.times) == list(range(10))


def test_overdrive_refutes_a_leaky_bucket():
    arrivals, departures = overdrive_io()
    inflow, outflow = cumulative_of(arrivals), cumulative_of(departures)
    beta = leaky_bucket(1, F(11, 10))
    report = check_strict_sc(inflow, outflow, beta)
    assert report.verdict == VIOLATION
    w = report.witness
    assert w.lhs == outflow(w.t) - outflow(w.s)
    assert w.rhs == beta.value(w.t - w.s)
    assert w.lhs < w.rhs
    assert any(p.contains(w.t) and p.start <= w.s for p in backlogged_periods(inflow, outflow))


@pytest.mark.parametrize("beta", [staircase(1, 1), rate_latency(1, 1), constant_after(1, 1)])
def test_overdrive_keeps_the_ir_curves(beta):
    arrivals, departures = overdrive_io()
    assert check_strict_sc(cumulative_of(arrivals), cumulative_of(departures), beta).verdict == PASS


def test_spring_keeps_the_ir_curves(unit_spring, unit_spring_ir):
    b = trajectory1(unit_spring, 10).B
    out = ir_process_max_plus(b, unit_spring_ir).departures
    curves = ir_strict_service_curves(unit_spring_ir, unit_spring.b)
    for beta in (curves.base, curves.staircase, curves.rate_latency):
        assert check_strict_sc(cumulative_of(b), cumulative_of(out), beta).ok


def test_strict_check_catches_a_lazy_server():
    # backlogged on (0, 3] but nothing leaves before 3
    inflow = cumulative_of(seq((0, 1, "a"), (0, 1, "a")))
    outflow = cumulative_of(seq((3, 1, "a"), (3, 1, "a")))
    report = check_strict_sc(inflow, outflow, rate_latency(1, 1))
    assert not report.ok
    w = report.witness
    assert outflow(w.t) - outflow(w.s) < rate_latency(1, 1).value(w.t - w.s)


def test_service_curve_check():
    inflow = cumulative_of(seq((0, 1, "a"), (0, 1, "a")))
    outflow = cumulative_of(seq((1, 1, "a"), (2, 1, "a")))
    assert check_sc(inflow, outflow, rate_latency(1, 1)).ok
    report = check_sc(inflow, outflow, rate_latency(2, 0))
    assert not report.ok
    assert report.witness.lhs < report.witness.rhs


def test_sum_of_shaping_curves_fails_on_trajectory3(unit_spring, unit_spring_ir):
    b = trajectory3(unit_spring, 20)
    out = ir_process_max_plus(b, unit_spring_ir).departures
    report = check_sc(cumulative_of(b), cumulative_of(out), leaky_bucket(3, 3))
    assert report.verdict == VIOLATION
    assert report.witness.lhs == cumulative_of(out)(report.witness.t)


def test_report_json():
    arrivals, departures = overdrive_io(4)
    doc = check_strict_sc(cumulative_of(arrivals), cumulative_of(departures), leaky_bucket(1, 2)).to_json()
    assert doc["verdict"] == VIOLATION
    assert set(doc["witness"]) == {"s", "t", "lhs", "rhs"}


# ---------------------------------------------------------
# Fast sweeps against the pairwise comparison
# ---------------------------------------------------------
def _unrolled_staircase(L, I, horizon):
    # same values on [0, horizon] but no longer recognised as a staircase
    return staircase(L, I).unroll(horizon)


def _split_rate_latency(R, T):
    return Curve((Segment(F(0), F(0), F(0)), Segment(T / 2, F(0), F(0)), Segment(T, F(0), R)))


def _random_server(seed):
    """A random FIFO server fed by a random IR input; it may or may not keep the curves."""
    rng = random.Random(f"strict-sweep:{seed}")
    cfg = random_ir_config(rng, 3)
    L_min = min(c.burst for c in cfg.contracts.values()) / 2
    arrivals = random_sequence(rng, cfg, rng.randint(2, 30), L_min)
    if rng.random() < 0.5:
        departures = ir_process_max_plus(arrivals, cfg).departures
    else:
        departures = fifo_upstream(rng, arrivals, 2 * cfg.max_interval)
    return cfg, L_min, cumulative_of(arrivals), cumulative_of(departures)


def _assert_witness(inflow, outflow, beta, report):
    w = report.witness
    assert w.s < w.t
    assert w.lhs == outflow(w.t) - outflow(w.s)
    assert w.rhs == beta.value(w.t - w.s)
    assert w.lhs < w.rhs
    assert any(p.start <= w.s and p.contains(w.t) for p in backlogged_periods(inflow, outflow))


def test_fast_sweeps_match_the_pairwise_check():
    verdicts = set()
    for seed in range(60):
        cfg, L_min, inflow, outflow = _random_server(seed)
        I_max = cfg.max_interval
        horizon = outflow.event_times()[-1] + 2 * I_max
        for L, I in ((L_min, I_max), (L_min, I_max / 2), (2 * L_min, I_max)):
            fast = check_strict_sc(inflow, outflow, staircase(L, I))
            slow = check_strict_sc(inflow, outflow, _unrolled_staircase(L, I, horizon))
            assert fast.verdict == slow.verdict, (seed, L, I)
            verdicts.add(fast.verdict)
            if not fast.ok:
                _assert_witness(inflow, outflow, staircase(L, I), fast)
        for R, T in ((L_min / I_max, I_max), (2 * L_min / I_max, I_max / 2), (3 * L_min / I_max, I_max / 4)):
            fast = check_strict_sc(inflow, outflow, rate_latency(R, T))
            slow = check_strict_sc(inflow, outflow, _split_rate_latency(R, T))
            assert fast.verdict == slow.verdict, (seed, R, T)
            verdicts.add(fast.verdict)
            if not fast.ok:
                _assert_witness(inflow, outflow, rate_latency(R, T), fast)
    assert verdicts == {PASS, VIOLATION}


def test_latency_free_rate_curve():
    # zero latency: every backlogged instant must already serve at rate 1
    inflow = cumulative_of(seq((0, 2, "a")))
    outflow = cumulative_of(seq((1, 1, "a"), (3, 1, "a")))
    report = check_strict_sc(inflow, outflow, rate_latency(1, 0))
    assert report.verdict == VIOLATION
    _assert_witness(inflow, outflow, rate_latency(1, 0), report)
    # a latency of 2 covers the idle stretch (1, 3)
    assert check_strict_sc(inflow, outflow, rate_latency(F(1, 3), 2)).ok


def test_staircase_window_straddling_a_multiple():
    # departures exactly one interval apart meet floor(t - s) with equality
    inflow = cumulative_of(seq((0, 1, "a"), (0, 1, "a"), (0, 1, "a")))
    outflow = cumulative_of(seq((F(1, 2), 1, "a"), (F(3, 2), 1, "a"), (F(5, 2), 1, "a")))
    assert check_strict_sc(inflow, outflow, staircase(1, 1)).ok
    late = cumulative_of(seq((F(1, 2), 1, "a"), (F(7, 4), 1, "a"), (F(5, 2), 1, "a")))
    report = check_strict_sc(inflow, late, staircase(1, 1))
    assert report.verdict == VIOLATION
    _assert_witness(inflow, late, staircase(1, 1), report)


# ---------------------------------------------------------
# Delay growth and departure bounds
# ---------------------------------------------------------
def test_delay_growth_on_trajectory1(unit_spring, unit_spring_ir):
    b = trajectory1(unit_spring, 6).B
    report = delay_growth(b, ir_process_max_plus(b, unit_spring_ir).departures)
    assert report.increment == unit_spring.drift
    assert report.offset == F(1, 10)
    assert report.k0 == 1
    assert report.affine
    assert report.delays[:3] == (0, F(4, 5), F(3, 2))


def test_delay_growth_needs_three_periods(unit_spring, unit_spring_ir):
    b = trajectory1(unit_spring, 2).B
    with pytest.raises(ValueError):
        delay_growth(b, ir_process_max_plus(b, unit_spring_ir).departures)


def test_departure_lower_bounds(unit_spring, unit_spring_ir):
    b = trajectory1(unit_spring, 8).B
    out = ir_process_max_plus(b, unit_spring_ir).departures
    assert departure_bounds_check(b, out, unit_spring.I) is None
    early = out.with_times([out.times[0], out.times[0]] + list(out.times[2:]))
    assert departure_bounds_check(b, early, unit_spring.I) == 1


def test_thousand_spring_periods(unit_spring, unit_spring_ir):
    started = time.perf_counter()
    b = trajectory1(unit_spring, 1000).B
    out = ir_process_max_plus(b, unit_spring_ir).departures
    report = delay_growth(b, out)
    bound_break = departure_bounds_check(b, out, unit_spring.I)
    elapsed = time.perf_counter() - started

    heads = [d - a for a, d in zip(b.times[::6], out.times[::6])]
    assert len(heads) == 1000
    assert all(d >= F(7, 10) * k - F(17, 10) for k, d in enumerate(heads))
    assert {later - earlier for earlier, later in zip(heads[1:], heads[2:])} == {F(7, 10)}
    assert heads[-1] == F(1, 10) + F(7, 10) * 999
    assert (report.increment, report.k0) == (F(7, 10), 1)
    assert bound_break is None
    assert elapsed < 2


# ---------------------------------------------------------
# FIFO residual service
# ---------------------------------------------------------
def test_residual_without_offset():
    res = fifo_residual(rate_latency(4, 0), leaky_bucket(3, 3), 0)
    assert agrees_on(res.closure, rate_latency(1, 3), 10)
    assert first_packet_delay_bound(res.closure, 1) == 4
    assert first_packet_delay_bound(res.closure, 1, strict=True) == 4


def test_residual_with_offset():
    res = fifo_residual(rate_latency(4, 0), leaky_bucket(3, 3), 1)
    assert res.raw.value(1) == 0
    assert res.raw.right_limit(1) == 1
    assert res.closure.value(F(1, 2)) == 0
    assert res.closure.value(2) == 2
    assert first_packet_delay_bound(res.closure, 1) == 1


def test_residual_of_slow_curve_is_zero():
    res = fifo_residual(rate_latency(3, 1), leaky_bucket(3, F(61, 20)), 0)
    assert first_packet_delay_bound(res.closure, 1) == INF


def test_residual_of_periodic_curve():
    res = fifo_residual(staircase(4, 1), leaky_bucket(3, 3), 2, horizon=30)
    assert res.closure.value(2) == 0
    assert res.closure.value(F(5, 2)) == 2
    assert first_packet_delay_bound(res.closure, 1) == 2
    with pytest.raises(ValueError):
        fifo_residual(rate_latency(1, 0), leaky_bucket(1, 1), -1)

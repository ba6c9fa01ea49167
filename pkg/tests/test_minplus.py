from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atscalc.minplus.curve import (
    Curve,
    CurveError,
    PeriodicHorizonError,
    Segment,
    agrees_on,
    bounded_delay,
    constant_after,
    leaky_bucket,
    make_curve,
    rate_latency,
    staircase,
)
from atscalc.minplus.operators import (
    ClosureNotConverged,
    horizontal_deviation,
    long_term_rate,
    lower_inverse,
    max_plus_conv,
    max_plus_deconv,
    min_plus_conv,
    pointwise_max,
    pointwise_min,
    positive_part,
    pseudo_inverse,
    restrict_after,
    shift_right,
    subtract,
    super_additive_closure,
    upper_inverse,
)
from atscalc.minplus.rational import (
    INF,
    RationalParseError,
    ceil_q,
    decimal_text,
    floor_q,
    from_json,
    q,
    to_json,
)
from tests import oracles

F = Fraction


# ---------------------------------------------------------
# Rationals
# ---------------------------------------------------------
def test_q_parses_exact_forms():
    assert q("17/20") == F(17, 20)
    assert q("0.85") == F(17, 20)
    assert q(3) == F(3)
    assert q({"n": 1, "d": 3}) == F(1, 3)


@pytest.mark.parametrize("bad", [0.5, True, "x", {"n": 1}, {"n": 1, "d": 0}])
def test_q_refuses_inexact_or_malformed(bad):
    with pytest.raises(RationalParseError):
        q(bad)


def test_json_forms():
    assert to_json(F(17, 20)) == {"n": 17, "d": 20}
    assert to_json(INF) == "inf"
    assert from_json("inf") == INF
    assert from_json({"n": -3, "d": 4}) == F(-3, 4)


def test_rounding_helpers():
    assert ceil_q(F(7, 2)) == 4
    assert ceil_q(F(-7, 2)) == -3
    assert floor_q(F(-7, 2)) == -4
    assert ceil_q(F(4)) == 4
    assert decimal_text(F(1, 3), 3) == "0.333"
    assert decimal_text(F(-17, 20), 2) == "-0.85"
    assert decimal_text(INF) == "inf"


# ---------------------------------------------------------
# Curves
# ---------------------------------------------------------
def test_leaky_bucket_takes_pre_jump_value_at_zero():
    g = leaky_bucket(2, 3)
    assert g.value(0) == 0
    assert g.right_limit(0) == 3
    assert g.value(F(1, 2)) == 4


def test_rate_latency_and_bounded_delay():
    beta = rate_latency(2, 1)
    assert beta.value(1) == 0
    assert beta.value(F(5, 2)) == 3
    delta = bounded_delay(2)
    assert delta.value(2) == 0
    assert delta.value(F(21, 10)) == INF


def test_staircase_is_floor_with_left_limits():
    sc = staircase(2, 1)
    assert sc.value(0) == 0
    assert sc.value(F(1, 2)) == 0
    assert sc.value(1) == 2
    assert sc.left_limit(1) == 0
    assert sc.value(F(5, 2)) == 4
    assert sc.left_limit(3) == 4
    assert sc.value(3) == 6


def test_staircase_unroll_is_exact_up_to_horizon():
    sc = staircase(F(3, 2), F(1, 2))
    assert agrees_on(sc.unroll(5), sc.unroll(8), 5)
    assert long_term_rate(sc) == 3


def test_constant_after_jump_conventions():
    closed = constant_after(1, 1)
    opened = constant_after(1, 1, closed=False)
    assert closed.value(1) == 1
    assert opened.value(1) == 0
    assert opened.right_limit(1) == 1
    assert closed.value(F(1, 2)) == opened.value(F(1, 2)) == 0


def test_curve_rejects_bad_layouts():
    with pytest.raises(CurveError):
        Curve((Segment(F(1), F(0), F(0)),))
    with pytest.raises(CurveError):
        Curve((Segment(F(0), F(0), F(1)), Segment(F(0), F(0), F(1))))
    with pytest.raises(CurveError):
        leaky_bucket(-1, 1)
    with pytest.raises(CurveError):
        staircase(0, 1)
    with pytest.raises(CurveError):
        leaky_bucket(1, 1).value(-1)


def test_curve_json_document_shape():
    doc = staircase(1, 2).to_json()
    assert doc["period"] == {"start": {"n": 0, "d": 1}, "length": {"n": 2, "d": 1}, "increment": {"n": 1, "d": 1}}
    assert Curve.from_json(doc) == staircase(1, 2)
    with pytest.raises(CurveError):
        Curve.from_json({"segments": [{"start": {"n": 0, "d": 1}}]})


def test_wide_sense_increasing_detects_drops():
    assert leaky_bucket(1, 1).is_wide_sense_increasing()
    dropping = make_curve([(0, 0, 1, 0), (1, 0, 1, 0)])
    assert not dropping.is_wide_sense_increasing()


# ---------------------------------------------------------
# Operators on known closed forms
# ---------------------------------------------------------
def test_leaky_bucket_through_rate_latency():
    # γ_{1,2} ⊗ β_{2,1} = min(t - 1 + 2, 2(t - 1)) after the latency
    out = min_plus_conv(leaky_bucket(1, 2), rate_latency(2, 1))
    assert out.value(1) == 0
    assert out.value(2) == 2
    assert out.value(F(5, 2)) == 3
    assert out.value(4) == 5


def test_rate_latency_concatenation():
    out = min_plus_conv(rate_latency(2, 1), rate_latency(3, 2))
    assert agrees_on(out, rate_latency(2, 3), 10)


def test_periodic_operand_needs_horizon():
    with pytest.raises(PeriodicHorizonError):
        min_plus_conv(staircase(1, 1), leaky_bucket(1, 1))
    out = max_plus_conv(staircase(1, 1), staircase(1, 1), horizon=6)
    assert agrees_on(out, staircase(1, 1), 6)


def test_pointwise_min_max():
    lo = pointwise_min(leaky_bucket(1, 2), leaky_bucket(2, 1))
    hi = pointwise_max(leaky_bucket(1, 2), leaky_bucket(2, 1))
    assert lo.value(F(1, 2)) == 2
    assert lo.value(3) == 5
    assert hi.value(F(1, 2)) == F(5, 2)
    assert hi.value(3) == 7


def test_subtract_and_positive_part():
    diff = subtract(rate_latency(4, 0), leaky_bucket(3, 3))
    assert diff.value(0) == 0
    assert diff.right_limit(0) == -3
    assert diff.value(5) == 2
    pos = positive_part(diff)
    assert pos.value(2) == 0
    assert pos.value(5) == 2


def test_shift_and_restrict():
    shifted = shift_right(leaky_bucket(1, 1), 2)
    assert shifted.value(1) == 0
    assert shifted.value(2) == 0
    assert shifted.right_limit(2) == 1
    assert shifted.value(3) == 2
    cut = restrict_after(rate_latency(1, 0), 1)
    assert cut.value(1) == 0
    assert cut.right_limit(1) == 1
    assert cut.value(2) == 2


def test_lower_non_decreasing_closure():
    # rises to 2 at t = 1, falls back to 0 at t = 3, then grows again
    f = make_curve([(0, 0, 2, 0), (1, 2, -1, 0), (3, 0, 1, 0)])
    closure = max_plus_deconv(f, None, horizon=5)
    assert agrees_on(closure, rate_latency(1, 3), 5)
    with pytest.raises(CurveError):
        max_plus_deconv(f, None, horizon=3)
    with pytest.raises(CurveError):
        max_plus_deconv(f)


def test_inverses():
    beta = rate_latency(1, 1)
    assert lower_inverse(beta, 1) == 2
    assert upper_inverse(beta, 1) == 2
    sc = staircase(1, 1)
    assert lower_inverse(sc, 1) == 1
    assert upper_inverse(sc, 1) == 2
    assert upper_inverse(constant_after(1, 1), 1) == INF
    assert lower_inverse(constant_after(1, 1), 2) == INF


def test_pseudo_inverse_of_leaky_bucket():
    inv = pseudo_inverse(leaky_bucket(2, 1))
    assert inv.value(F(1, 2)) == 0
    assert inv.value(1) == 0
    assert inv.value(3) == 1
    assert inv.value(5) == 2


def test_closure_iteration_cap():
    with pytest.raises(ClosureNotConverged) as info:
        super_additive_closure(constant_after(1, F(1, 8)), 64, max_iterations=2)
    assert info.value.iterations == 2


def test_horizontal_deviation():
    assert horizontal_deviation(leaky_bucket(1, 2), rate_latency(2, 1)) == 2
    assert horizontal_deviation(leaky_bucket(3, 1), rate_latency(2, 1)) == INF
    assert horizontal_deviation(leaky_bucket(1, 1), staircase(1, 1), horizon=20) == 2


def test_long_term_rate():
    assert long_term_rate(leaky_bucket(3, 1)) == 3
    assert long_term_rate(staircase(2, F(1, 2))) == 4
    assert long_term_rate(bounded_delay(1)) == INF


# ---------------------------------------------------------
# Operators against the grid oracle
# ---------------------------------------------------------
@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), oracles.grid_curves(), st.integers(0, 12))
def test_min_plus_conv_matches_grid(f, g, k):
    t = F(k, oracles.GRID)
    assert min_plus_conv(f, g).value(t) == oracles.convolution(f, g, t, min)


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), oracles.grid_curves(), st.integers(0, 12))
def test_max_plus_conv_matches_grid(f, g, k):
    t = F(k, oracles.GRID)
    assert max_plus_conv(f, g).value(t) == oracles.convolution(f, g, t, max)


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), st.integers(0, 8))
def test_closure_of_increasing_curve_is_itself(f, k):
    horizon = f.starts[-1] + 1
    t = F(k, oracles.GRID)
    assert max_plus_deconv(f, None, horizon=horizon).value(t) == f.value(t)


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), oracles.grid_curves())
def test_pointwise_min_matches_values(f, g):
    low = pointwise_min(f, g)
    for t in oracles.grid_points(3):
        assert low.value(t) == min(f.value(t), g.value(t))
        assert low.right_limit(t) == min(f.right_limit(t), g.right_limit(t))


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), st.integers(0, 16))
def test_inverses_bracket_the_level(f, k):
    w = F(k, 2)
    lo, hi = lower_inverse(f, w), upper_inverse(f, w)
    if lo != INF and hi != INF:
        assert lo <= hi
    if lo != INF and lo > 0:
        assert f.left_limit(lo) <= w
    if hi != INF:
        assert f.right_limit(hi) >= w


# ---------------------------------------------------------
# Algebraic properties
# ---------------------------------------------------------
@settings(max_examples=25, deadline=None)
@given(oracles.grid_curves(3), oracles.grid_curves(3), oracles.grid_curves(3), st.integers(0, 16))
def test_min_plus_conv_is_commutative_and_associative(f, g, h, k):
    t = F(k, oracles.GRID)
    fg = min_plus_conv(f, g)
    gf = min_plus_conv(g, f)
    assert fg.value(t) == gf.value(t)
    assert fg.right_limit(t) == gf.right_limit(t)
    assert min_plus_conv(fg, h).value(t) == min_plus_conv(f, min_plus_conv(g, h)).value(t)


def test_bounded_delay_shifts_a_rate_latency():
    assert agrees_on(min_plus_conv(rate_latency(1, 1), bounded_delay(2)), rate_latency(1, 3), 20)
    assert agrees_on(min_plus_conv(bounded_delay(2), rate_latency(1, 1)), rate_latency(1, 3), 20)


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves())
def test_zero_delay_is_the_identity(f):
    out = min_plus_conv(f, bounded_delay(0))
    for t in oracles.grid_points(f.starts[-1] + 1, 8):
        assert out.value(t) == f.value(t)
        assert out.right_limit(t) == f.right_limit(t)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 8), st.integers(1, 4), st.integers(0, 8), st.integers(0, 48))
def test_pseudo_inverse_of_any_leaky_bucket(rate_num, rate_den, burst_halves, level_quarters):
    r, b, w = F(rate_num, rate_den), F(burst_halves, 2), F(level_quarters, 4)
    assert pseudo_inverse(leaky_bucket(r, b)).value(w) == max(w - b, 0) / r


@settings(max_examples=20, deadline=None)
@given(
    st.integers(1, 4),
    st.sampled_from([F(1, 2), F(3, 4), F(1), F(3, 2)]),
    st.integers(0, 4),
    st.integers(0, 8),
)
def test_closure_output_is_super_additive(L_halves, I, rate_quarters, latency_quarters):
    horizon = F(3)
    base = pointwise_max(
        constant_after(F(L_halves, 2), I),
        rate_latency(F(rate_quarters, 4), F(latency_quarters, 4)),
    )
    closure = super_additive_closure(base, horizon)
    points = oracles.grid_points(horizon)
    for s in points:
        assert closure.value(s) >= base.value(s)
        for t in points:
            if s + t <= horizon:
                assert closure.value(s + t) >= closure.value(s) + closure.value(t)


@pytest.mark.parametrize("L, I", [(1, 1), (F(1, 2), F(3, 2)), (2, F(1, 4))])
def test_closure_of_constant_after_over_twenty_intervals(L, I):
    horizon = 20 * F(I)
    closure = super_additive_closure(constant_after(L, I), horizon)
    assert agrees_on(closure, staircase(L, I), horizon)


# ---------------------------------------------------------
# Deconvolution and deviation against the grid oracle
# ---------------------------------------------------------
@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(), oracles.grid_curves(), st.integers(0, 12))
def test_max_plus_deconv_matches_grid(f, g, k):
    horizon = f.starts[-1] + 1
    t = F(k, oracles.GRID)
    out = max_plus_deconv(f, g, horizon=horizon)
    assert out.value(t) == oracles.deconvolution(f, g, t, horizon)


@settings(max_examples=40, deadline=None)
@given(oracles.grid_curves(max_slope=3), st.sampled_from([F(3), F(7, 2), F(4)]), st.integers(0, 8))
def test_horizontal_deviation_matches_grid(alpha, R, latency_quarters):
    T = F(latency_quarters, 4)
    expected = oracles.deviation_from_rate_latency(alpha, R, T)
    assert horizontal_deviation(alpha, rate_latency(R, T)) == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 8), st.integers(0, 6), st.integers(0, 8))
def test_horizontal_deviation_of_leaky_bucket_and_rate_latency(r_quarters, b_quarters, extra, latency_quarters):
    r, b, T = F(r_quarters, 4), F(b_quarters, 4), F(latency_quarters, 4)
    R = r + F(extra, 4)
    assert horizontal_deviation(leaky_bucket(r, b), rate_latency(R, T)) == T + b / R

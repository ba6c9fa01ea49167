from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import Curve
from atscalc.minplus.operators import (
    lower_inverse,
    max_plus_deconv,
    positive_part,
    restrict_after,
    shift_right,
    subtract,
    upper_inverse,
)
from atscalc.minplus.rational import Number, q


@dataclass(frozen=True)
class ResidualCurve:
    """FIFO residual for flow g and its lower non-decreasing closure."""
    theta: Fraction
    raw: Curve
    closure: Curve


def fifo_residual(beta: Curve, alpha_others: Curve, theta, horizon: Optional[Fraction] = None) -> ResidualCurve:
    """
    t ↦ |β(t) - α(t - θ)|⁺ · 1{t > θ}, plus t ↦ inf_{s ≥ t} of it.

    ``horizon`` is needed when β or α is periodic; the result is then exact
    on [0, horizon].
    """
    theta = q(theta)
    if theta < 0:
        raise ValueError(f"theta must be >= 0, got {theta}")
    diff = subtract(beta, shift_right(alpha_others, theta), horizon)
    raw = restrict_after(positive_part(diff), theta)
    closure = max_plus_deconv(raw, None, horizon=raw.starts[-1] + 1)
    return ResidualCurve(theta, raw, closure)


def first_packet_delay_bound(beta_g: Curve, L, strict: bool = False) -> Number:
    """
    inf{t ≥ 0 : β_g(t) ≥ L}; INF when β_g never gets there.

    With ``strict`` the level must be exceeded: inf{t : β_g(t) > L}.
    """
    if strict:
        return upper_inverse(beta_g, L)
    return lower_inverse(beta_g, L)

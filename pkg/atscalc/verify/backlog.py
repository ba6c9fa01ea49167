from dataclasses import dataclass
from fractions import Fraction

from atscalc.minplus.rational import INF, Number, is_inf, to_json
from atscalc.traffic.cumulative import CumulativeFunction
from atscalc.utils.logger import get_logger

logger = get_logger("backlog")


class CausalityError(ValueError):
    """Raised when the output of a system runs ahead of its input."""
    pass


@dataclass(frozen=True)
class BackloggedPeriod:
    """Backlog is positive on (start, end]."""
    start: Fraction
    end: Number

    def contains(self, t) -> bool:
        return self.start < t and (is_inf(self.end) or t <= self.end)

    def to_json(self) -> dict:
        return {"start": to_json(self.start), "end": to_json(self.end)}


def _require_steps(fn: CumulativeFunction, name: str) -> None:
    if any(seg.slope != 0 for seg in fn.curve.segments):
        raise ValueError(f"{name} must be a packet step function")


def backlogged_periods(inflow: CumulativeFunction, outflow: CumulativeFunction) -> list:
    """
    Maximal intervals (start, end] on which R_in - R_out > 0.

    Both functions are left-continuous steps, so the backlog is constant on
    (e_i, e_{i+1}] between consecutive event instants and equals the
    difference of the right limits at e_i.

    Raises:
        CausalityError: If the output exceeds the input anywhere.
    """
    _require_steps(inflow, "inflow")
    _require_steps(outflow, "outflow")
    events = sorted(set(inflow.curve.starts) | set(outflow.curve.starts))
    periods = []
    open_start = None
    for e in events:
        backlog = inflow.right_limit(e) - outflow.right_limit(e)
        if backlog < 0:
            raise CausalityError(f"Output ahead of input by {-backlog} right after {e}")
        if backlog > 0 and open_start is None:
            open_start = e
        elif backlog == 0 and open_start is not None:
            periods.append(BackloggedPeriod(open_start, e))
            open_start = None
    if open_start is not None:
        logger.warning(f"Backlog never clears after {open_start}")
        periods.append(BackloggedPeriod(open_start, INF))
    logger.debug(f"Found {len(periods)} backlogged periods")
    return periods

import json
import os
from fractions import Fraction
from typing import Optional

from atscalc.minplus.curve import Curve
from atscalc.minplus.rational import INF, is_inf
from atscalc.traffic.cumulative import CumulativeFunction
from atscalc.utils.logger import get_logger
from atscalc.utils.rational_csv import write_rational_csv

logger = get_logger("emitters")

FIGURE_FIELDS = ["t", "input", "input_after", "output", "output_after", "arrival_bound", "service_bound"]
FIGURE_RATIONALS = {"t", "input", "input_after", "output", "output_after", "arrival_bound", "service_bound"}


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def write_json(path: str, doc) -> str:
    """Deterministic JSON: sorted keys, two-space indent, trailing newline."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f, sort_keys=True, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.debug(f"Wrote {path}")
    return path


def figure_rows(inflow: CumulativeFunction, outflow: CumulativeFunction, alpha: Curve, beta: Curve,
                anchor: Optional[Fraction]) -> list:
    """
    Input/output cumulative functions at every event instant (value and
    right limit), with R_in(s) + α(t - s) and R_out(s) + β(t - s) for
    s = ``anchor``, the start of the first backlogged period.
    """
    instants = sorted(set(inflow.curve.starts) | set(outflow.curve.starts))
    rows = []
    for t in instants:
        row = {
            "t": t,
            "input": inflow(t),
            "input_after": inflow.right_limit(t),
            "output": outflow(t),
            "output_after": outflow.right_limit(t),
            "arrival_bound": None,
            "service_bound": None,
        }
        if anchor is not None and t >= anchor:
            a = alpha.value(t - anchor)
            row["arrival_bound"] = INF if is_inf(a) else inflow(anchor) + a
            row["service_bound"] = outflow(anchor) + beta.value(t - anchor)
        rows.append(row)
    return rows


def write_figure_csv(path: str, rows: list) -> str:
    write_rational_csv(path, FIGURE_FIELDS, FIGURE_RATIONALS, rows)
    return path

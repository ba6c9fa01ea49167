import csv
from fractions import Fraction

from atscalc.minplus.rational import INF, decimal_text, is_inf
from atscalc.utils.logger import get_logger

logger = get_logger("rational_csv")


def expand_header(fields, rational_fields) -> list:
    """Each rational field becomes ``<name>_n, <name>_d, <name>`` (decimal, display only)."""
    header = []
    for name in fields:
        if name in rational_fields:
            header.extend([f"{name}_n", f"{name}_d", name])
        else:
            header.append(name)
    return header


def expand_row(row: dict, fields, rational_fields) -> list:
    out = []
    for name in fields:
        value = row.get(name)
        if name not in rational_fields:
            out.append("" if value is None else value)
        elif value is None:
            out.extend(["", "", ""])
        elif is_inf(value):
            out.extend(["inf", "", "inf"])
        else:
            value = Fraction(value)
            out.extend([value.numerator, value.denominator, decimal_text(value)])
    return out


def write_rational_csv(path, fields, rational_fields, rows) -> int:
    """
    Write dict rows with exact numerator/denominator columns.

    Returns:
        int: Number of data rows written.
    """
    rational_fields = set(rational_fields)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(expand_header(fields, rational_fields))
        for row in rows:
            writer.writerow(expand_row(row, fields, rational_fields))
            count += 1
    logger.debug(f"Wrote {count} rows to {path}")
    return count


def read_rational(numerator: str, denominator: str):
    """Inverse of the ``_n`` / ``_d`` column pair; empty columns give None."""
    if numerator == "" and denominator == "":
        return None
    if numerator == "inf":
        return INF
    return Fraction(int(numerator), int(denominator))


def read_rational_csv(path, rational_fields) -> list:
    """Read back a file written by write_rational_csv; decimal columns are ignored."""
    with open(path, "r", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    out = []
    for row in rows:
        parsed = {k: v for k, v in row.items() if not any(k == f"{r}_n" or k == f"{r}_d" for r in rational_fields)}
        for name in rational_fields:
            parsed[name] = read_rational(row[f"{name}_n"], row[f"{name}_d"])
        out.append(parsed)
    return out

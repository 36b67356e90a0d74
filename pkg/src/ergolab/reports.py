"""Artifact writers: witness JSON, row tables, run manifest, ratio plot.

Byte determinism is the contract: identical inputs produce identical
bytes.  All persisted numbers are exact "p/q" strings; every row table
additionally carries one trailing `display` column with a 6-significant-
digit decimal of the row's headline quantity for humans (the deviation/
rate ratio for the witness tables, the realized mass error for the tower
table, the left-hand side for failure tables).  Nothing downstream may
parse the display column.

Fixed column orders (golden files pin them):

  krengel rows.csv:    j, height, eps_h, mean, tail_mass, l1_tail_plain,
                       nonzero_mass, l1_tail_dev, dev_lower, tail_bound,
                       l1_total, psi_up, ratio, target, display
  podvigin rows.csv:   j, N, c_j, eps, threshold, qualifying_mass,
                       mass_bound, psi_N, ratio, target, display
  alpern rows.csv:     family, height, multiplicity, realized_mass,
                       target_mass, error, display
  verify rows.csv:     module, check, j, lhs, relation, rhs, display

The SVG plot is a pure function of the CSV bytes: it reads only the `j`
and `ratio` columns and draws log2(ratio) against j with log2 evaluated
by integer bit-scan at 1/1024 precision — no floats anywhere.
"""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Context
from fractions import Fraction
from typing import Optional, Sequence

from .rational import format_rational, parse_rational

_SIG6 = Context(prec=6, rounding=ROUND_HALF_EVEN)


def format_sig6(x) -> str:
    """Deterministic 6-significant-digit decimal of a rational."""
    x = Fraction(x)
    d = _SIG6.divide(x.numerator, x.denominator)
    return str(d)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def krengel_csv(rows) -> str:
    header = ["j", "height", "eps_h", "mean", "tail_mass", "l1_tail_plain",
              "nonzero_mass", "l1_tail_dev", "dev_lower", "tail_bound",
              "l1_total", "psi_up", "ratio", "target", "display"]
    fmt = format_rational
    return _csv(header, (
        [r.j, r.height, fmt(r.eps_h), fmt(r.mean), fmt(r.tail_mass),
         fmt(r.l1_tail_plain), fmt(r.nonzero_mass), fmt(r.l1_tail_dev),
         fmt(r.dev_lower), fmt(r.tail_bound), fmt(r.l1_total),
         fmt(r.psi_up), fmt(r.ratio), fmt(r.target), format_sig6(r.ratio)]
        for r in rows))


def divergence_csv(rows) -> str:
    header = ["j", "N", "c_j", "eps", "threshold", "qualifying_mass",
              "mass_bound", "psi_N", "ratio", "target", "display"]
    fmt = format_rational
    return _csv(header, (
        [r.j, r.N, fmt(r.c_j), fmt(r.eps), fmt(r.threshold),
         fmt(r.qualifying_mass), fmt(r.mass_bound), fmt(r.psi_N),
         fmt(r.ratio), fmt(r.target), format_sig6(r.ratio)]
        for r in rows))


def alpern_csv(solution, targets: Sequence[Fraction]) -> str:
    header = ["family", "height", "multiplicity", "realized_mass",
              "target_mass", "error", "display"]
    rows = []
    for j, (h, k, mass, want) in enumerate(zip(
            solution.heights, solution.multiplicities,
            solution.masses, targets), 1):
        err = abs(mass - Fraction(want))
        rows.append([j, h, k, format_rational(mass), format_rational(want),
                     format_rational(err), format_sig6(err)])
    return _csv(header, rows)


def failures_csv(failures) -> str:
    header = ["module", "check", "j", "lhs", "relation", "rhs", "display"]
    return _csv(header, (
        [f.module, f.name, f.j, format_rational(f.lhs), f.relation,
         format_rational(f.rhs), format_sig6(f.lhs)]
        for f in failures))


def witness_json_bytes(doc: dict) -> bytes:
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"))
            + "\n").encode("utf-8")


@dataclass
class RunManifest:
    """What a run did: config echo, artifacts, verdict, environment."""

    command: str
    config: dict
    artifacts: dict
    verdict: str                      # "pass" | "fail"
    first_failure: Optional[str]
    failure_count: int
    wall_clock_s: str                 # decimal seconds; excluded from
    engine: str                       # byte-identity comparisons
    threads: int
    extra: dict = field(default_factory=dict)

    def to_doc(self) -> dict:
        doc = {
            "command": self.command,
            "config": self.config,
            "artifacts": self.artifacts,
            "verdict": self.verdict,
            "first_failure": self.first_failure,
            "failure_count": self.failure_count,
            "wall_clock_s": self.wall_clock_s,
            "engine": self.engine,
            "threads": self.threads,
        }
        doc.update(self.extra)
        return doc


def manifest_json_bytes(manifest: RunManifest) -> bytes:
    return (json.dumps(manifest.to_doc(), sort_keys=True, indent=2)
            + "\n").encode("utf-8")


def log2_scaled(x: Fraction, bits: int = 10) -> int:
    """floor(2^bits * log2(x)) for a positive rational, exactly."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("log2 needs a positive value")
    a = x.numerator ** (1 << bits)
    b = x.denominator ** (1 << bits)
    k = a.bit_length() - b.bit_length()
    if k >= 0:
        return k if a >= (b << k) else k - 1
    return k if (a << -k) >= b else k - 1


def _pow2_decimal(t: int, bits: int = 10) -> str:
    """Exact decimal string of t / 2^bits."""
    sign = "-" if t < 0 else ""
    whole, rem = divmod(abs(t), 1 << bits)
    if rem == 0:
        return f"{sign}{whole}"
    frac = str(rem * 5 ** bits).rjust(bits, "0").rstrip("0")
    return f"{sign}{whole}.{frac}"


def emit_plot(csv_text: str) -> Optional[str]:
    """SVG polyline of log2(ratio) against j; pure function of the CSV.

    Returns None (with a warning) when the CSV holds no data rows.
    Coordinates are integers in a 64000 x 40000 viewBox; y values come
    from log2(ratio) scaled by 1024, so the geometry is exact.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        warnings.warn("empty CSV: no plot emitted")
        return None
    try:
        j_col = header.index("j")
        ratio_col = header.index("ratio")
    except ValueError:
        raise ValueError(f"CSV lacks j/ratio columns: {header}") from None
    points = []
    for row in reader:
        if not row:
            continue
        points.append((int(row[j_col]),
                       log2_scaled(parse_rational(row[ratio_col]))))
    if not points:
        warnings.warn("empty CSV: no plot emitted")
        return None

    width, height = 64000, 40000
    x0, x1, y0, y1 = 6000, 62000, 4000, 36000
    t_lo = min(t for _, t in points)
    t_hi = max(t for _, t in points)
    t_span = max(t_hi - t_lo, 1)
    n = len(points)

    def x_at(i):
        if n == 1:
            return (x0 + x1) // 2
        return x0 + i * (x1 - x0) // (n - 1)

    def y_at(t):
        return y1 - (t - t_lo) * (y1 - y0) // t_span

    coords = [(x_at(i), y_at(t)) for i, (_, t) in enumerate(points)]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{x0}" y1="{y1}" x2="{x1}" y2="{y1}" '
        f'stroke="black" stroke-width="60"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" '
        f'stroke="black" stroke-width="60"/>',
        '<text x="32000" y="2400" font-size="1400" '
        'text-anchor="middle">log2(ratio) vs j</text>',
        f'<text x="{x0 - 600}" y="{y0 + 400}" font-size="1100" '
        f'text-anchor="end">{_pow2_decimal(t_hi)}</text>',
        f'<text x="{x0 - 600}" y="{y1 + 400}" font-size="1100" '
        f'text-anchor="end">{_pow2_decimal(t_lo)}</text>',
    ]
    if len(coords) > 1:
        path = " ".join(f"{x},{y}" for x, y in coords)
        parts.append(f'<polyline points="{path}" fill="none" '
                     f'stroke="steelblue" stroke-width="120"/>')
    for (j, _), (x, y) in zip(points, coords):
        parts.append(f'<circle cx="{x}" cy="{y}" r="300" fill="steelblue"/>')
        parts.append(f'<text x="{x}" y="{y1 + 1800}" font-size="1100" '
                     f'text-anchor="middle">{j}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"

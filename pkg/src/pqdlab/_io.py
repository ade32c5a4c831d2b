"""Shared text serialisation: RFC-4180 CSV with round-trip floats and a tiny log-log SVG."""
from __future__ import annotations

import csv
import io
import math
from xml.sax.saxutils import escape


def fmt(value):
    """Cell text: ``.17g`` for floats (round-trips exactly), blank for missing values."""
    if value is None:
        return ""
    if isinstance(value, (bool,)):
        return "true" if value else "false"
    if isinstance(value, float) or hasattr(value, "dtype") and value.dtype.kind == "f":
        v = float(value)
        if math.isnan(v):
            return ""
        return format(v, ".17g")
    return str(value)


def csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(row.get(c)) for c in columns])
    return buf.getvalue()


_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd")


def loglog_svg(x, series, title="", xlabel="n", ylabel="", width=480, height=320) -> str:
    """Static log-log line plot; ``series`` maps a label to y-values aligned with ``x``.

    Non-positive or non-finite points are dropped from each polyline.
    """
    pad_l, pad_r, pad_t, pad_b = 64, 16, 28, 40
    pts = [(float(a), float(b)) for ys in series.values() for a, b in zip(x, ys)]
    pts = [(a, b) for a, b in pts if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)]
    if pts:
        lx = [math.log10(a) for a, _ in pts]
        ly = [math.log10(b) for _, b in pts]
        x0, x1 = min(lx), max(lx)
        y0, y1 = min(ly), max(ly)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pw = width - pad_l - pad_r
    ph = height - pad_t - pad_b

    def sx(v):
        return pad_l + (math.log10(v) - x0) / (x1 - x0) * pw

    def sy(v):
        return pad_t + (1.0 - (math.log10(v) - y0) / (y1 - y0)) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="{pad_l}" y="{pad_t}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
        f'<text x="{pad_l + pw / 2:.1f}" y="{height - 8}" text-anchor="middle" font-size="12">{escape(xlabel)} (log)</text>',
        f'<text x="14" y="{pad_t + ph / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {pad_t + ph / 2:.1f})">{escape(ylabel)} (log)</text>',
    ]
    for dec in range(math.ceil(x0), math.floor(x1) + 1):
        px = pad_l + (dec - x0) / (x1 - x0) * pw
        out.append(f'<text x="{px:.1f}" y="{pad_t + ph + 14}" text-anchor="middle" font-size="10">1e{dec}</text>')
    for dec in range(math.ceil(y0), math.floor(y1) + 1):
        py = pad_t + (1.0 - (dec - y0) / (y1 - y0)) * ph
        out.append(f'<text x="{pad_l - 4}" y="{py + 3:.1f}" text-anchor="end" font-size="10">1e{dec}</text>')
    for i, (label, ys) in enumerate(series.items()):
        color = _PALETTE[i % len(_PALETTE)]
        coords = " ".join(
            f"{sx(float(a)):.2f},{sy(float(b)):.2f}"
            for a, b in zip(x, ys)
            if float(a) > 0 and float(b) > 0 and math.isfinite(float(b))
        )
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(
            f'<text x="{pad_l + 8}" y="{pad_t + 14 + 14 * i}" font-size="11" fill="{color}">{escape(str(label))}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"

"""Report rendering: summary table and SVG figures.

Figures are written as hand-assembled SVG with fixed-precision
coordinates, so a report is byte-identical for byte-identical inputs.
Rendering consumes only the results store and the analysis documents;
nothing here refits models.

Bucket palette (kept in one place, documented in the README):

    full-replication    #2f8f4e
    unconfirmed-results #e0a43c
    opposite-results    #c43d3d
    model-fit-failure   #8a8a8a
"""

from __future__ import annotations

import os
from html import escape

from forkgarden.outcomes import BUCKETS
from forkgarden.runner import ResultsStore

__all__ = ["BUCKET_COLORS", "render_report", "summary_table", "summary_rows"]

BUCKET_COLORS = {
    "full-replication": "#2f8f4e",
    "unconfirmed-results": "#e0a43c",
    "opposite-results": "#c43d3d",
    "model-fit-failure": "#8a8a8a",
}

_FONT = 'font-family="sans-serif"'


def _f(v: float) -> str:
    return ("%.2f" % v).rstrip("0").rstrip(".")


class _Svg:
    def __init__(self, width: int, height: int):
        self.w = width
        self.h = height
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
            f'height="{height}" viewBox="0 0 {width} {height}">',
            f'<rect x="0" y="0" width="{width}" height="{height}" fill="#ffffff"/>',
        ]

    def rect(self, x, y, w, h, fill, title=None):
        t = f"<title>{escape(title)}</title>" if title else ""
        if t:
            self.parts.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                f'fill="{fill}">{t}</rect>'
            )
        else:
            self.parts.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(w)}" height="{_f(h)}" '
                f'fill="{fill}"/>'
            )

    def line(self, x1, y1, x2, y2, stroke="#444444", width=1.0):
        self.parts.append(
            f'<line x1="{_f(x1)}" y1="{_f(y1)}" x2="{_f(x2)}" y2="{_f(y2)}" '
            f'stroke="{stroke}" stroke-width="{_f(width)}"/>'
        )

    def text(self, x, y, s, size=12, anchor="start", color="#222222"):
        self.parts.append(
            f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" {_FONT} '
            f'text-anchor="{anchor}" fill="{color}">{escape(s)}</text>'
        )

    def finish(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _legend(svg: _Svg, x: float, y: float):
    for bucket in BUCKETS:
        svg.rect(x, y - 9, 12, 12, BUCKET_COLORS[bucket])
        svg.text(x + 16, y + 1, bucket, size=11)
        x += 16 + 7.2 * len(bucket) + 18


# ---------------------------------------------------------------------------
# summary


def summary_rows(store: ResultsStore) -> list:
    """Bucket counts and percentages, one row per dependent variable plus
    a study-level row.  Percentages are over all universes in the store."""
    n = len(store.records)
    rows = []
    for nm in store.header["dv_names"]:
        counts = {b: 0 for b in BUCKETS}
        for r in store.records:
            counts[r["dvs"][nm]["bucket"]] += 1
        rows.append((nm, counts))
    study = {b: 0 for b in BUCKETS}
    for r in store.records:
        study[r["study_bucket"]] += 1
    rows.append(("study", study))
    return [
        {
            "level": nm,
            "counts": counts,
            "percent": {b: (100.0 * c / n if n else 0.0) for b, c in counts.items()},
        }
        for nm, counts in rows
    ]


def summary_table(store: ResultsStore) -> str:
    """Aligned text table of bucket shares."""
    rows = summary_rows(store)
    name_w = max(len(r["level"]) for r in rows)
    head = " ".join(f"{b:>22}" for b in BUCKETS)
    lines = [f"{'':<{name_w}} {head}"]
    for r in rows:
        cells = " ".join(
            f"{r['counts'][b]:>13} ({r['percent'][b]:5.1f}%)" for b in BUCKETS
        )
        lines.append(f"{r['level']:<{name_w}} {cells}")
    return "\n".join(lines) + "\n"


def _summary_tsv(store: ResultsStore) -> str:
    rows = summary_rows(store)
    header = ["level"]
    for b in BUCKETS:
        header.extend([b, b + "_pct"])
    lines = ["\t".join(header)]
    for r in rows:
        cells = [r["level"]]
        for b in BUCKETS:
            cells.append(str(r["counts"][b]))
            cells.append("%.4f" % r["percent"][b])
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# figures


def _fig_overview(store: ResultsStore) -> str:
    rows = summary_rows(store)
    n = len(store.records)
    width, bar_h, gap = 900, 26, 10
    left, right, top = 150, 30, 46
    height = top + len(rows) * (bar_h + gap) + 30
    svg = _Svg(width, height)
    svg.text(12, 22, f"Outcome buckets across {n} universes", size=14)
    _legend(svg, 12, 36)
    y = top + 8
    span = width - left - right
    for r in rows:
        svg.text(left - 8, y + bar_h / 2 + 4, r["level"], anchor="end", size=11)
        x = float(left)
        for b in BUCKETS:
            c = r["counts"][b]
            if not c:
                continue
            w = span * c / n
            svg.rect(x, y, w, bar_h, BUCKET_COLORS[b], title=f"{b}: {c}")
            if w > 34:
                svg.text(x + w / 2, y + bar_h / 2 + 4, str(c), anchor="middle", size=10, color="#ffffff")
            x += w
        y += bar_h + gap
    return svg.finish()


def _fig_spec_curve(doc: dict) -> str:
    entries = doc["universes"]
    n = len(entries)
    width, height = 900, 320
    left, right, top, bottom = 60, 20, 50, 40
    svg = _Svg(width, height)
    svg.text(12, 22, f"Specification curve: {n} universes by match count", size=14)
    _legend(svg, 12, 36)
    plot_w = width - left - right
    plot_h = height - top - bottom
    max_match = max(doc["max_match_count"], 1)
    svg.line(left, top, left, top + plot_h)
    svg.line(left, top + plot_h, left + plot_w, top + plot_h)
    for m in range(0, max_match + 1):
        y = top + plot_h - plot_h * m / max_match
        svg.line(left - 4, y, left, y)
        svg.text(left - 8, y + 4, str(m), anchor="end", size=10)
    bar_w = plot_w / n
    for i, e in enumerate(entries):
        h = plot_h * e["match_count"] / max_match
        x = left + i * bar_w
        color = BUCKET_COLORS[e["study_bucket"]]
        if e["match_count"] == 0:
            svg.rect(x, top + plot_h - 2, max(bar_w, 0.5), 2, color)
        else:
            svg.rect(x, top + plot_h - h, max(bar_w, 0.5), h, color)
    svg.text(left + plot_w / 2, height - 12, "universes, least to most confirmatory",
             anchor="middle", size=11)
    svg.text(16, top + plot_h / 2, "matches", anchor="middle", size=11)
    return svg.finish()


def _fig_change_stability(doc: dict) -> str:
    decisions = doc["decisions"]
    width, bar_h, gap = 900, 24, 10
    left, right, top = 170, 70, 40
    height = top + len(decisions) * (bar_h + gap) + 30
    svg = _Svg(width, height)
    svg.text(12, 22, "Decision instability: flip rate when one decision changes", size=14)
    span = width - left - right
    y = top + 6
    for did, entry in decisions.items():
        rate = entry["flip_rate"]
        svg.text(left - 8, y + bar_h / 2 + 4, did, anchor="end", size=11)
        svg.rect(left, y, span, bar_h, "#eeeeee")
        svg.rect(left, y, span * rate, bar_h, "#4878a8",
                 title=f"{did}: {entry['pairs_differing']}/{entry['pairs_total']} ordered pairs differ")
        svg.text(left + span + 6, y + bar_h / 2 + 4, "%.1f%%" % (100.0 * rate), size=11)
        y += bar_h + gap
    return svg.finish()


def _fig_time_curve(doc: dict) -> str:
    frames = doc["timeframes"]
    width, height = 900, 320
    left, right, top, bottom = 60, 20, 50, 46
    svg = _Svg(width, height)
    svg.text(12, 22, "Bucket mix by observed timeframe (study level)", size=14)
    _legend(svg, 12, 36)
    plot_w = width - left - right
    plot_h = height - top - bottom
    n = len(frames)
    slot_w = plot_w / max(n, 1)
    bar_w = slot_w * 0.72
    for i, fr in enumerate(frames):
        x0 = left + i * slot_w + (slot_w - bar_w) / 2
        y = top + plot_h
        for b in BUCKETS:
            p = fr["study"]["proportions"].get(b, 0.0)
            if p <= 0.0:
                continue
            h = plot_h * p
            y -= h
            svg.rect(x0, y, bar_w, h, BUCKET_COLORS[b],
                     title=f"{int(fr['days'])} days, {b}: {fr['study']['counts'].get(b, 0)}")
        label = str(int(fr["days"])) if float(fr["days"]).is_integer() else _f(fr["days"])
        svg.text(x0 + bar_w / 2, top + plot_h + 16, label, anchor="middle", size=10)
        svg.text(x0 + bar_w / 2, top + plot_h + 30, f"n={fr['n_universes']}",
                 anchor="middle", size=9, color="#666666")
    svg.text(left + plot_w / 2, height - 4, "total timeframe (days)", anchor="middle", size=11)
    return svg.finish()


def render_report(store: ResultsStore, analyses: dict, out_dir) -> list:
    """Write the four figures and the summary tables into out_dir.

    ``analyses`` maps analysis name ("spec-curve", "change-stability",
    "time-curve") to its document.  Returns the list of paths written.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []

    def emit(name, text):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(path)

    emit("overview.svg", _fig_overview(store))
    emit("spec_curve.svg", _fig_spec_curve(analyses["spec-curve"]))
    emit("change_stability.svg", _fig_change_stability(analyses["change-stability"]))
    emit("time_curve.svg", _fig_time_curve(analyses["time-curve"]))
    emit("summary.tsv", _summary_tsv(store))
    emit("summary.txt", summary_table(store))
    return written

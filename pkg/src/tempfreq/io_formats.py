"""Reading curves and date tables; writing result envelopes as CSV, JSON or SVG.

Calibration curve files
    Lines beginning with ``#`` are comments. Data lines hold at least three
    numbers separated by commas and/or whitespace: cal BP, 14C BP, 14C sigma.
    Further columns are ignored. Rows may come in any order.

Date tables
    CSV with a header row. Required columns ``id``, ``c14_age``, ``c14_error``;
    optional ``site_id``, ``site_area``, ``curve_id``. A row with a site area
    becomes a :class:`~tempfreq.hoi.SiteRecord`.

Result CSV
    A ``#`` comment line, a header ``cal_bp,density`` (or ``cal_bp,<label>...``
    for several series), then one row per grid point, oldest first. Numbers are
    written in shortest round-trip form.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional
from xml.etree import ElementTree as ET

import numpy as np

from .calibration import CalibrationCurve, DateRecord
from .errors import DomainError, DuplicateKnotError, IoError, ParseError, SchemaError
from .grid import CALBP_MAX, CALBP_MIN, DensitySeries, TimeGrid
from .hoi import SiteRecord

_SPLIT = re.compile(r"[,\s]+")
REQUIRED_COLUMNS = ("id", "c14_age", "c14_error")
OPTIONAL_COLUMNS = ("site_id", "site_area", "curve_id")


def _num(x) -> str:
    return repr(float(x))


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8-sig")
    except UnicodeDecodeError:
        return Path(path).read_text(encoding="latin-1")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc


def _write_text(path, text: str):
    if str(path) == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# -- calibration curves -------------------------------------------------------

def parse_curve(path, name: Optional[str] = None) -> CalibrationCurve:
    rows = []
    seen = {}
    for lineno, raw in enumerate(_read_text(path).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in _SPLIT.split(line) if f]
        if len(fields) < 3:
            raise ParseError(f"expected >= 3 columns, got {len(fields)}", lineno, path)
        try:
            cal, mu, sig = (float(f) for f in fields[:3])
        except ValueError:
            raise ParseError(f"non-numeric value in {line!r}", lineno, path) from None
        if not all(math.isfinite(v) for v in (cal, mu, sig)):
            raise ParseError("non-finite value", lineno, path)
        if not sig > 0:
            raise ParseError(f"sigma must be > 0, got {sig}", lineno, path)
        if cal in seen:
            raise DuplicateKnotError(f"cal BP {cal} already given on line {seen[cal]}", lineno, path)
        seen[cal] = lineno
        rows.append((cal, mu, sig))
    if len(rows) < 2:
        raise ParseError("a calibration curve needs at least 2 knots", path=path)
    rows.sort()
    arr = np.array(rows)
    return CalibrationCurve(arr[:, 0], arr[:, 1], arr[:, 2], name or Path(path).stem)


def write_curve(curve: CalibrationCurve, path):
    lines = [f"# {curve.name}", "# cal_bp,c14_bp,sigma"]
    lines += [f"{_num(c)},{_num(m)},{_num(s)}" for c, m, s in zip(curve.cal_bp, curve.mu, curve.sigma)]
    _write_text(path, "\n".join(lines) + "\n")


# -- date tables ---------------------------------------------------------------

@dataclass
class Dataset:
    records: list
    source_path: Optional[str] = None
    parse_warnings: List[str] = field(default_factory=list)

    @property
    def dates(self) -> List[DateRecord]:
        return [r.date if isinstance(r, SiteRecord) else r for r in self.records]


def _parse_row(row, has_area):
    rid = (row.get("id") or "").strip()
    if not rid:
        raise ValueError("empty id")
    try:
        r = float(row["c14_age"])
        s = float(row["c14_error"])
    except (TypeError, ValueError):
        raise ValueError("c14_age and c14_error must be numeric") from None
    curve_id = (row.get("curve_id") or "").strip() or None
    date = DateRecord(rid, r, s, curve_id)  # DomainError on s <= 0
    area_text = (row.get("site_area") or "").strip() if has_area else ""
    if not area_text:
        return date
    try:
        area = float(area_text)
    except ValueError:
        raise ValueError(f"site_area {area_text!r} is not numeric") from None
    site_id = (row.get("site_id") or "").strip() or rid
    return SiteRecord(date, site_id, area)


def parse_dates(path, strict: bool = False) -> Dataset:
    """Read a date table.

    Rows that fail validation are skipped and described in
    ``parse_warnings``; with ``strict=True`` the first bad row raises
    :class:`ParseError` instead.
    """
    text = _read_text(path)
    kept = [(no, ln) for no, ln in enumerate(text.splitlines(), start=1)
            if ln.strip() and not ln.lstrip().startswith("#")]
    linenos = [no for no, _ in kept]
    reader = csv.DictReader([ln for _, ln in kept])
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    missing = [c for c in REQUIRED_COLUMNS if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing required column(s): {', '.join(missing)}")
    has_area = "site_area" in header
    records, warnings, ids = [], [], set()
    for k, row in enumerate(reader, start=1):
        rowno = linenos[k] if k < len(linenos) else None
        try:
            rec = _parse_row(row, has_area)
            rid = rec.date.id if isinstance(rec, SiteRecord) else rec.id
            if rid in ids:
                raise ValueError(f"duplicate id {rid!r}")
        except (ValueError, DomainError) as exc:
            if strict:
                raise ParseError(str(exc), rowno, path) from None
            warnings.append(f"{path}:{rowno}: {exc}")
            continue
        ids.add(rid)
        records.append(rec)
    return Dataset(records, str(path), warnings)


def write_dates(dataset: Dataset, path):
    has_site = any(isinstance(r, SiteRecord) for r in dataset.records)
    has_curve = any(d.curve_id for d in dataset.dates)
    cols = list(REQUIRED_COLUMNS) + (["site_id", "site_area"] if has_site else []) + (["curve_id"] if has_curve else [])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for rec in dataset.records:
        d = rec.date if isinstance(rec, SiteRecord) else rec
        row = [d.id, _num(d.r), _num(d.s)]
        if has_site:
            row += [rec.site_id, _num(rec.area)] if isinstance(rec, SiteRecord) else ["", ""]
        if has_curve:
            row.append(d.curve_id or "")
        w.writerow(row)
    _write_text(path, buf.getvalue())


# -- results -------------------------------------------------------------------

@dataclass
class ResultEnvelope:
    """One pipeline run: its method, every parameter needed to re-run it, and outputs.

    ``series`` maps labels to density series sharing one grid. ``table`` holds
    per-date rows (point estimates) and ``rug`` optional timestamps to mark on
    plots.
    """

    method: str
    parameters: dict
    series: Dict[str, DensitySeries] = field(default_factory=dict)
    table: List[dict] = field(default_factory=list)
    rug: List[float] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    def __post_init__(self):
        grids = {s.grid for s in self.series.values()}
        if len(grids) > 1:
            raise DomainError("all series in an envelope must share one grid")


def _csv_text(env: ResultEnvelope) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    buf.write(f"# tempfreq {env.method}; cal BP oldest first\n")
    if env.series:
        labels = list(env.series)
        grid = env.series[labels[0]].grid
        w.writerow(["cal_bp"] + (["density"] if len(labels) == 1 else labels))
        t = grid.values
        cols = [env.series[k].values for k in labels]
        for k in range(grid.count - 1, -1, -1):
            w.writerow([_num(t[k])] + [_num(c[k]) for c in cols])
    else:
        keys = list(env.table[0]) if env.table else []
        w.writerow(keys)
        for row in env.table:
            w.writerow([_num(row[k]) if isinstance(row[k], float) else row[k] for k in keys])
    return buf.getvalue()


def _json_text(env: ResultEnvelope) -> str:
    doc = {
        "method": env.method,
        "parameters": env.parameters,
        "warnings": env.warnings,
        "series": [
            {
                "label": label,
                "grid": {"start_calbp": s.grid.start_calbp, "step": s.grid.step, "count": s.grid.count},
                "values": [float(v) for v in s.values],
            }
            for label, s in env.series.items()
        ],
        "table": env.table,
        "rug": [float(v) for v in env.rug],
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


SVG_W, SVG_H, SVG_PAD = 800, 400, 60


def _svg_text(env: ResultEnvelope) -> str:
    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(SVG_W), height=str(SVG_H),
                     viewBox=f"0 0 {SVG_W} {SVG_H}")
    ET.SubElement(svg, "title").text = f"tempfreq {env.method}"
    x0, x1, y0, y1 = SVG_PAD, SVG_W - SVG_PAD / 2, SVG_H - SVG_PAD, SVG_PAD / 2
    if not env.series:
        raise DomainError("SVG output needs at least one density series")
    grid = next(iter(env.series.values())).grid
    old, new = grid.end_calbp, grid.start_calbp
    ymax = max(float(s.values.max()) for s in env.series.values()) or 1.0

    def px(t):  # oldest on the left
        return x0 + (old - t) / (old - new) * (x1 - x0)

    def py(v):
        return y0 - v / ymax * (y0 - y1)

    axes = ET.SubElement(svg, "g", {"class": "axes", "stroke": "black", "fill": "none"})
    ET.SubElement(axes, "line", x1=f"{x0}", y1=f"{y0}", x2=f"{x1}", y2=f"{y0}")
    ET.SubElement(axes, "line", x1=f"{x0}", y1=f"{y0}", x2=f"{x0}", y2=f"{y1}")
    labels = ET.SubElement(svg, "g", {"class": "labels", "font-size": "12", "font-family": "sans-serif"})
    for t in np.linspace(old, new, 6):
        ET.SubElement(labels, "text", x=f"{px(t):.2f}", y=f"{y0 + 16}", **{"text-anchor": "middle"}).text = f"{t:g}"
    for v in np.linspace(0, ymax, 5):
        ET.SubElement(labels, "text", x=f"{x0 - 6}", y=f"{py(v) + 4:.2f}", **{"text-anchor": "end"}).text = f"{v:.3g}"
    ET.SubElement(labels, "text", {"class": "xlabel", "x": f"{(x0 + x1) / 2}", "y": f"{SVG_H - 15}",
                                   "text-anchor": "middle"}).text = "cal BP"
    ET.SubElement(labels, "text", {"class": "ylabel", "x": "15", "y": f"{(y0 + y1) / 2}", "text-anchor": "middle",
                                   "transform": f"rotate(-90 15 {(y0 + y1) / 2})"}).text = "density"
    palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    for i, (label, s) in enumerate(env.series.items()):
        pts = " ".join(f"{px(t):.2f},{py(v):.2f}" for t, v in zip(s.times, s.values))
        ET.SubElement(svg, "polyline", {"class": "series", "data-label": label, "points": pts, "fill": "none",
                                        "stroke": palette[i % len(palette)], "stroke-width": "1.2"})
    if env.rug:
        rug = ET.SubElement(svg, "g", {"class": "rug", "stroke": "black", "stroke-width": "0.8"})
        for t in env.rug:
            if new <= t <= old:
                ET.SubElement(rug, "line", x1=f"{px(t):.2f}", y1=f"{y0}", x2=f"{px(t):.2f}", y2=f"{y0 - 8}")
    return ET.tostring(svg, encoding="unicode") + "\n"


_WRITERS = {"csv": _csv_text, "json": _json_text, "svg": _svg_text}


def write_result(env: ResultEnvelope, fmt: str, path):
    """Serialize ``env`` as ``csv``, ``json`` or ``svg`` to ``path`` (``-`` for stdout)."""
    if fmt not in _WRITERS:
        raise DomainError(f"unknown output format {fmt!r}")
    _write_text(path, _WRITERS[fmt](env))


def _grid_from_points(t) -> TimeGrid:
    t = np.asarray(t, dtype=float)
    step = float(t[1] - t[0])
    bounded = t[0] >= CALBP_MIN and t[-1] <= CALBP_MAX
    return TimeGrid(float(t[0]), step, t.size, bounded)


def read_series_csv(path) -> Dict[str, DensitySeries]:
    """Inverse of the CSV writer for series output."""
    rows = [ln for ln in _read_text(path).splitlines() if ln and not ln.startswith("#")]
    reader = csv.reader(rows)
    header = next(reader)
    if not header or header[0] != "cal_bp":
        raise ParseError("result CSV must start with a cal_bp column", path=path)
    data = np.array([[float(v) for v in r] for r in reader])
    data = data[::-1]  # files are oldest first
    grid = _grid_from_points(data[:, 0])
    return {label: DensitySeries(grid, data[:, k + 1]) for k, label in enumerate(header[1:])}


def read_result_json(path) -> dict:
    """Load a JSON envelope; series come back as :class:`DensitySeries`."""
    doc = json.loads(_read_text(path))
    series = {}
    for s in doc["series"]:
        g = s["grid"]
        start, step, count = g["start_calbp"], g["step"], g["count"]
        bounded = start >= CALBP_MIN and start + step * (count - 1) <= CALBP_MAX
        series[s["label"]] = DensitySeries(TimeGrid(start, step, count, bounded), s["values"])
    doc["series"] = series
    return doc

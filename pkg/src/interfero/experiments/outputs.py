"""CSV tables and self-contained SVG plots."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .scenarios import ResultTable

RESULT_HEADER = ("scenario", "M", "snr_db", "seed", "scaled_error", "residual",
                 "runtime_ms", "status")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _num(value) -> str:
    if value is None:
        return ""
    return repr(float(value))


def _snr(value) -> str:
    return "inf" if value is None else _num(value)


def _write_rows(path: Path, header, rows) -> Path:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path


def write_results_csv(table: ResultTable, path) -> Path:
    rows = ([r.scenario, r.M, _snr(r.snr_db), r.seed, _num(r.scaled_error), _num(r.residual),
             _num(r.runtime_ms), r.status] for r in table.rows)
    return _write_rows(Path(path), RESULT_HEADER, rows)


def write_coefficients_csv(table: ResultTable, path) -> Path:
    def rows():
        for rec in table.coefficients:
            for k, (t, h) in enumerate(zip(rec.x_true, rec.x_hat)):
                yield [rec.M, _snr(rec.snr_db), rec.seed, k, _num(t), _num(h)]
    return _write_rows(Path(path), ("M", "snr_db", "seed", "index", "x_true", "x_hat"), rows())


def write_summary_csv(table: ResultTable, path) -> Path:
    rows = ([m, _snr(snr), _num(mean), _num(median), count]
            for m, snr, mean, median, count in table.summary())
    return _write_rows(Path(path), ("M", "snr_db", "mean_error", "median_error", "runs"), rows)


def write_diagnostics_csv(rows, path) -> Path:
    return _write_rows(Path(path), ("what", "M", "statistic", "value"),
                       ([r.what, r.M, r.statistic, _num(r.value)] for r in rows))


# --- SVG -------------------------------------------------------------------

WIDTH, HEIGHT = 640, 420
LEFT, RIGHT, TOP, BOTTOM = 70, 150, 30, 50


def _svg(body: list[str], title: str) -> str:
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">')
    frame = [f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
             f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle">{escape(title)}</text>']
    return "\n".join([head, *frame, *body, "</svg>", ""])


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0 = LEFT, HEIGHT - BOTTOM
    return [f'<line x1="{x0}" y1="{TOP}" x2="{x0}" y2="{y0}" stroke="black"/>',
            f'<line x1="{x0}" y1="{y0}" x2="{WIDTH - RIGHT}" y2="{y0}" stroke="black"/>',
            f'<text x="{(LEFT + WIDTH - RIGHT) / 2:.1f}" y="{HEIGHT - 12}" '
            f'text-anchor="middle">{escape(x_label)}</text>',
            f'<text x="16" y="{(TOP + y0) / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {(TOP + y0) / 2:.1f})">{escape(y_label)}</text>']


def error_curve_svg(table: ResultTable, statistic: str = "median") -> str:
    """Scaled error against M, one series per SNR, on a log axis."""
    summary = table.summary()
    pick = 3 if statistic == "median" else 2
    series: dict = {}
    for entry in summary:
        series.setdefault(entry[1], []).append((entry[0], entry[pick]))
    ms = [e[0] for e in summary] or [1]
    values = [v for pts in series.values() for _, v in pts if v > 0]
    floor = 1e-16
    lo = math.floor(math.log10(max(min(values), floor))) if values else -1
    hi = math.ceil(math.log10(max(values))) if values else 0
    hi = max(hi, lo + 1)
    m_lo, m_hi = min(ms), max(ms)
    span = max(m_hi - m_lo, 1)
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM

    def px(m):
        return LEFT + (m - m_lo) / span * plot_w

    def py(v):
        v = max(v, 10.0 ** lo)
        return TOP + (hi - math.log10(v)) / (hi - lo) * plot_h

    body = _axes("M (measurements)", f"{statistic} scaled error")
    for decade in range(lo, hi + 1):
        y = py(10.0 ** decade)
        body.append(f'<text x="{LEFT - 6}" y="{y + 4:.1f}" text-anchor="end">1e{decade}</text>')
        body.append(f'<line x1="{LEFT}" y1="{y:.1f}" x2="{WIDTH - RIGHT}" y2="{y:.1f}" '
                    f'stroke="#dddddd"/>')
    for m in sorted(set(ms)):
        body.append(f'<text x="{px(m):.1f}" y="{HEIGHT - BOTTOM + 16}" '
                    f'text-anchor="middle">{m}</text>')
    keys = sorted(series, key=lambda s: math.inf if s is None else s)
    for idx, snr in enumerate(keys):
        color = PALETTE[idx % len(PALETTE)]
        pts = " ".join(f"{px(m):.1f},{py(v):.1f}" for m, v in series[snr])
        label = "noise-free" if snr is None else f"SNR {snr:g} dB"
        body.append(f'<polyline class="series" fill="none" stroke="{color}" '
                    f'stroke-width="2" points="{pts}"/>')
        ly = TOP + 20 * idx + 10
        body.append(f'<line x1="{WIDTH - RIGHT + 10}" y1="{ly}" x2="{WIDTH - RIGHT + 30}" '
                    f'y2="{ly}" stroke="{color}" stroke-width="2"/>')
        body.append(f'<text x="{WIDTH - RIGHT + 35}" y="{ly + 4}">{escape(label)}</text>')
    return _svg(body, f"{table.scenario}: {statistic} scaled error")


def coefficient_bars_svg(x_true, x_hat, title: str) -> str:
    """Paired bars of true and recovered coefficients."""
    x_true = np.asarray(x_true, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    top = max(float(np.max(np.abs(x_true))), float(np.max(np.abs(x_hat))), 1e-300)
    has_negative = bool(np.any(x_true < 0) or np.any(x_hat < 0))
    plot_w, plot_h = WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM
    zero = TOP + (plot_h / 2 if has_negative else plot_h)
    unit = (plot_h / 2 if has_negative else plot_h) / top
    slot = plot_w / max(x_true.size, 1)
    body = _axes("index", "coefficient")
    for k, (t, h) in enumerate(zip(x_true, x_hat)):
        for offset, value, color in ((0.1, t, PALETTE[0]), (0.5, h, PALETTE[1])):
            height = abs(value) * unit
            y = zero - height if value >= 0 else zero
            body.append(f'<rect x="{LEFT + (k + offset) * slot:.2f}" y="{y:.2f}" '
                        f'width="{0.4 * slot:.2f}" height="{height:.2f}" fill="{color}"/>')
    for idx, label in enumerate(("true", "recovered")):
        ly = TOP + 20 * idx + 10
        body.append(f'<rect x="{WIDTH - RIGHT + 10}" y="{ly - 6}" width="20" height="10" '
                    f'fill="{PALETTE[idx]}"/>')
        body.append(f'<text x="{WIDTH - RIGHT + 35}" y="{ly + 4}">{label}</text>')
    return _svg(body, title)


def _write_text(path: Path, text: str) -> Path:
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return path


def emit_outputs(table: ResultTable, out_dir, plots: bool = False,
                 summary: bool = False) -> list[Path]:
    """Write ``<scenario>_results.csv`` plus coefficient, summary and plot files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create {out}: {exc.strerror}") from None
    name = table.scenario
    written = []
    if "diagnostics" in table.extras:
        written.append(write_diagnostics_csv(table.extras["diagnostics"],
                                             out / f"{name}_summary.csv"))
        return written
    written.append(write_results_csv(table, out / f"{name}_results.csv"))
    if table.coefficients:
        written.append(write_coefficients_csv(table, out / f"{name}_coefficients.csv"))
    if summary:
        written.append(write_summary_csv(table, out / f"{name}_summary.csv"))
    if plots and table.rows:
        written.append(_write_text(out / f"{name}_error.svg", error_curve_svg(table)))
        if table.coefficients:
            rec = table.coefficients[-1]
            title = f"{name}: M={rec.M}, seed {rec.seed}"
            written.append(_write_text(out / f"{name}_coefficients.svg",
                                       coefficient_bars_svg(rec.x_true, rec.x_hat, title)))
    return written

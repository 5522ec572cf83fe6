"""Run-directory artifacts: CSV traces, manifests, comparison tables, SVG charts.

Floats are written with ``repr`` so identical runs produce byte-identical
files and values round-trip exactly.
"""
from __future__ import annotations

import csv
import json
from pathlib import Path

from . import __version__

TRACE_HEADER = ["iteration", "e", "y", "y_prime", "lambda_eff", "mu_eff"]
MANIFEST_NAME = "manifest.json"


def _fmt(v) -> str:
    return repr(float(v))


def write_run_outputs(payload: dict, out_dir) -> list[str]:
    """Write all artifacts for one /simulate response. Returns the file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    d = payload["d"]
    with open(out / "primary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "d"])
        for i, v in enumerate(d):
            w.writerow([i, _fmt(v)])
    written.append("primary.csv")

    metrics_rows = []
    manifest_controllers = []
    for ctrl in payload["controllers"]:
        label = ctrl["label"]
        trace = ctrl["trace"]
        trace_file = f"trace_{label}.csv"
        with open(out / trace_file, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(TRACE_HEADER)
            for i in range(len(trace["e"])):
                w.writerow(
                    [
                        i,
                        _fmt(trace["e"][i]),
                        _fmt(trace["y"][i]),
                        _fmt(trace["y_prime"][i]),
                        _fmt(trace["lambda_eff"][i]),
                        _fmt(trace["mu_eff"][i]),
                    ]
                )
        written.append(trace_file)

        conv_file = None
        if ctrl.get("convergence"):
            conv_file = f"convergence_{label}.csv"
            with open(out / conv_file, "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(["iteration", "convergence_db"])
                for i, v in enumerate(ctrl["convergence"]["values"]):
                    w.writerow([i, _fmt(v)])
            written.append(conv_file)

        nr = ctrl.get("noise_reduction")
        if nr:
            for i, v in enumerate(nr["values"]):
                metrics_rows.append([label, "r_window_db", i, _fmt(v)])
            if nr.get("overall") is not None:
                metrics_rows.append([label, "r_overall_db", 0, _fmt(nr["overall"])])

        manifest_controllers.append(
            {
                "label": label,
                "kind": ctrl["kind"],
                "status": ctrl["status"],
                "diverged_at": ctrl.get("diverged_at"),
                "error": ctrl.get("error"),
                "trace_file": trace_file,
                "convergence_file": conv_file,
                "final_taps": ctrl["final_taps"],
                "r_overall_db": None if not nr else nr.get("overall"),
                "r_window": None if not nr else nr["window"],
                "r_stride": None if not nr else nr["stride"],
            }
        )

    with open(out / "metrics.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["controller", "metric", "index", "value"])
        w.writerows(metrics_rows)
    written.append("metrics.csv")

    manifest = {
        "tool": "ancsim",
        "version": __version__,
        "scenario_hash": payload["scenario_hash"],
        "config": payload["config"],
        "sample_rate_hz": payload["sample_rate_hz"],
        "s_hat_taps": payload["s_hat_taps"],
        "s_hat_error_power": payload["s_hat_error_power"],
        "controllers": manifest_controllers,
        "files": written + [MANIFEST_NAME],
    }
    with open(out / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(MANIFEST_NAME)
    return written


def read_manifest(run_dir) -> dict:
    path = Path(run_dir) / MANIFEST_NAME
    if not path.is_file():
        raise FileNotFoundError(f"no run manifest at {path}")
    with open(path) as fh:
        return json.load(fh)


def read_metrics(run_dir) -> dict[str, dict]:
    """Parse metrics.csv into {controller: {r_window: [...], r_overall: float}}."""
    out: dict[str, dict] = {}
    with open(Path(run_dir) / "metrics.csv", newline="") as fh:
        for row in csv.DictReader(fh):
            entry = out.setdefault(row["controller"], {"r_window": [], "r_overall": None})
            if row["metric"] == "r_window_db":
                entry["r_window"].append(float(row["value"]))
            elif row["metric"] == "r_overall_db":
                entry["r_overall"] = float(row["value"])
    return out


def read_series_csv(path, column: str) -> list[float]:
    with open(path, newline="") as fh:
        return [float(row[column]) for row in csv.DictReader(fh)]


# --- SVG rendering -----------------------------------------------------------

_PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def render_line_chart(
    series: list[tuple[str, list[float], list[float]]],
    title: str,
    xlabel: str,
    ylabel: str,
    y_pad: float = 5.0,
    width: int = 860,
    height: int = 520,
) -> str:
    """Hand-emitted SVG line chart; no plotting dependency.

    The y-axis spans the data range padded by ``y_pad`` on both sides; the
    resolved bounds are exposed as data-axis-ymin/data-axis-ymax on the root.
    """
    if not series or all(len(ys) == 0 for _, _, ys in series):
        raise ValueError("nothing to plot: all series are empty")

    all_x = [x for _, xs, _ in series for x in xs]
    all_y = [y for _, _, ys in series for y in ys]
    xmin, xmax = min(all_x), max(all_x)
    ymin, ymax = min(all_y) - y_pad, max(all_y) + y_pad
    if xmax == xmin:
        xmax = xmin + 1.0

    ml, mr, mt, mb = 70, 20, 45, 50
    pw, ph = width - ml - mr, height - mt - mb

    def sx(x):
        return ml + (x - xmin) / (xmax - xmin) * pw

    def sy(y):
        return mt + (ymax - y) / (ymax - ymin) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'data-axis-ymin="{ymin!r}" data-axis-ymax="{ymax!r}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2}" y="25" text-anchor="middle" font-size="16">{title}</text>',
        f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>',
    ]
    n_ticks = 6
    for i in range(n_ticks):
        ty = ymin + (ymax - ymin) * i / (n_ticks - 1)
        parts.append(
            f'<line x1="{ml}" y1="{sy(ty):.2f}" x2="{width - mr}" y2="{sy(ty):.2f}" '
            f'stroke="#ddd" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{ml - 8}" y="{sy(ty):.2f}" text-anchor="end" font-size="11" '
            f'dominant-baseline="middle">{ty:.1f}</text>'
        )
        tx = xmin + (xmax - xmin) * i / (n_ticks - 1)
        parts.append(
            f'<text x="{sx(tx):.2f}" y="{height - mb + 18}" text-anchor="middle" font-size="11">{tx:.0f}</text>'
        )
    parts.append(
        f'<text x="{width / 2}" y="{height - 10}" text-anchor="middle" font-size="13">{xlabel}</text>'
    )
    parts.append(
        f'<text x="18" y="{height / 2}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 18 {height / 2})">{ylabel}</text>'
    )
    for idx, (label, xs, ys) in enumerate(series):
        color = _PALETTE[idx % len(_PALETTE)]
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.2" '
            f'data-label="{label}"/>'
        )
        parts.append(
            f'<text x="{ml + 10}" y="{mt + 18 + 16 * idx}" font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)

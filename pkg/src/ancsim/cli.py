"""Command-line harness. A thin client of the FastAPI service.

Without ``--server`` the service runs in-process; with it, requests go to
a remote ancsim instance. All file I/O (configs, CSV, SVG) happens on the
client side.
"""
from __future__ import annotations

import json
import sys
import warnings
from pathlib import Path

import click

from . import report
from .scenario import apply_overrides, bundled_scenarios, load_scenario


class ServiceClient:
    """Minimal JSON-over-HTTP client; in-process ASGI unless a server URL is given."""

    def __init__(self, server: str | None = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=600.0)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import app

            self._client = TestClient(app)

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        if response.status_code != 200:
            try:
                detail = response.json().get("detail", response.text)
            except ValueError:
                detail = response.text
            raise click.ClickException(f"{path} failed ({response.status_code}): {detail}")
        return response.json()


@click.group()
def main():
    """Simulation lab for wavelet-thresholded, variable-step FxLMS noise control."""


@main.command()
@click.argument("config")
@click.option("--set", "overrides", multiple=True, metavar="KEY=VALUE", help="Override a config field (dotted path).")
@click.option("--seed", type=int, default=None, help="Override the scenario seed.")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="Output directory for run artifacts.")
@click.option("--server", default=None, help="Remote service URL; default is in-process.")
def run(config, overrides, seed, out_dir, server):
    """Run every controller of a scenario CONFIG (file path or bundled name)."""
    try:
        cfg = load_scenario(config)
        if overrides:
            cfg = apply_overrides(cfg, list(overrides))
        if seed is not None:
            cfg = cfg.model_copy(update={"seed": seed})
        cfg.resolve_filters()
    except FileNotFoundError as exc:
        raise click.ClickException(str(exc)) from exc
    except Exception as exc:  # pydantic reports all schema violations at once
        raise click.ClickException(f"invalid scenario: {exc}") from exc

    destination = Path(out_dir or cfg.output_dir or f"runs/{cfg.name}")
    payload = ServiceClient(server).post("/simulate", cfg.model_dump(mode="json"))
    files = report.write_run_outputs(payload, destination)
    click.echo(f"run {payload['scenario_hash']} -> {destination} ({len(files)} files)")

    failed = False
    for ctrl in payload["controllers"]:
        if ctrl["status"] == "diverged":
            failed = True
            click.echo(
                f"  {ctrl['label']}: DIVERGED at iteration {ctrl['diverged_at']}: {ctrl['error']}",
                err=True,
            )
        else:
            nr = ctrl.get("noise_reduction") or {}
            overall = nr.get("overall")
            shown = "n/a" if overall is None else f"{overall:.2f} dB"
            click.echo(f"  {ctrl['label']}: R = {shown}")
    if failed:
        sys.exit(1)


@main.command()
@click.argument("run_dirs", nargs=-1, required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--target-db", type=float, default=None, help="Target R for iterations-to-target (default: min final R - 3).")
@click.option("--out", "out_dir", type=click.Path(), default="compare_out", help="Where to write table and overlay CSVs.")
@click.option("--server", default=None, help="Remote service URL; default is in-process.")
def compare(run_dirs, target_db, out_dir, server):
    """Compare two or more completed run directories (same scenario)."""
    if len(run_dirs) < 2:
        raise click.ClickException("compare needs at least two run directories")
    manifests = []
    for d in run_dirs:
        try:
            manifests.append(report.read_manifest(d))
        except FileNotFoundError as exc:
            raise click.ClickException(str(exc)) from exc
    hashes = {m["scenario_hash"] for m in manifests}
    if len(hashes) != 1:
        raise click.ClickException(
            f"refusing to compare runs of different scenarios (hashes: {sorted(hashes)})"
        )

    entries = []
    meta = []  # (run_dir, controller label) per entry
    for d, manifest in zip(run_dirs, manifests):
        run_metrics = report.read_metrics(d)
        for ctrl in manifest["controllers"]:
            label = ctrl["label"]
            if ctrl["status"] != "ok" or label not in run_metrics:
                continue
            entries.append(
                {
                    "label": f"{Path(d).name}:{label}",
                    "r_overall": run_metrics[label]["r_overall"],
                    "r_window": run_metrics[label]["r_window"],
                    "window": ctrl["r_window"],
                    "stride": ctrl["r_stride"],
                }
            )
            meta.append((str(d), label))
    if not entries:
        raise click.ClickException("no successfully completed controllers to compare")

    result = ServiceClient(server).post("/compare", {"entries": entries, "target_db": target_db})

    first_dir = str(run_dirs[0])
    baseline = {
        label: row["final_r_db"]
        for (d, label), row in zip(meta, result["rows"])
        if d == first_dir
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header = f"{'rank':>4}  {'controller':<40} {'final R (dB)':>12} {'iters to target':>16} {'dR vs first':>12}"
    click.echo(f"target: {result['target_db']:.2f} dB")
    click.echo(header)
    table_rows = []
    for (d, label), row in sorted(zip(meta, result["rows"]), key=lambda item: item[1]["rank"]):
        delta = row["final_r_db"] - baseline.get(label, row["final_r_db"])
        iters = "never" if row["iterations_to_target"] is None else str(row["iterations_to_target"])
        click.echo(f"{row['rank']:>4}  {row['label']:<40} {row['final_r_db']:>12.2f} {iters:>16} {delta:>12.2f}")
        table_rows.append([row["rank"], row["label"], repr(row["final_r_db"]), iters, repr(delta)])

    import csv

    with open(out / "compare_table.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rank", "controller", "final_r_db", "iterations_to_target", "delta_final_r_db"])
        w.writerows(table_rows)
    with open(out / "compare_overlay.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["controller", "index", "r_window_db"])
        for entry in entries:
            for i, v in enumerate(entry["r_window"]):
                w.writerow([entry["label"], i, repr(v)])
    click.echo(f"wrote {out / 'compare_table.csv'} and {out / 'compare_overlay.csv'}")


PLOT_KINDS = ("noise-reduction", "convergence", "residual", "signal")


@main.command()
@click.argument("run_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--which", type=click.Choice(PLOT_KINDS), required=True)
def plot(run_dir, which):
    """Render one figure-equivalent SVG from a run directory's CSV series."""
    try:
        manifest = report.read_manifest(run_dir)
    except FileNotFoundError as exc:
        raise click.ClickException(str(exc)) from exc
    run_path = Path(run_dir)
    series = []

    if which == "noise-reduction":
        run_metrics = report.read_metrics(run_path)
        for ctrl in manifest["controllers"]:
            label = ctrl["label"]
            if label in run_metrics and run_metrics[label]["r_window"]:
                stride = ctrl["r_stride"] or 1
                ys = run_metrics[label]["r_window"]
                xs = [(i + 1) * stride for i in range(len(ys))]
                series.append((label, xs, ys))
        title, ylabel = "Noise reduction vs iteration", "R (dB)"
    elif which == "convergence":
        for ctrl in manifest["controllers"]:
            if ctrl.get("convergence_file"):
                ys = report.read_series_csv(run_path / ctrl["convergence_file"], "convergence_db")
                series.append((ctrl["label"], list(range(len(ys))), ys))
        title, ylabel = "Convergence rate", "20 log10 |e| RMS (dB)"
    elif which == "residual":
        for ctrl in manifest["controllers"]:
            ys = report.read_series_csv(run_path / ctrl["trace_file"], "e")
            series.append((ctrl["label"], list(range(len(ys))), ys))
        title, ylabel = "Residual error vs iteration", "e(n)"
    else:  # signal
        d = report.read_series_csv(run_path / "primary.csv", "d")
        series.append(("primary d(n)", list(range(len(d))), d))
        for ctrl in manifest["controllers"]:
            ys = report.read_series_csv(run_path / ctrl["trace_file"], "y_prime")
            series.append((f"{ctrl['label']} y'(n)", list(range(len(ys))), ys))
        title, ylabel = "Signal value vs iteration", "amplitude"

    if not series:
        raise click.ClickException(f"run dir has no data for {which!r}; available plots: {PLOT_KINDS}")
    svg = report.render_line_chart(series, title=title, xlabel="iteration n", ylabel=ylabel)
    out_file = run_path / f"{which}.svg"
    out_file.write_text(svg)
    click.echo(f"wrote {out_file}")


@main.command()
@click.option("--secondary", default="builtin:duct-secondary", help="True secondary path: builtin:<name> or coefficient file.")
@click.option("--order", type=int, default=16, help="Model order (taps).")
@click.option("--length", type=int, default=20000, help="White-noise excitation length.")
@click.option("--mu", type=float, default=0.01, help="LMS step size.")
@click.option("--seed", type=int, default=1234)
@click.option("--out", "out_file", type=click.Path(), default=None, help="Write identified taps as a coefficient file.")
@click.option("--server", default=None, help="Remote service URL; default is in-process.")
def identify(secondary, order, length, mu, seed, out_file, server):
    """Identify a secondary-path model offline by LMS on white noise."""
    payload = ServiceClient(server).post(
        "/identify",
        {
            "secondary_path": secondary,
            "model_order": order,
            "excitation_length": length,
            "step_size": mu,
            "seed": seed,
        },
    )
    click.echo(f"final identification error power: {payload['final_error_power']:.3e}")
    if out_file:
        with open(out_file, "w") as fh:
            fh.write(f"# identified from {secondary}, order={order}, mu={mu}, seed={seed}\n")
            for tap in payload["taps"]:
                fh.write(f"{tap!r}\n")
        click.echo(f"wrote {out_file}")
    else:
        click.echo(json.dumps(payload["taps"]))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the simulation service as an HTTP server."""
    import uvicorn

    uvicorn.run("ancsim.service:app", host=host, port=port)


@main.command()
def scenarios():
    """List bundled scenarios."""
    for name in bundled_scenarios():
        click.echo(name)


if __name__ == "__main__":
    main()

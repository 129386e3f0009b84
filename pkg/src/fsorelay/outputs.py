"""Result serialization: delimited tables, run manifests, SVG figures.

CSV files carry the scenario hash and master seed as comment lines and use
shortest round-trip float formatting with no timestamps, so repeated runs
of the same scenario produce byte-identical tables. Figures are rendered
straight from Figure objects (no global pyplot state) with a fixed hash
salt so the SVG output is reproducible too.
"""

from __future__ import annotations

import os
import platform

import matplotlib
import numpy as np
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .scenario import scenario_hash, scenario_text
from .sweeps import SweepResult


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def _header_comments(result: SweepResult) -> list[str]:
    return [
        f"# scenario_hash = {scenario_hash(result.scenario)}",
        f"# master_seed = {result.scenario.master_seed}",
    ]


def write_csv(path: str, result: SweepResult) -> None:
    """Main table: x column plus one column per series."""
    if result.x is None or result.x_name is None:
        raise ValueError(f"result kind '{result.kind}' has no main table")
    lines = _header_comments(result)
    names = [result.x_name] + list(result.columns)
    lines.append(",".join(names))
    series = [np.asarray(result.columns[n]) for n in result.columns]
    for i, x in enumerate(result.x):
        cells = [_format_cell(x)] + [_format_cell(col[i]) for col in series]
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_table(path: str, result: SweepResult, name: str) -> None:
    """One side table (ensemble export, oracle rows) by name."""
    header, rows = result.tables[name]
    lines = _header_comments(result)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_format_cell(cell) for cell in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path: str, result: SweepResult,
                   elapsed_seconds: float) -> None:
    lines = [
        f"kind = {result.kind}",
        f"scenario_hash = {scenario_hash(result.scenario)}",
        f"elapsed_seconds = {elapsed_seconds:.2f}",
        f"python = {platform.python_version()}",
        f"numpy = {np.__version__}",
        f"matplotlib = {matplotlib.__version__}",
    ]
    try:
        import scipy
        lines.append(f"scipy = {scipy.__version__}")
    except ImportError:
        pass
    for key, value in result.meta.items():
        lines.append(f"{key} = {value}")
    lines.append("")
    lines.append("--- scenario ---")
    lines.append(scenario_text(result.scenario).rstrip("\n"))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _ber_axes(fig: Figure, result: SweepResult):
    ax = fig.add_subplot(111)
    for name, values in result.columns.items():
        line, = ax.semilogy(result.x, np.asarray(values), marker="o",
                            markersize=3, label=name)
        line.set_gid(f"series-{name}")
    ax.set_xlabel("Transmit power (dBm)")
    ax.set_ylabel("Bit error rate")
    ax.set_ylim(1e-12, 1.0)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(loc="lower left", fontsize=8)
    return ax


def _histogram_axes(fig: Figure, result: SweepResult):
    ax = fig.add_subplot(111)
    centers = np.asarray(result.x)
    half = 0.5 * (centers[1] - centers[0]) if len(centers) > 1 else 1.0
    edges = np.concatenate([centers - half, [centers[-1] + half]])
    for name, values in result.columns.items():
        patch = ax.stairs(np.asarray(values), edges, label=name, fill=False,
                          linewidth=1.5)
        patch.set_gid(f"series-{name}")
    ax.set_xlabel("Fading (dB)")
    ax.set_ylabel(f"States per {2 * half:g} dB bin")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="upper right", fontsize=8)
    return ax


def _oracle_axes(fig: Figure, result: SweepResult):
    header, rows = result.tables["oracle"]
    closed = np.array([row[2] for row in rows])
    estimate = np.array([row[3] for row in rows])
    se = np.array([row[4] for row in rows])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(closed != 0, estimate / closed, np.nan)
        bars = np.where(closed != 0, 3.0 * se / np.abs(closed), 0.0)
    ax = fig.add_subplot(111)
    container = ax.errorbar(np.arange(len(rows)), ratio, yerr=bars,
                            fmt="o", markersize=3, capsize=2)
    container.lines[0].set_gid("series-ratio")
    ax.axhline(1.0, color="gray", linewidth=0.8)
    ax.set_xlabel("Term index")
    ax.set_ylabel("Estimate / closed form")
    ax.grid(True, alpha=0.3)
    return ax


def render_figure(path: str, result: SweepResult) -> None:
    salt = scenario_hash(result.scenario)
    with matplotlib.rc_context({"svg.hashsalt": salt}):
        fig = Figure(figsize=(7.0, 5.0), dpi=100)
        FigureCanvasSVG(fig)
        if result.kind == "fading-stats":
            _histogram_axes(fig, result)
        elif result.kind == "oracle-check":
            _oracle_axes(fig, result)
        else:
            _ber_axes(fig, result)
        fig.suptitle(result.kind)
        fig.savefig(path, format="svg", metadata={"Date": None})


def write_outputs(out_dir: str, result: SweepResult,
                  elapsed_seconds: float = 0.0,
                  stem: str | None = None) -> dict[str, str]:
    """Write every artifact for one result; returns label -> path."""
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or result.kind.replace("-", "_")
    written: dict[str, str] = {}
    if result.x is not None:
        csv_path = os.path.join(out_dir, f"{stem}.csv")
        write_csv(csv_path, result)
        written["csv"] = csv_path
    for name in result.tables:
        table_path = os.path.join(out_dir, f"{stem}_{name}.csv")
        write_table(table_path, result, name)
        written[f"table:{name}"] = table_path
    figure_path = os.path.join(out_dir, f"{stem}.svg")
    render_figure(figure_path, result)
    written["figure"] = figure_path
    manifest_path = os.path.join(out_dir, f"{stem}.manifest.txt")
    write_manifest(manifest_path, result, elapsed_seconds)
    written["manifest"] = manifest_path
    return written

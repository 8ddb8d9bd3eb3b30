"""CSV emission, matplotlib figures, and the run manifest.

One CSV per metric; columns are documented in the README and stable. Floats
are written with repr so identical runs produce byte-identical files. Figures
are rendered to PNG next to the CSVs (Agg backend, no display needed).
"""

import csv
import json
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__
from .config import ScenarioConfig, config_hash
from .metrics import AggregatedMetrics, MetricsReport

STANDARD_KEYS = ("strategy", "channel_count", "node_count", "ttl")


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _ranks(per_node: dict) -> dict:
    """Rank nodes by descending ratio (ties by node id), the sorted ordering
    of the delivery plot."""
    ordered = sorted(per_node, key=lambda n: (-per_node[n], n))
    return {node: rank for rank, node in enumerate(ordered)}


def write_run_csvs(report: MetricsReport, out_dir: Path) -> list[str]:
    """Emit per-run metric CSVs; returns the file names written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ident = (report.strategy, report.channel_count, report.node_count, report.ttl,
             report.seed)
    written = []
    if report.competitors is not None:
        rows = [ident + (report.competitors,
                         "" if report.contention_ratio is None else report.contention_ratio)]
        _write_csv(out_dir / "contention.csv",
                   STANDARD_KEYS + ("seed", "competitors", "ratio"), rows)
        written.append("contention.csv")
        return written
    rank = _ranks(report.per_node_delivery)
    rows = [ident + (node, report.per_node_delivery[node], rank[node])
            for node in sorted(report.per_node_delivery)]
    _write_csv(out_dir / "delivery_ratio.csv",
               STANDARD_KEYS + ("seed", "node_id", "ratio", "rank_by_ratio"), rows)
    written.append("delivery_ratio.csv")
    rows = [ident + (hop, value)
            for hop, value in enumerate(report.accumulative_receivers)]
    _write_csv(out_dir / "accumulative_receivers.csv",
               STANDARD_KEYS + ("seed", "hop", "receivers"), rows)
    written.append("accumulative_receivers.csv")
    return written


def write_sweep_csvs(cells, out_dir: Path) -> list[str]:
    """Emit one summary CSV per metric over aggregated sweep cells.

    cells: list of (extra_params: dict, AggregatedMetrics) in canonical order.
    Swept keys beyond the standard identity columns become extra columns.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    extra_keys = sorted({k for extra, _ in cells for k in extra})
    id_header = STANDARD_KEYS + tuple(extra_keys) + ("runs",)

    def ident(extra, agg):
        return ((agg.strategy, agg.channel_count, agg.node_count, agg.ttl)
                + tuple(extra.get(k, "") for k in extra_keys) + (agg.runs,))

    written = []
    delivery_rows, acc_rows, cont_rows = [], [], []
    for extra, agg in cells:
        base = ident(extra, agg)
        if agg.contention_mean is not None or agg.competitors is not None:
            cont_rows.append(base + (agg.competitors,
                                     "" if agg.contention_mean is None else agg.contention_mean,
                                     "" if agg.contention_std is None else agg.contention_std))
            continue
        rank = _ranks(agg.delivery_mean)
        for node in sorted(agg.delivery_mean):
            delivery_rows.append(base + (node, agg.delivery_mean[node],
                                         agg.delivery_std[node], rank[node]))
        for hop, mean in enumerate(agg.accumulative_mean):
            acc_rows.append(base + (hop, mean, agg.accumulative_std[hop]))
    if delivery_rows:
        _write_csv(out_dir / "delivery_ratio_summary.csv",
                   id_header + ("node_id", "mean", "std", "rank_by_mean"), delivery_rows)
        written.append("delivery_ratio_summary.csv")
    if acc_rows:
        _write_csv(out_dir / "accumulative_receivers_summary.csv",
                   id_header + ("hop", "mean", "std"), acc_rows)
        written.append("accumulative_receivers_summary.csv")
    if cont_rows:
        _write_csv(out_dir / "contention_summary.csv",
                   id_header + ("competitors", "mean", "std"), cont_rows)
        written.append("contention_summary.csv")
    return written


# ------------------------------------------------------------------- figures

def _save(fig, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def render_run_figures(report: MetricsReport, fig_dir: Path) -> list[str]:
    fig_dir = Path(fig_dir)
    if report.competitors is not None:
        return []
    written = []
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(report.accumulative_receivers)), report.accumulative_receivers,
            marker="o")
    ax.set_xlabel("hop")
    ax.set_ylabel("accumulative receivers")
    ax.set_title(f"{report.strategy}, Ch={report.channel_count}, "
                 f"N={report.node_count}, seed={report.seed}")
    ax.grid(True, alpha=0.4)
    _save(fig, fig_dir / "accumulative_receivers.png")
    written.append("accumulative_receivers.png")

    ratios = sorted(report.per_node_delivery.values(), reverse=True)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(len(ratios)), ratios, marker=".")
    ax.set_xlabel("node rank")
    ax.set_ylabel("delivery ratio")
    ax.set_ylim(-0.02, 1.02)
    ax.set_title(f"{report.strategy}, Ch={report.channel_count}, "
                 f"N={report.node_count}, seed={report.seed}")
    ax.grid(True, alpha=0.4)
    _save(fig, fig_dir / "delivery_ratio.png")
    written.append("delivery_ratio.png")
    return written


def _cell_label(extra: dict, agg: AggregatedMetrics) -> str:
    parts = [f"{k}={v}" for k, v in sorted(extra.items())]
    if "strategy" not in extra:
        parts.insert(0, agg.strategy)
    return ", ".join(parts) if parts else agg.strategy


def render_sweep_figures(cells, fig_dir: Path) -> list[str]:
    fig_dir = Path(fig_dir)
    written = []
    diss = [(extra, agg) for extra, agg in cells if agg.competitors is None]
    cont = [(extra, agg) for extra, agg in cells if agg.competitors is not None]

    if diss:
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for extra, agg in diss:
            ax.plot(range(len(agg.accumulative_mean)), agg.accumulative_mean,
                    marker="o", label=_cell_label(extra, agg))
        ax.set_xlabel("hop")
        ax.set_ylabel("mean accumulative receivers")
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
        _save(fig, fig_dir / "accumulative_receivers.png")
        written.append("accumulative_receivers.png")

        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for extra, agg in diss:
            ratios = sorted(agg.delivery_mean.values(), reverse=True)
            ax.plot(range(len(ratios)), ratios, marker=".",
                    label=_cell_label(extra, agg))
        ax.set_xlabel("node rank")
        ax.set_ylabel("mean delivery ratio")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
        _save(fig, fig_dir / "delivery_ratio.png")
        written.append("delivery_ratio.png")

    if cont:
        groups: dict[tuple, list] = {}
        for extra, agg in cont:
            key = tuple(sorted((k, v) for k, v in extra.items()
                               if k != "contention.competitors"))
            groups.setdefault(key, []).append((extra, agg))
        fig, ax = plt.subplots(figsize=(6.5, 4.5))
        for key, members in sorted(groups.items()):
            members.sort(key=lambda pair: pair[1].competitors)
            xs = [agg.competitors for _, agg in members]
            ys = [agg.contention_mean for _, agg in members]
            errs = [agg.contention_std or 0.0 for _, agg in members]
            label = ", ".join(f"{k}={v}" for k, v in key) or members[0][1].strategy
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=3, label=label)
        ax.set_xlabel("competing CR transmitters")
        ax.set_ylabel("mean delivery ratio at receivers")
        ax.set_ylim(-0.02, 1.02)
        ax.grid(True, alpha=0.4)
        ax.legend(fontsize=8)
        _save(fig, fig_dir / "contention.png")
        written.append("contention.png")
    return written


def write_manifest(out_dir: Path, command: str, cfg: ScenarioConfig,
                   seeds, sweep_spec, outputs) -> None:
    manifest = {
        "tool": "surfsim",
        "version": __version__,
        "command": command,
        "config_hash": config_hash(cfg),
        "config": cfg.to_dict(),
        "seeds": list(seeds),
        "sweep": sweep_spec,
        "outputs": sorted(outputs),
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")

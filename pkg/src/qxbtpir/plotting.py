"""Matplotlib figures written next to the CLI's delimited outputs."""
from __future__ import annotations

from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def figure_path(out: str | Path, suffix: str = "") -> Path:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    return out.with_name(out.stem + suffix + ".png")


def plot_rate_table(rows, path: str | Path) -> Path:
    """Achievable rate against N, one line per (X, T, B), with classical rates dashed."""
    series = defaultdict(list)
    for r in rows:
        series[(r.X, r.T, r.B)].append(r)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for (X, T, B), rs in sorted(series.items()):
        rs = sorted(rs, key=lambda r: r.N)
        Ns = [r.N for r in rs]
        line, = ax.plot(Ns, [float(r.rate) for r in rs], marker="o", ms=3, label=f"X={X} T={T} B={B}")
        ax.plot(Ns, [max(float(r.classical_rate), 0.0) for r in rs], ls="--", lw=0.8, color=line.get_color())
    ax.set_xlabel("N")
    ax.set_ylabel("rate")
    ax.set_ylim(bottom=0)
    ax.set_title("achievable rate (solid) and classical rate (dashed)")
    if len(series) <= 12:
        ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_run_report(report, path: str | Path) -> Path:
    """Success ratio per Byzantine placement."""
    per = defaultdict(lambda: [0, 0])
    for t in report.trials:
        key = ",".join(map(str, t.placement)) or "none"
        per[key][0] += sum(t.successes)
        per[key][1] += len(t.successes)
    keys = sorted(per)
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(keys) + 2), 3.5))
    ax.bar(range(len(keys)), [per[k][0] / per[k][1] for k in keys], color="tab:blue")
    ax.set_xticks(range(len(keys)), keys, rotation=60, fontsize=7)
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("Byzantine placement")
    ax.set_ylabel("exact recovery ratio")
    ax.set_title(f"{report.channel}: rate {report.realized_rate}")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_pvalues(pvalues, path: str | Path, title: str = "p-values", alpha: float = 0.01) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.hist(list(pvalues), bins=20, range=(0, 1), color="tab:green", edgecolor="white")
    ax.axvline(alpha, color="tab:red", ls="--", lw=1)
    ax.set_xlabel("p-value")
    ax.set_ylabel("runs")
    ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_histogram(empirical: dict, predicted: dict, path: str | Path, title: str = "") -> Path:
    """Empirical outcome frequencies against predicted probabilities, keyed by outcome index."""
    keys = sorted(set(empirical) | set(predicted), key=int)
    fig, ax = plt.subplots(figsize=(max(4, 0.35 * len(keys) + 2), 3.5))
    xs = range(len(keys))
    ax.bar([x - 0.2 for x in xs], [empirical.get(k, 0.0) for k in keys], width=0.4, label="empirical")
    ax.bar([x + 0.2 for x in xs], [predicted.get(k, 0.0) for k in keys], width=0.4, label="predicted")
    ax.set_xticks(list(xs), keys, fontsize=7)
    ax.set_xlabel("outcome index")
    ax.set_ylabel("probability")
    ax.set_title(title)
    ax.legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

"""Regret figures and the results.csv reader/writer.

Figures are written as SVG through matplotlib's Agg/SVG backends with a fixed
hash salt and no timestamp, so reruns produce identical files.
"""

from __future__ import annotations

import csv
from collections import defaultdict
from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

CSV_HEADER = ["method", "seed", "round", "n_evals", "threshold", "best_y", "simple_regret",
              "batch_mean_u", "final_loss"]

STYLE = {
    "svg.hashsalt": "genbo",
    "svg.fonttype": "none",
    "font.size": 11,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
}


class SchemaError(ValueError):
    pass


def result_rows(result) -> list[list]:
    """CSV rows for one RunResult, one per round."""
    return [
        [result.label, result.seed, r.round, r.n_evals, r.threshold, r.best_y,
         r.simple_regret, r.batch_mean_u, r.final_loss]
        for r in result.records
    ]


def write_csv(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(rows)


@dataclass
class RegretCurves:
    """Per method: rounds and a seeds x rounds matrix of simple regret."""

    rounds: dict[str, np.ndarray]
    regret: dict[str, np.ndarray]
    seeds: dict[str, list[int]]

    def final_mean(self, method: str) -> float:
        return float(self.regret[method][:, -1].mean())

    def legend_order(self) -> list[str]:
        """Methods sorted by final mean regret, highest first."""
        return sorted(self.regret, key=lambda m: (-self.final_mean(m), m))


def read_curves(path) -> RegretCurves:
    """Parse results.csv; raises SchemaError on a bad header or empty body."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_HEADER:
            raise SchemaError(f"unexpected header {header!r}")
        table: dict[str, dict[int, dict[int, float]]] = defaultdict(lambda: defaultdict(dict))
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise SchemaError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
            try:
                table[row[0]][int(row[1])][int(row[2])] = float(row[6])
            except ValueError as exc:
                raise SchemaError(f"line {lineno}: {exc}") from None
    if not table:
        raise SchemaError("no data rows")
    rounds, regret, seeds = {}, {}, {}
    for method, by_seed in table.items():
        seed_ids = sorted(by_seed)
        rs = sorted(by_seed[seed_ids[0]])
        if any(sorted(by_seed[s]) != rs for s in seed_ids):
            raise SchemaError(f"method {method!r}: seeds cover different rounds")
        rounds[method] = np.array(rs)
        regret[method] = np.array([[by_seed[s][r] for r in rs] for s in seed_ids])
        seeds[method] = seed_ids
    return RegretCurves(rounds, regret, seeds)


def plot_regret(curves: RegretCurves, out_path, title: str | None = None):
    """Mean simple regret per round with a +-1 std band for each method."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(8, 5))
        colors = plt.rcParams["axes.prop_cycle"].by_key()["color"]
        for i, method in enumerate(curves.legend_order()):
            x = curves.rounds[method]
            mean = curves.regret[method].mean(axis=0)
            std = curves.regret[method].std(axis=0)
            c = colors[i % len(colors)]
            ax.plot(x, mean, color=c, lw=1.8, label=method)
            ax.fill_between(x, mean - std, mean + std, color=c, alpha=0.2, lw=0)
        ax.set_xlabel("round")
        ax.set_ylabel("simple regret")
        if title:
            ax.set_title(title)
        ax.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return fig


def summarize(curves: RegretCurves) -> dict:
    """Final-round regret statistics per method (population std over seeds)."""
    out = {}
    for method in curves.legend_order():
        finals = curves.regret[method][:, -1]
        out[method] = {
            "n_seeds": int(finals.size),
            "seeds": curves.seeds[method],
            "final_regret_mean": float(np.mean(finals)),
            "final_regret_std": float(np.std(finals)),
            "final_regret": [float(v) for v in finals],
        }
    return out

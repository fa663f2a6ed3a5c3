"""Structured run reports: JSON, delimited tables, and rendered figures."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from . import __version__


@dataclass
class Report:
    command: str
    config: dict
    checks: list = field(default_factory=list)
    quantities: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)
    version: str = __version__

    def add_check(self, name, passed, measured=None, bound=None, witness=None):
        rec = {"name": name, "passed": bool(passed)}
        if measured is not None:
            rec["measured"] = measured
        if bound is not None:
            rec["bound"] = bound
        if not passed:
            rec["witness"] = witness if witness is not None else "unavailable"
        self.checks.append(rec)
        return rec

    def time_block(self, name):
        return _Timer(self, name)

    @property
    def passed(self):
        return all(c["passed"] for c in self.checks)

    def to_json(self):
        return {
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "passed": self.passed,
            "checks": self.checks,
            "quantities": self.quantities,
            "timings": self.timings,
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2, default=str)


class _Timer:
    def __init__(self, report, name):
        self.report = report
        self.name = name

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.report.timings[self.name] = time.perf_counter() - self.start
        return False


def write_table(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def save_enumeration_figure(values, threshold, path, title, xlabel="case"):
    """Sorted scatter of enumerated magnitudes with the lower-bound line."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ys = sorted(values)
    ax.plot(range(len(ys)), ys, ".", markersize=3, color="#2060a0")
    ax.axhline(threshold, color="#c03020", linewidth=1, label=f"bound {threshold:g}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("magnitude")
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_bound_scatter(lhs, rhs, path, title):
    """Scatter of measured norms against their theoretical lower bounds."""
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.plot(rhs, lhs, ".", markersize=4, color="#2060a0")
    top = max(max(lhs), max(rhs)) * 1.05 if lhs else 1.0
    ax.plot([0, top], [0, top], "--", color="#c03020", linewidth=1, label="equality")
    ax.set_xlabel("lower bound")
    ax.set_ylabel("measured norm")
    ax.set_title(title)
    ax.legend(loc="upper left", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_certificate_figure(rows, path):
    """Per-instance bar chart of certified W values and bounds.

    Rows: (label, satisfiable, w_value, lower_bound or None).
    """
    fig, ax = plt.subplots(figsize=(max(4.0, 0.8 * len(rows) + 2), 3.5))
    xs = range(len(rows))
    colors = ["#208040" if r[1] else "#c03020" for r in rows]
    ax.bar(xs, [r[2] if r[2] is not None else 0.0 for r in rows], color=colors)
    for i, r in enumerate(rows):
        if r[3] is not None:
            ax.plot([i - 0.4, i + 0.4], [r[3], r[3]], color="black", linewidth=1.2)
    ax.set_xticks(list(xs))
    ax.set_xticklabels([r[0] for r in rows], rotation=45, ha="right", fontsize=7)
    ax.set_ylabel("W value (bars), lower bound (ticks)")
    ax.set_title("certified dichotomy: satisfiable (green) vs gap (red)")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_spectral_figure(ns, gaps, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ns, gaps, "o-", markersize=4, color="#2060a0")
    ax.axhline(4.0, color="gray", linewidth=1, linestyle=":", label="degree bound 4")
    ax.set_xscale("log")
    ax.set_xlabel("vertices")
    ax.set_ylabel("second eigenvalue modulus")
    ax.set_title("circulant spectral gap (recorded, not assumed)")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

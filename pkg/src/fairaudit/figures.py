"""Render report figures to files next to the delimited output.

Figures are a convenience view of the same numbers the reports carry;
the JSON/CSV output stays the canonical artifact. All rendering uses the
Agg backend so it works headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def _slug(text: str) -> str:
    out = "".join(c if c.isalnum() or c in "-_" else "_" for c in str(text))
    return out.strip("_") or "all"


def save_curve_figures(series: list, out_dir, prefix: str = "curves") -> list:
    """One figure per association aggregate, one line per group."""
    os.makedirs(out_dir, exist_ok=True)
    by_type = {}
    for s in series:
        by_type.setdefault(s.type_name, []).append(s)
    paths = []
    for type_name in sorted(by_type):
        fig, ax = plt.subplots(figsize=(6, 4))
        for s in sorted(by_type[type_name], key=lambda s: str(s.group)):
            taus = [t for t, _ in s.points]
            rates = [r for _, r in s.points]
            ax.plot(taus, rates, marker="o", markersize=3, label=str(s.group))
        ax.set_xlabel("confidence threshold")
        ax.set_ylabel("hit rate (%)")
        ax.set_title(f"{type_name} associations vs. threshold")
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
        path = os.path.join(out_dir, f"{prefix}_{_slug(type_name)}.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def save_group_bars(cells: list, title: str, ylabel: str, path) -> str:
    """Bar chart over groups; cells are (label, value, err_low, err_high) tuples."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    labels = [c[0] for c in cells]
    values = [c[1] for c in cells]
    fig, ax = plt.subplots(figsize=(max(5, 0.9 * len(cells) + 2), 4))
    x = range(len(cells))
    ax.bar(x, values, color="#4878cf")
    has_err = any(c[2] is not None for c in cells)
    if has_err:
        lo = [v - (e if e is not None else v) for v, e in zip(values, (c[2] for c in cells))]
        hi = [(e if e is not None else v) - v for v, e in zip(values, (c[3] for c in cells))]
        ax.errorbar(x, values, yerr=[lo, hi], fmt="none", ecolor="black", capsize=3)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, axis="y", alpha=0.3)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return str(path)


def save_geo_figures(payload: dict, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for spec in payload["group_by"]:
        attrs = set(spec.split("_x_"))
        cells = [
            (c["group"], c["mean_hit_rate"], c["ci_low"], c["ci_high"])
            for c in payload["cells"]
            if set(a.split("=")[0] for a in c["group"].split(",")) == attrs
        ]
        if not cells:
            continue
        path = os.path.join(out_dir, f"geo_{_slug(spec)}.png")
        save_group_bars(cells, f"hit rate by {spec}", "mean household hit rate", path)
        paths.append(path)
    return paths


def save_retrieval_figures(payload: dict, out_dir) -> list:
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for k in payload["ks"]:
        for spec in payload["stratify_by"]:
            attrs = set(spec.split("_x_"))
            cells = [
                (c["group"], c["mean_precision"], None, None)
                for c in payload["cells"]
                if c["k"] == k
                and set(a.split("=")[0] for a in c["group"].split(",")) == attrs
            ]
            if not cells:
                continue
            path = os.path.join(out_dir, f"precision_at_{k}_{_slug(spec)}.png")
            save_group_bars(cells, f"precision@{k} by {spec}", f"mean precision@{k}", path)
            paths.append(path)
    return paths

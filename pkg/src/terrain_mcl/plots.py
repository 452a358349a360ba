"""Static SVG figures for run evaluation.

Output is byte-reproducible: fixed hash salt, no date metadata.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

plt.rcParams["svg.hashsalt"] = "terrain-mcl"
plt.rcParams["figure.figsize"] = (8.0, 4.5)

_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)


def plot_errors(runs: dict, path) -> None:
    """Translation and yaw error over time, one line per run."""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
    for label, rows in runs.items():
        pts = [(r.t, r.translation_error, abs(r.yaw_error)) for r in rows
               if r.translation_error is not None]
        if not pts:
            continue
        t, terr, yerr = zip(*pts)
        ax1.plot(t, terr, label=label, linewidth=1.0)
        ax2.plot(t, yerr, label=label, linewidth=1.0)
    ax1.set_ylabel("translation error [m]")
    ax2.set_ylabel("yaw error [rad]")
    ax2.set_xlabel("t [s]")
    ax1.legend(loc="upper right", fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.grid(alpha=0.3)
    _save(fig, path)


def plot_quality_uncertainty(runs: dict, path) -> None:
    """Quality against the two uncertainty scalars over time."""
    fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
    for label, rows in runs.items():
        t = [r.t for r in rows]
        ax1.plot(t, [r.quality for r in rows], label=f"{label} quality",
                 linewidth=1.0)
        ax2.plot(t, [r.uncertainty_product for r in rows],
                 label=f"{label} diag product", linewidth=1.0)
        ax2.plot(t, [r.uncertainty_sum for r in rows],
                 label=f"{label} diag sum", linewidth=1.0, linestyle="--")
    ax1.set_ylabel("quality")
    ax1.set_ylim(-0.05, 1.05)
    ax2.set_ylabel("uncertainty")
    ax2.set_yscale("symlog", linthresh=1e-12)
    ax2.set_xlabel("t [s]")
    ax1.legend(loc="lower right", fontsize=8)
    ax2.legend(loc="upper right", fontsize=8)
    ax1.grid(alpha=0.3)
    ax2.grid(alpha=0.3)
    _save(fig, path)


def plot_timings(summaries: dict, path) -> None:
    """Mean per-phase processing time per run."""
    labels = list(summaries)
    phases = ("mean_predict_us", "mean_correct_us", "mean_reseed_us")
    names = ("predict", "correct", "reseed")
    fig, ax = plt.subplots()
    width = 0.8 / max(len(labels), 1)
    for i, label in enumerate(labels):
        vals = [summaries[label][p] for p in phases]
        ax.bar([j + i * width for j in range(len(phases))], vals, width,
               label=label)
    ax.set_xticks([j + 0.4 - width / 2 for j in range(len(phases))])
    ax.set_xticklabels(names)
    ax.set_ylabel("mean phase time [us]")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3, axis="y")
    _save(fig, path)

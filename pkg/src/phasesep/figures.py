"""Figure rendering for the report path.

Every command that writes a report also renders a small set of PNG figures
next to the delimited output, so a run directory is self-describing without
further tooling.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVEKW = {"dpi": 130, "bbox_inches": "tight"}


def _finish(fig, path: Path) -> str:
    fig.savefig(path, **_SAVEKW)
    plt.close(fig)
    return str(path)


def render_trajectory_figures(records: list, out_dir: str | Path) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for rec in records:
        ax.plot(rec.times, rec.delta, lw=0.8, alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel(r"separation $\delta(t) = 1 - \sup|u|$")
    ax.set_title(f"separation layer, {len(records)} trajectories")
    ax.axhline(0.0, color="k", lw=0.5)
    written.append(_finish(fig, out / "fig_delta.png"))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for rec in records:
        ax.plot(rec.times, rec.energy, lw=0.8, alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("free energy")
    ax.set_title("energy along trajectories")
    written.append(_finish(fig, out / "fig_energy.png"))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for rec in records:
        ax.plot(rec.times, rec.g_mass_s0, lw=0.8, alpha=0.7)
    ax.set_xlabel("t")
    ax.set_ylabel("barrier mass $\\int G_{s_0}(u)$")
    ax.set_title("barrier-weight mass")
    written.append(_finish(fig, out / "fig_g_mass.png"))
    return written


def render_ensemble_figures(report, records: list, out_dir: str | Path) -> list[str]:
    written = render_trajectory_figures(records, out_dir)
    out = Path(out_dir)
    dmins = np.array([s["delta_min"] for s in report.per_trajectory])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.hist(dmins, bins=min(30, max(5, len(dmins) // 4)), color="steelblue",
            edgecolor="white")
    ax.set_xlabel(r"$\delta_{\min}$ per trajectory")
    ax.set_ylabel("count")
    ax.set_title("distribution of the per-path separation minimum")
    written.append(_finish(fig, out / "fig_delta_min_hist.png"))
    return written


def render_study_figure(study, out_dir: str | Path) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    kind = study.kind
    if kind == "dt_refine":
        xs = [m["dt"] for m in study.metrics if "l2_distance_to_next" in m]
        ys = [m["l2_distance_to_next"] for m in study.metrics
              if "l2_distance_to_next" in m]
        ax.loglog(xs, ys, "o-")
        ax.set_xlabel("dt")
        ax.set_ylabel("coupled $L^2$ distance to next level")
    elif kind == "lambda_refine":
        xs = [m["lambda"] for m in study.metrics]
        ys = [m["l2_distance_to_reference"] for m in study.metrics]
        ax.loglog(xs, ys, "o-")
        ax.set_xlabel(r"$\lambda$")
        ax.set_ylabel("$L^2$ distance to splitting reference")
    elif kind == "grid_refine":
        xs = [m["n"] for m in study.metrics]
        ys = [m["abs_error"] for m in study.metrics]
        ax.loglog(xs, ys, "o-")
        ax.set_xlabel("n")
        ax.set_ylabel("first-mode decay error")
    else:
        xs = [m["sigma0"] for m in study.metrics]
        ys = [m["delta_min"] for m in study.metrics]
        ax.plot(xs, ys, "o-")
        ax.set_xlabel(r"$\sigma_0$")
        ax.set_ylabel(r"$\delta_{\min}$")
    ax.set_title(f"{kind} study")
    return [_finish(fig, out / "fig_study.png")]


def render_certificate_figure(audits: list, out_dir: str | Path) -> list[str]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for audit in audits:
        ax.plot(audit.measured, lw=0.8, alpha=0.6)
        ax.axhline(audit.epsilon_star, color="crimson", lw=0.6, alpha=0.5)
    ax.set_xlabel("snapshot index")
    ax.set_ylabel(r"measured $1 - \sup|u|^2$ vs certified $\epsilon^*$")
    ax.set_title("separation certificate audit")
    return [_finish(fig, out / "fig_certificate.png")]

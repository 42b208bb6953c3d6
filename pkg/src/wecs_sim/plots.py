"""SVG diagnostics for logged runs.

All figures are written through the same saver so reruns of an
identical scenario produce byte-identical files (fixed hash salt, no
embedded timestamps). Each file carries a machine-readable summary
comment right after the XML prolog.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_tsr", "plot_current_errors", "plot_speed_error", "plot_dc_power",
    "plot_energy", "plot_energy_comparison",
]

matplotlib.rcParams["svg.hashsalt"] = "wecs-sim"

_FIGSIZE = (7.0, 3.4)


def _save(fig, path, summary: dict):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    pairs = " ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}"
                     for k, v in summary.items())
    text = path.read_text() if hasattr(path, "read_text") else open(
        path).read()
    lines = text.split("\n")
    # first line is the XML declaration; comment goes into the prolog
    lines.insert(1, f"<!-- summary: {pairs} -->")
    out = "\n".join(lines)
    if hasattr(path, "write_text"):
        path.write_text(out)
    else:
        with open(path, "w") as fh:
            fh.write(out)


def _axes(ylabel, title):
    fig, ax = plt.subplots(figsize=_FIGSIZE, constrained_layout=True)
    ax.set_xlabel("time [s]")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    ax.grid(True, alpha=0.3)
    return fig, ax


def plot_tsr(trace, lambda_opt: float, path):
    t = trace.t
    lam = trace["lambda"]
    fig, ax = _axes("tip-speed ratio", "tip-speed ratio tracking")
    ax.plot(t, lam, lw=0.9, label="lambda")
    ax.axhline(lambda_opt, color="k", ls="--", lw=0.8,
               label=f"target {lambda_opt:g}")
    ax.legend(loc="lower right", fontsize=8)
    tail = lam[t >= t[-1] * 0.5] if t[-1] > 0 else lam
    _save(fig, path, {"lambda_final": float(lam[-1]),
                      "lambda_tail_mean": float(np.mean(tail)),
                      "lambda_opt": float(lambda_opt)})


def plot_current_errors(trace, path):
    t = trace.t
    eps_d = trace["id_ref"] - trace["id"]
    eps_q = trace["iq_ref"] - trace["iq"]
    fig, (ax_d, ax_q) = plt.subplots(2, 1, figsize=(7.0, 4.8), sharex=True,
                                     constrained_layout=True)
    ax_d.plot(t, eps_d, lw=0.8)
    ax_d.set_ylabel("eps_d [A]")
    ax_d.grid(True, alpha=0.3)
    ax_d.set_title("current tracking errors (reference minus actual)")
    ax_q.plot(t, eps_q, lw=0.8, color="tab:orange")
    ax_q.set_ylabel("eps_q [A]")
    ax_q.set_xlabel("time [s]")
    ax_q.grid(True, alpha=0.3)
    _save(fig, path, {"mean_abs_eps_d": float(np.mean(np.abs(eps_d))),
                      "mean_abs_eps_q": float(np.mean(np.abs(eps_q)))})


def plot_speed_error(trace, path):
    t = trace.t
    err = trace["omega_hat"] - trace["omega"]
    fig, ax = _axes("omega_hat - omega [rad/s]", "speed estimate error")
    ax.plot(t, err, lw=0.8)
    rel = np.abs(err) / np.maximum(trace["omega"], 0.1)
    _save(fig, path, {"max_abs_err": float(np.max(np.abs(err))),
                      "max_rel_err": float(np.max(rel))})


def plot_dc_power(trace, path):
    t = trace.t
    p = trace["p_dc"]
    fig, ax = _axes("P_dc [W]", "dc-side electrical power")
    ax.plot(t, p, lw=0.8)
    _save(fig, path, {"p_mean": float(np.mean(p)),
                      "p_final": float(p[-1])})


def _cumulative_energy(trace):
    p = trace["p_dc"]
    w = np.empty_like(p)
    w[0] = 0.0
    np.cumsum(0.5 * (p[1:] + p[:-1]) * np.diff(trace.t), out=w[1:])
    return w


def plot_energy(trace, path, w_opt: float = None):
    t = trace.t
    w = _cumulative_energy(trace)
    fig, ax = _axes("energy [J]", "cumulative harvested energy")
    ax.plot(t, w, lw=1.0, label="harvested")
    summary = {"W_J": float(w[-1])}
    if w_opt is not None:
        ax.axhline(w_opt, color="k", ls="--", lw=0.8, label="ideal")
        summary["W_opt_J"] = float(w_opt)
        summary["eta_E"] = float(w[-1] / w_opt) if w_opt > 0 else 0.0
    ax.legend(loc="lower right", fontsize=8)
    _save(fig, path, summary)


def plot_energy_comparison(labeled_traces, path):
    """labeled_traces: iterable of (label, t array, cumulative W array)."""
    fig, ax = _axes("energy [J]", "cumulative energy by scenario")
    summary = {}
    for label, t, w in labeled_traces:
        ax.plot(t, w, lw=1.0, label=label)
        summary[f"W_{label}"] = float(w[-1])
    ax.legend(loc="upper left", fontsize=7)
    _save(fig, path, summary)

"""Figure rendering for scenario reports.

Each helper takes the data the runner already computed and drops PNG
files next to the CSV artifacts, returning the file names.  Rendering is
presentation only; nothing here feeds back into the numbers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "channel_response_figures",
    "mode_detect_figures",
    "classify_figures",
    "predict_figures",
]


def _save(fig, path: Path) -> str:
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path.name


def channel_response_figures(out: Path, model, gains, h, probe, received) -> list[str]:
    names = []

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 3.6))
    ax1.plot(h.times * 1e12, h.samples, lw=0.9)
    ax1.set_xlabel("t [ps]")
    ax1.set_ylabel("h(t)")
    ax1.set_title("Channel impulse response")
    mags = 20 * np.log10(np.maximum(np.abs(gains), 1e-300))
    ax2.plot(model.frequencies_hz / 1e12, mags, lw=0.9)
    ax2.set_xlabel("f [THz]")
    ax2.set_ylabel("|H(f)| [dB]")
    ax2.set_title("Channel frequency response")
    fig.tight_layout()
    names.append(_save(fig, out / "channel_response.png"))

    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    t = received.times * 1e12
    pad = np.zeros(len(received) - len(probe.samples))
    inp = np.concatenate([probe.samples, pad])
    scale = np.max(np.abs(received.samples)) or 1.0
    ax.plot(t, inp, label="transmitted pulse", lw=0.9)
    ax.plot(t, received.samples / scale, label="received (normalized)", lw=0.9)
    ax.set_xlabel("t [ps]")
    ax.set_ylabel("amplitude")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title("Pulse through the channel")
    names.append(_save(fig, out / "pulse_response.png"))
    return names


def mode_detect_figures(out: Path, sweep: str, parameter: str, curves) -> list[str]:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    xlabel = "SNR [dB]" if sweep == "snr" else r"threshold $\eta$"
    for value, rows in curves:
        x = [r.sweep_value for r in rows]
        ax.semilogy(x, [r.pe1_analytic for r in rows], label=f"$P_{{e,1}}$ {parameter}={value:g}")
        ax.semilogy(
            x,
            [r.pe2_analytic for r in rows],
            linestyle="--",
            label=f"$P_{{e,2}}$ {parameter}={value:g}",
        )
        if rows[0].pe1_mc is not None:
            ax.semilogy(x, [r.pe1_mc for r in rows], marker="o", ms=2.5, lw=0, alpha=0.6)
            ax.semilogy(x, [r.pe2_mc for r in rows], marker="s", ms=2.5, lw=0, alpha=0.6)
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error probability")
    ax.set_ylim(1e-4, 1.2)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    ax.set_title("Mode detection errors (lines analytic, markers MC)")
    return [_save(fig, out / f"pe_vs_{sweep}.png")]


def classify_figures(out: Path, cells, kld_rows, em_rows) -> list[str]:
    names = []

    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    schemes = sorted({c.scheme for c in cells})
    for scheme in schemes:
        pts = sorted((c.snr_db, c.pcc, c.stderr) for c in cells if c.scheme == scheme)
        x = [p[0] for p in pts]
        y = [p[1] for p in pts]
        err = [2 * p[2] for p in pts]
        ax.errorbar(x, y, yerr=err, marker="o", ms=3, capsize=2, label=scheme)
    ax.set_xlabel("SNR [dB]")
    ax.set_ylabel("$P_{cc}$")
    ax.set_ylim(0, 1.05)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("Probability of correct classification")
    names.append(_save(fig, out / "pcc_vs_snr.png"))

    if kld_rows:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        pairs = sorted({row[1] for row in kld_rows})
        for pair in pairs:
            pts = sorted((row[0], row[2]) for row in kld_rows if row[1] == pair)
            ax.semilogy([p[0] for p in pts], [max(p[1], 1e-12) for p in pts], marker="o", ms=3, label=pair)
        ax.set_xlabel("SNR [dB]")
        ax.set_ylabel("$D_{sym}$")
        ax.grid(alpha=0.3, which="both")
        ax.legend(fontsize=7)
        ax.set_title("Pairwise template divergences")
        names.append(_save(fig, out / "kld_vs_snr.png"))

    if em_rows:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        schemes = sorted({row[0] for row in em_rows})
        for scheme in schemes:
            pts = sorted((row[1], row[2], row[3]) for row in em_rows if row[0] == scheme)
            x = [p[0] for p in pts]
            ax.plot(x, [p[1] for p in pts], marker="o", ms=3, label=f"{scheme} self")
            ax.plot(x, [p[2] for p in pts], marker="x", ms=3, ls="--", label=f"{scheme} nearest pair")
        ax.set_xlabel("mean-perturbation std")
        ax.set_ylabel("$D_{sym}$")
        ax.grid(alpha=0.3)
        ax.legend(fontsize=7)
        ax.set_title("Divergences vs EM estimation error")
        names.append(_save(fig, out / "kld_em_error.png"))
    return names


def predict_figures(out: Path, labels, rows) -> list[str]:
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    steps = [r[0] for r in rows]
    probs = np.array([r[1:6] for r in rows], dtype=float)
    for i, label in enumerate(labels):
        ax.plot(steps, probs[:, i], marker="o", ms=3, label=label)
    ax.set_xlabel("step")
    ax.set_ylabel("state probability")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    ax.set_title("CQI state-belief evolution")
    return [_save(fig, out / "state_evolution.png")]

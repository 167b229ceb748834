"""Figures and PGM renderings written next to the CSV reports."""

from __future__ import annotations

import numpy as np

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

DB_RANGE = (-60.0, 0.0)

_RC = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 9,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "legend.fontsize": 8,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _db(mag, ref):
    ref = ref if ref and ref > 0 else 1.0
    return 20.0 * np.log10(np.maximum(mag / ref, 1e-12))


def write_pgm(path, mag: np.ndarray, ref: float | None = None, db_range=DB_RANGE) -> None:
    """Plain (P2) greyscale image of ``20*log10(mag/ref)`` over ``db_range``.

    ``mag`` is ``[frames, bins]``; the image has frequency on the vertical
    axis with low bins at the bottom.
    """
    mag = np.asarray(mag, dtype=np.float64)
    ref = float(mag.max()) if ref is None else ref
    lo, hi = db_range
    db = np.clip(_db(mag, ref), lo, hi)
    pix = np.rint((db - lo) / (hi - lo) * 255).astype(int)[:, ::-1].T
    rows, cols = pix.shape
    with open(path, "w") as fh:
        fh.write(f"P2\n{cols} {rows}\n255\n")
        for row in pix:
            fh.write(" ".join(str(v) for v in row) + "\n")


def read_pgm(path) -> np.ndarray:
    tokens = [t for line in open(path) for t in line.split("#", 1)[0].split()]
    if tokens[0] != "P2":
        raise ValueError(f"{path}: not a plain PGM file")
    cols, rows = int(tokens[1]), int(tokens[2])
    return np.array(tokens[4:4 + rows * cols], dtype=int).reshape(rows, cols)


def plot_order_grids(grids, path, sample_rate=16000, hop=160) -> None:
    """One log-magnitude panel per exported grid, shared colour scale."""
    ref = max(float(g.magnitude.max()) for _, g in grids) or 1.0
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(1, len(grids), figsize=(2.2 * len(grids), 2.4), sharey=True,
                                 constrained_layout=True)
        axes = np.atleast_1d(axes)
        for ax, (name, g) in zip(axes, grids):
            L, K = g.shape
            im = ax.imshow(_db(g.magnitude, ref).T, origin="lower", aspect="auto", cmap="magma",
                           vmin=DB_RANGE[0], vmax=DB_RANGE[1],
                           extent=(0, L * hop / sample_rate, 0, sample_rate / 2000))
            ax.set_title(name.replace("_", " "))
            ax.set_xlabel("time (s)")
        axes[0].set_ylabel("frequency (kHz)")
        fig.colorbar(im, ax=axes, shrink=0.8, label="dB")
        fig.savefig(path)
        plt.close(fig)


def plot_training_curves(history, path) -> None:
    epochs = [h[0] for h in history]
    with plt.rc_context(_RC):
        fig, (ax, ax_lr) = plt.subplots(2, 1, figsize=(4.5, 4), sharex=True, constrained_layout=True)
        ax.plot(epochs, [h[1] for h in history], "o-", ms=3, label="train")
        ax.plot(epochs, [h[2] for h in history], "s-", ms=3, label="validation")
        ax.set_ylabel("loss")
        ax.set_yscale("log")
        ax.legend(frameon=False)
        ax_lr.step(epochs, [h[3] for h in history], where="post", color="k")
        ax_lr.set_ylabel("learning rate")
        ax_lr.set_xlabel("epoch")
        fig.savefig(path)
        plt.close(fig)


def plot_metric_report(reports: dict, path) -> None:
    """Per-utterance SISNR for each named report (e.g. unenhanced vs enhanced)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 2.8), constrained_layout=True)
        width = 0.8 / max(len(reports), 1)
        for i, (name, rep) in enumerate(reports.items()):
            x = np.arange(len(rep)) + i * width
            ax.bar(x, rep.sisnr_db, width, label=f"{name} (mean {rep.mean_sisnr:.2f} dB)")
        ax.set_ylabel("SI-SNR (dB)")
        ax.set_xlabel("utterance")
        ax.axhline(0, color="k", lw=0.5)
        ax.legend(frameon=False)
        fig.savefig(path)
        plt.close(fig)

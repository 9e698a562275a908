"""Matplotlib figures written next to the CSV output."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

LABELS = {"mmd": "MMD", "ks": "KS", "likelihood": "Likelihood"}
MARKERS = {"mmd": "o", "ks": "s", "likelihood": "^"}


def plot_error_curves(curves, path, title=None):
    """Error probability versus sample size on a log axis, with 95% bars."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for test, curve in curves.items():
        est = curve.estimate
        keep = est > 0
        n = [v for v, k in zip(curve.n, keep) if k]
        ax.errorbar(n, est[keep], yerr=curve.half_width[keep], marker=MARKERS.get(test, "o"),
                    ms=4, capsize=2, label=f"{LABELS.get(test, test)} ({curve.exponent:.3g} bits/sample)")
    ax.set_yscale("log")
    ax.set_xlabel("number of samples n")
    ax.set_ylabel("error probability")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_bound_curves(curves, path, title=None):
    """log2 of the theoretical error bounds versus n."""
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    for test, points in curves.items():
        ax.plot([p[0] for p in points], [p[2] for p in points],
                marker=MARKERS.get(test, "o"), ms=4, label=LABELS.get(test, test))
    ax.axhline(0.0, color="0.5", lw=0.8)
    ax.set_xlabel("number of samples n")
    ax.set_ylabel("log2 error bound (unclamped)")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)

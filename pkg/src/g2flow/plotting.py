"""Diagnostic figures for flow runs, rendered off-screen."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _positive(y):
    y = np.asarray(y, dtype=float)
    return np.where(y > 0, y, np.nan)


def _log_if_positive(ax, *series):
    if any(np.any(np.asarray(y, dtype=float) > 0) for y in series):
        ax.set_yscale("log")


def plot_diagnostics(records, path, title=None):
    """Four panels: curvature scale, torsion and speed, volume, identity residuals."""
    t = np.array([r.t for r in records])
    fig, axes = plt.subplots(2, 2, figsize=(9, 6.5), sharex=True)
    ax = axes[0, 0]
    lam = [r.lambda_sup for r in records]
    ax.plot(t, lam, "k-", lw=1.2)
    ax.set_ylabel(r"$\sup\,\Lambda$")
    _log_if_positive(ax, lam)

    ax = axes[0, 1]
    tsup = [r.T_sup for r in records]
    vsup = [r.velocity_sup for r in records]
    ax.plot(t, _positive(tsup), label=r"$\sup|T|$")
    ax.plot(t, _positive(vsup), label=r"$\sup|\Delta\varphi|$")
    _log_if_positive(ax, tsup, vsup)
    ax.legend(frameon=False, fontsize=8)

    ax = axes[1, 0]
    v = np.array([r.total_volume for r in records])
    ax.plot(t, v - v[0], "C2-")
    ax.set_ylabel("volume - initial")
    ax.set_xlabel("t")

    ax = axes[1, 1]
    series = []
    for name, label in (("closed_residual", r"$|d\varphi|$"),
                        ("scalar_residual", r"$|R+|T|^2|$"),
                        ("trace_h_residual", r"$|\mathrm{tr}\,h-\frac{2}{3}|T|^2|$")):
        y = [getattr(r, name) for r in records]
        series.append(y)
        ax.plot(t, _positive(y), label=label)
    _log_if_positive(ax, *series)
    ax.set_xlabel("t")
    ax.legend(frameon=False, fontsize=8)

    for a in axes.flat:
        a.grid(alpha=0.3, lw=0.5)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path

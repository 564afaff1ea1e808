"""Figure rendering for the command-line report paths.

Kept out of the validation module on purpose: metrics stay import-light,
plotting happens only where files are written.  The Agg backend is forced
so reports render identically headless.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 130


def render_pdf_comparison(path, centers, empirical, theoretical, title="texture density"):
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    width = centers[1] - centers[0] if len(centers) > 1 else 1.0
    ax.bar(centers, empirical, width=width, alpha=0.45, label="histogram", color="#7aa6c2")
    ax.plot(centers, theoretical, "k-", lw=1.4, label="theoretical")
    ax.set_xlabel("v")
    ax.set_ylabel("density")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_acf_comparison(path, r_theo, r_emp_mean, r_first=None, title="autocorrelation"):
    lags = np.arange(len(r_theo))
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(lags, r_theo, "k-", lw=1.4, label="prescribed")
    ax.plot(lags, r_emp_mean, "-", lw=1.0, color="#c05a4e", label="empirical mean")
    if r_first is not None:
        ax.plot(lags, r_first, "-", lw=0.7, alpha=0.5, color="#7aa6c2", label="single trial")
    ax.set_xlabel("lag")
    ax.set_ylabel("r")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_lt_comparison(path, omega, curves, title="transform on the imaginary axis"):
    """``curves`` maps label -> complex values on i*omega; plots |L|."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for label, vals in curves.items():
        ax.plot(omega, np.abs(vals), lw=1.2, label=label)
    ax.set_xlabel("omega")
    ax.set_ylabel("|L(i omega)|")
    ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_texture_overview(path, v, x=None, n_show=2000, title="synthesized sequence"):
    n = min(len(v), n_show)
    fig, axes = plt.subplots(2 if x is not None else 1, 1, figsize=(7.2, 5.0), squeeze=False)
    ax = axes[0][0]
    ax.plot(np.arange(n), v[:n], lw=0.7, color="#2f6f4f")
    ax.set_ylabel("texture v")
    ax.set_title(title)
    if x is not None:
        ax2 = axes[1][0]
        ax2.plot(np.arange(n), np.abs(x[:n]), lw=0.7, color="#c05a4e")
        ax2.set_ylabel("|x|")
        ax2.set_xlabel("sample")
    else:
        ax.set_xlabel("sample")
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)

"""Report figures rendered next to the delimited output.

All rendering uses the Agg backend (the CLI runs headless) and writes PNG
files into the run directory: the criticality scan with its roots, the
branch diagram, and field maps of a reconstructed solution.  Figures are a
reporting convenience; every number they show is also in the CSV/JSON
artifacts.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = [
    "save_scan_figure",
    "save_branch_figure",
    "save_fields_figure",
]

_STYLE = {
    "figure.dpi": 130,
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "figure.constrained_layout.use": True,
}


def save_scan_figure(path: str | Path, rows, roots) -> None:
    """g(lambda) with root markers, and both chi_minus routes."""
    with plt.rc_context(_STYLE):
        fig, (ax_g, ax_chi) = plt.subplots(2, 1, figsize=(6.4, 5.2),
                                           sharex=True)
        lam = [r[0] for r in rows]
        ax_g.plot(lam, [r[3] for r in rows], color="tab:blue",
                  label="g(lambda)")
        ax_g.axhline(0.0, color="0.4", linewidth=0.8)
        for lam0 in roots:
            ax_g.axvline(lam0, color="tab:red", linestyle="--",
                         linewidth=0.9)
        if roots:
            ax_g.plot(list(roots), [0.0] * len(roots), "o",
                      color="tab:red", label="roots")
        ax_g.set_ylabel("criticality g")
        ax_g.legend(loc="best")

        ax_chi.plot(lam, [r[1] for r in rows], color="tab:green",
                    label="chi_minus (exact)")
        ax_chi.plot(lam, [r[2] for r in rows], color="tab:orange",
                    linestyle="--", label="chi_minus (asymptotic)")
        ax_chi.set_xlabel("lambda")
        ax_chi.set_ylabel("chi_minus")
        ax_chi.legend(loc="best")
        fig.savefig(path)
        plt.close(fig)


def save_branch_figure(path: str | Path, results) -> None:
    """Branch diagram lambda(xi) and amplitude ||u||(xi) per side."""
    with plt.rc_context(_STYLE):
        fig, (ax_lam, ax_norm) = plt.subplots(1, 2, figsize=(7.6, 3.4))
        for res in results:
            label = "xi > 0" if res.side > 0 else "xi < 0"
            color = "tab:blue" if res.side > 0 else "tab:red"
            xs = [p.xi for p in res.points]
            ax_lam.plot(xs, [p.lam for p in res.points], "o-",
                        color=color, markersize=3, label=label)
            ax_norm.plot(xs, [p.u_norm for p in res.points], "o-",
                         color=color, markersize=3, label=label)
        ax_lam.set_xlabel("amplitude xi")
        ax_lam.set_ylabel("lambda")
        ax_lam.legend(loc="best")
        ax_norm.set_xlabel("amplitude xi")
        ax_norm.set_ylabel("deviation norm")
        ax_norm.legend(loc="best")
        fig.savefig(path)
        plt.close(fig)


def save_fields_figure(path: str | Path, sol) -> None:
    """Maps of the potential deviations, |E| and the axial field."""
    import numpy as np

    with plt.rc_context(_STYLE):
        fig, axes = plt.subplots(2, 2, figsize=(7.2, 6.0))
        extent = (0.0, sol.dom.a, 0.0, sol.dom.b)
        panels = (
            (sol.state.u1, "phi deviation"),
            (sol.state.u2, "psi deviation"),
            (np.hypot(sol.E[..., 0], sol.E[..., 1]), "|E|"),
            (sol.B[..., 2], "axial B"),
        )
        for ax, (data, title) in zip(axes.ravel(), panels):
            im = ax.imshow(data.T, origin="lower", extent=extent,
                           aspect="equal", cmap="viridis")
            ax.set_title(title)
            ax.grid(False)
            fig.colorbar(im, ax=ax, shrink=0.85)
        fig.savefig(path)
        plt.close(fig)

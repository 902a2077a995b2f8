"""Matplotlib figure rendering for solve and convergence reports.

Figures are written next to the delimited outputs; there is no interactive
display path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_flux_figure(path, xs, u_num, u_exact=None, title=""):
    """Scalar-flux profile, with the reference curve overlaid when known."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if u_exact is not None:
        ax.plot(xs, u_exact, "-", color="0.3", lw=1.2, label="reference flux")
    ax.plot(xs, u_num, ".", ms=3, color="tab:blue", label="numerical flux")
    ax.set_xlabel("x")
    ax.set_ylabel("scalar flux u(x)")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_convergence_figure(path, table, title=""):
    """Log-log error plot against the swept parameter."""
    rows = table.ok_rows()
    if table.sweep_param == "M":
        xs = [r.m_deg + 1 for r in rows]
        xlabel = "M+1"
    else:
        xs = [r.n_deg for r in rows]
        xlabel = "N"
    ys = [r.flux_l2_error for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.loglog(xs, ys, "o-", color="tab:blue")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("flux L2 error")
    if table.fitted_order is not None:
        ax.annotate(f"fitted order {table.fitted_order:.2f}", xy=(0.05, 0.05),
                    xycoords="axes fraction")
    if title:
        ax.set_title(title)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)

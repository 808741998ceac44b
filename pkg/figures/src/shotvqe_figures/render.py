"""Per-figure rendering functions over persisted scenario tables.

Every renderer draws only what is already in the CSV files (plus axis
transforms); fit curves come from the persisted fit tables, never from
recomputation, so a figure cannot mask an analysis bug.  Styles and fonts are
pinned and output metadata stripped for pixel-identical re-renders.
"""
from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .io import FigureInputError, column, groups, read_table  # noqa: E402

plt.rcParams.update({
    "font.family": "DejaVu Sans",
    "font.size": 9,
    "figure.dpi": 130,
    "savefig.dpi": 130,
    "svg.hashsalt": "shotvqe-figures",
    "axes.grid": True,
    "grid.alpha": 0.25,
})

_MARKERS = ("o", "s", "D", "^", "v", "<", ">", "p")


def _save(fig, out_path: Path) -> Path:
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    meta = {"Date": None} if out_path.suffix == ".svg" else {"Software": None}
    fig.savefig(out_path, metadata=meta)
    plt.close(fig)
    return out_path


def _series(ax, rows_by_key, x, y, yerr=None, label_fmt="{}", logx=False,
            logy=False):
    for m, key in zip(_MARKERS, sorted(rows_by_key)):
        rows = sorted(rows_by_key[key], key=lambda r: r[x])
        xs = [r[x] for r in rows]
        ys = [r[y] for r in rows]
        if yerr is not None:
            es = [r[yerr] for r in rows]
            ax.errorbar(xs, ys, yerr=es, marker=m, ms=4, lw=1,
                        capsize=2, label=label_fmt.format(key))
        else:
            ax.plot(xs, ys, marker=m, ms=4, lw=1, label=label_fmt.format(key))
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.legend(fontsize=7)


def fig1a(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1a" / "summary.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    _series(ax, groups(rows, "j2"), "ns", "fbar", yerr="fbar_sem",
            label_fmt="j2/j1 = {}", logx=True)
    ax.set_xlabel("shots per gradient component")
    ax.set_ylabel("fidelity")
    return _save(fig, out_path)


def fig1b(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1a" / "summary.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    _series(ax, groups(rows, "j2"), "ns", "var_e", label_fmt="j2/j1 = {}",
            logx=True, logy=True)
    ax.set_xlabel("shots per gradient component")
    ax.set_ylabel("Var E")
    return _save(fig, out_path)


def fig1c(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1c" / "thermal.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    _series(ax, groups(rows, "j2"), "beta", "mean_f", yerr="f_sem",
            label_fmt="j2/j1 = {}", logx=True)
    ax.set_xlabel("inverse temperature")
    ax.set_ylabel("mean fidelity")
    return _save(fig, out_path)


def fig1d(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1d" / "nsc_eta.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    xs = column(rows, "eta")
    ys = column(rows, "ns_c")
    ax.plot(xs, ys, "o", ms=5)
    try:
        _, fits = read_table(in_dir / "fig1d" / "fits.csv")
        for f in fits:
            if f["fit"] == "ns_c_vs_eta":
                grid = np.linspace(min(xs), max(xs), 50)
                ax.plot(grid, f["slope"] * grid + f["intercept"], "--", lw=1,
                        label=f"linear fit, R2={f['r2']:.3f}")
        ax.legend(fontsize=7)
    except FigureInputError:
        pass
    ax.set_xlabel("learning rate")
    ax.set_ylabel("critical shot number")
    inset = fig.add_axes([0.62, 0.2, 0.25, 0.25])
    _, np_rows = read_table(in_dir / "fig1d" / "nsc_np.csv")
    inset.plot(column(np_rows, "n_params"), column(np_rows, "ns_c"), "s", ms=3)
    inset.set_xlabel("parameters", fontsize=6)
    inset.set_ylabel("critical shots", fontsize=6)
    inset.tick_params(labelsize=6)
    return _save(fig, out_path)


def fig1e(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1ef" / "fig1e.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    _series(ax, groups(rows, "length"), "epsilon", "fbar", yerr="fbar_sem",
            label_fmt="L = {:.0f}", logx=True)
    ax.set_xlabel("fluctuation measure")
    ax.set_ylabel("fidelity")
    return _save(fig, out_path)


def fig1f(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1ef" / "fig1f.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    xs = [1.0 / r["length"] for r in rows]
    ys = column(rows, "inv_epsilon_c")
    ax.plot(xs, ys, "o-", ms=5)
    ax.set_xlabel("1 / L")
    ax.set_ylabel("inverse critical fluctuation")
    ax.set_xlim(left=0)
    return _save(fig, out_path)


def fig2a(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig2a" / "summary.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    by_depth = groups(rows, "depth")
    _series(ax, by_depth, "ns", "infidelity", yerr="fbar_sem",
            label_fmt="depth {:.0f}", logx=True, logy=True)
    try:
        _, fits = read_table(in_dir / "fig2a" / "fits.csv")
        for f in fits:
            if not f["free_alpha"]:
                sub = by_depth.get(f["depth"])
                if not sub:
                    continue
                ns = np.array(sorted(r["ns"] for r in sub))
                ax.plot(ns, f["A"] / ns ** f["alpha"] + f["I0"], "--", lw=1)
    except FigureInputError:
        pass
    ax.set_xlabel("shots per gradient component")
    ax.set_ylabel("infidelity")
    return _save(fig, out_path)


def fig2b(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig2b" / "summary.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    xs = np.array(column(rows, "eta"))
    ax.errorbar(xs, column(rows, "infidelity"), yerr=column(rows, "fbar_sem"),
                marker="o", ms=4, lw=0, elinewidth=1, capsize=2)
    try:
        _, fits = read_table(in_dir / "fig2b" / "fits.csv")
        for f in fits:
            grid = np.linspace(0, xs.max() * 1.05, 50)
            ax.plot(grid, f["slope"] * grid + f["intercept"], "--", lw=1)
    except FigureInputError:
        pass
    ax.set_xlabel("learning rate")
    ax.set_ylabel("infidelity")
    return _save(fig, out_path)


def fig3a(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig3a" / "gaps.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    for m, r in zip(_MARKERS, rows):
        ax.plot([r["gap"]], [r["A"]], m, ms=6, label=r["label"])
    try:
        _, fits = read_table(in_dir / "fig3a" / "fits.csv")
        for f in fits:
            gaps = np.array(sorted(column(rows, "gap")))
            ax.plot(gaps, np.exp(f["log_a0"]) * gaps ** f["exponent"], "k--",
                    lw=1, label=f"slope {f['exponent']:.2f}")
    except FigureInputError:
        pass
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("sector gap")
    ax.set_ylabel("infidelity slope A")
    ax.legend(fontsize=6)
    return _save(fig, out_path)


def _fig3bc(in_dir: Path, out_path: Path, ycol: str, ylabel: str) -> Path:
    _, rows = read_table(in_dir / "fig3bc" / "fig3bc.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    _series(ax, groups(rows, "symmetry"), "j2", ycol, label_fmt="{}")
    ax.set_xlabel("j2 / j1")
    ax.set_ylabel(ylabel)
    return _save(fig, out_path)


def fig3b(in_dir: Path, out_path: Path) -> Path:
    return _fig3bc(in_dir, out_path, "inv_gap_sq", "(j1 / gap)^2")


def fig3c(in_dir: Path, out_path: Path) -> Path:
    return _fig3bc(in_dir, out_path, "A", "infidelity slope A")


def app_c(in_dir: Path, out_path: Path) -> Path:
    _, fits = read_table(in_dir / "appC" / "fits.csv")
    free = [f for f in fits if f["free_alpha"]]
    fixed = [f for f in fits if not f["free_alpha"]]
    if not free or not fixed:
        raise FigureInputError("appC needs both free and fixed-alpha fit rows")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.errorbar([f["depth"] for f in free], [f["alpha"] for f in free],
                yerr=[f["alpha_err"] for f in free], marker="o", ms=4, lw=1,
                capsize=2)
    ax.axhline(1.0, color="k", lw=0.8, ls=":")
    ax.set_xlabel("circuit depth")
    ax.set_ylabel("fitted exponent")
    inset = fig.add_axes([0.58, 0.55, 0.28, 0.28])
    inset.semilogy([f["depth"] for f in fixed],
                   [max(f["I0"], 1e-6) for f in fixed], "s-", ms=3, lw=1)
    inset.set_xlabel("depth", fontsize=6)
    inset.set_ylabel("residual offset", fontsize=6)
    inset.tick_params(labelsize=6)
    return _save(fig, out_path)


def app_d(in_dir: Path, out_path: Path) -> Path:
    _, np_rows = read_table(in_dir / "appD" / "barren_np.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    ax.errorbar(column(np_rows, "n_params"), column(np_rows, "norm_mean"),
                yerr=column(np_rows, "norm_sem"), marker="o", ms=4, lw=1,
                capsize=2)
    ax.set_xlabel("parameter count")
    ax.set_ylabel("gradient norm per parameter and qubit")
    inset = fig.add_axes([0.55, 0.25, 0.3, 0.3])
    _, l_rows = read_table(in_dir / "appD" / "barren_l.csv")
    inset.semilogy(column(l_rows, "length"), column(l_rows, "norm_mean"),
                   "s-", ms=3, lw=1)
    inset.set_xlabel("L", fontsize=6)
    inset.tick_params(labelsize=6)
    return _save(fig, out_path)


def app_e(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "appE" / "appe_histogram.csv")
    by_ns = groups(rows, "ns")
    fig, axes = plt.subplots(1, len(by_ns), figsize=(4.2 * len(by_ns), 3.2),
                             squeeze=False)
    for ax, ns in zip(axes[0], sorted(by_ns)):
        sub = by_ns[ns]
        widths = [r["bin_hi"] - r["bin_lo"] for r in sub]
        ax.bar([r["bin_lo"] for r in sub], [r["count"] for r in sub],
               width=widths, align="edge")
        ax.set_yscale("log")
        ax.set_title(f"shots = {ns:.0f}", fontsize=8)
        ax.set_xlabel("eigenstate overlap")
        ax.set_ylabel("count")
    return _save(fig, out_path)


def app_f(in_dir: Path, out_path: Path) -> Path:
    _, rows = read_table(in_dir / "fig1ef" / "fig1e.csv")
    fig, ax = plt.subplots(figsize=(4.2, 3.2))
    by_l = groups(rows, "length")
    for m, length in zip(_MARKERS, sorted(by_l)):
        sub = sorted(by_l[length], key=lambda r: r["epsilon"])
        xs = [1.0 / r["epsilon"] for r in sub if r["epsilon"]]
        ys = [r["n_sgd"] for r in sub if r["epsilon"]]
        es = [r["n_sgd_sem"] for r in sub if r["epsilon"]]
        ax.errorbar(xs, ys, yerr=es, marker=m, ms=4, lw=1, capsize=2,
                    label=f"L = {length:.0f}")
    ax.set_xscale("log")
    ax.set_xlabel("inverse fluctuation measure")
    ax.set_ylabel("steps to 90% of final fidelity")
    ax.legend(fontsize=7)
    return _save(fig, out_path)


FIGURES = {
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig1c": fig1c,
    "fig1d": fig1d,
    "fig1e": fig1e,
    "fig1f": fig1f,
    "fig2a": fig2a,
    "fig2b": fig2b,
    "fig3a": fig3a,
    "fig3b": fig3b,
    "fig3c": fig3c,
    "appC": app_c,
    "appD": app_d,
    "appE": app_e,
    "appF": app_f,
}


def render(figure_id: str, in_dir, out_path) -> Path:
    if figure_id not in FIGURES:
        raise FigureInputError(
            f"unknown figure {figure_id!r}; known: {sorted(FIGURES)}")
    return FIGURES[figure_id](Path(in_dir), Path(out_path))

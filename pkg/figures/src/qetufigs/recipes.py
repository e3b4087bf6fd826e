"""Figure recipes over the toolkit's CSV outputs.

Each recipe maps one CSV (schema documented by the producing subcommand) to
one image.  Rendering never recomputes physics and never mutates inputs;
missing columns and empty files fail loudly.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = ["FigureRecipe", "RecipeError", "render", "bundled_recipes", "load_csv"]


class RecipeError(RuntimeError):
    pass


@dataclass(frozen=True)
class FigureRecipe:
    name: str
    csv_name: str
    x: str
    y: str
    series: str | None = None
    logx: bool = False
    logy: bool = True
    xlabel: str | None = None
    ylabel: str | None = None
    kind: str = "line"  # "line" or "crossover"
    filter_eq: dict = field(default_factory=dict)


def load_csv(path):
    """Rows of a toolkit CSV (leading '#' comment lines skipped)."""
    path = Path(path)
    if not path.exists():
        raise RecipeError(f"missing CSV {path}")
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    if not rows:
        raise RecipeError(f"empty CSV {path}")
    return rows


def _column(rows, name, numeric=True):
    if name not in rows[0]:
        raise RecipeError(f"missing column {name!r}; have {sorted(rows[0])}")
    vals = [r[name] for r in rows]
    return np.array([float(v) for v in vals]) if numeric else vals


def render(recipe, data_dir, out_dir):
    """Render one recipe; returns the output image path."""
    rows = load_csv(Path(data_dir) / recipe.csv_name)
    for col, want in recipe.filter_eq.items():
        keep = [r for r in rows if r.get(col) == str(want)]
        if not keep:
            raise RecipeError(f"filter {col}={want!r} leaves no rows")
        rows = keep

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / f"{recipe.name}.png"
    fig, ax = plt.subplots(figsize=(5.0, 3.6))

    if recipe.kind == "crossover":
        _render_crossover(ax, rows, recipe)
    else:
        if recipe.series:
            labels = _column(rows, recipe.series, numeric=False)
            for lab in sorted(set(labels)):
                sel = [r for r in rows if r[recipe.series] == lab]
                x = _column(sel, recipe.x)
                y = _column(sel, recipe.y)
                order = np.argsort(x)
                ax.plot(x[order], y[order], marker="o", ms=3, label=f"{recipe.series}={lab}")
            ax.legend(fontsize=7)
        else:
            x = _column(rows, recipe.x)
            y = _column(rows, recipe.y)
            order = np.argsort(x)
            ax.plot(x[order], y[order], marker="o", ms=3)
    if recipe.logx:
        ax.set_xscale("log")
    if recipe.logy:
        ax.set_yscale("log")
    ax.set_xlabel(recipe.xlabel or recipe.x)
    ax.set_ylabel(recipe.ylabel or recipe.y)
    ax.set_title(recipe.name)
    fig.tight_layout()
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def crossover_qubit(rows, count_col):
    """Smallest n_q where the deepest tabulated ladder beats exact
    preparation on a count (the crossover reads the largest-d curve)."""
    methods = _column(rows, "method", numeric=False)
    nqs = _column(rows, "n_q")
    ds = _column(rows, "d")
    counts = _column(rows, count_col)
    d_max = max(d for m, d in zip(methods, ds) if m != "exact")
    exact = {}
    ladder = {}
    for m, nq, d, c in zip(methods, nqs, ds, counts):
        if m == "exact":
            exact[nq] = c
        elif d == d_max:
            ladder[nq] = c
    common = sorted(set(exact) & set(ladder))
    if not common:
        raise RecipeError("no overlapping n_q between ladder and exact rows")
    for nq in common:
        if ladder[nq] < exact[nq]:
            return int(nq)
    return None


def _render_crossover(ax, rows, recipe):
    count_col = recipe.y
    methods = _column(rows, "method", numeric=False)
    nqs = _column(rows, "n_q")
    counts = _column(rows, count_col)
    for m in sorted(set(methods)):
        sel = [(nq, c) for mm, nq, c in zip(methods, nqs, counts) if mm == m]
        agg = {}
        for nq, c in sel:
            agg[nq] = min(c, agg.get(nq, np.inf))
        xs = sorted(agg)
        ax.plot(xs, [max(agg[x], 1e-1) for x in xs], marker="o", ms=3, label=m)
    cross = crossover_qubit(rows, count_col)
    if cross is not None:
        ax.axvline(cross, color="k", ls="--", lw=0.8)
        ax.annotate(f"crossover n_q={cross}", (cross, ax.get_ylim()[1]), fontsize=7)
    ax.legend(fontsize=7)


def bundled_recipes():
    """Standard study figures, keyed to the CLI CSVs."""
    return [
        FigureRecipe("tau_scan_error", "gsprep_scan.csv", x="tau", y="error", series="d"),
        FigureRecipe("degree_scan_error", "gsprep_scan.csv", x="d", y="error", series="n_steps"),
        FigureRecipe("dtau_scan_error", "dtau_scan.csv", x="dtau", y="error", series="d"),
        FigureRecipe("ntot_vs_dtau", "ntot_vs_dtau.csv", x="dtau", y="n_tot", series="eps_target"),
        FigureRecipe("delta_bound_vs_g", "delta_bounds.csv", x="g", y="delta_lower", series="nq", logx=True),
        FigureRecipe("delta_exact_vs_g", "delta_bounds.csv", x="g", y="delta_exact", series="nq", logx=True),
        FigureRecipe("emax_bound_quality", "delta_bounds.csv", x="nq", y="emax_upper", series="g", logy=True),
        FigureRecipe("gamma_vs_np", "adiabatic_gamma.csv", x="np", y="gamma", series="g2", logy=False),
        FigureRecipe("gamma_vs_g2", "adiabatic_gamma.csv", x="g2", y="gamma", series="np", logy=False),
        FigureRecipe("wavepacket_methods", "wavepacket_scan.csv", x="n_ch", y="error", series="method"),
        FigureRecipe("wavepacket_error_vs_nq", "wavepacket_scan.csv", x="n_q", y="error", series="n_ch"),
        FigureRecipe("wavepacket_width", "wavepacket_scan.csv", x="n_ch", y="error", series="sigma_ratio"),
        FigureRecipe("gamma_inv_vs_nq", "wavepacket_scan.csv", x="n_q", y="gamma_inv", series="sigma_ratio"),
        FigureRecipe("gatecount_cnot", "gatecount.csv", x="n_q", y="cnot", kind="crossover"),
        FigureRecipe("gatecount_rotations", "gatecount.csv", x="n_q", y="rot", kind="crossover"),
    ]


def render_available(data_dir, out_dir):
    """Render every bundled recipe whose CSV exists; returns rendered paths."""
    done = []
    for recipe in bundled_recipes():
        if (Path(data_dir) / recipe.csv_name).exists():
            done.append(render(recipe, data_dir, out_dir))
    return done

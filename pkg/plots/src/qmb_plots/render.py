"""CSV-to-figure rendering.

Strictly read-only over the CSV tables produced by the qmb command line:

* fig2 -- log-log distance vs dispersive shift, one curve per reference
  model; rows whose solver status is ``bound_only`` are drawn as green
  certificate bands (lower-to-upper) instead of points on the curve.
* fig3 -- heat map of distance over (shift, basis angle) with the numerically
  determined minimum overlaid in white and the mean-photon-number curve in
  black.
* fig4 -- log-y distance vs probe amplitude, same curve structure as fig2.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

MODELS = ("bare", "dressed", "nalpha2", "nalpha2_snr")
MODEL_STYLE = {
    "bare": ("tab:orange", "bare basis"),
    "dressed": ("tab:blue", "dressed basis"),
    "nalpha2": ("tab:purple", "mean-photon basis"),
    "nalpha2_snr": ("tab:red", "mean-photon basis, finite SNR"),
}
BAND_COLOR = "green"

REQUIRED = {
    "fig2": ["chi"] + [f"{p}_{m}" for m in MODELS for p in ("d", "lo", "hi", "status")],
    "fig4": ["alpha"] + [f"{p}_{m}" for m in MODELS for p in ("d", "lo", "hi", "status")],
    "fig3": ["chi", "gamma", "d_gamma", "status_gamma", "gamma0",
             "gamma_nalpha2", "argmin_gamma", "min_distance"],
}


@dataclass(frozen=True)
class FigureSpec:
    csv_path: str
    kind: str
    out_path: str
    x_scale: str = "log"
    y_scale: str = "log"
    dpi: int = 150

    def __post_init__(self):
        if self.kind not in REQUIRED:
            raise ValueError(f"unknown figure kind {self.kind!r} "
                             f"(expected one of {sorted(REQUIRED)})")


def read_table(path: str, kind: str) -> Dict[str, List[str]]:
    """Load and validate the CSV; raises naming any missing columns."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, no header row")
        missing = [c for c in REQUIRED[kind] if c not in reader.fieldnames]
        if missing:
            raise ValueError(f"{path}: missing columns: {', '.join(missing)}")
        rows = list(reader)
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return {name: [row[name] for row in rows] for name in reader.fieldnames}


def _floats(cells: List[str]) -> np.ndarray:
    return np.array([float(c) if c else math.nan for c in cells])


def _line_chart(table, x_column: str, spec: FigureSpec):
    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    x = _floats(table[x_column])
    for model in MODELS:
        color, label = MODEL_STYLE[model]
        d = _floats(table[f"d_{model}"])
        lo = _floats(table[f"lo_{model}"])
        hi = _floats(table[f"hi_{model}"])
        status = np.array(table[f"status_{model}"])
        solid = status == "converged"
        ax.plot(x[solid], d[solid], "-o", color=color, label=label,
                markersize=3, linewidth=1.2)
        bounded = status == "bound_only"
        if bounded.any():
            lo_b = np.clip(lo[bounded], 1e-30, None)
            ax.vlines(x[bounded], lo_b, hi[bounded], color=BAND_COLOR,
                      linewidth=2.0, label=None)
            if bounded.sum() >= 2:
                order = np.argsort(x[bounded])
                ax.fill_between(x[bounded][order], lo_b[order],
                                hi[bounded][order], color=BAND_COLOR,
                                alpha=0.25, linewidth=0)
    ax.set_xscale(spec.x_scale if x_column == "chi" else "linear")
    ax.set_yscale(spec.y_scale)
    ax.set_xlabel(x_column)
    ax.set_ylabel("diamond distance")
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    return fig


def _heat_map(table, spec: FigureSpec):
    chi = _floats(table["chi"])
    gamma = _floats(table["gamma"])
    d = _floats(table["d_gamma"])
    chi_values = sorted(set(chi.tolist()))
    columns = {c: np.flatnonzero(chi == c) for c in chi_values}
    n_gamma = {len(idx) for idx in columns.values()}
    if len(n_gamma) != 1:
        raise ValueError("fig3 table is ragged: per-shift angle grids differ "
                         f"in size ({sorted(n_gamma)})")
    grid = np.stack([d[columns[c]][np.argsort(gamma[columns[c]])]
                     for c in chi_values], axis=1)
    gammas = np.sort(gamma[columns[chi_values[0]]])

    fig, ax = plt.subplots(figsize=(7.0, 4.5))
    mesh = ax.pcolormesh(np.array(chi_values), gammas,
                         np.log10(np.clip(grid, 1e-30, None)),
                         shading="nearest", cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="log10 diamond distance")

    per_chi = [columns[c][0] for c in chi_values]
    argmin = _floats(table["argmin_gamma"])[per_chi]
    curve = _floats(table["gamma_nalpha2"])[per_chi]
    ax.plot(chi_values, argmin, color="white", linewidth=1.8,
            label="numerical minimum")
    ax.plot(chi_values, curve, color="black", linewidth=1.4, linestyle="--",
            label="mean-photon basis")
    ax.set_xscale(spec.x_scale)
    ax.set_xlabel("chi")
    ax.set_ylabel("gamma")
    ax.legend(fontsize=8, loc="upper right")
    fig.tight_layout()
    return fig


def build_figure(spec: FigureSpec):
    """Figure object for a spec; separated from file output for testing."""
    table = read_table(spec.csv_path, spec.kind)
    if spec.kind == "fig2":
        return _line_chart(table, "chi", spec)
    if spec.kind == "fig4":
        return _line_chart(table, "alpha", spec)
    return _heat_map(table, spec)


def render(spec: FigureSpec) -> str:
    """Render the figure to spec.out_path; returns the path written."""
    fig = build_figure(spec)
    try:
        out = Path(spec.out_path)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=spec.dpi, metadata={"Software": None})
    finally:
        plt.close(fig)
    return spec.out_path


def main(argv: Optional[List[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="qmb-plots", description="Render a qmb CSV table to an image.")
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--kind", required=True, choices=sorted(REQUIRED))
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(csv_path=args.csv, kind=args.kind,
                          out_path=args.out, dpi=args.dpi)
        render(spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Figure builders: one deterministic matplotlib figure per CSV schema.

Each figure id is tied to one of the simulator's CSV tables:

- fig2: bounds.csv (i_ab, fer, beta_max) - achievable-efficiency ceiling vs
  frame error rate, with dashed horizontal ceilings at 1/I_AB; log y.
- fig4: sweep_afr.csv (beta_l, afr, ber_af, ...) - accepted-fraction bit
  error rate vs accepted frame rate, one curve per beta_l; log y.
- fig5: sweep_afr.csv - total efficiency beta_t vs AFR per beta_l; linear y.
- fig6: sweep_afr.csv - best beta_t over the simulated beta_l values at
  each AFR; linear y.
- fig7/fig8: skr_vs_distance.csv (d_km, skr_dw, skr_plob, <curves...>) -
  secret key rate vs distance; log y with rates clamped at a 1e-7 floor.

Rendering is read-only over the CSV; the output image is written via a
temporary file and an atomic rename so an interrupted run never leaves a
truncated image behind.
"""

from __future__ import annotations

import os
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

SKR_FLOOR = 1e-7


class SchemaError(ValueError):
    """The CSV is empty or lacks a column the figure needs."""


def _load(csv_path, required: tuple[str, ...]) -> pd.DataFrame:
    path = Path(csv_path)
    if not path.exists():
        raise SchemaError(f"input CSV {path} does not exist")
    try:
        df = pd.read_csv(path)
    except pd.errors.EmptyDataError:
        raise SchemaError(f"input CSV {path} is empty")
    if df.empty:
        raise SchemaError(f"input CSV {path} has no data rows")
    for col in required:
        if col not in df.columns:
            raise SchemaError(f"input CSV {path} is missing column '{col}'")
    return df


def _new_axes():
    fig, ax = plt.subplots(figsize=(6.4, 4.8), dpi=120)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def build_fig2(csv_path):
    df = _load(csv_path, ("i_ab", "fer", "beta_max"))
    fig, ax = _new_axes()
    for i_ab, grp in df.groupby("i_ab", sort=True):
        grp = grp.sort_values("fer")
        ax.plot(grp["fer"], grp["beta_max"], label=f"I_AB = {i_ab:g}")
        ax.axhline(1.0 / i_ab, linestyle="--", color="gray", linewidth=1.0)
    ax.set_yscale("log")
    ax.set_xlabel("frame error rate")
    ax.set_ylabel("maximum efficiency beta")
    ax.legend()
    return fig


def build_fig4(csv_path):
    df = _load(csv_path, ("beta_l", "afr", "ber_af"))
    fig, ax = _new_axes()
    for beta_l, grp in df.groupby("beta_l", sort=True):
        grp = grp.sort_values("afr")
        ax.plot(grp["afr"], np.maximum(grp["ber_af"], SKR_FLOOR), marker="o",
                markersize=3, label=f"beta_l = {beta_l:g}")
    ax.set_yscale("log")
    ax.set_xlabel("accepted frame rate")
    ax.set_ylabel("accepted-fraction BER")
    ax.legend()
    return fig


def build_fig5(csv_path):
    df = _load(csv_path, ("beta_l", "afr", "beta_t"))
    fig, ax = _new_axes()
    for beta_l, grp in df.groupby("beta_l", sort=True):
        grp = grp.sort_values("afr")
        ax.plot(grp["afr"], grp["beta_t"], marker="o", markersize=3,
                label=f"beta_l = {beta_l:g}")
    ax.axhline(1.0, linestyle="--", color="gray", linewidth=1.0)
    ax.set_xlabel("accepted frame rate")
    ax.set_ylabel("total efficiency beta_t")
    ax.legend()
    return fig


def build_fig6(csv_path):
    df = _load(csv_path, ("beta_l", "afr", "beta_t"))
    best = df.groupby("afr", sort=True)["beta_t"].max()
    fig, ax = _new_axes()
    ax.plot(best.index.to_numpy(), best.to_numpy(), marker="o", markersize=3,
            label="best beta_t over beta_l")
    ax.axhline(1.0, linestyle="--", color="gray", linewidth=1.0)
    ax.set_xlabel("accepted frame rate")
    ax.set_ylabel("total efficiency beta_t")
    ax.legend()
    return fig


def _build_skr_distance(csv_path):
    df = _load(csv_path, ("d_km", "skr_dw", "skr_plob"))
    df = df.sort_values("d_km")
    fig, ax = _new_axes()
    ax.plot(df["d_km"], np.maximum(df["skr_plob"], SKR_FLOOR),
            linestyle=":", color="black", label="PLOB")
    ax.plot(df["d_km"], np.maximum(df["skr_dw"], SKR_FLOOR),
            linestyle="--", label="Devetak-Winter")
    for col in df.columns:
        if col in ("d_km", "skr_dw", "skr_plob"):
            continue
        ax.plot(df["d_km"], np.maximum(df[col], SKR_FLOOR), label=col)
    ax.set_yscale("log")
    ax.set_ylim(bottom=SKR_FLOOR)
    ax.set_xlabel("distance (km)")
    ax.set_ylabel("secret key rate (bits/use)")
    ax.legend()
    return fig


BUILDERS = {
    "fig2": build_fig2,
    "fig4": build_fig4,
    "fig5": build_fig5,
    "fig6": build_fig6,
    "fig7": _build_skr_distance,
    "fig8": _build_skr_distance,
}

FIGURE_IDS = tuple(sorted(BUILDERS))


def render(figure_id: str, csv_path, out_path) -> Path:
    """Render one figure id from its CSV; atomic overwrite of out_path."""
    if figure_id not in BUILDERS:
        raise SchemaError(
            f"unknown figure id '{figure_id}' (choose from {', '.join(FIGURE_IDS)})")
    fig = BUILDERS[figure_id](csv_path)
    out = Path(out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    fmt = out.suffix.lstrip(".").lower() or "png"
    tmp = out.with_name(out.name + ".tmp")
    try:
        kwargs = {}
        if fmt == "png":
            # pin the embedded metadata so identical inputs give identical bytes
            kwargs["metadata"] = {"Software": "cvplots"}
        fig.savefig(tmp, format=fmt, **kwargs)
        os.replace(tmp, out)
    finally:
        plt.close(fig)
        if tmp.exists():
            tmp.unlink()
    return out

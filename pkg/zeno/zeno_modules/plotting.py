"""Static SVG figures rendered from experiment CSV files.

Figures depend on the CSV alone, so `zeno replot <csv>` regenerates them
without rerunning anything. A fixed hash salt and an empty date make the
SVG bytes reproducible.
"""

import logging
from pathlib import Path
from typing import Callable, Dict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402

from .data_types import InvalidInputError  # noqa: E402

logger = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "zeno"
plt.rcParams["svg.fonttype"] = "path"


def _observable(frame: pd.DataFrame, name: str) -> pd.DataFrame:
    return frame[frame["observable"] == name]


def _plot_fig2(frame: pd.DataFrame, ax) -> None:
    for gamma_cav, curve in _observable(frame, "p0").groupby("gamma_cav"):
        curve = curve.sort_values("omega")
        ax.plot(curve["omega"], curve["value"], marker="o", markersize=3, label=f"gamma_cav = {gamma_cav:g} g")
    ax.set_xscale("log")
    ax.set_xlabel("Rabi frequency |omega| / g")
    ax.set_ylabel("P0 over the gate")
    ax.set_title("No-emission probability of the CNOT pulse")
    ax.legend()


def _plot_scaling(frame: pd.DataFrame, ax) -> None:
    for name, label in (("mean_emission_time", "mean first emission"), ("duration", "gate duration T")):
        data = _observable(frame, name).sort_values("omega")
        ax.plot(1.0 / data["omega"], data["value"], marker="o", markersize=3, label=label)
    mc = _observable(frame, "mc_mean_emission_time").sort_values("omega")
    ax.errorbar(1.0 / mc["omega"], mc["value"], yerr=mc["error"], fmt="x", label="Monte Carlo")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("g / |omega|")
    ax.set_ylabel("time g")
    ax.set_title("Emission time against gate duration")
    ax.legend()


def _plot_vsystem(frame: pd.DataFrame, ax) -> None:
    dark = _observable(frame, "dark_period").sort_values("omega_w")
    dark = dark[(dark["omega_w"] > 0) & dark["value"].map(lambda v: v != float("inf"))]
    ax.plot(dark["omega_w"], dark["value"], marker="o", markersize=3, label="quadrature")
    mc = _observable(frame, "mc_dark_period").sort_values("omega_w")
    ax.errorbar(mc["omega_w"], mc["value"], yerr=mc["error"], fmt="x", label="Monte Carlo")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("weak Rabi frequency |omega_w|")
    ax.set_ylabel("mean dark period")
    ax.set_title("Macroscopic dark periods of the V system")
    ax.legend()


def _plot_cnot(frame: pd.DataFrame, ax) -> None:
    amplitudes = frame[frame["observable"].str.startswith("amplitude_")]
    labels = [name.removeprefix("amplitude_") for name in amplitudes["observable"]]
    ax.bar(labels, amplitudes["value"])
    ax.set_ylim(0, 1.05)
    ax.set_xlabel("DFS state")
    ax.set_ylabel("|amplitude| after the pulse")
    state = amplitudes["initial_state"].iloc[0] if len(amplitudes) else ""
    ax.set_title(f"Gate output for input {state}")


def _plot_dfs(frame: pd.DataFrame, ax) -> None:
    rates = _observable(frame, "decay_rate").sort_values("value")
    ax.plot(range(len(rates)), rates["value"], marker="o", linestyle="none")
    ax.set_yscale("log")
    ax.set_xlabel("complement mode")
    ax.set_ylabel("population decay rate / g")
    ax.set_title("Decay spectrum outside the DFS")


PLOTTERS: Dict[str, Callable] = {
    "fig2": _plot_fig2,
    "scaling": _plot_scaling,
    "vsystem": _plot_vsystem,
    "cnot": _plot_cnot,
    "dfs": _plot_dfs,
}


def render_svg(frame: pd.DataFrame, path: Path) -> Path:
    """Draw the figure of the experiment named in the frame and save it as SVG.

    Raises:
        InvalidInputError: If the frame names no known experiment
    """
    if frame.empty or "experiment" not in frame:
        raise InvalidInputError("Result table is empty or has no experiment column")
    experiment = str(frame["experiment"].iloc[0])
    if experiment not in PLOTTERS:
        raise InvalidInputError(f"No figure defined for experiment '{experiment}'")

    fig, ax = plt.subplots(figsize=(6, 4.5))
    try:
        PLOTTERS[experiment](frame, ax)
        ax.grid(True, linestyle=":")
        fig.tight_layout()
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    logger.info(f"Wrote figure {path}")
    return path


def replot(csv_path: Path) -> Path:
    """Regenerate <name>.svg next to <name>.csv."""
    csv_path = Path(csv_path)
    frame = pd.read_csv(csv_path, dtype={"initial_state": str, "item": str})
    return render_svg(frame, csv_path.with_suffix(".svg"))

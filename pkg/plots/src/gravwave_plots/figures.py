"""Figure builders over the diagnostics/analysis contract."""

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .io import (
    EmptyWindowError,
    OverwriteError,
    PlotDataError,
    column,
    read_analysis,
    read_diagnostics,
    window_mask,
)

KINDS = ("decay", "phase", "cauchy", "energy")


@dataclass(frozen=True)
class FigureSpec:
    input_dir: Path
    kind: str
    out_path: Path
    window: tuple[float, float] | None = None
    force: bool = False
    dpi: int = 150


def _fit_slope(logx, logy):
    slope, intercept = np.polyfit(logx, logy, 1)
    return float(slope), float(intercept)


def _shade_window(ax, window):
    if window is not None:
        ax.axvspan(window[0], window[1], color="0.9", zorder=0,
                   label=f"fit window [{window[0]:g}, {window[1]:g}]")


def _analysis_window(spec, analysis):
    if spec.window is not None:
        return spec.window
    if analysis and "window" in analysis:
        lo, hi = analysis["window"]
        return (float(lo), float(hi))
    return None


def _fig_decay(spec, ax):
    diag = read_diagnostics(spec.input_dir / "diagnostics.csv")
    try:
        analysis = read_analysis(spec.input_dir / "analysis.json")
    except PlotDataError:
        analysis = None
    t = column(diag, "t")
    z = column(diag, "zprime")
    window = _analysis_window(spec, analysis)
    mask = window_mask(t, window, diag["path"]) & (z > 0)
    if not np.any(mask):
        raise EmptyWindowError(window or (t[0], t[-1]), diag["path"])
    slope, intercept = _fit_slope(np.log1p(t[mask]), np.log(z[mask]))

    shifted = 1.0 + t
    pos = z > 0
    ax.loglog(shifted[pos], z[pos], lw=1.2, label="Z' norm")
    linf = column(diag, "linf_h")
    pos_h = linf > 0
    ax.loglog(shifted[pos_h], linf[pos_h], lw=1.0, alpha=0.7,
              label="sup |h|")
    anchor = np.exp(intercept)
    ax.loglog(shifted[mask], anchor * shifted[mask] ** slope, "k--", lw=1.0,
              label=f"fit: exponent {slope:.3f}")
    ax.loglog(shifted[mask], anchor * (shifted[mask] ** -0.5)
              * shifted[mask][0] ** (slope + 0.5),
              "r:", lw=1.0, label="reference slope -1/2")
    if window is not None:
        _shade_window(ax, (1.0 + window[0], 1.0 + window[1]))
    ax.set_xlabel("1 + t")
    ax.set_ylabel("norm")
    ax.set_title("dispersive decay")
    ax.legend(fontsize=8)


def _fig_phase(spec, ax):
    diag = read_diagnostics(spec.input_dir / "diagnostics.csv")
    analysis = read_analysis(spec.input_dir / "analysis.json")
    if not diag["probes"]:
        raise PlotDataError(f"no probe columns in {diag['path']}")
    t = column(diag, "t")
    window = _analysis_window(spec, analysis)
    mask = window_mask(t, window, diag["path"])
    logt = np.log1p(t)
    slopes = analysis.get("phase_slopes", {})
    for label in diag["probes"]:
        arg = np.unwrap(column(diag, f"argf_{label}"))
        (line,) = ax.plot(logt, arg, lw=1.0,
                          label=f"arg f at xi = {label}")
        info = slopes.get(label)
        if info and info.get("predicted") is not None:
            pred = float(info["predicted"])
            x0 = logt[mask][0]
            anchor = np.interp(x0, logt, arg)
            ax.plot(logt[mask], anchor + pred * (logt[mask] - x0), "--",
                    color=line.get_color(), lw=1.0,
                    label=f"predicted slope {pred:.2e}")
    if window is not None:
        _shade_window(ax, (np.log1p(window[0]), np.log1p(window[1])))
    ax.set_xlabel("ln(1 + t)")
    ax.set_ylabel("phase [rad]")
    ax.set_title("probe phase drift")
    ax.legend(fontsize=8)


def _fig_cauchy(spec, ax):
    analysis = read_analysis(spec.input_dir / "analysis.json")
    res = analysis.get("cauchy_residuals") or {}
    times = np.asarray(res.get("times", []), dtype=float)
    values = np.asarray(res.get("values", []), dtype=float)
    if times.size == 0 or values.size == 0:
        raise PlotDataError(
            f"no cauchy_residuals in {spec.input_dir / 'analysis.json'}"
        )
    ax.loglog(times, values, "o-", lw=1.2, label="|g(t) - g(t_end)|")
    p1 = analysis.get("p1_fit")
    if p1 is not None:
        ax.loglog(times, values[0] * (times / times[0]) ** (-float(p1)),
                  "k--", lw=1.0, label=f"fit: rate t^(-{float(p1):.2f})")
    ax.set_xlabel("t")
    ax.set_ylabel("weighted residual")
    ax.set_title("profile convergence")
    ax.legend(fontsize=8)


def _fig_energy(spec, ax):
    diag = read_diagnostics(spec.input_dir / "diagnostics.csv")
    t = column(diag, "t")
    e = column(diag, "energy_e0")
    if abs(e[0]) == 0:
        raise PlotDataError("initial energy is zero; nothing to normalize by")
    drift = (e - e[0]) / abs(e[0])
    ax.plot(t, drift, lw=1.2)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.annotate(f"max |drift| = {np.max(np.abs(drift)):.2e}",
                xy=(0.02, 0.95), xycoords="axes fraction", fontsize=9,
                va="top")
    ax.set_xlabel("t")
    ax.set_ylabel("relative energy deviation")
    ax.set_title("energy conservation")
    ax.ticklabel_format(axis="y", style="sci", scilimits=(-2, 2))


_BUILDERS = {
    "decay": _fig_decay,
    "phase": _fig_phase,
    "cauchy": _fig_cauchy,
    "energy": _fig_energy,
}


def render(spec: FigureSpec) -> Path:
    """Build the requested figure and write it to spec.out_path."""
    if spec.kind not in _BUILDERS:
        raise PlotDataError(f"unknown figure kind {spec.kind!r}")
    out = Path(spec.out_path)
    if out.exists() and not spec.force:
        raise OverwriteError(out)
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    try:
        _BUILDERS[spec.kind](spec, ax)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=spec.dpi)
    finally:
        plt.close(fig)
    return out

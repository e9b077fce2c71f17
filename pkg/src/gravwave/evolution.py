"""Time integration of the truncated surface system with run diagnostics.

The state is advanced in the complexified variable u = h + i Lambda phi,
whose linear part rotates as e^{-it Lambda}.  A classical fourth-order
integrating-factor Runge-Kutta step applies that rotation exactly and feeds
only the nonlinear remainder to the quadrature, so an order-1 (linear) run
is a bit-exact unitary rotation per step.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import nonlinearity as nl
from . import normalform as nf
from . import scattering as sc
from . import spectral as sp
from .nonlinearity import NonFiniteError, SurfaceState
from .spectral import Field, FourierGrid, NormConfig, SpectralError, Spectrum


class ConfigError(SpectralError):
    """A run configuration violates the schema; `key` names the bad entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}" if key else message)
        self.key = key


class RunAbortError(SpectralError):
    """The stepper lost the solution; `t` is the first bad time."""

    def __init__(self, t: float, message: str):
        super().__init__(message)
        self.t = t


# ---------------------------------------------------------------------------
# configuration

@dataclass(frozen=True)
class GridSpec:
    n: int = 512
    period: float = 400.0


@dataclass(frozen=True)
class InitSpec:
    profile: str = "gaussian"
    amplitude: float = 0.01
    width: float = 5.0
    carrier: float = 1.0
    seed: int = 0


@dataclass(frozen=True)
class EvolutionSpec:
    dt: float = 0.05
    t_end: float = 100.0
    order: int = 3
    dno_order: int = 4
    dealias: bool = True


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "out"
    snapshot_every: int = 20
    probe_frequencies: tuple[float, ...] = (1.0,)


@dataclass(frozen=True)
class SimConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    init: InitSpec = field(default_factory=InitSpec)
    evolution: EvolutionSpec = field(default_factory=EvolutionSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    norms: NormConfig = field(default_factory=NormConfig)


_PROFILES = ("gaussian", "wavepacket")


def validate_config(cfg: SimConfig) -> SimConfig:
    """Check every invariant and return the config with probes snapped.

    Probe frequencies are replaced by the nearest lattice frequencies of the
    configured grid, so the returned config is what a run actually uses.
    """
    g = cfg.grid
    if g.n < 8 or (g.n & (g.n - 1)) != 0:
        raise ConfigError("grid.n", f"grid.n must be a power of two, got {g.n}")
    if not g.period > 0:
        raise ConfigError("grid.period", f"must be positive, got {g.period}")
    ini = cfg.init
    if ini.profile not in _PROFILES:
        raise ConfigError(
            "init.profile", f"unknown profile {ini.profile!r}; choose from {_PROFILES}"
        )
    if ini.amplitude < 0:
        raise ConfigError("init.amplitude", f"must be >= 0, got {ini.amplitude}")
    if not ini.width > 0:
        raise ConfigError("init.width", f"must be positive, got {ini.width}")
    if ini.profile == "wavepacket" and not ini.carrier > 0:
        raise ConfigError("init.carrier", f"must be positive, got {ini.carrier}")
    if ini.seed < 0:
        raise ConfigError("init.seed", f"must be >= 0, got {ini.seed}")
    ev = cfg.evolution
    if not ev.dt > 0:
        raise ConfigError("evolution.dt", f"must be positive, got {ev.dt}")
    if ev.t_end != 0.0 and ev.t_end < ev.dt:
        raise ConfigError(
            "evolution.t_end", f"must be 0 or >= dt = {ev.dt}, got {ev.t_end}"
        )
    if ev.order not in (1, 2, 3, 4):
        raise ConfigError("evolution.order", f"must be 1, 2, 3 or 4, got {ev.order}")
    if ev.dno_order < 4:
        raise ConfigError("evolution.dno_order", f"must be >= 4, got {ev.dno_order}")
    grid = sp.make_grid(g.n, g.period)
    cfl = ev.dt * math.sqrt(grid.xi_max)
    if cfl > math.pi / 4.0 + 1e-12:
        raise ConfigError(
            "evolution.dt",
            f"dt sqrt(xi_max) = {cfl:.4f} exceeds the stability bound pi/4",
        )
    out = cfg.output
    if out.snapshot_every < 1:
        raise ConfigError("output.snapshot_every", f"must be >= 1, got {out.snapshot_every}")
    if not out.directory:
        raise ConfigError("output.directory", "must be a non-empty path")
    snapped = []
    for p in out.probe_frequencies:
        if abs(p) > grid.xi_max:
            raise ConfigError(
                "output.probe_frequencies",
                f"probe {p} lies outside the lattice range |xi| <= {grid.xi_max:.4f}",
            )
        snapped.append(float(grid.freqs[np.argmin(np.abs(grid.freqs - p))]))
    return replace(cfg, output=replace(out, probe_frequencies=tuple(snapped)))


# ---------------------------------------------------------------------------
# initial data

def _highpass(grid: FourierGrid, carrier: float) -> np.ndarray:
    # kill |xi| below ~0.3 carrier so Lambda^{-1} and the one-sided pairing are
    # safe; the erf step has Gaussian tails both ways, so the filtered packet
    # stays Gaussian-localized in x (a compact transition band would not)
    cut = 0.3 * carrier
    # transition no narrower than ~12/period, or its kernel reaches the edge
    s = max(0.05 * carrier, 12.0 / grid.period)
    u = (np.abs(grid.freqs) - cut) / (s * math.sqrt(2.0))
    return 0.5 * (1.0 + np.array([math.erf(v) for v in u]))


def init_state(cfg: SimConfig) -> SurfaceState:
    """Deterministic initial data at t = 0 with ||h||_inf = amplitude.

    gaussian: a bump alone, phi = 0.  wavepacket: a carrier-modulated bump,
    spectrally high-passed, paired with the potential that puts all of
    h + i Lambda phi on positive frequencies (a right-moving packet).
    """
    ini = cfg.init
    grid = sp.make_grid(cfg.grid.n, cfg.grid.period)
    if ini.amplitude == 0.0:
        zero = Field(grid, np.zeros(grid.n))
        return SurfaceState(0.0, zero, zero)
    envelope = np.exp(-0.5 * (grid.xs / ini.width) ** 2)
    if ini.profile == "gaussian":
        h = Field(grid, envelope)
        phi = Field(grid, np.zeros(grid.n))
    elif ini.profile == "wavepacket":
        rng = np.random.default_rng(ini.seed)
        theta = rng.uniform(0.0, 2.0 * np.pi)
        raw = Field(grid, np.cos(ini.carrier * grid.xs + theta) * envelope)
        coeffs = _highpass(grid, ini.carrier) * sp.to_spectrum(raw).coeffs
        coeffs[0] = 0.0
        h_spec = Spectrum(grid, coeffs)
        h = sp.to_field(h_spec, real=True)
        phi_spec = sp.apply_multiplier(sp.apply_multiplier(h_spec, "sgn"), "lambda_inv")
        phi = sp.to_field(Spectrum(grid, -1j * phi_spec.coeffs), real=True)
    else:
        raise ConfigError("init.profile", f"unknown profile {ini.profile!r}")
    peak = sp.linf_norm(h)
    if peak == 0.0:
        raise ConfigError("init.carrier", "high-pass filter removed the whole packet")
    scale = ini.amplitude / peak
    h = Field(grid, scale * h.values)
    phi = Field(grid, scale * phi.values)
    state = SurfaceState(0.0, h, nl.pin_zero_mode(phi))
    nl.validate_state(state)
    return state


# ---------------------------------------------------------------------------
# stepping

def _pack(state: SurfaceState) -> np.ndarray:
    lam = sp.multiplier_symbol(state.h.grid, "lambda")
    return sp.to_spectrum(state.h).coeffs + 1j * lam * sp.to_spectrum(state.phi).coeffs


def _unpack(grid: FourierGrid, coeffs: np.ndarray, t: float) -> SurfaceState:
    v = sp.to_field(Spectrum(grid, coeffs))
    h = Field(grid, v.values.real)
    lam_phi = sp.to_spectrum(Field(grid, v.values.imag))
    phi = sp.to_field(sp.apply_multiplier(lam_phi, "lambda_inv"), real=True)
    return SurfaceState(t, h, phi)


def _nonlinear(grid: FourierGrid, coeffs: np.ndarray, t: float, order: int, dno_order: int) -> np.ndarray:
    if order <= 1:
        return np.zeros(grid.n, dtype=complex)
    state = _unpack(grid, coeffs, t)
    dh, dphi = nl.rhs_nonlinear(state, order, dno_order)
    lam = sp.multiplier_symbol(grid, "lambda")
    return sp.to_spectrum(dh).coeffs + 1j * lam * sp.to_spectrum(dphi).coeffs


def _step_coeffs(grid: FourierGrid, coeffs: np.ndarray, t: float, dt: float,
                 order: int, dno_order: int) -> np.ndarray:
    """One integrating-factor RK4 step of u_t = -i Lambda u + N(u)."""
    lam = sp.multiplier_symbol(grid, "lambda")
    e_half = np.exp(-0.5j * dt * lam)
    e_full = e_half * e_half

    def nonlin(c: np.ndarray, s: float) -> np.ndarray:
        return _nonlinear(grid, c, s, order, dno_order)

    n1 = nonlin(coeffs, t)
    n2 = nonlin(e_half * (coeffs + 0.5 * dt * n1), t + 0.5 * dt)
    n3 = nonlin(e_half * coeffs + 0.5 * dt * n2, t + 0.5 * dt)
    n4 = nonlin(e_full * coeffs + dt * (e_half * n3), t + dt)
    out = e_full * coeffs + (dt / 6.0) * (e_full * n1 + 2.0 * e_half * (n2 + n3) + n4)
    out[0] = out[0].real  # re-pin the potential zero mode
    if not np.all(np.isfinite(out)):
        raise NonFiniteError(f"non-finite state at t = {t + dt}")
    return out


def step(state: SurfaceState, dt: float, cfg: SimConfig) -> SurfaceState:
    """Advance one step of size dt; dt may be negative for reversal checks."""
    grid = state.h.grid
    ev = cfg.evolution
    coeffs = _step_coeffs(grid, _pack(state), state.t, dt, ev.order, ev.dno_order)
    return _unpack(grid, coeffs, state.t + dt)


# ---------------------------------------------------------------------------
# profiles and diagnostics records

def profile(v: Spectrum, t: float) -> Spectrum:
    """Undo the half-wave rotation: f_hat(xi) = e^{it |xi|^{1/2}} v_hat(xi)."""
    return sp.apply_multiplier(v, "half_wave", -t)


def _normal_form_spectrum(state: SurfaceState, order: int) -> Spectrum:
    # linear runs carry no dressing: the profile of u itself is conserved
    if order <= 1:
        return Spectrum(state.h.grid, _pack(state))
    _, _, v = nf.to_normal_form(state)
    return sp.to_spectrum(v)


def probe_labels(cfg: SimConfig) -> list[str]:
    return [f"{xi:.6g}" for xi in cfg.output.probe_frequencies]


def csv_header(cfg: SimConfig) -> list[str]:
    cols = ["t", "linf_h", "linf_lambda_phi", "zprime", "z_profile",
            "energy_e0", "l2_u", "weighted_profile"]
    for label in probe_labels(cfg):
        cols += [f"absf_{label}", f"argf_{label}", f"phase_H_{label}", f"absg_{label}"]
    return cols


def _probe_index(grid: FourierGrid, xi: float) -> int:
    return int(np.argmin(np.abs(grid.freqs - xi)))


def _record(cfg: SimConfig, grid: FourierGrid, state: SurfaceState,
            f_hat: Spectrum, g_hat: Spectrum, acc: sc.PhaseAccumulator) -> dict:
    ev = cfg.evolution
    lam_phi = sp.apply_multiplier(state.phi, "lambda")
    u_vals = state.h.values + 1j * lam_phi.values
    row = {
        "t": state.t,
        "linf_h": sp.linf_norm(state.h),
        "linf_lambda_phi": sp.linf_norm(lam_phi),
        "zprime": sp.zprime_norm(state.h, state.phi, cfg.norms.zprime_index),
        "z_profile": sp.z_norm(f_hat, cfg.norms.z_beta, cfg.norms.z_weight),
        "energy_e0": nl.energy_e0(state, ev.order, ev.dno_order),
        "l2_u": float(np.sqrt(grid.dx * np.sum(np.abs(u_vals) ** 2))),
        "weighted_profile": sp.weighted_norm(f_hat, cfg.norms.sobolev_index),
    }
    for xi, label in zip(cfg.output.probe_frequencies, probe_labels(cfg)):
        j = _probe_index(grid, xi)
        row[f"absf_{label}"] = abs(f_hat.coeffs[j])
        row[f"argf_{label}"] = math.atan2(f_hat.coeffs[j].imag, f_hat.coeffs[j].real)
        row[f"phase_H_{label}"] = acc.phase[j]
        row[f"absg_{label}"] = abs(g_hat.coeffs[j])
    return row


@dataclass
class Trajectory:
    """Everything a finished (or aborted) run produced in memory."""

    config: SimConfig
    grid: FourierGrid
    times: list[float]
    records: list[dict]
    state: SurfaceState
    accumulator: sc.PhaseAccumulator
    diagnostics_path: str
    snapshot_steps: list[int]


def _format_cell(x: float) -> str:
    return f"{x:.17g}"


def run(cfg: SimConfig, initial: SurfaceState | None = None) -> Trajectory:
    """Integrate to t_end, recording diagnostics every snapshot_every steps.

    The CSV line for a record is flushed before the next step begins, so an
    aborted run leaves a parseable file; the abort is re-raised as
    RunAbortError with the offending time attached.
    """
    cfg = validate_config(cfg)
    grid = sp.make_grid(cfg.grid.n, cfg.grid.period)
    if initial is None:
        state = init_state(cfg)
    else:
        if initial.h.grid.n != grid.n or initial.h.grid.period != grid.period:
            raise ConfigError("grid", "initial state grid does not match the config")
        state = initial
    ev = cfg.evolution
    n_steps = int(math.ceil(ev.t_end / ev.dt - 1e-12)) if ev.t_end > 0 else 0

    outdir = cfg.output.directory
    os.makedirs(outdir, exist_ok=True)
    diag_path = os.path.join(outdir, "diagnostics.csv")
    header = csv_header(cfg)

    coeffs = _pack(state)
    v_hat = _normal_form_spectrum(state, ev.order)
    acc = sc.phase_accumulator(v_hat, 0.0)

    times: list[float] = []
    records: list[dict] = []
    snapshot_steps: list[int] = []

    def emit(fh, k: int, st: SurfaceState, vh: Spectrum) -> None:
        f_hat = profile(vh, st.t)
        g_hat = sc.corrected_profile(f_hat, acc)
        row = _record(cfg, grid, st, f_hat, g_hat, acc)
        times.append(st.t)
        records.append(row)
        snapshot_steps.append(k)
        sp.save_snapshot(os.path.join(outdir, f"profile_{k:08d}.spec"), f_hat, st.t)
        sp.save_snapshot(os.path.join(outdir, f"corrected_{k:08d}.spec"), g_hat, st.t)
        fh.write(",".join(_format_cell(row[c]) for c in header) + "\n")
        fh.flush()

    with open(diag_path, "w") as fh:
        fh.write(",".join(header) + "\n")
        emit(fh, 0, state, v_hat)
        for k in range(1, n_steps + 1):
            t_prev = (k - 1) * ev.dt
            t_now = k * ev.dt
            try:
                coeffs = _step_coeffs(grid, coeffs, t_prev, ev.dt, ev.order, ev.dno_order)
            except SpectralError as exc:
                raise RunAbortError(t_now, f"run aborted at t = {t_now}: {exc}") from exc
            state = _unpack(grid, coeffs, t_now)
            v_hat = _normal_form_spectrum(state, ev.order)
            # |e^{it Lambda} v_hat| = |v_hat|, so the density can skip the rotation
            acc = sc.accumulate_phase(acc, v_hat, t_now, ev.dt)
            if k % cfg.output.snapshot_every == 0 or k == n_steps:
                emit(fh, k, state, v_hat)

    return Trajectory(cfg, grid, times, records, state, acc, diag_path, snapshot_steps)

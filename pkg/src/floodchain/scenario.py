"""Synthetic desk-scale catchment: sloped channel, cross-sloped floodplain,
gauge stations, floodplain subdomains and the upstream hydrologic chain.

The twin-experiment truth uses the "observed" hydrograph (the routed river
network outlet) and true controls; the "hydrologic" forcing is the same
routed series degraded by a peak-dependent underestimation, mirroring a
hydrologic model that misses flood peaks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .enkf import ControlBounds, ControlSpreads, ControlVector, ModelRuntime
from .hydraulics import (
    BoundaryConditions,
    FrictionField,
    Hydrograph,
    HydraulicState,
    RatingCurve,
    StructuredGrid,
    Trajectory,
    simulate_with_corrections,
)
from .observing import FloodplainSubdomain, GaugeStation, validate_subdomains
from .routing import LateralInflowSeries, MuskingumParams, RiverNetwork, route_hydrograph

__all__ = ["ScenarioConfig", "EventConfig", "Scenario", "Forcings",
           "build_scenario", "make_forcings", "run_truth"]


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry, friction truth/prior and observation infrastructure."""

    nx: int = 84
    ny: int = 20
    dx: float = 50.0
    dy: float = 50.0
    slope: float = 5e-4
    z_inlet: float = 5.0
    channel_rows: tuple[int, ...] = (9, 10, 11)
    bank_height: float = 2.1
    cross_slope: float = 4.5e-3
    bump_amp: float = 0.15
    # backswamp ponds: closed depressions at two distances from the channel;
    # the far ones sit above the flood line and only collect rain
    pond_depth: float = 0.32
    pond_rows_from_bank: tuple[int, ...] = (2, 7)
    pond_rx: int = 4
    pond_ry: int = 1
    eps: float = 0.02
    k_true: tuple[float, float] = (33.0, 12.0)       # channel, floodplain
    k_prior: tuple[float, float] = (24.0, 18.0)
    n_subdomains: int = 5
    station_fracs: tuple[float, ...] = (0.1, 0.5, 0.9)
    station_names: tuple[str, ...] = ("upstream", "middle", "downstream")
    sigma_wse: float = 0.05
    sigma_wsr: float = 0.05
    bounds: ControlBounds = ControlBounds(k_min=5.0, k_max=60.0, mu_min=0.2, mu_max=5.0, dh_max=0.5)

    def __post_init__(self):
        if len(self.station_fracs) != len(self.station_names):
            raise ValueError("one name per station position")
        if self.n_subdomains < 1:
            raise ValueError("need at least one subdomain")
        if any(j < 0 or j >= self.ny for j in self.channel_rows):
            raise ValueError("channel rows outside grid")


@dataclass(frozen=True)
class EventConfig:
    """Flood wave shape, hydrologic bias and optional truth-only rain."""

    duration_h: float = 54.0
    forcing_dt_s: float = 3600.0
    base_m3s: float = 80.0
    peak_m3s: float = 700.0
    peak_hour: float = 21.0
    shape_power: float = 4.0
    peak_bias: float = 0.7          # hydrologic/observed peak ratio; 1.0 = no bias
    bias_mode: str = "peak"         # 'peak' (threshold-smoothed) or 'uniform'
    bias_threshold_frac: float = 0.35
    bias_width_frac: float = 0.1
    rain_total_m: float = 0.10      # truth-only floodplain volume injection
    rain_start_h: float = 3.0
    rain_end_h: float = 45.0
    rain_interval_h: float = 6.0

    def __post_init__(self):
        if self.peak_m3s <= 0 or self.duration_h <= 0:
            raise ValueError("peak discharge and duration must be positive")
        if self.base_m3s < 0 or self.base_m3s >= self.peak_m3s:
            raise ValueError("baseflow must sit below the peak")
        if self.bias_mode not in ("peak", "uniform"):
            raise ValueError("bias_mode must be 'peak' or 'uniform'")
        if not 0 < self.peak_bias <= 1.0:
            raise ValueError("peak_bias must be in (0, 1]")
        if self.peak_hour <= 0:
            raise ValueError("peak_hour must be positive")

    @property
    def t_end(self) -> float:
        return self.duration_h * 3600.0

    def rain_pulse_times(self) -> list[float]:
        if self.rain_total_m <= 0:
            return []
        times = np.arange(self.rain_start_h, self.rain_end_h + 1e-9, self.rain_interval_h)
        return [t * 3600.0 for t in times]


@dataclass(frozen=True)
class Scenario:
    config: ScenarioConfig
    grid: StructuredGrid
    stations: tuple[GaugeStation, ...]
    subdomains: tuple[FloodplainSubdomain, ...]
    network: RiverNetwork
    routing_params: MuskingumParams
    inlet_cells: np.ndarray
    outlet_cells: np.ndarray
    outlet: RatingCurve
    true_control: ControlVector
    prior_control: ControlVector

    @property
    def eps(self) -> float:
        return self.config.eps

    @property
    def channel_width(self) -> float:
        return len(self.config.channel_rows) * self.config.dy

    def floodplain_mask(self) -> np.ndarray:
        return self.grid.friction_zone != 0

    def runtime(self, cfl: float = 0.45) -> ModelRuntime:
        fric = FrictionField((0, 1), np.asarray(self.config.k_true, dtype=float),
                             self.config.bounds.k_min, self.config.bounds.k_max)
        return ModelRuntime(self.grid, fric, self.inlet_cells, self.outlet_cells,
                            self.outlet, self.stations, self.subdomains, self.eps, cfl=cfl)

    def normal_depth(self, q: float, k_channel: float) -> float:
        return (q / (k_channel * self.channel_width * np.sqrt(self.config.slope))) ** 0.6

    def init_state(self, control: ControlVector, forcing: Hydrograph) -> HydraulicState:
        """Baseflow channel equilibrium for the member's friction and mu."""
        q0 = float(forcing.values[0]) * control.mu
        h = np.zeros((self.grid.ny, self.grid.nx))
        qx = np.zeros_like(h)
        hn = self.normal_depth(q0, float(control.friction[0]))
        for j in self.config.channel_rows:
            h[j] = hn
            qx[j] = q0 / self.channel_width
        return HydraulicState(h, qx, np.zeros_like(h), 0.0)

    def scenario_hash_fields(self) -> str:
        return repr((self.config, self.grid.z.tobytes()))


def _carve_ponds(z: np.ndarray, zone: np.ndarray, cfg: ScenarioConfig) -> None:
    """Deterministic elliptical backswamp depressions on both floodplain sides.

    One pond per (subdomain band, side, bank distance); centers are staggered
    in x so no two bands look alike.
    """
    ny, nx = z.shape
    lo_row = min(cfg.channel_rows)
    hi_row = max(cfg.channel_rows)
    edges = np.linspace(0, nx, cfg.n_subdomains + 1).astype(int)
    offsets = [-3, 2, -1, 3, 0]
    for s in range(cfg.n_subdomains):
        ic = (edges[s] + edges[s + 1]) // 2
        for side, b_row in ((-1, lo_row), (+1, hi_row)):
            for n_k, k in enumerate(cfg.pond_rows_from_bank):
                jc = b_row + side * (1 + k)
                if not 0 <= jc < ny or zone[jc, ic] == 0:
                    continue
                i0 = ic + offsets[s % len(offsets)] * (1 if n_k == 0 else -1)
                cells = []
                for dj in range(-cfg.pond_ry, cfg.pond_ry + 1):
                    for di in range(-cfg.pond_rx, cfg.pond_rx + 1):
                        jj, ii = jc + dj, i0 + di
                        if 0 <= jj < ny and 0 <= ii < nx and zone[jj, ii] != 0:
                            r2 = (di / (cfg.pond_rx + 0.5)) ** 2 + (dj / (cfg.pond_ry + 0.5)) ** 2
                            if r2 < 1.0:
                                cells.append((jj, ii, r2))
                if not cells:
                    continue
                # carve below the lowest rim point so the depression is closed
                # despite the cross slope
                z_ref = min(z[jj, ii] for jj, ii, _ in cells)
                for jj, ii, r2 in cells:
                    z[jj, ii] = min(z[jj, ii], z_ref - cfg.pond_depth * (1.0 - r2))


def build_scenario(cfg: ScenarioConfig = ScenarioConfig()) -> Scenario:
    """Deterministic synthetic catchment from the configuration."""
    nx, ny = cfg.nx, cfg.ny
    x = np.arange(nx) * cfg.dx
    z_ch = cfg.z_inlet - cfg.slope * x
    ch = set(cfg.channel_rows)
    z = np.empty((ny, nx))
    zone = np.ones((ny, nx), dtype=np.int64)
    lx = x[-1] if nx > 1 else 1.0
    for j in range(ny):
        if j in ch:
            z[j] = z_ch
            zone[j] = 0
        else:
            dist = (min(abs(j - r) for r in ch) - 1) * cfg.dy
            bumps = cfg.bump_amp * np.sin(2 * np.pi * 3 * x / lx + 0.7 * j) \
                * np.cos(2 * np.pi * (2 * j + 1) / (2 * ny))
            z[j] = z_ch + cfg.bank_height + cfg.cross_slope * dist + bumps
    _carve_ponds(z, zone, cfg)

    sub = np.full((ny, nx), -1, dtype=np.int64)
    edges = np.linspace(0, nx, cfg.n_subdomains + 1).astype(int)
    for s in range(cfg.n_subdomains):
        band = (np.arange(nx) >= edges[s]) & (np.arange(nx) < edges[s + 1])
        sub[(zone == 1) & band[None, :]] = s

    grid = StructuredGrid(nx, ny, cfg.dx, cfg.dy, z, zone, sub)

    mid = cfg.channel_rows[len(cfg.channel_rows) // 2]
    stations = []
    for name, frac in zip(cfg.station_names, cfg.station_fracs):
        i = int(round(frac * (nx - 1)))
        st = GaugeStation(name, i, mid, cfg.sigma_wse)
        st.check_inside(grid)
        stations.append(st)
    subdomains = tuple(FloodplainSubdomain.from_grid(grid, s, cfg.sigma_wsr)
                       for s in range(cfg.n_subdomains))
    validate_subdomains(subdomains, grid)

    # upstream hydrologic chain: two headwater pairs feeding a main stem
    net = RiverNetwork(
        ("HW1", "HW2", "HW3", "HW4", "MID1", "MID2", "OUT"),
        (4, 4, 5, 5, 6, 6, -1),
    )
    params = MuskingumParams(np.full(7, 3600.0), np.full(7, 0.1))

    width = len(cfg.channel_rows) * cfg.dy
    k_ch = cfg.k_true[0]
    a = (1.0 / (k_ch * width * np.sqrt(cfg.slope))) ** 0.6
    outlet = RatingCurve(a, 0.6, float(z_ch[-1]))
    inlet_cells = np.array([[j, 0] for j in cfg.channel_rows])
    outlet_cells = np.array([[j, nx - 1] for j in cfg.channel_rows])

    true_ctl = ControlVector(np.asarray(cfg.k_true, dtype=float), 1.0, np.zeros(cfg.n_subdomains))
    prior_ctl = ControlVector(np.asarray(cfg.k_prior, dtype=float), 1.0, np.zeros(cfg.n_subdomains))
    return Scenario(cfg, grid, tuple(stations), subdomains, net, params,
                    inlet_cells, outlet_cells, outlet, true_ctl, prior_ctl)


@dataclass(frozen=True)
class Forcings:
    observed: Hydrograph      # routed network outlet, the "real event"
    hydrologic: Hydrograph    # same chain with peak underestimation
    lateral: LateralInflowSeries
    routed: np.ndarray        # discharge[t, reach] of the calibrated routing


def _bias_factor(q: np.ndarray, ev: EventConfig) -> np.ndarray:
    """Multiplier mapping observed to hydrologic discharge."""
    reduction = 1.0 - ev.peak_bias
    if ev.bias_mode == "uniform":
        return np.full_like(q, 1.0 - reduction)
    thr = ev.base_m3s + ev.bias_threshold_frac * (ev.peak_m3s - ev.base_m3s)
    width = max(ev.bias_width_frac * (ev.peak_m3s - ev.base_m3s), 1e-9)
    s = np.clip((q - thr) / width, 0.0, 1.0)
    s = s * s * (3.0 - 2.0 * s)  # smoothstep
    return 1.0 - reduction * s


def make_forcings(scenario: Scenario, ev: EventConfig) -> Forcings:
    """Route a lateral-inflow event through the river network, then bias it.

    The observed hydrograph is the routed outlet discharge calibrated (by
    linearity of the routing) to hit the configured baseflow and peak
    exactly; the hydrologic hydrograph applies the peak-dependent
    underestimation on top.
    """
    net, params = scenario.network, scenario.routing_params
    n = net.n_reaches
    dt = ev.forcing_dt_s
    times = np.arange(0.0, ev.t_end + 0.5 * dt, dt)
    tp = ev.peak_hour * 3600.0
    wave = np.maximum(0.0, (times / tp) * np.exp(1.0 - times / tp)) ** ev.shape_power

    # drainage-area weights of the lateral inflows
    w = np.array([0.18, 0.16, 0.15, 0.13, 0.12, 0.14, 0.12])[:n]
    w = w / w.sum()
    base_lat = np.tile(ev.base_m3s * w, (times.size, 1))
    wave_lat = wave[:, None] * w[None, :]

    outlet_idx = net.outlets[0]
    q0 = ev.base_m3s * route_accumulation(net, w)
    base_out = route_hydrograph(net, params, LateralInflowSeries(times, base_lat), q0)
    wave_out = route_hydrograph(net, params, LateralInflowSeries(times, wave_lat), np.zeros(n))
    peak_response = wave_out[:, outlet_idx].max()
    alpha = (ev.peak_m3s - ev.base_m3s) / peak_response
    lateral = LateralInflowSeries(times, base_lat + alpha * wave_lat)
    routed = base_out + alpha * wave_out
    observed = Hydrograph(times, routed[:, outlet_idx])
    hydrologic = Hydrograph(times, observed.values * _bias_factor(observed.values, ev))
    return Forcings(observed, hydrologic, lateral, routed)


def route_accumulation(net: RiverNetwork, w: np.ndarray) -> np.ndarray:
    """Steady-state accumulated share of lateral inflow at each reach."""
    acc = np.array(w, dtype=float)
    for i in net.topological_order:
        for j in net.upstream_of(i):
            acc[i] += acc[j]
    return acc


def run_truth(scenario: Scenario, ev: EventConfig, forcing: Hydrograph, output_times,
              cfl: float = 0.45) -> Trajectory:
    """Reference simulation with true controls and optional rain pulses."""
    pulses = ev.rain_pulse_times()
    per_pulse = ev.rain_total_m / len(pulses) if pulses else 0.0
    corrections = [(t, {sd.id: per_pulse for sd in scenario.subdomains}) for t in pulses]
    fric = FrictionField((0, 1), scenario.true_control.friction,
                         scenario.config.bounds.k_min, scenario.config.bounds.k_max)
    bc = BoundaryConditions(inflow=forcing, inlet_cells=scenario.inlet_cells,
                            outlet_cells=scenario.outlet_cells, outlet=scenario.outlet)
    state0 = scenario.init_state(scenario.true_control, forcing)
    return simulate_with_corrections(scenario.grid, state0, bc, fric, ev.t_end,
                                     output_times, corrections, cfl=cfl, eps=scenario.eps)

"""Gauge stations, floodplain subdomains and twin-experiment observations.

The two observation operators: water-surface elevation extracted at gauge
cells, and wet surface ratios (fraction of wet cells) over floodplain
subdomains.  ``synthesize_observations`` samples both from a reference
trajectory and adds seeded Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._util import ffmt
from .hydraulics import DEFAULT_EPS, HydraulicState, StructuredGrid, Trajectory

__all__ = [
    "GaugeStation", "FloodplainSubdomain", "WseObs", "WsrObs", "ObservationSet",
    "extract_wse", "wet_dry_map", "wsr", "synthesize_observations",
    "save_stations", "load_stations", "save_subdomains", "load_subdomains",
    "save_wet_dry_map", "validate_subdomains",
]


@dataclass(frozen=True)
class GaugeStation:
    name: str
    i: int
    j: int
    sigma_wse: float

    def __post_init__(self):
        if self.sigma_wse <= 0:
            raise ValueError("sigma_wse must be positive")

    def check_inside(self, grid: StructuredGrid) -> None:
        if not (0 <= self.i < grid.nx and 0 <= self.j < grid.ny):
            raise ValueError(f"station {self.name} outside grid")


@dataclass(frozen=True)
class FloodplainSubdomain:
    id: int
    cells: np.ndarray  # (n, 2) of (j, i)
    sigma_wsr: float

    def __post_init__(self):
        c = np.asarray(self.cells, dtype=np.int64)
        object.__setattr__(self, "cells", c)
        if c.ndim != 2 or c.shape[1] != 2 or c.shape[0] == 0:
            raise ValueError("cells must be a nonempty (n, 2) array of (j, i)")
        if self.sigma_wsr <= 0:
            raise ValueError("sigma_wsr must be positive")

    @staticmethod
    def from_grid(grid: StructuredGrid, sid: int, sigma_wsr: float) -> "FloodplainSubdomain":
        jj, ii = np.nonzero(grid.subdomain_id == sid)
        return FloodplainSubdomain(sid, np.column_stack([jj, ii]), sigma_wsr)


def validate_subdomains(subdomains, grid: StructuredGrid) -> None:
    seen = np.zeros((grid.ny, grid.nx), dtype=bool)
    for sd in subdomains:
        j, i = sd.cells[:, 0], sd.cells[:, 1]
        if np.any(j < 0) or np.any(j >= grid.ny) or np.any(i < 0) or np.any(i >= grid.nx):
            raise ValueError(f"subdomain {sd.id} has cells outside the grid")
        if seen[j, i].any():
            raise ValueError(f"subdomain {sd.id} overlaps another subdomain")
        seen[j, i] = True


@dataclass(frozen=True)
class WseObs:
    time: float
    station: str
    value: float
    sigma: float
    dry: bool = False


@dataclass(frozen=True)
class WsrObs:
    time: float
    subdomain: int
    ratio: float
    sigma: float


@dataclass
class ObservationSet:
    """Timestamped WSE gauge readings and WSR subdomain ratios."""

    wse: list = field(default_factory=list)
    wsr: list = field(default_factory=list)

    def __post_init__(self):
        self.wse = sorted(self.wse, key=lambda r: (r.time, r.station))
        self.wsr = sorted(self.wsr, key=lambda r: (r.time, r.subdomain))
        for r in self.wse:
            if not np.isfinite(r.value):
                raise ValueError("non-finite WSE observation")
        for r in self.wsr:
            if not (0.0 <= r.ratio <= 1.0):
                raise ValueError("WSR observation outside [0, 1]")

    def wse_in(self, t0: float, t1: float) -> list:
        """WSE records with time in (t0, t1]."""
        return [r for r in self.wse if t0 < r.time <= t1]

    def wsr_in(self, t0: float, t1: float) -> list:
        return [r for r in self.wsr if t0 < r.time <= t1]

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("kind,time,target,value,sigma,dry\n")
            for r in self.wse:
                f.write(f"wse,{ffmt(r.time)},{r.station},{ffmt(r.value)},{ffmt(r.sigma)},{int(r.dry)}\n")
            for r in self.wsr:
                f.write(f"wsr,{ffmt(r.time)},{r.subdomain},{ffmt(r.ratio)},{ffmt(r.sigma)},0\n")

    @staticmethod
    def load(path) -> "ObservationSet":
        wse, wsr = [], []
        with open(path) as f:
            header = f.readline().strip()
            if header != "kind,time,target,value,sigma,dry":
                raise ValueError(f"unexpected observation header {header!r}")
            for line in f:
                line = line.strip()
                if not line:
                    continue
                kind, t, target, v, s, dry = line.split(",")
                if kind == "wse":
                    wse.append(WseObs(float(t), target, float(v), float(s), bool(int(dry))))
                elif kind == "wsr":
                    wsr.append(WsrObs(float(t), int(target), float(v), float(s)))
                else:
                    raise ValueError(f"unknown observation kind {kind!r}")
        return ObservationSet(wse, wsr)


def extract_wse(state: HydraulicState, grid: StructuredGrid, station: GaugeStation,
                eps: float = DEFAULT_EPS) -> tuple[float, bool]:
    """Water-surface elevation at the gauge cell; dry gauges report bed level."""
    station.check_inside(grid)
    h = state.h[station.j, station.i]
    z = grid.z[station.j, station.i]
    if h < eps:
        return float(z), True
    return float(z + h), False


def wet_dry_map(state: HydraulicState, threshold: float) -> np.ndarray:
    """Binary map: wet iff h >= threshold."""
    if threshold < 0:
        raise ValueError("threshold must be non-negative")
    return state.h >= threshold


def wsr(state: HydraulicState, grid: StructuredGrid, subdomain: FloodplainSubdomain,
        threshold: float) -> float:
    """Wet-cell fraction over the subdomain (uniform grid: plain count)."""
    j, i = subdomain.cells[:, 0], subdomain.cells[:, 1]
    wet = state.h[j, i] >= threshold
    return float(np.count_nonzero(wet)) / wet.size


def synthesize_observations(truth: Trajectory, grid: StructuredGrid, stations, subdomains,
                            wse_times, wsr_times, noise_std_wse: float, noise_std_wsr: float,
                            seed: int, eps: float = DEFAULT_EPS) -> ObservationSet:
    """Sample noisy observations from a reference trajectory (twin protocol).

    Requested times must match trajectory snapshots exactly.  The same seed
    always yields the same observation set.
    """
    rng = np.random.default_rng(seed)
    wse_records = []
    for t in wse_times:
        state = truth.state_at(t)  # KeyError when absent
        for st in stations:
            v, dry = extract_wse(state, grid, st, eps)
            wse_records.append(WseObs(float(t), st.name, v + rng.normal() * noise_std_wse,
                                      st.sigma_wse, dry))
    wsr_records = []
    for t in wsr_times:
        state = truth.state_at(t)
        for sd in subdomains:
            r = wsr(state, grid, sd, eps) + rng.normal() * noise_std_wsr
            wsr_records.append(WsrObs(float(t), sd.id, float(np.clip(r, 0.0, 1.0)), sd.sigma_wsr))
    return ObservationSet(wse_records, wsr_records)


# ---------------------------------------------------------------------------
# definition files and map export

def save_stations(path, stations) -> None:
    with open(path, "w") as f:
        f.write("name,i,j,sigma_wse\n")
        for s in stations:
            f.write(f"{s.name},{s.i},{s.j},{ffmt(s.sigma_wse)}\n")


def load_stations(path) -> list[GaugeStation]:
    out = []
    with open(path) as f:
        f.readline()
        for line in f:
            line = line.strip()
            if line:
                name, i, j, s = line.split(",")
                out.append(GaugeStation(name, int(i), int(j), float(s)))
    return out


def save_subdomains(path, subdomains) -> None:
    with open(path, "w") as f:
        f.write("id,i,j,sigma_wsr\n")
        for sd in subdomains:
            for j, i in sd.cells:
                f.write(f"{sd.id},{i},{j},{ffmt(sd.sigma_wsr)}\n")


def load_subdomains(path) -> list[FloodplainSubdomain]:
    cells: dict[int, list] = {}
    sigmas: dict[int, float] = {}
    with open(path) as f:
        f.readline()
        for line in f:
            line = line.strip()
            if line:
                sid, i, j, s = line.split(",")
                cells.setdefault(int(sid), []).append((int(j), int(i)))
                sigmas[int(sid)] = float(s)
    return [FloodplainSubdomain(sid, np.array(cl), sigmas[sid]) for sid, cl in cells.items()]


def save_wet_dry_map(path, wet: np.ndarray, fmt: str = "pgm") -> None:
    """Export a binary map as portable greymap (ASCII P2) or CSV grid."""
    wet = np.asarray(wet, dtype=bool)
    if fmt == "pgm":
        ny, nx = wet.shape
        with open(path, "w") as f:
            f.write(f"P2\n{nx} {ny}\n1\n")
            for row in wet:
                f.write(" ".join("1" if w else "0" for w in row) + "\n")
    elif fmt == "csv":
        with open(path, "w") as f:
            for row in wet:
                f.write(",".join("1" if w else "0" for w in row) + "\n")
    else:
        raise ValueError("fmt must be 'pgm' or 'csv'")

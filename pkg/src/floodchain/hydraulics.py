"""2D shallow-water floodplain solver on a structured grid.

First-order explicit finite volume with hydrostatic reconstruction
(well balanced, positivity preserving), zoned Strickler friction,
volume-source inflow over designated inlet cells and a rating-curve or
fixed-stage outlet along the east edge.  Everything else is a wall.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._util import ffmt

G = _kernels.G
DEFAULT_EPS = 1e-4

__all__ = [
    "StructuredGrid", "FrictionField", "HydraulicState", "BoundaryConditions",
    "RatingCurve", "Hydrograph", "Trajectory", "SolverInstabilityError",
    "stable_dt", "swe_step", "simulate", "apply_state_correction",
    "save_grid", "load_grid", "save_state", "load_state",
]


class SolverInstabilityError(RuntimeError):
    """Non-finite depth or momentum; reports when and where it appeared."""

    def __init__(self, t: float, cell: tuple[int, int]):
        self.t = t
        self.cell = cell
        super().__init__(f"solver produced non-finite values at t={t:.3f}s, cell (j={cell[0]}, i={cell[1]})")


@dataclass(frozen=True)
class StructuredGrid:
    """Rectangular cell grid; arrays are indexed [j, i] = [row/y, col/x]."""

    nx: int
    ny: int
    dx: float
    dy: float
    z: np.ndarray                  # bed elevation (m)
    friction_zone: np.ndarray      # zone id per cell
    subdomain_id: np.ndarray       # floodplain subdomain per cell, -1 = none

    def __post_init__(self):
        if self.dx <= 0 or self.dy <= 0:
            raise ValueError("dx and dy must be positive")
        shape = (self.ny, self.nx)
        for name in ("z", "friction_zone", "subdomain_id"):
            a = getattr(self, name)
            if a.shape != shape:
                raise ValueError(f"{name} must have shape {shape}, got {a.shape}")
        if not np.all(np.isfinite(self.z)):
            raise ValueError("bed elevation must be finite")

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def zone_mask(self, zone: int) -> np.ndarray:
        return self.friction_zone == zone

    def subdomain_ids(self) -> np.ndarray:
        ids = np.unique(self.subdomain_id)
        return ids[ids >= 0]


@dataclass(frozen=True)
class FrictionField:
    """Strickler coefficient per friction zone (m^(1/3)/s)."""

    zone_ids: tuple[int, ...]
    strickler: np.ndarray
    k_min: float = 1.0
    k_max: float = 100.0

    def __post_init__(self):
        k = np.asarray(self.strickler, dtype=float)
        object.__setattr__(self, "strickler", k)
        if k.shape != (len(self.zone_ids),):
            raise ValueError("one coefficient per zone id required")
        if np.any(k < self.k_min) or np.any(k > self.k_max):
            raise ValueError(f"strickler outside [{self.k_min}, {self.k_max}]")

    def per_cell(self, grid: StructuredGrid) -> np.ndarray:
        out = np.empty((grid.ny, grid.nx))
        seen = np.zeros((grid.ny, grid.nx), dtype=bool)
        for zid, k in zip(self.zone_ids, self.strickler):
            m = grid.friction_zone == zid
            out[m] = k
            seen |= m
        if not seen.all():
            missing = np.unique(grid.friction_zone[~seen])
            raise ValueError(f"grid friction zones without coefficient: {missing}")
        return out

    def with_values(self, strickler) -> "FrictionField":
        return FrictionField(self.zone_ids, np.asarray(strickler, dtype=float), self.k_min, self.k_max)


@dataclass
class HydraulicState:
    """Water depth h (m) and unit discharges qx, qy (m^2/s) at time t (s)."""

    h: np.ndarray
    qx: np.ndarray
    qy: np.ndarray
    t: float

    def copy(self) -> "HydraulicState":
        return HydraulicState(self.h.copy(), self.qx.copy(), self.qy.copy(), self.t)

    def wse(self, grid: StructuredGrid) -> np.ndarray:
        return grid.z + self.h

    def volume(self, grid: StructuredGrid) -> float:
        return float(self.h.sum()) * grid.cell_area


@dataclass(frozen=True)
class RatingCurve:
    """Downstream stage-discharge relation: stage = z0 + a * Q^b."""

    a: float
    b: float
    z0: float

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("rating curve must be monotone increasing (a, b > 0)")

    def stage(self, q: float) -> float:
        return self.z0 + self.a * max(q, 0.0) ** self.b


@dataclass(frozen=True)
class Hydrograph:
    """Piecewise-linear discharge time series (s, m3/s)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("times and values must be equal-length 1-D arrays")
        if np.any(np.diff(t) <= 0):
            raise ValueError("times must be strictly increasing")
        if np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("discharge must be finite and non-negative")

    def at(self, t) -> np.ndarray | float:
        return np.interp(t, self.times, self.values)

    def scaled(self, factor: float) -> "Hydrograph":
        return Hydrograph(self.times, self.values * factor)

    def save(self, path) -> None:
        with open(path, "w") as f:
            f.write("time,discharge\n")
            for t, v in zip(self.times, self.values):
                f.write(f"{ffmt(t)},{ffmt(v)}\n")

    @staticmethod
    def load(path) -> "Hydrograph":
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return Hydrograph(data[:, 0], data[:, 1])


@dataclass(frozen=True)
class BoundaryConditions:
    """Inflow over inlet cells plus an outlet stage rule on the east edge."""

    inflow: Hydrograph | None = None
    inlet_cells: np.ndarray | None = None    # (n, 2) of (j, i)
    outlet_cells: np.ndarray | None = None   # (n, 2) of (j, i), i == nx-1
    outlet: "RatingCurve | float | None" = None

    def validate(self, grid: StructuredGrid) -> None:
        if (self.inflow is None) != (self.inlet_cells is None):
            raise ValueError("inflow hydrograph and inlet cells go together")
        if (self.outlet is None) != (self.outlet_cells is None):
            raise ValueError("outlet rule and outlet cells go together")
        for name, cells in (("inlet", self.inlet_cells), ("outlet", self.outlet_cells)):
            if cells is None:
                continue
            c = np.asarray(cells)
            if c.ndim != 2 or c.shape[1] != 2:
                raise ValueError(f"{name}_cells must be an (n, 2) array of (j, i)")
            if np.any(c[:, 0] < 0) or np.any(c[:, 0] >= grid.ny) or np.any(c[:, 1] < 0) or np.any(c[:, 1] >= grid.nx):
                raise ValueError(f"{name} cells outside grid")
        if self.outlet_cells is not None and np.any(np.asarray(self.outlet_cells)[:, 1] != grid.nx - 1):
            raise ValueError("outlet cells must lie on the east edge")


@dataclass
class Trajectory:
    """Snapshots at requested times plus the run's boundary volume budget."""

    times: np.ndarray
    states: list[HydraulicState]
    vol_in: float = 0.0
    vol_out: float = 0.0
    n_steps: int = 0

    def state_at(self, t: float) -> HydraulicState:
        idx = np.nonzero(self.times == t)[0]
        if idx.size == 0:
            raise KeyError(f"no snapshot at t={t}")
        return self.states[int(idx[0])]


def _empty_cells() -> np.ndarray:
    return np.empty(0, dtype=np.int64)


class _KernelArgs:
    """Precomputed per-simulation arrays for the numba kernels."""

    def __init__(self, grid: StructuredGrid, bc: BoundaryConditions | None, friction: FrictionField):
        self.kcell = friction.per_cell(grid)
        if bc is not None and bc.inlet_cells is not None:
            cells = np.asarray(bc.inlet_cells, dtype=np.int64)
            self.inlet_j, self.inlet_i = cells[:, 0].copy(), cells[:, 1].copy()
        else:
            self.inlet_j = self.inlet_i = _empty_cells()
        self.outlet_mode = 0
        self.rating_a = self.rating_b = self.rating_z0 = 0.0
        self.fixed_stage = 0.0
        if bc is not None and bc.outlet_cells is not None:
            self.outlet_j = np.asarray(bc.outlet_cells, dtype=np.int64)[:, 0].copy()
            if isinstance(bc.outlet, RatingCurve):
                self.rating_a, self.rating_b, self.rating_z0 = bc.outlet.a, bc.outlet.b, bc.outlet.z0
            else:
                self.outlet_mode = 1
                self.fixed_stage = float(bc.outlet)
        else:
            self.outlet_j = _empty_cells()
        ny, nx = grid.ny, grid.nx
        self.hp = np.empty((ny + 2, nx + 2))
        self.qxp = np.empty((ny + 2, nx + 2))
        self.qyp = np.empty((ny + 2, nx + 2))
        self.zp = np.empty((ny + 2, nx + 2))
        self.dh = np.empty((ny, nx))
        self.dqx = np.empty((ny, nx))
        self.dqy = np.empty((ny, nx))
        self.inflow = bc.inflow if bc is not None else None

    def work(self):
        return self.hp, self.qxp, self.qyp, self.zp, self.dh, self.dqx, self.dqy


def stable_dt(grid: StructuredGrid, state: HydraulicState, cfl: float, dt_max: float = 60.0,
              eps: float = DEFAULT_EPS) -> float:
    """CFL-limited step: cfl * min(dx, dy) / max wet-cell wave speed."""
    if not (0.0 < cfl <= 1.0):
        raise ValueError("cfl must be in (0, 1]")
    s = _kernels.max_wave_speed(state.h, state.qx, state.qy, eps)
    if s <= 0.0:
        return dt_max
    return min(cfl * min(grid.dx, grid.dy) / s, dt_max)


def swe_step(grid: StructuredGrid, state: HydraulicState, bc: BoundaryConditions | None,
             friction: FrictionField, dt: float, eps: float = DEFAULT_EPS) -> HydraulicState:
    """One explicit step of size dt (caller guarantees dt is stable)."""
    if bc is not None:
        bc.validate(grid)
    ka = _KernelArgs(grid, bc, friction)
    new = state.copy()
    rate = 0.0
    if ka.inlet_j.size:
        rate = float(ka.inflow.at(state.t + 0.5 * dt)) / (ka.inlet_j.size * grid.cell_area)
    stage = ka.fixed_stage
    if ka.outlet_j.size and ka.outlet_mode == 0:
        qout = max(0.0, float(np.sum(state.qx[ka.outlet_j, grid.nx - 1])) * grid.dy)
        stage = ka.rating_z0 + ka.rating_a * qout ** ka.rating_b
    _, _, status, bj, bi = _kernels.single_step(
        new.h, new.qx, new.qy, grid.z, ka.kcell, grid.dx, grid.dy, eps, dt,
        ka.inlet_j, ka.inlet_i, rate, ka.outlet_j, stage, *ka.work())
    new.t = state.t + dt
    if status != _kernels.STATUS_OK:
        raise SolverInstabilityError(new.t, (bj, bi))
    return new


def _advance(ka: _KernelArgs, grid, arrays, t, t_target, cfl, dt_max, eps):
    """Drive the kernel from t to t_target, one call per forcing segment."""
    h, qx, qy = arrays
    vol_in = vol_out = 0.0
    n_steps = 0
    inflow = ka.inflow
    knots = inflow.times if inflow is not None else np.empty(0)
    n_in = max(ka.inlet_j.size, 1)
    while t < t_target:
        if inflow is not None:
            nxt = np.searchsorted(knots, t, side="right")
            seg_end = min(knots[nxt], t_target) if nxt < knots.size else t_target
            q0 = float(inflow.at(t)) / n_in
            q1 = float(inflow.at(seg_end)) / n_in
            slope = (q1 - q0) / (seg_end - t) if seg_end > t else 0.0
        else:
            seg_end = t_target
            q0 = slope = 0.0
        t, vi, vo, ns, status, bj, bi, bad_t = _kernels.advance(
            h, qx, qy, grid.z, ka.kcell, grid.dx, grid.dy, eps, cfl, dt_max,
            t, seg_end, ka.inlet_j, ka.inlet_i, q0, slope,
            ka.outlet_j, ka.outlet_mode, ka.rating_a, ka.rating_b, ka.rating_z0,
            ka.fixed_stage, *ka.work())
        vol_in += vi
        vol_out += vo
        n_steps += ns
        if status != _kernels.STATUS_OK:
            raise SolverInstabilityError(bad_t, (bj, bi))
    return t, vol_in, vol_out, n_steps


def simulate(grid: StructuredGrid, state0: HydraulicState, bc: BoundaryConditions | None,
             friction: FrictionField, t_end: float, output_times=None, *,
             cfl: float = 0.45, dt_max: float = 60.0, eps: float = DEFAULT_EPS) -> Trajectory:
    """Run from state0.t to t_end, returning snapshots at the requested times.

    The stepping schedule depends only on the forcing knots and the state,
    never on ``output_times``: interior snapshots are produced by probing
    forward from the preceding forcing knot on a copy of the state, so
    adding output times does not perturb the trajectory.
    """
    if bc is not None:
        bc.validate(grid)
    t0 = state0.t
    if t_end < t0:
        raise ValueError("t_end before the state's time")
    if output_times is None:
        output_times = [t_end]
    output_times = np.asarray(output_times, dtype=float)
    if np.any(np.diff(output_times) < 0):
        raise ValueError("output_times must be sorted")
    if output_times.size and (output_times[0] < t0 or output_times[-1] > t_end):
        raise ValueError("output_times must lie within [state0.t, t_end]")
    if bc is not None and bc.inflow is not None:
        if bc.inflow.times[0] > t0 or bc.inflow.times[-1] < t_end:
            raise ValueError("inflow hydrograph does not cover the simulation window")

    ka = _KernelArgs(grid, bc, friction)
    cur = state0.copy()
    arrays = (cur.h, cur.qx, cur.qy)
    traj = Trajectory(output_times, [])

    # hard landing points: forcing knots and t_end
    if ka.inflow is not None:
        kts = ka.inflow.times
        landings = kts[(kts > t0) & (kts < t_end)].tolist() + [t_end]
    else:
        landings = [t_end]

    t = t0
    oi = 0
    for land in landings + [None]:
        # snapshots at (or probed from) the current landing point
        while oi < output_times.size and (land is None or output_times[oi] < land or
                                          (output_times[oi] == land)):
            t_o = output_times[oi]
            if t_o < t:
                raise ValueError("output_times must be sorted")  # pragma: no cover
            if t_o == t:
                snap = HydraulicState(cur.h.copy(), cur.qx.copy(), cur.qy.copy(), t)
            elif land is not None and t_o < land:
                probe = (cur.h.copy(), cur.qx.copy(), cur.qy.copy())
                _advance(ka, grid, probe, t, t_o, cfl, dt_max, eps)
                snap = HydraulicState(probe[0], probe[1], probe[2], t_o)
            else:
                break  # t_o lands on or beyond this landing point: advance first
            traj.states.append(snap)
            oi += 1
        if land is None:
            break
        t, vi, vo, ns = _advance(ka, grid, arrays, t, land, cfl, dt_max, eps)
        cur.t = t
        traj.vol_in += vi
        traj.vol_out += vo
        traj.n_steps += ns
    while oi < output_times.size:  # trailing snapshots exactly at t_end
        traj.states.append(HydraulicState(cur.h.copy(), cur.qx.copy(), cur.qy.copy(), t))
        oi += 1
    return traj


def simulate_with_corrections(grid: StructuredGrid, state0: HydraulicState,
                              bc: BoundaryConditions | None, friction: FrictionField,
                              t_end: float, output_times, corrections, *,
                              cfl: float = 0.45, dt_max: float = 60.0,
                              eps: float = DEFAULT_EPS) -> Trajectory:
    """Simulate with per-subdomain depth offsets injected at given times.

    ``corrections`` is a list of (time, {subdomain_id: offset}); a snapshot
    requested at a correction time reflects the corrected state.  Injected
    volume is not part of the boundary budget.
    """
    output_times = sorted(float(t) for t in (output_times if output_times is not None else [t_end]))
    corrections = sorted(corrections, key=lambda c: c[0])
    if corrections and (corrections[0][0] <= state0.t or corrections[-1][0] > t_end):
        raise ValueError("correction times must lie in (state0.t, t_end]")
    marks = [c[0] for c in corrections]
    seg_ends = sorted(set(marks + [t_end]))
    total = Trajectory(np.array(output_times), [])
    state = state0
    for b in seg_ends:
        outs = [t for t in output_times if state.t <= t <= b]
        traj = simulate(grid, state, bc, friction, b, sorted(set(outs + [b])),
                        cfl=cfl, dt_max=dt_max, eps=eps)
        state = traj.state_at(b)
        for t_c, offsets in corrections:
            if t_c == b:
                state = apply_state_correction(state, grid, offsets, eps)
        for t in outs:
            total.states.append(state.copy() if t == b else traj.state_at(t))
        total.vol_in += traj.vol_in
        total.vol_out += traj.vol_out
        total.n_steps += traj.n_steps
        output_times = [t for t in output_times if t > b]
    return total


def apply_state_correction(state: HydraulicState, grid: StructuredGrid, delta_h: dict,
                           eps: float = DEFAULT_EPS) -> HydraulicState:
    """Add a per-subdomain depth offset, clipped at zero; dries zero momentum."""
    known = set(int(s) for s in grid.subdomain_ids())
    new = state.copy()
    for sid, off in delta_h.items():
        if int(sid) not in known:
            raise ValueError(f"unknown subdomain id {sid}")
        if not np.isfinite(off):
            raise ValueError(f"non-finite offset for subdomain {sid}")
        m = grid.subdomain_id == int(sid)
        new.h[m] = np.maximum(0.0, new.h[m] + off)
    dried = (new.h < eps) & (state.h >= eps)
    new.qx[dried] = 0.0
    new.qy[dried] = 0.0
    return new


# ---------------------------------------------------------------------------
# file formats

def save_grid(path, grid: StructuredGrid) -> None:
    with open(path, "w") as f:
        f.write(f"{grid.nx},{grid.ny},{ffmt(grid.dx)},{ffmt(grid.dy)}\n")
        f.write("i,j,z,friction_zone,subdomain_id\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                f.write(f"{i},{j},{ffmt(grid.z[j, i])},{grid.friction_zone[j, i]},{grid.subdomain_id[j, i]}\n")


def load_grid(path) -> StructuredGrid:
    with open(path) as f:
        nx, ny, dx, dy = f.readline().strip().split(",")
        nx, ny, dx, dy = int(nx), int(ny), float(dx), float(dy)
        header = f.readline().strip()
        if header != "i,j,z,friction_zone,subdomain_id":
            raise ValueError(f"unexpected grid header {header!r}")
        z = np.zeros((ny, nx))
        zone = np.zeros((ny, nx), dtype=np.int64)
        sub = np.full((ny, nx), -1, dtype=np.int64)
        for line in f:
            line = line.strip()
            if not line:
                continue
            i, j, zv, fz, sd = line.split(",")
            z[int(j), int(i)] = float(zv)
            zone[int(j), int(i)] = int(fz)
            sub[int(j), int(i)] = int(sd)
    return StructuredGrid(nx, ny, dx, dy, z, zone, sub)


def save_state(path, state: HydraulicState) -> None:
    with open(path, "w") as f:
        f.write(f"time,{ffmt(state.t)}\n")
        f.write("i,j,h,qx,qy\n")
        ny, nx = state.h.shape
        for j in range(ny):
            for i in range(nx):
                f.write(f"{i},{j},{ffmt(state.h[j, i])},{ffmt(state.qx[j, i])},{ffmt(state.qy[j, i])}\n")


def load_state(path) -> HydraulicState:
    with open(path) as f:
        first = f.readline().strip().split(",")
        if first[0] != "time":
            raise ValueError("state file must start with a time manifest line")
        t = float(first[1])
        f.readline()  # column header
        rows = [line.strip().split(",") for line in f if line.strip()]
    nx = max(int(r[0]) for r in rows) + 1
    ny = max(int(r[1]) for r in rows) + 1
    h = np.zeros((ny, nx))
    qx = np.zeros((ny, nx))
    qy = np.zeros((ny, nx))
    for i, j, hv, qxv, qyv in rows:
        h[int(j), int(i)] = float(hv)
        qx[int(j), int(i)] = float(qxv)
        qy[int(j), int(i)] = float(qyv)
    return HydraulicState(h, qx, qy, t)

"""Matrix-based Muskingum routing of discharge through a river network.

A network is a forest of directed trees toward outlets.  Each time step
solves the linear system

    (I - C1*N) Q(t+dt) = C1*Qe(t+dt) + C2*(N Q(t) + Qe(t)) + C3*Q(t)

where N is the reach connectivity matrix (N[i, j] = 1 iff reach j
discharges into reach i) and C1, C2, C3 are per-reach diagonal Muskingum
coefficient matrices.  Under topological order the system is strictly
lower triangular, so it is solved exactly by forward substitution.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from ._util import ffmt

__all__ = [
    "RiverNetwork",
    "MuskingumParams",
    "LateralInflowSeries",
    "muskingum_coefficients",
    "route_step",
    "route_hydrograph",
    "validate_routing_config",
    "load_network",
    "save_network",
    "load_inflow_csv",
    "save_discharge_csv",
]


@dataclass(frozen=True)
class RiverNetwork:
    """Reach connectivity: ids, downstream links and a topological order."""

    reach_ids: tuple[str, ...]
    downstream: tuple[int, ...]  # index of downstream reach, -1 for outlets

    _topo: tuple[int, ...] = field(init=False, repr=False)
    _upstream: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.reach_ids)
        if len(self.downstream) != n:
            raise ValueError("downstream must have one entry per reach")
        if len(set(self.reach_ids)) != n:
            raise ValueError("duplicate reach ids")
        ups: list[list[int]] = [[] for _ in range(n)]
        for j, d in enumerate(self.downstream):
            if d == j or not (-1 <= d < n):
                raise ValueError(f"invalid downstream index {d} for reach {j}")
            if d >= 0:
                ups[d].append(j)
        # Kahn's algorithm from the headwaters; also detects cycles.
        indeg = [len(u) for u in ups]
        stack = [i for i in range(n) if indeg[i] == 0]
        order: list[int] = []
        while stack:
            i = stack.pop()
            order.append(i)
            d = self.downstream[i]
            if d >= 0:
                indeg[d] -= 1
                if indeg[d] == 0:
                    stack.append(d)
        if len(order) != n:
            raise ValueError("reach graph contains a cycle")
        object.__setattr__(self, "_topo", tuple(order))
        object.__setattr__(self, "_upstream", tuple(tuple(u) for u in ups))

    @property
    def n_reaches(self) -> int:
        return len(self.reach_ids)

    @property
    def topological_order(self) -> tuple[int, ...]:
        return self._topo

    def upstream_of(self, i: int) -> tuple[int, ...]:
        return self._upstream[i]

    @property
    def outlets(self) -> tuple[int, ...]:
        return tuple(i for i, d in enumerate(self.downstream) if d < 0)

    def connectivity_matrix(self) -> np.ndarray:
        """Dense 0/1 matrix N with N[i, j] = 1 iff reach j flows into reach i."""
        n = self.n_reaches
        N = np.zeros((n, n))
        for j, d in enumerate(self.downstream):
            if d >= 0:
                N[d, j] = 1.0
        return N

    def index_of(self, reach_id: str) -> int:
        return self.reach_ids.index(reach_id)


@dataclass(frozen=True)
class MuskingumParams:
    """Per-reach storage constant k (s) and weighting factor x."""

    k: np.ndarray
    x: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=float)
        x = np.asarray(self.x, dtype=float)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "x", x)
        if k.shape != x.shape:
            raise ValueError("k and x must have the same shape")
        if np.any(k <= 0):
            raise ValueError("k must be positive")
        if np.any((x < 0) | (x > 0.5)):
            raise ValueError("x must be in [0, 0.5]")


@dataclass(frozen=True)
class LateralInflowSeries:
    """Uniformly spaced lateral inflow per reach, values[t, reach] in m3/s."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.ndim != 1 or v.ndim != 2 or v.shape[0] != t.size:
            raise ValueError("times must be 1-D and values shaped (n_times, n_reaches)")
        if t.size >= 2:
            dt = np.diff(t)
            if not np.allclose(dt, dt[0], rtol=1e-9, atol=1e-6):
                raise ValueError("times must be uniformly spaced")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise ValueError("inflow values must be finite and non-negative")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


def muskingum_coefficients(k, x, dt):
    """Return (C1, C2, C3) for storage constant k, weight x and step dt.

    D = k(1-x) + dt/2;  C1 = (dt/2 - kx)/D,  C2 = (dt/2 + kx)/D,
    C3 = (k(1-x) - dt/2)/D.  The three always sum to 1.
    """
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    if np.any((x < 0) | (x > 0.5)):
        raise ValueError("x must be in [0, 0.5]")
    if dt <= 0:
        raise ValueError("dt must be positive")
    d = k * (1.0 - x) + 0.5 * dt
    c1 = (0.5 * dt - k * x) / d
    c2 = (0.5 * dt + k * x) / d
    c3 = (k * (1.0 - x) - 0.5 * dt) / d
    return c1, c2, c3


def validate_routing_config(params: MuskingumParams, dt: float) -> list[str]:
    """Report reaches whose dt falls outside the usual window [2kx, k].

    Outside that window C1 or C3 go negative.  The scheme stays mass
    conservative, so this is a warning, not an error.
    """
    msgs = []
    for i, (k, x) in enumerate(zip(params.k, params.x)):
        lo, hi = 2.0 * k * x, k
        if dt < lo or dt > hi:
            msgs.append(
                f"reach {i}: dt={dt:g} outside [2kx, k]=[{lo:g}, {hi:g}],"
                " C1 or C3 is negative"
            )
    return msgs


def _check_vector(name: str, v, n: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (n,):
        raise ValueError(f"{name} must have shape ({n},), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def route_step(network: RiverNetwork, params: MuskingumParams, Q_t, Qe_t, Qe_next, dt: float) -> np.ndarray:
    """Advance discharge one step by forward substitution in topological order."""
    n = network.n_reaches
    Q_t = _check_vector("Q_t", Q_t, n)
    Qe_t = _check_vector("Qe_t", Qe_t, n)
    Qe_next = _check_vector("Qe_next", Qe_next, n)
    c1, c2, c3 = muskingum_coefficients(params.k, params.x, dt)
    if np.any(c1 < 0) or np.any(c3 < 0):
        warnings.warn("negative Muskingum coefficient (dt outside [2kx, k])", stacklevel=2)
    Q_next = np.empty(n)
    for i in network.topological_order:
        up = network.upstream_of(i)
        in_t = Qe_t[i]
        in_next = Qe_next[i]
        for j in up:
            in_t += Q_t[j]
            in_next += Q_next[j]
        Q_next[i] = c1[i] * in_next + c2[i] * in_t + c3[i] * Q_t[i]
    return Q_next


def route_hydrograph(network: RiverNetwork, params: MuskingumParams, inflow: LateralInflowSeries, Q0) -> np.ndarray:
    """Route a lateral inflow series; returns discharge[t, reach].

    Row 0 is the initial discharge Q0; row t solves the step from t-1 to t.
    """
    if inflow.times.size == 0:
        raise ValueError("inflow series is empty")
    n = network.n_reaches
    Q0 = _check_vector("Q0", Q0, n)
    nt = inflow.times.size
    out = np.empty((nt, n))
    out[0] = Q0
    dt = inflow.dt if nt >= 2 else 0.0
    for t in range(1, nt):
        out[t] = route_step(network, params, out[t - 1], inflow.values[t - 1], inflow.values[t], dt)
    return out


# ---------------------------------------------------------------------------
# file formats
#
# Network file: one line per reach, "reach_id,downstream_id(k_seconds),x"
# with "-" as the downstream id of outlets, e.g.
#     R1,R2(3600),0.1
#     R2,-(3600),0.1
# Lateral inflow / discharge CSV: first column epoch seconds, then one
# column per reach id.

def save_network(path, network: RiverNetwork, params: MuskingumParams) -> None:
    with open(path, "w") as f:
        for i, rid in enumerate(network.reach_ids):
            d = network.downstream[i]
            did = network.reach_ids[d] if d >= 0 else "-"
            f.write(f"{rid},{did}({ffmt(params.k[i])}),{ffmt(params.x[i])}\n")


def load_network(path) -> tuple[RiverNetwork, MuskingumParams]:
    ids: list[str] = []
    down_ids: list[str] = []
    ks: list[float] = []
    xs: list[float] = []
    with open(path) as f:
        for ln, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{ln}: expected 3 comma-separated fields")
            mid = parts[1]
            if "(" not in mid or not mid.endswith(")"):
                raise ValueError(f"{path}:{ln}: expected downstream_id(k_seconds)")
            did, kstr = mid[:-1].split("(", 1)
            ids.append(parts[0])
            down_ids.append(did)
            ks.append(float(kstr))
            xs.append(float(parts[2]))
    index = {rid: i for i, rid in enumerate(ids)}
    down = []
    for ln, did in enumerate(down_ids):
        if did == "-":
            down.append(-1)
        elif did in index:
            down.append(index[did])
        else:
            raise ValueError(f"unknown downstream reach id {did!r}")
    net = RiverNetwork(tuple(ids), tuple(down))
    return net, MuskingumParams(np.array(ks), np.array(xs))


def save_discharge_csv(path, network: RiverNetwork, times, values) -> None:
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    with open(path, "w") as f:
        f.write("time," + ",".join(network.reach_ids) + "\n")
        for t, row in zip(times, values):
            f.write(ffmt(t) + "," + ",".join(ffmt(v) for v in row) + "\n")


def load_inflow_csv(path, network: RiverNetwork) -> LateralInflowSeries:
    with open(path) as f:
        header = f.readline().strip().split(",")
        if header[0] != "time":
            raise ValueError("first column must be 'time'")
        cols = [network.index_of(rid) for rid in header[1:]]
        times, rows = [], []
        for line in f:
            line = line.strip()
            if not line:
                continue
            vals = [float(v) for v in line.split(",")]
            times.append(vals[0])
            row = np.zeros(network.n_reaches)
            row[cols] = vals[1:]
            rows.append(row)
    return LateralInflowSeries(np.array(times), np.array(rows))

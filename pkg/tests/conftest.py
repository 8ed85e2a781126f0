"""Shared fixtures: a tiny channel+floodplain twin setup for DA tests."""

import numpy as np
import pytest

from floodchain.enkf import ControlBounds, ControlSpreads, ControlVector, ModelRuntime
from floodchain.hydraulics import (
    FrictionField,
    Hydrograph,
    HydraulicState,
    RatingCurve,
    StructuredGrid,
)
from floodchain.observing import FloodplainSubdomain, GaugeStation


class TinyScenario:
    """30x8 sloped channel (rows 3-4) with a cross-sloped floodplain."""

    def __init__(self):
        nx, ny, dx, dy = 30, 8, 25.0, 25.0
        slope = 0.001
        bank = 0.8
        x = np.arange(nx) * dx
        zch = 2.0 - slope * x
        z = np.empty((ny, nx))
        ch_rows = (3, 4)
        for j in range(ny):
            if j in ch_rows:
                z[j] = zch
            else:
                dist = (min(abs(j - 3), abs(j - 4)) - 1) * dy
                z[j] = zch + bank + 0.004 * dist + 0.05 * np.sin(2 * np.pi * 2 * x / x[-1] + j)
        zone = np.ones((ny, nx), dtype=np.int64)
        sub = np.full((ny, nx), -1, dtype=np.int64)
        for j in ch_rows:
            zone[j] = 0
        fp = zone == 1
        sub[fp & (np.arange(nx)[None, :] < nx // 2)] = 0
        sub[fp & (np.arange(nx)[None, :] >= nx // 2)] = 1
        self.grid = StructuredGrid(nx, ny, dx, dy, z, zone, sub)
        self.ch_rows = ch_rows
        self.slope = slope
        self.width = len(ch_rows) * dy
        self.eps = 0.01
        self.true_friction = np.array([30.0, 12.0])
        self.stations = (GaugeStation("up", 5, 3, 0.05),
                         GaugeStation("mid", 15, 3, 0.05),
                         GaugeStation("down", 25, 4, 0.05))
        self.subdomains = tuple(FloodplainSubdomain.from_grid(self.grid, s, 0.05) for s in (0, 1))
        k_ch = self.true_friction[0]
        a = (1.0 / (k_ch * self.width * np.sqrt(slope))) ** 0.6
        self.outlet = RatingCurve(a, 0.6, float(zch[-1]))
        self.inlet_cells = np.array([[j, 0] for j in ch_rows])
        self.outlet_cells = np.array([[j, nx - 1] for j in ch_rows])
        self.bounds = ControlBounds(k_min=5.0, k_max=60.0, mu_min=0.2, mu_max=5.0, dh_max=0.5)
        # 12-hour flood wave, hourly knots
        t = np.arange(0.0, 13 * 3600.0, 3600.0)
        tp = 5 * 3600.0
        shape = np.maximum(0.0, (t / tp) * np.exp(1 - t / tp)) ** 4
        self.forcing = Hydrograph(t, 8.0 + (40.0 - 8.0) * shape)
        self.t0, self.t_end = 0.0, 12 * 3600.0

    def runtime(self, friction_values=None, cfl=0.45):
        fric = FrictionField((0, 1), self.true_friction if friction_values is None
                             else np.asarray(friction_values, float))
        return ModelRuntime(self.grid, fric, self.inlet_cells, self.outlet_cells,
                            self.outlet, self.stations, self.subdomains, self.eps, cfl=cfl)

    def normal_depth(self, q, k=None):
        k = self.true_friction[0] if k is None else k
        return (q / (k * self.width * np.sqrt(self.slope))) ** 0.6

    def init_state(self, control: ControlVector) -> HydraulicState:
        """Baseflow equilibrium in the channel for the member's friction."""
        q0 = float(self.forcing.values[0]) * getattr(control, "mu", 1.0)
        h = np.zeros((self.grid.ny, self.grid.nx))
        qx = np.zeros_like(h)
        hn = self.normal_depth(q0, control.friction[0])
        for j in self.ch_rows:
            h[j] = hn
            qx[j] = q0 / self.width
        return HydraulicState(h, qx, np.zeros_like(h), self.t0)

    def true_control(self, n_subs=2):
        return ControlVector(self.true_friction.copy(), 1.0, np.zeros(n_subs))

    def prior_control(self, n_subs=2):
        return ControlVector(np.array([22.0, 18.0]), 1.0, np.zeros(n_subs))

    def spreads(self):
        return ControlSpreads(friction=4.0, mu=0.25, delta_h=0.08)

    def truth_trajectory(self, output_times, rain_pulses=None):
        """Reference run with true controls; optional (time, depth) pulses
        added uniformly over all floodplain subdomains."""
        from floodchain.hydraulics import BoundaryConditions, simulate_with_corrections

        state = self.init_state(self.true_control())
        fric = FrictionField((0, 1), self.true_friction)
        bc = BoundaryConditions(inflow=self.forcing, inlet_cells=self.inlet_cells,
                                outlet_cells=self.outlet_cells, outlet=self.outlet)
        corrections = [(t, {sd.id: depth for sd in self.subdomains})
                       for t, depth in (rain_pulses or [])]
        return simulate_with_corrections(self.grid, state, bc, fric, self.t_end,
                                         output_times, corrections, eps=self.eps)


@pytest.fixture(scope="session")
def tiny():
    return TinyScenario()

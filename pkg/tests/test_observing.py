import numpy as np
import pytest

from floodchain.hydraulics import HydraulicState, StructuredGrid, Trajectory, apply_state_correction
from floodchain.observing import (
    FloodplainSubdomain,
    GaugeStation,
    ObservationSet,
    WseObs,
    WsrObs,
    extract_wse,
    load_stations,
    load_subdomains,
    save_stations,
    save_subdomains,
    save_wet_dry_map,
    synthesize_observations,
    validate_subdomains,
    wet_dry_map,
    wsr,
)

EPS = 1e-4


@pytest.fixture
def grid():
    ny, nx = 4, 10
    sub = np.full((ny, nx), -1, dtype=np.int64)
    sub[:, :5] = 0
    sub[:, 5:] = 1
    return StructuredGrid(nx, ny, 10.0, 10.0, z=np.full((ny, nx), 10.0),
                          friction_zone=np.zeros((ny, nx), dtype=np.int64),
                          subdomain_id=sub)


def state_with_depth(grid, h):
    hh = np.full((grid.ny, grid.nx), float(h))
    return HydraulicState(hh, np.zeros_like(hh), np.zeros_like(hh), 0.0)


class TestExtractWse:
    def test_wet_cell(self, grid):
        st = GaugeStation("mid", 3, 1, 0.05)
        state = state_with_depth(grid, 2.5)
        assert extract_wse(state, grid, st) == (12.5, False)

    def test_dry_cell_reports_bed(self, grid):
        st = GaugeStation("mid", 3, 1, 0.05)
        state = state_with_depth(grid, 0.0)
        assert extract_wse(state, grid, st) == (10.0, True)

    def test_station_outside_grid(self, grid):
        st = GaugeStation("bad", 99, 0, 0.05)
        with pytest.raises(ValueError, match="outside"):
            extract_wse(state_with_depth(grid, 1.0), grid, st)

    def test_composition_with_state_correction(self, grid):
        st = GaugeStation("mid", 2, 1, 0.05)  # inside subdomain 0
        state = state_with_depth(grid, 1.0)
        corrected = apply_state_correction(state, grid, {0: 0.3})
        before, _ = extract_wse(state, grid, st)
        after, _ = extract_wse(corrected, grid, st)
        assert after - before == pytest.approx(0.3, abs=1e-12)


class TestWetDryMap:
    def test_all_dry(self, grid):
        assert not wet_dry_map(state_with_depth(grid, 0.0), EPS).any()

    def test_all_wet(self, grid):
        assert wet_dry_map(state_with_depth(grid, 1.0), EPS).all()

    def test_threshold_tie_is_wet(self, grid):
        assert wet_dry_map(state_with_depth(grid, EPS), EPS).all()

    def test_negative_threshold_rejected(self, grid):
        with pytest.raises(ValueError):
            wet_dry_map(state_with_depth(grid, 1.0), -0.1)


class TestWsr:
    def test_extremes_and_counting(self, grid):
        sd = FloodplainSubdomain.from_grid(grid, 0, 0.05)
        assert wsr(state_with_depth(grid, 0.0), grid, sd, EPS) == 0.0
        assert wsr(state_with_depth(grid, 1.0), grid, sd, EPS) == 1.0
        state = state_with_depth(grid, 0.0)
        state.h[:2, :5] = 1.0  # half of subdomain 0
        assert wsr(state, grid, sd, EPS) == 0.5

    def test_monotone_in_depth(self, grid):
        rng = np.random.default_rng(0)
        sd = FloodplainSubdomain.from_grid(grid, 1, 0.05)
        state = state_with_depth(grid, 0.0)
        state.h[:] = rng.uniform(0, 2e-4, state.h.shape)
        low = wsr(state, grid, sd, EPS)
        state.h += 1e-4
        assert wsr(state, grid, sd, EPS) >= low

    def test_validate_subdomains(self, grid):
        a = FloodplainSubdomain.from_grid(grid, 0, 0.05)
        b = FloodplainSubdomain.from_grid(grid, 1, 0.05)
        validate_subdomains([a, b], grid)
        with pytest.raises(ValueError, match="overlap"):
            validate_subdomains([a, a], grid)
        bad = FloodplainSubdomain(3, np.array([[99, 0]]), 0.05)
        with pytest.raises(ValueError, match="outside"):
            validate_subdomains([bad], grid)


class TestSynthesize:
    def _truth(self, grid):
        s0 = state_with_depth(grid, 1.0)
        s1 = state_with_depth(grid, 2.0)
        s1.t = 3600.0
        return Trajectory(np.array([0.0, 3600.0]), [s0, s1])

    def _stations(self):
        return [GaugeStation("up", 1, 1, 0.05), GaugeStation("down", 8, 2, 0.05)]

    def test_noiseless_twin_equals_truth(self, grid):
        subs = [FloodplainSubdomain.from_grid(grid, 0, 0.05)]
        obs = synthesize_observations(self._truth(grid), grid, self._stations(), subs,
                                      [0.0, 3600.0], [3600.0], 0.0, 0.0, seed=1)
        assert len(obs.wse) == 4 and len(obs.wsr) == 1
        assert {r.value for r in obs.wse if r.time == 0.0} == {11.0}
        assert obs.wsr[0].ratio == 1.0

    def test_same_seed_identical(self, grid):
        subs = [FloodplainSubdomain.from_grid(grid, 1, 0.05)]
        args = (self._truth(grid), grid, self._stations(), subs, [3600.0], [3600.0], 0.05, 0.05)
        a = synthesize_observations(*args, seed=7)
        b = synthesize_observations(*args, seed=7)
        assert a.wse == b.wse and a.wsr == b.wsr
        c = synthesize_observations(*args, seed=8)
        assert a.wse != c.wse

    def test_wsr_clipped_to_unit(self, grid):
        subs = [FloodplainSubdomain.from_grid(grid, 0, 0.05)]
        obs = synthesize_observations(self._truth(grid), grid, [], subs,
                                      [], [3600.0], 0.0, 10.0, seed=3)
        assert 0.0 <= obs.wsr[0].ratio <= 1.0

    def test_missing_time_rejected(self, grid):
        with pytest.raises(KeyError):
            synthesize_observations(self._truth(grid), grid, self._stations(), [],
                                    [1800.0], [], 0.0, 0.0, seed=1)


class TestFiles:
    def test_observation_round_trip(self, tmp_path):
        obs = ObservationSet(
            [WseObs(0.0, "up", 11.123456789012345, 0.05, False),
             WseObs(3600.0, "down", 10.0, 0.05, True)],
            [WsrObs(3600.0, 2, 1.0 / 3.0, 0.05)],
        )
        p = tmp_path / "obs.csv"
        obs.save(p)
        obs2 = ObservationSet.load(p)
        assert obs2.wse == obs.wse
        assert obs2.wsr == obs.wsr

    def test_window_selection(self):
        obs = ObservationSet([WseObs(float(t), "s", 1.0, 0.1) for t in (0, 3600, 7200)],
                             [WsrObs(3600.0, 0, 0.5, 0.1)])
        assert [r.time for r in obs.wse_in(0.0, 3600.0)] == [3600.0]
        assert len(obs.wsr_in(0.0, 3600.0)) == 1
        assert obs.wsr_in(3600.0, 7200.0) == []

    def test_stations_round_trip(self, tmp_path):
        sts = [GaugeStation("tonneins_like", 5, 2, 0.05)]
        p = tmp_path / "stations.csv"
        save_stations(p, sts)
        assert load_stations(p) == sts

    def test_subdomains_round_trip(self, tmp_path, grid):
        subs = [FloodplainSubdomain.from_grid(grid, 0, 0.05),
                FloodplainSubdomain.from_grid(grid, 1, 0.07)]
        p = tmp_path / "subs.csv"
        save_subdomains(p, subs)
        loaded = load_subdomains(p)
        assert [s.id for s in loaded] == [0, 1]
        assert np.array_equal(loaded[0].cells, subs[0].cells)
        assert loaded[1].sigma_wsr == 0.07

    def test_wet_dry_map_export(self, tmp_path):
        wet = np.array([[True, False], [False, True]])
        pgm = tmp_path / "map.pgm"
        save_wet_dry_map(pgm, wet, "pgm")
        text = pgm.read_text().splitlines()
        assert text[0] == "P2" and text[1] == "2 2" and text[2] == "1"
        assert text[3] == "1 0" and text[4] == "0 1"
        csvp = tmp_path / "map.csv"
        save_wet_dry_map(csvp, wet, "csv")
        assert csvp.read_text() == "1,0\n0,1\n"
        with pytest.raises(ValueError):
            save_wet_dry_map(tmp_path / "x", wet, "tiff")

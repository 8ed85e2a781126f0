"""1D and 2D skill assessment: station RMSE, contingency maps and CSI."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._util import ffmt

__all__ = ["ContingencyMap", "MetricsReport", "rmse", "contingency", "csi",
           "summarize", "save_contingency_csv", "load_contingency_csv"]

HIT, MISS, FALSE_ALARM, CORRECT_NEG, EXCLUDED = 0, 1, 2, 3, 4
_LABEL_CHARS = np.array(["H", "M", "F", "N", "-"])


def rmse(sim, ref) -> float:
    """Root-mean-square difference between two aligned series."""
    sim = np.asarray(sim, dtype=float)
    ref = np.asarray(ref, dtype=float)
    if sim.shape != ref.shape:
        raise ValueError(f"length mismatch: {sim.shape} vs {ref.shape}")
    if sim.size == 0:
        raise ValueError("empty series")
    return float(np.sqrt(np.mean((sim - ref) ** 2)))


@dataclass(frozen=True)
class ContingencyMap:
    """Per-cell classification of a simulated flood extent against a reference."""

    labels: np.ndarray  # codes HIT..EXCLUDED, shape of the input maps

    @property
    def hits(self) -> int:
        return int(np.count_nonzero(self.labels == HIT))

    @property
    def misses(self) -> int:
        return int(np.count_nonzero(self.labels == MISS))

    @property
    def false_alarms(self) -> int:
        return int(np.count_nonzero(self.labels == FALSE_ALARM))

    @property
    def correct_negatives(self) -> int:
        return int(np.count_nonzero(self.labels == CORRECT_NEG))

    @property
    def counts(self) -> dict[str, int]:
        return {"hits": self.hits, "misses": self.misses,
                "false_alarms": self.false_alarms, "correct_negatives": self.correct_negatives}


def contingency(sim_wet, ref_wet, mask=None) -> ContingencyMap:
    """Classify each cell: hit (both wet), miss (ref only), false alarm (sim only).

    ``mask`` (optional, bool) restricts the evaluation, e.g. to floodplain
    cells; excluded cells are labelled '-' and dropped from the counts.
    """
    sim_wet = np.asarray(sim_wet, dtype=bool)
    ref_wet = np.asarray(ref_wet, dtype=bool)
    if sim_wet.shape != ref_wet.shape:
        raise ValueError(f"dimension mismatch: {sim_wet.shape} vs {ref_wet.shape}")
    labels = np.full(sim_wet.shape, CORRECT_NEG, dtype=np.uint8)
    labels[sim_wet & ref_wet] = HIT
    labels[~sim_wet & ref_wet] = MISS
    labels[sim_wet & ~ref_wet] = FALSE_ALARM
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != sim_wet.shape:
            raise ValueError("mask shape mismatch")
        labels[~mask] = EXCLUDED
    return ContingencyMap(labels)


def csi(cmap: ContingencyMap) -> float | None:
    """Critical Success Index in percent; None when no flood anywhere."""
    denom = cmap.hits + cmap.misses + cmap.false_alarms
    if denom == 0:
        return None
    return 100.0 * cmap.hits / denom


def save_contingency_csv(path, cmap: ContingencyMap) -> None:
    with open(path, "w") as f:
        for row in _LABEL_CHARS[cmap.labels]:
            f.write(",".join(row) + "\n")


def load_contingency_csv(path) -> ContingencyMap:
    rows = []
    lookup = {c: i for i, c in enumerate(_LABEL_CHARS)}
    with open(path) as f:
        for line in f:
            line = line.strip()
            if line:
                rows.append([lookup[c] for c in line.split(",")])
    return ContingencyMap(np.array(rows, dtype=np.uint8))


@dataclass(frozen=True)
class MetricsReport:
    """Experiment x metric table: per-station RMSE and per-date CSI."""

    experiments: tuple[str, ...]
    stations: tuple[str, ...]
    rmse_m: np.ndarray        # (n_exp, n_stations)
    dates: tuple[str, ...]
    csi_pct: np.ndarray       # (n_exp, n_dates), NaN for not-applicable

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            cols = [f"rmse_{s}" for s in self.stations] + [f"csi_{d}" for d in self.dates]
            f.write("experiment," + ",".join(cols) + "\n")
            for i, e in enumerate(self.experiments):
                vals = [ffmt(v) for v in self.rmse_m[i]]
                vals += ["n/a" if np.isnan(v) else ffmt(v) for v in self.csi_pct[i]]
                f.write(e + "," + ",".join(vals) + "\n")

    def to_text(self) -> str:
        head = ["Exp.".ljust(8)]
        head += [f"RMSE[m] {s}".rjust(16) for s in self.stations]
        head += [f"CSI[%] {d}".rjust(16) for d in self.dates]
        lines = ["".join(head)]
        for i, e in enumerate(self.experiments):
            row = [e.ljust(8)]
            row += [f"{v:16.3f}" for v in self.rmse_m[i]]
            row += ["             n/a" if np.isnan(v) else f"{v:16.2f}" for v in self.csi_pct[i]]
            lines.append("".join(row))
        return "\n".join(lines) + "\n"


def summarize(results: dict[str, dict]) -> MetricsReport:
    """Build the experiment table from per-experiment evaluation dicts.

    Each value holds 'rmse': {station: value} and 'csi': {date: value-or-None}.
    All experiments must be evaluated on identical station and date sets.
    """
    if not results:
        raise ValueError("no experiment results")
    exps = tuple(results.keys())
    first = results[exps[0]]
    stations = tuple(first["rmse"].keys())
    dates = tuple(first["csi"].keys())
    for e in exps:
        if tuple(results[e]["rmse"].keys()) != stations or tuple(results[e]["csi"].keys()) != dates:
            raise ValueError(f"experiment {e} evaluated on a different observation set")
    r = np.array([[results[e]["rmse"][s] for s in stations] for e in exps])
    c = np.array([[np.nan if results[e]["csi"][d] is None else results[e]["csi"][d]
                   for d in dates] for e in exps])
    return MetricsReport(exps, stations, r, dates, c)

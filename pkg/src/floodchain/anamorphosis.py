"""Empirical Gaussian anamorphosis (normal-score transform).

Maps a sample of a bounded, possibly very non-Gaussian variable (here:
wet surface ratios) onto standard normal scores through its empirical
distribution.  The transform is fitted on an ensemble's values and then
applied both to the ensemble and to the matching observation, so a
Kalman analysis can operate on approximately Gaussian quantities.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._util import ffmt

__all__ = ["AnamorphosisMap", "fit", "forward", "inverse", "saturation_fraction", "dump_knots_csv"]


@dataclass(frozen=True)
class AnamorphosisMap:
    """Piecewise-linear normal-score map.

    ``values`` and ``scores`` are the knots: sorted distinct sample values
    and their plotting-position Gaussian scores.  Duplicated sample values
    are collapsed into a single knot carrying the mean of their scores.
    """

    values: np.ndarray
    scores: np.ndarray
    score_bound: float = 4.0
    clip_range: tuple[float, float] | None = None  # physical output range (WSR maps)
    degenerate: bool = False

    @property
    def n_knots(self) -> int:
        return self.values.size


def fit(samples, *, score_bound: float = 4.0, clip_range=None) -> AnamorphosisMap:
    """Fit the empirical transform on a sample of m >= 2 raw values.

    Plotting positions (i - 0.5)/m keep all scores finite.  With fewer
    than two distinct values the map is flagged degenerate and behaves
    as the identity (with a warning at fit time).
    """
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size < 2:
        raise ValueError("need at least 2 samples to fit an anamorphosis")
    if not np.all(np.isfinite(s)):
        raise ValueError("samples must be finite")
    m = s.size
    p = (np.arange(m) + 0.5) / m
    raw_scores = norm.ppf(p)
    vals, start = np.unique(s, return_index=True)
    if vals.size < 2:
        warnings.warn("degenerate anamorphosis (no spread); using identity", stacklevel=2)
        return AnamorphosisMap(vals, np.zeros_like(vals), score_bound, clip_range, degenerate=True)
    # mean score over each run of duplicates
    bounds = np.append(start, m)
    scores = np.array([raw_scores[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    return AnamorphosisMap(vals, scores, score_bound, clip_range)


def forward(amap: AnamorphosisMap, value):
    """Raw value -> Gaussian score (piecewise linear, clamped linear tails)."""
    v = np.asarray(value, dtype=float)
    if amap.degenerate:
        out = v.copy()
    else:
        x, s = amap.values, amap.scores
        out = np.interp(v, x, s)
        lo_slope = (s[1] - s[0]) / (x[1] - x[0])
        hi_slope = (s[-1] - s[-2]) / (x[-1] - x[-2])
        out = np.where(v < x[0], s[0] + (v - x[0]) * lo_slope, out)
        out = np.where(v > x[-1], s[-1] + (v - x[-1]) * hi_slope, out)
        out = np.clip(out, -amap.score_bound, amap.score_bound)
    return float(out) if np.isscalar(value) else out


def inverse(amap: AnamorphosisMap, score):
    """Gaussian score -> raw value; exact inverse of ``forward`` on the knot range."""
    z = np.asarray(score, dtype=float)
    if amap.degenerate:
        out = z.copy()
    else:
        x, s = amap.values, amap.scores
        out = np.interp(z, s, x)
        lo_slope = (x[1] - x[0]) / (s[1] - s[0])
        hi_slope = (x[-1] - x[-2]) / (s[-1] - s[-2])
        out = np.where(z < s[0], x[0] + (z - s[0]) * lo_slope, out)
        out = np.where(z > s[-1], x[-1] + (z - s[-1]) * hi_slope, out)
    if amap.clip_range is not None:
        out = np.clip(out, *amap.clip_range)
    return float(out) if np.isscalar(score) else out


def saturation_fraction(samples, bounds=(0.0, 1.0)) -> float:
    """Fraction of samples sitting exactly on a physical bound."""
    s = np.asarray(samples, dtype=float)
    return float(np.mean((s == bounds[0]) | (s == bounds[1])))


def dump_knots_csv(path, maps: dict[str, AnamorphosisMap]) -> None:
    """Write fitted knots per labelled map for offline audit."""
    with open(path, "w") as f:
        f.write("label,knot,value,score,degenerate\n")
        for label, amap in maps.items():
            for i, (v, s) in enumerate(zip(amap.values, amap.scores)):
                f.write(f"{label},{i},{ffmt(v)},{ffmt(s)},{int(amap.degenerate)}\n")

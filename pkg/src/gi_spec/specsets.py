"""Spectral sets as unions of axis intervals, plus the off-axis region bound."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .model import (PlanetModel, boundary_grid, interior_grid, natural_axes,
                    sample_background, _boundary_normals, _frame)
from .symbol import beta_pm_arrays

SCHEMA = "gi-spec/spectrum-set/1"
MERGE_TOL = 1e-9
DENSE_RADIAL = 4097


def merge_intervals(intervals, gap_tol=None):
    """Sort and merge closed intervals; gaps up to ``gap_tol`` are closed."""
    ivs = sorted((float(a) + 0.0, float(b) + 0.0) for a, b in intervals)
    if not ivs:
        return ()
    if gap_tol is None:
        scale = max(max(abs(a), abs(b)) for a, b in ivs)
        gap_tol = MERGE_TOL * scale
    out = [list(ivs[0])]
    for a, b in ivs[1:]:
        if a <= out[-1][1] + gap_tol:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append([a, b])
    return tuple((a, b) for a, b in out)


@dataclass(frozen=True)
class AxisIntervalUnion:
    axis: str
    intervals: tuple = ()

    @classmethod
    def build(cls, axis, intervals, gap_tol=None):
        ivs = list(intervals)
        ivs += [(-b, -a) for a, b in ivs]
        return cls(axis, merge_intervals(ivs, gap_tol))

    def distance(self, t):
        """Distance from the axis coordinate ``t`` to the union."""
        if not self.intervals:
            return float("inf")
        return min(max(a - t, 0.0, t - b) for a, b in self.intervals)

    @property
    def halfwidth(self):
        return max((max(abs(a), abs(b)) for a, b in self.intervals), default=0.0)

    def union(self, other, gap_tol=None):
        return AxisIntervalUnion(self.axis, merge_intervals(self.intervals + other.intervals, gap_tol))


@dataclass(frozen=True)
class DSRegion:
    """``iR`` together with ``{|Im l| <= band and |l|^2 <= disc_radius_sq}``."""

    imag_band_halfwidth: float
    disc_radius_sq: float


@dataclass(frozen=True)
class SpectrumSet:
    real_part: AxisIntervalUnion
    imag_part: AxisIntervalUnion
    ds_region: Optional[DSRegion] = None

    def union(self, other):
        return SpectrumSet(self.real_part.union(other.real_part), self.imag_part.union(other.imag_part),
                           self.ds_region or other.ds_region)

    def __contains__(self, lam):
        return contains(self, lam, 0.0)


def point_set():
    return SpectrumSet(AxisIntervalUnion("real", ((0.0, 0.0),)), AxisIntervalUnion("imag", ((0.0, 0.0),)))


def radial_rays(model: PlanetModel, axis, samples: int = DENSE_RADIAL) -> np.ndarray:
    """Dense radial lines along ``axis`` and one equatorial direction (centre excluded).

    Profiles depend on the normalized radius only, so these rays resolve the
    radial extremes far better than the shell spacing of the product grid.
    """
    fr = _frame(axis)
    r = np.linspace(0.0, 1.0, samples)[1:]
    dirs = (fr[:, 2], -fr[:, 2], fr[:, 0])
    return np.vstack([r[:, None] * d[None, :] for d in dirs]) * np.array(model.semi_axes)


def essential_spectrum(model: PlanetModel, interior_samples: int = 2048, boundary_samples: int = 512) -> SpectrumSet:
    """Sampled union of the pointwise interior sets and the boundary failure intervals."""
    if interior_samples < 1 or boundary_samples < 1:
        raise ValueError("sample counts must be >= 1")
    ax_int, ax_bdy = natural_axes(model)
    X = np.vstack([interior_grid(model, interior_samples, ax_int), radial_rays(model, ax_int)])
    bg = sample_background(model, X)
    bm, bp = beta_pm_arrays(model.omega_vec, bg.nsq, bg.ghat)
    real_half = np.sqrt(np.maximum(0.0, -bg.nsq))
    lo = np.sqrt(np.maximum(0.0, bm))
    hi = np.sqrt(np.maximum(0.0, bp))
    imag = list(zip(lo, hi))

    Xb = boundary_grid(model, boundary_samples, ax_bdy)
    bb = sample_background(model, Xb, check_domain=False)
    n = _boundary_normals(model, Xb)
    pg = bb.ghat - np.sum(bb.ghat * n, axis=1)[:, None] * n
    h = np.linalg.norm(pg, axis=1) * np.sqrt(np.maximum(0.0, bb.nsq))
    imag += [(-t, t) for t in h]

    scale = max(float(hi.max(initial=0.0)), float(h.max(initial=0.0)), float(real_half.max(initial=0.0)), 1e-300)
    tol = MERGE_TOL * scale
    real = [(-t, t) for t in real_half]
    return SpectrumSet(AxisIntervalUnion.build("real", real, tol), AxisIntervalUnion.build("imag", imag, tol))


def nsq_extremes(model: PlanetModel, samples: int = DENSE_RADIAL):
    """(N^2_inf, N^2_sup) over a dense radial grid (profiles depend on the normalized radius only)."""
    r = np.linspace(0.0, 1.0, samples)
    v = model.nsq(r)
    return float(v.min()), float(v.max())


def s1_bound(model: PlanetModel, samples: int = DENSE_RADIAL) -> SpectrumSet:
    """The cross: imaginary half-width ``sqrt(4|Omega|^2 + max(0, N^2_sup))``,
    real half-width ``sqrt(max(0, -N^2_inf))``."""
    ninf, nsup = nsq_extremes(model, samples)
    w = np.sqrt(4 * model.omega_norm**2 + max(0.0, nsup))
    v = np.sqrt(max(0.0, -ninf))
    return SpectrumSet(AxisIntervalUnion("real", ((-v, v),)), AxisIntervalUnion("imag", ((-w, w),)))


def ds_region(model: PlanetModel, gamma: float) -> SpectrumSet:
    """Full-spectrum region for a lower bound ``gamma`` of the potential-energy operator."""
    base = point_set()
    return SpectrumSet(base.real_part, base.imag_part, DSRegion(model.omega_norm, max(0.0, -float(gamma))))


def contains(s: SpectrumSet, lam, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    lam = complex(lam)
    if np.hypot(s.real_part.distance(lam.real), lam.imag) <= tol:
        return True
    if np.hypot(s.imag_part.distance(lam.imag), lam.real) <= tol:
        return True
    ds = s.ds_region
    if ds is not None:
        if abs(lam.real) <= tol:
            return True
        if abs(lam.imag) <= ds.imag_band_halfwidth + tol and abs(lam) <= np.sqrt(ds.disc_radius_sq) + tol:
            return True
    return False


def export_set(s: SpectrumSet) -> dict:
    ds = None
    if s.ds_region is not None:
        ds = {"imag_band_halfwidth": s.ds_region.imag_band_halfwidth,
              "disc_radius_sq": s.ds_region.disc_radius_sq}
    return {
        "schema": SCHEMA,
        "real": [[a, b] for a, b in s.real_part.intervals],
        "imag": [[a, b] for a, b in s.imag_part.intervals],
        "ds": ds,
    }


def parse_set(doc) -> SpectrumSet:
    if isinstance(doc, (str, bytes)):
        doc = json.loads(doc)
    ds = doc.get("ds")
    return SpectrumSet(
        AxisIntervalUnion("real", tuple((float(a), float(b)) for a, b in doc["real"])),
        AxisIntervalUnion("imag", tuple((float(a), float(b)) for a, b in doc["imag"])),
        DSRegion(float(ds["imag_band_halfwidth"]), float(ds["disc_radius_sq"])) if ds else None,
    )


def dumps_set(s: SpectrumSet) -> str:
    return json.dumps(export_set(s), indent=2, sort_keys=True)


def is_subset(a: SpectrumSet, b: SpectrumSet, tol: float) -> bool:
    """Interval-wise inclusion of the axis parts of ``a`` in ``b``."""
    for pa, pb in ((a.real_part, b.real_part), (a.imag_part, b.imag_part)):
        for lo, hi in pa.intervals:
            if not any(lo >= c - tol and hi <= d + tol for c, d in pb.intervals):
                return False
    return True

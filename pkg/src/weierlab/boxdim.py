"""Box counting for sampled graphs in R^3.

Cubes of side 1/m are anchored at the corner of the fixed bounding box
``[0, 1] x [-R, R]^2`` with ``R = 1/(1 - a) + eps``, so dyadic grids nest
exactly. Two counts are available:

* ``box_count``: cubes containing at least one sample point.
* ``cuboid_count``: for each column of width 1/m, the grid cubes meeting the
  smallest axis-aligned cuboid around that column's samples. This is the
  cover used for the upper bound, built from observed ranges instead of the
  Hoelder bound. It never undercounts the occupancy count and never exceeds
  ``cover_bound``.

A sampled point set can occupy at most one cube per point, so occupancy
saturates once m^(3 - 2 beta) passes the sample size (at m = 1024 that is
~10^7 cubes against ~10^5 points for step 2^-16). Per-column ranges are
resolved far earlier, which is why ladders default to the cuboid count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._chunks import map_chunks
from .errors import DegenerateError, DomainError, ResourceError
from .phases import PhaseSeq, Role
from .series import WParams, evaluate_at, holder_constant, plan_terms

MAX_POINTS = (1 << 24) + 1


@dataclass(frozen=True)
class GraphSample:
    params: WParams
    seed: int
    step: float
    eps: float
    points: np.ndarray  # (n, 3) rows (t, f1, f2), t nondecreasing

    @property
    def half_width(self) -> float:
        return self.params.radius + self.eps


def grid_size(step: float) -> int:
    """Number of grid points ``floor(1/step) + 1``, robust to 1/step rounding."""
    return int(math.floor((1.0 / step) * (1.0 + 1e-12))) + 1


def sample_graph(p: WParams, seed: int, step: float, eps: float = 1e-6, *,
                 workers: int = 1, max_points: int = MAX_POINTS) -> GraphSample:
    if not 0.0 < step <= 1.0:
        raise DomainError(f"0 < step <= 1 required (got step={step})")
    if not eps > 0:
        raise DomainError(f"eps > 0 required (got eps={eps})")
    n = grid_size(step)
    if n > max_points:
        raise ResourceError(f"{n} grid points exceed the cap of {max_points}")
    t = np.minimum(np.arange(n) * step, 1.0)
    f = evaluate_at(p, PhaseSeq(seed, Role.THETA), PhaseSeq(seed, Role.LAMBDA), t, eps,
                    workers=workers)
    cert = max(eps, plan_terms(p, eps)[1])
    return GraphSample(params=p, seed=int(seed), step=float(step), eps=cert,
                       points=np.column_stack([t, f]))


def _check_m(m) -> int:
    if int(m) != m or m < 1:
        raise DomainError(f"m >= 1 integer required (got m={m})")
    return int(m)


def _cell_indices(points: np.ndarray, m: int, half: float):
    nf = int(math.ceil(2.0 * half * m))
    i = np.clip(np.floor(points[:, 0] * m), 0, m - 1).astype(np.int64)
    j = np.clip(np.floor((points[:, 1] + half) * m), 0, nf - 1).astype(np.int64)
    k = np.clip(np.floor((points[:, 2] + half) * m), 0, nf - 1).astype(np.int64)
    return i, j, k, nf


def occupied_cells(points: np.ndarray, m: int, half: float) -> np.ndarray:
    """Sorted unique keys of the cubes hit by ``points``."""
    i, j, k, nf = _cell_indices(points, m, half)
    return np.unique((i * nf + j) * nf + k)


def box_count(sample: GraphSample, m: int, *, workers: int = 1) -> int:
    """Number of anchored 1/m-cubes containing at least one sample point."""
    m = _check_m(m)
    pts = sample.points
    if len(pts) == 0:
        raise DomainError("sample must be nonempty")
    parts = map_chunks(lambda _c, lo, hi: occupied_cells(pts[lo:hi], m, sample.half_width),
                       len(pts), workers)
    return int(len(np.unique(np.concatenate(parts))))


def _column_ranges(points, m, half):
    i, j, k, _ = _cell_indices(points, m, half)
    starts = np.flatnonzero(np.r_[True, np.diff(i) != 0])
    return (i[starts], np.minimum.reduceat(j, starts), np.maximum.reduceat(j, starts),
            np.minimum.reduceat(k, starts), np.maximum.reduceat(k, starts))


def cuboid_count(sample: GraphSample, m: int, *, workers: int = 1) -> int:
    """Cubes meeting each column's bounding cuboid, summed over columns."""
    m = _check_m(m)
    pts = sample.points
    if len(pts) == 0:
        raise DomainError("sample must be nonempty")
    if np.any(np.diff(pts[:, 0]) < 0):
        raise DomainError("sample abscissae must be nondecreasing")
    parts = map_chunks(lambda _c, lo, hi: _column_ranges(pts[lo:hi], m, sample.half_width),
                       len(pts), workers)
    col, jlo, jhi, klo, khi = (np.concatenate(z) for z in zip(*parts))
    # a column split across chunks appears twice in a row; merge it
    starts = np.flatnonzero(np.r_[True, np.diff(col) != 0])
    jlo, klo = np.minimum.reduceat(jlo, starts), np.minimum.reduceat(klo, starts)
    jhi, khi = np.maximum.reduceat(jhi, starts), np.maximum.reduceat(khi, starts)
    return int(np.sum((jhi - jlo + 1) * (khi - klo + 1)))


@dataclass(frozen=True)
class Fit:
    slope: float
    intercept: float
    r2: float


def loglog_fit(xs, ys) -> Fit:
    """Ordinary least squares of log y on log x; r2 is the squared correlation."""
    x, y = np.log(np.asarray(xs, dtype=np.float64)), np.log(np.asarray(ys, dtype=np.float64))
    if np.ptp(x) == 0:
        raise DegenerateError("all scales are equal; slope is undefined")
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = float(np.sum((x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    ss_res = float(np.sum((y - intercept - slope * x) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return Fit(slope=slope, intercept=intercept, r2=r2)


def fit_dimension(ms, counts) -> Fit:
    """Slope of log N(m) against log m."""
    ms = np.asarray(ms, dtype=np.float64)
    counts = np.asarray(counts, dtype=np.float64)
    if len(ms) < 2 or len(ms) != len(counts):
        raise DomainError("at least two scales with matching counts are required")
    if np.any(counts < 1) or np.any(ms < 1):
        raise DomainError("all scales and counts must be >= 1")
    return loglog_fit(ms, counts)


@dataclass(frozen=True)
class BoxLadder:
    ms: np.ndarray
    counts: np.ndarray
    fit: Fit
    method: str
    dropped: int

    def rows(self):
        for m, c in zip(self.ms, self.counts):
            yield int(m), int(c), math.log10(m), math.log10(c)


COUNTERS = {"cuboid": cuboid_count, "occupancy": box_count}


def box_ladder(sample: GraphSample, ms, method: str = "cuboid", drop: int = 2, *,
               workers: int = 1) -> BoxLadder:
    """Counts over a ladder of scales and the log-log fit.

    The ``drop`` smallest scales are left out of the fit, as long as two
    scales remain.
    """
    ms = [_check_m(m) for m in ms]
    if len(ms) < 2:
        raise DomainError("a ladder needs at least two scales for the regression")
    if any(b <= a for a, b in zip(ms, ms[1:])):
        raise DomainError("scales must be strictly increasing")
    need = 1.0 / (4 * ms[-1])
    if sample.step > need:
        raise DomainError(
            f"step <= 1/(4 max m) = {need:.6g} required for max m = {ms[-1]} "
            f"(got step={sample.step:.6g})")
    if method not in COUNTERS:
        raise DomainError(f"method must be one of {sorted(COUNTERS)} (got {method!r})")
    counts = [COUNTERS[method](sample, m, workers=workers) for m in ms]
    drop = max(0, min(int(drop), len(ms) - 2))
    fit = fit_dimension(ms[drop:], counts[drop:])
    return BoxLadder(ms=np.array(ms), counts=np.array(counts), fit=fit, method=method,
                     dropped=drop)


def cover_bound(p: WParams, m: int, eps: float = 0.0) -> float:
    """``m^(3-2 beta) (C + m^(beta-1))^2 (1 + 2 eps m)^2`` cubes of side 1/m."""
    m = _check_m(m)
    c = holder_constant(p)
    return m ** (3.0 - 2.0 * p.beta) * (c + m ** (p.beta - 1.0)) ** 2 * (1.0 + 2.0 * eps * m) ** 2


def geometric_ladder(lo: int, hi: int, factor: int = 2) -> list[int]:
    out, m = [], int(lo)
    while m <= hi:
        out.append(m)
        m *= factor
    return out

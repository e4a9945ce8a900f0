"""Monte Carlo s-energy of the graph measure and correlation-integral dimension.

The graph measure is the image of Lebesgue measure on [0, 1] under
t -> (t, f(t)), so its s-energy is the double integral over [0, 1]^2 of
((x - y)^2 + |f(x) - f(y)|^2)^(-s/2). Pairs are drawn in fixed chunks whose
uniforms are keyed by ``(mc_seed, chunk index)``, and chunk statistics are
merged in chunk order, so estimates do not depend on the worker count.

The kernel has infinite variance once 2s exceeds the dimension, so reported
standard errors are only indicative near and above that point; the
median-of-means estimator is offered for that regime.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ._chunks import CHUNK, map_chunks
from .boxdim import GraphSample, loglog_fit
from .errors import DegenerateError, DomainError, SingularityError, StarvationError
from .phases import PhaseSeq, Role, stream_key, uniform_stream
from .series import WParams, evaluate_at, plan_terms


def pair_kernel(x: float, y: float, fx, fy, s: float) -> float:
    d2 = (x - y) ** 2 + float(np.sum((np.asarray(fx) - np.asarray(fy)) ** 2))
    if d2 == 0.0 and s > 0:
        raise SingularityError("coincident graph points: kernel is infinite for s > 0")
    return d2 ** (-0.5 * s)


@dataclass(frozen=True)
class EnergyEstimate:
    s: float
    delta: float
    mean: float
    stderr: float
    n: int
    estimator: str = "mean"

    def to_dict(self) -> dict:
        return asdict(self)


def _merge(a, b):
    """Chan et al. pairwise merge of (count, mean, M2)."""
    na, ma, qa = a
    nb, mb, qb = b
    if na == 0:
        return b
    if nb == 0:
        return a
    n = na + nb
    d = mb - ma
    return n, ma + d * nb / n, qa + qb + d * d * na * nb / n


def _pairwise_reduce(stats):
    while len(stats) > 1:
        nxt = [_merge(stats[i], stats[i + 1]) for i in range(0, len(stats) - 1, 2)]
        if len(stats) % 2:
            nxt.append(stats[-1])
        stats = nxt
    return stats[0] if stats else (0, 0.0, 0.0)


def _median_of_means(values: np.ndarray, groups: int) -> tuple[float, float]:
    groups = max(1, min(groups, len(values)))
    means = np.array([g.mean() for g in np.array_split(values, groups)])
    centre = float(np.median(means))
    if groups < 2:
        return centre, 0.0
    # asymptotic sd of a sample median is sqrt(pi/2) * sd / sqrt(G)
    return centre, float(math.sqrt(math.pi / 2) * np.std(means, ddof=1) / math.sqrt(groups))


def mc_energy(p: WParams, seed: int, s: float, n: int, mc_seed: int, delta: float = 0.0,
              eps: float = 1e-6, *, estimator: str = "mean", groups: int = 32,
              workers: int = 1) -> EnergyEstimate:
    """Estimate the s-energy restricted to pairs with ``|x - y| >= delta``.

    ``n`` pairs are drawn uniformly on [0, 1]^2 and those closer than
    ``delta`` are rejected; the estimate is taken over the accepted pairs.
    """
    if not s >= 0:
        raise DomainError(f"s >= 0 required (got s={s})")
    if n < 2:
        raise DomainError(f"n >= 2 required (got n={n})")
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"0 <= delta < 1 required (got delta={delta})")
    if estimator not in ("mean", "mom"):
        raise DomainError(f"estimator must be 'mean' or 'mom' (got {estimator!r})")
    n_terms = plan_terms(p, eps)[0]
    theta = PhaseSeq(seed, Role.THETA).values(n_terms)
    lam = PhaseSeq(seed, Role.LAMBDA).values(n_terms)

    def block(c, lo, hi):
        u = uniform_stream(stream_key(mc_seed, Role.PAIRS, replicate=c), 0, 2 * (hi - lo))
        x, y = u[0::2], u[1::2]
        keep = np.abs(x - y) >= delta
        x, y = x[keep], y[keep]
        f = evaluate_at(p, theta, lam, np.concatenate([x, y]), eps)
        fx, fy = f[: len(x)], f[len(x):]
        d2 = (x - y) ** 2 + np.sum((fx - fy) ** 2, axis=1)
        if s > 0 and np.any(d2 == 0.0):
            raise SingularityError("coincident pair drawn: kernel is infinite for s > 0")
        return d2 ** (-0.5 * s)

    ks = map_chunks(block, n, workers, size=CHUNK)
    accepted = sum(len(k) for k in ks)
    if accepted < 2 or accepted < 1e-3 * n:
        raise StarvationError(
            f"only {accepted} of {n} pairs have |x - y| >= delta={delta}; "
            "rejection rate above 99.9%")
    if estimator == "mom":
        mean, se = _median_of_means(np.concatenate(ks), groups)
    else:
        cnt, mean, m2 = _pairwise_reduce(
            [(len(k), float(np.mean(k)) if len(k) else 0.0,
              float(np.sum((k - np.mean(k)) ** 2)) if len(k) else 0.0) for k in ks])
        se = math.sqrt(m2 / (cnt - 1) / cnt)
    return EnergyEstimate(s=float(s), delta=float(delta), mean=float(mean), stderr=float(se),
                          n=int(accepted), estimator=estimator)


def ladder_seed(mc_seed: int, index: int) -> int:
    """Independent Monte Carlo seed for point ``index`` of a ladder."""
    return stream_key(mc_seed, Role.REPLICATE, replicate=index)


def energy_ladder(p: WParams, seed: int, s_values, deltas, n: int, mc_seed: int,
                  eps: float = 1e-6, *, estimator: str = "mean",
                  workers: int = 1) -> list[EnergyEstimate]:
    out = []
    for i, s in enumerate(s_values):
        for j, d in enumerate(deltas):
            sub = ladder_seed(mc_seed, i * len(deltas) + j)
            out.append(mc_energy(p, seed, s, n, sub, d, eps, estimator=estimator,
                                 workers=workers))
    return out


@dataclass(frozen=True)
class Trend:
    s: float
    slope: float
    stderr: float
    z: float

    def to_dict(self) -> dict:
        return asdict(self)


def energy_trend(estimates: list[EnergyEstimate]) -> Trend:
    """Weighted least-squares slope of log(mean) against log(1/delta).

    Weights come from the delta-method error ``stderr / mean`` of each
    log-mean; ``z`` is the slope over its standard error.
    """
    if len(estimates) < 2:
        raise DomainError("a trend needs at least two cutoffs")
    if any(e.delta <= 0 for e in estimates):
        raise DomainError("cutoffs must be positive for a log(1/delta) trend")
    x = np.log([1.0 / e.delta for e in estimates])
    y = np.log([e.mean for e in estimates])
    sig = np.array([e.stderr / e.mean for e in estimates])
    if np.ptp(x) == 0:
        raise DegenerateError("all cutoffs are equal")
    if np.all(sig > 0):
        w = 1.0 / sig ** 2
    else:
        w = np.ones_like(x)
    A = np.column_stack([np.ones_like(x), x])
    cov = np.linalg.inv(A.T @ (A * w[:, None]))
    coef = cov @ (A.T @ (w * y))
    se = math.sqrt(cov[1, 1]) if np.all(sig > 0) else 0.0
    z = coef[1] / se if se > 0 else math.copysign(math.inf, coef[1]) if coef[1] else 0.0
    return Trend(s=estimates[0].s, slope=float(coef[1]), stderr=se, z=float(z))


@dataclass(frozen=True)
class CorrelationResult:
    slope: float
    intercept: float
    r2: float
    curve: list  # (radius, C(r)) pairs

    def to_dict(self) -> dict:
        return asdict(self)


_MAX_CELLS = 1 << 62


def correlation_integral(points: np.ndarray, r: float, n_pairs: int, key: int) -> float:
    """Estimate the fraction of point pairs within distance ``r``.

    Points are hashed into cubes of side ``r``; any pair within ``r`` lies in
    the same or adjacent cubes. Draws are split evenly (systematically) over
    the 27 neighbour offsets; a draw picks a point ``i`` uniformly and a
    partner ``j`` uniformly in the offset cube (other than ``i`` itself in
    its own cube). Within an offset stratum every ordered pair has probability
    ``1/(n occ)``, so ``n * mean(hit * occ)`` estimates its pair count without
    bias, and the strata add up to all ordered pairs within ``r``.
    """
    n = len(points)
    if n < 2:
        return 0.0
    if n_pairs < 27:
        raise DomainError(f"n_pairs >= 27 required, one per neighbour offset (got {n_pairs})")
    lo = points.min(axis=0)
    cell = np.floor((points - lo) / r).astype(np.int64) + 1  # pad so +-1 stays in range
    d = cell.max(axis=0) + 2
    if float(d[0]) * float(d[1]) * float(d[2]) >= _MAX_CELLS:
        raise DomainError(f"radius r={r:.3g} is too small for the cell grid of this sample")
    keys = (cell[:, 0] * d[1] + cell[:, 1]) * d[2] + cell[:, 2]
    order = np.argsort(keys, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    uk, first, occ = np.unique(keys[order], return_index=True, return_counts=True)

    u = uniform_stream(key, 0, 2 * n_pairs).reshape(n_pairs, 2)
    off = np.arange(n_pairs) % 27
    i = np.minimum((u[:, 0] * n).astype(np.int64), n - 1)
    shift = ((off // 9 - 1) * d[1] + (off // 3 % 3 - 1)) * d[2] + (off % 3 - 1)
    nb = keys[i] + shift
    pos = np.minimum(np.searchsorted(uk, nb), len(uk) - 1)
    home = off == 13
    # partners available: the whole cube, or the cube minus i itself
    avail = np.where(uk[pos] == nb, occ[pos] - home, 0)
    ok = avail > 0
    q = np.minimum((u[:, 1] * avail).astype(np.int64), np.maximum(avail - 1, 0))
    q = q + (home & (q >= rank[i] - first[pos]))  # skip i inside its own cube
    j = order[np.where(ok, first[pos] + q, 0)]
    d2 = np.sum((points[i] - points[j]) ** 2, axis=1)
    weight = np.where(ok & (d2 <= r * r), avail, 0).astype(np.float64)
    per_stratum = np.bincount(off, weights=weight, minlength=27) / np.bincount(off, minlength=27)
    ordered = n * float(np.sum(per_stratum))
    return ordered / (n * (n - 1.0))


def correlation_dimension(sample: GraphSample, radii, n_pairs: int, mc_seed: int,
                          *, workers: int = 1) -> CorrelationResult:
    """Correlation-integral slope of log C(r) against log r.

    ``n_pairs`` pairs are drawn for every radius.
    """
    radii = [float(r) for r in radii]
    if len(radii) < 2:
        raise DomainError("at least two radii are required")
    if any(r <= 0 for r in radii):
        raise DomainError("radii must be positive")
    pts = sample.points
    if len(pts) < 2:
        raise DomainError("sample needs at least two points")
    if np.any(np.diff(pts[:, 0]) < 0):
        raise DomainError("sample abscissae must be nondecreasing")
    cs = map_chunks(
        lambda i, _lo, _hi: correlation_integral(
            pts, radii[i], n_pairs, stream_key(mc_seed, Role.PAIRS, replicate=i)),
        len(radii), workers, size=1)
    for r, c in zip(radii, cs):
        if c == 0:
            raise DegenerateError(f"C(r) = 0 at r={r:.3g}: radius below sample resolution")
    fit = loglog_fit(radii, cs)
    return CorrelationResult(slope=fit.slope, intercept=fit.intercept, r2=fit.r2,
                             curve=[(r, c) for r, c in zip(radii, cs)])

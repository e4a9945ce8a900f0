"""Probabilistic machinery behind the lower dimension bound.

For fixed ``x != y`` the squared increment ``X = |f(x) - f(y)|^2`` splits as
``X1^2 + X2^2`` with

    X1 =  sum_n b_n sin(r_n + 2 pi theta_n),
    X2 = -sum_n b_n cos(r_n + 2 pi lambda_n),
    b_n = 2 a^n sin(pi b^n (y - x)),   r_n = pi b^n (x + y).

Each term of X1 is arcsine distributed on ``(-|b_n|, |b_n|)``. Everything
here either evaluates those objects exactly or checks the resulting density
and expectation bounds by Monte Carlo over phase replicates.
"""
from __future__ import annotations

import functools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats
from statsmodels.nonparametric.kde import KDEUnivariate

from ._chunks import map_chunks
from .errors import DomainError
from .phases import Role, replicate_phases
from .quadrature import tanh_sinh
from .series import TWO_PI, WParams, _Neumaier, _tail_order, holder_constant, power_phases


def _term_turns(p: WParams, x: float, y: float, n_terms: int):
    """Per-term ``(y - x) b^n / 2`` and ``(x + y) b^n / 2`` reduced mod 1.

    Built from the exactly reduced phases of ``x/2`` and ``y/2``.
    """
    px = np.array(list(power_phases(p.b, np.array([0.5 * x]), n_terms))).ravel()
    py = np.array(list(power_phases(p.b, np.array([0.5 * y]), n_terms))).ravel()
    diff = py - px
    rho = px + py
    return diff, rho - np.floor(rho)


def _coefficients(p: WParams, x: float, y: float, n_terms: int):
    diff, rho = _term_turns(p, x, y, n_terms)
    amp = p.b ** (-p.beta * np.arange(n_terms))
    return 2.0 * amp * np.sin(TWO_PI * diff), rho


@dataclass(frozen=True)
class ArcsineComponent:
    n: int
    bn: float
    r1n: float  # reduced to [0, 2 pi)


def bn_coefficient(p: WParams, n: int, x: float, y: float) -> float:
    """``2 b^(-beta n) sin(2 pi b^n (y - x) / 2)``."""
    return float(_coefficients(p, x, y, n + 1)[0][n])


def r1_offset(p: WParams, n: int, x: float, y: float) -> float:
    """``pi b^n (x + y)`` reduced to [0, 2 pi)."""
    return float(TWO_PI * _coefficients(p, x, y, n + 1)[1][n])


def arcsine_component(p: WParams, n: int, x: float, y: float) -> ArcsineComponent:
    bn, rho = _coefficients(p, x, y, n + 1)
    return ArcsineComponent(n=n, bn=float(bn[n]), r1n=float(TWO_PI * rho[n]))


def _check_pair(p: WParams, x: float, y: float) -> float:
    d = abs(y - x)
    lim = 1.0 / (2.0 * p.b ** 2)
    if not 0.0 < d <= lim:
        raise DomainError(
            f"0 < |x - y| <= 1/(2 b^2) = {lim:.6g} required (got |x - y|={d:.6g})")
    return d


def choose_k(p: WParams, x: float, y: float) -> int:
    """The k >= 2 with 1/(2 b^(k+1)) < |x - y| <= 1/(2 b^k).

    On the boundary |x - y| = 1/(2 b^k) the smaller index k is returned.
    """
    d = _check_pair(p, x, y)
    thr = lambda k: 0.5 / p.b ** k  # noqa: E731
    k = max(2, int(math.floor(math.log(0.5 / d) / math.log(p.b))))
    while thr(k) < d:
        k -= 1
    while thr(k + 1) >= d:
        k += 1
    return k


def coefficient_floor(p: WParams, d: float) -> float:
    """Lower bound 2^(1+beta) sin(pi / (2 b^3)) d^beta on |b_n|, n in {k-2, k-1, k}."""
    return 2.0 ** (1.0 + p.beta) * math.sin(math.pi / (2.0 * p.b ** 3)) * d ** p.beta


def arcsine_pdf(bn: float, z):
    """Density of ``bn * sin(2 pi U)``: 1/(pi sqrt(bn^2 - z^2)) on |z| < |bn|."""
    if bn == 0:
        raise DomainError("bn != 0 required (bn = 0 is a point mass)")
    z = np.asarray(z, dtype=np.float64)
    c = abs(bn)
    inside = np.abs(z) < c
    out = np.zeros_like(z)
    zi = z[inside]
    out[inside] = 1.0 / (math.pi * np.sqrt((c - zi) * (c + zi)))
    return out if out.ndim else float(out)


def arcsine_cdf(bn: float, z):
    c = abs(bn)
    return 0.5 + np.arcsin(np.clip(np.asarray(z) / c, -1.0, 1.0)) / math.pi


@functools.lru_cache(maxsize=None)
def universal_I(tol: float = 1e-13) -> float:
    """``int_{-1}^{1} (1 - u^2)^(-3/4) du`` by tanh-sinh quadrature."""
    value, _ = tanh_sinh(lambda u, ua, bu: (ua * bu) ** -0.75, -1.0, 1.0, tol=tol)
    return value


def arcsine_l32_norm(bn: float) -> float:
    """Closed form ``pi^-1 I^(2/3) |bn|^(-1/3)`` of the L^(3/2) norm of h_n."""
    if bn == 0:
        raise DomainError("bn != 0 required")
    return universal_I() ** (2.0 / 3.0) / math.pi * abs(bn) ** (-1.0 / 3.0)


def arcsine_l32_norm_quadrature(bn: float, tol: float = 1e-12) -> float:
    """``(int |h_n|^(3/2) dz)^(2/3)`` integrated directly in z."""
    if bn == 0:
        raise DomainError("bn != 0 required")
    c = abs(bn)

    def integrand(z, za, bz):
        return (math.pi * np.sqrt(za * bz)) ** -1.5

    value, _ = tanh_sinh(integrand, -c, c, tol=tol)
    return value ** (2.0 / 3.0)


@dataclass(frozen=True)
class ConstantChain:
    I: float
    C2: float
    C3: float
    C1: float
    C0: float
    c_holder: float
    s: float
    beta: float
    b: float
    C2_b_only: float

    def to_dict(self) -> dict:
        return asdict(self)


def constant_chain(p: WParams, s: float) -> ConstantChain:
    if not s > 2.0:
        raise DomainError(f"s > 2 required (got s={s})")
    if p.theorem_mode and not s < p.theorem_value:
        raise DomainError(f"s < 3 - 2 beta = {p.theorem_value:.6g} required (got s={s})")
    I = universal_I()
    sn = math.sin(math.pi / (2.0 * p.b ** 3))
    C2 = I ** (2.0 / 3.0) / math.pi * (2.0 ** (1.0 + p.beta) * sn) ** (-1.0 / 3.0)
    C3 = C2 ** 3
    C1 = math.pi * C3 ** 2
    C0 = C1 * 2.0 / (s - 2.0)
    # beta-free worst case: 2^(1+beta) >= 2
    C2b = I ** (2.0 / 3.0) / math.pi * (2.0 * sn) ** (-1.0 / 3.0)
    return ConstantChain(I=I, C2=C2, C3=C3, C1=C1, C0=C0, c_holder=holder_constant(p),
                         s=float(s), beta=p.beta, b=p.b, C2_b_only=C2b)


@dataclass(frozen=True)
class DistanceSample:
    x: float
    y: float
    X1s: np.ndarray
    X2s: np.ndarray
    Xs: np.ndarray
    seed: int = 0


_REP_CHUNK = 1 << 14


def _replicate_sums(coef, rho, seed, role, lo, hi, fn):
    ph = replicate_phases(seed, role, np.arange(lo, hi), len(coef))
    acc = _Neumaier(hi - lo)
    for n in range(len(coef)):
        u = rho[n] + ph[:, n]
        acc.add(coef[n] * fn(TWO_PI * (u - np.floor(u))))
    return acc.value()


def sample_sq_distance(p: WParams, x: float, y: float, n: int, seed: int,
                       eps: float = 1e-6, *, workers: int = 1) -> DistanceSample:
    """X1, X2 and X over ``n`` independent phase replicates.

    Replicate ``r`` draws its Theta and Lambda from streams keyed by
    ``(seed, r)``; each component series is truncated so that its omitted
    tail, at most ``2 a^N / (1 - a)``, is within ``eps``.
    """
    _check_pair(p, x, y)
    if n < 1:
        raise DomainError(f"n >= 1 required (got n={n})")
    n_terms = _tail_order(p.a, 2.0, eps)
    coef, rho = _coefficients(p, x, y, n_terms)

    def block(_i, lo, hi):
        x1 = _replicate_sums(coef, rho, seed, Role.THETA, lo, hi, np.sin)
        x2 = _replicate_sums(-coef, rho, seed, Role.LAMBDA, lo, hi, np.cos)
        return x1, x2

    parts = map_chunks(block, n, workers, size=_REP_CHUNK)
    X1 = np.concatenate([a for a, _ in parts])
    X2 = np.concatenate([b for _, b in parts])
    return DistanceSample(x=float(x), y=float(y), X1s=X1, X2s=X2,
                          Xs=X1 * X1 + X2 * X2, seed=int(seed))


def single_term_sample(p: WParams, n_index: int, x: float, y: float, n: int,
                       seed: int) -> np.ndarray:
    """Replicates of ``Z_{1,n} = b_n sin(r_n + 2 pi theta_n)``."""
    coef, rho = _coefficients(p, x, y, n_index + 1)
    th = replicate_phases(seed, Role.THETA, np.arange(n), n_index + 1)[:, n_index]
    u = rho[n_index] + th
    return coef[n_index] * np.sin(TWO_PI * (u - np.floor(u)))


def arcsine_ks_check(p: WParams, n_index: int, x: float, y: float, n: int,
                     seed: int, level: float = 0.01) -> dict:
    z = single_term_sample(p, n_index, x, y, n, seed)
    bn = bn_coefficient(p, n_index, x, y)
    res = stats.kstest(z, lambda v: arcsine_cdf(bn, v))
    return {"bn": bn, "statistic": float(res.statistic), "pvalue": float(res.pvalue),
            "pass": bool(res.pvalue >= level)}


def silverman_bandwidth(v: np.ndarray) -> float:
    v = np.asarray(v)
    sd = np.std(v, ddof=1)
    iqr = np.subtract(*np.percentile(v, [75, 25]))
    spread = min(sd, iqr / 1.349) if iqr > 0 else sd
    return 0.9 * spread * len(v) ** -0.2


def _kde_sup(v: np.ndarray, bw: float, lo: float, hi: float) -> float:
    kde = KDEUnivariate(v)
    kde.fit(kernel="gau", bw=bw, fft=True, gridsize=4096, cut=3)
    sel = (kde.support >= lo) & (kde.support <= hi)
    return float(np.max(kde.density[sel]))


def _sup_with_slack(v, bw, rng, n_boot):
    lo, hi = np.quantile(v, [0.005, 0.995])
    sup = _kde_sup(v, bw, lo, hi)
    boots = [_kde_sup(v[rng.integers(0, len(v), len(v))], bw, lo, hi)
             for _ in range(n_boot)]
    return sup, 3.0 * float(np.std(boots, ddof=1)) / sup


@dataclass(frozen=True)
class DensityCheck:
    sup_density_X1: float
    bound_X1: float
    sup_density_X: float
    bound_X: float
    slack_X1: float
    slack_X: float
    bandwidth_X1: float
    bandwidth_X: float
    passed: bool

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pass"] = d.pop("passed")
        return d


def density_sup_check(sample: DistanceSample, chain: ConstantChain,
                      bandwidth: float | None = None, n_boot: int = 30) -> DensityCheck:
    """KDE sup of the X1 and X densities against C3 d^-beta and C1 d^-2beta.

    The sup is taken over the central 99% quantile range. A bound passes if
    ``sup <= bound * (1 + slack)``, where slack is three bootstrap standard
    deviations of the sup relative to the sup itself.
    """
    if bandwidth is not None and not bandwidth > 0:
        raise DomainError(f"bandwidth > 0 required (got {bandwidth})")
    d = abs(sample.y - sample.x)
    floor_bw = 1e-4 * d ** chain.beta
    bw1 = bandwidth or max(silverman_bandwidth(sample.X1s), floor_bw)
    bwx = bandwidth or max(silverman_bandwidth(sample.Xs), floor_bw)
    rng = np.random.default_rng([int(sample.seed), 0xB0075])
    sup1, slack1 = _sup_with_slack(sample.X1s, bw1, rng, n_boot)
    supx, slackx = _sup_with_slack(sample.Xs, bwx, rng, n_boot)
    bound1 = chain.C3 * d ** -chain.beta
    boundx = chain.C1 * d ** (-2.0 * chain.beta)
    ok = sup1 <= bound1 * (1.0 + slack1) and supx <= boundx * (1.0 + slackx)
    return DensityCheck(sup1, bound1, supx, boundx, slack1, slackx, bw1, bwx, bool(ok))


def expectation_check(p: WParams, s: float, x: float, y: float, n: int, seed: int,
                      eps: float = 1e-6, *, workers: int = 1) -> dict:
    """Monte Carlo ``E((x-y)^2 + X)^(-s/2)`` against ``C0 |x-y|^(2-s-2 beta)``."""
    chain = constant_chain(p, s)
    sample = sample_sq_distance(p, x, y, n, seed, eps, workers=workers)
    d = abs(y - x)
    k = (d * d + sample.Xs) ** (-0.5 * s)
    mean = float(np.mean(k))
    se = float(np.std(k, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    bound = chain.C0 * d ** (2.0 - s - 2.0 * p.beta)
    return {"mc_mean": mean, "stderr": se, "bound": bound,
            "kernel_ceiling": d ** -s, "pass": bool(mean + 3.0 * se <= bound)}

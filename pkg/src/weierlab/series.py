"""Random vector-valued Weierstrass series with certified truncation.

    f(t) = ( sum_n a^n cos 2pi(b^n t + theta_n),  sum_n a^n sin 2pi(b^n t + lambda_n) ),
    a = b^-beta.

Phases ``frac(b^n t)`` are reduced exactly when ``b`` is an integer: any
double ``t`` that is a multiple of 2^-64 (every double >= 2^-12 is) is held
as the integer ``t * 2^64`` and multiplied by ``b`` modulo 2^64 in wrapping
uint64 arithmetic. Other abscissae take an exact big-integer route. For
non-integer ``b`` the phase is formed in floating point, which loses about
``n log2(b)`` bits at term ``n``; those series are capped at
``floor(53 log 2 / log b)`` terms and the certified error grows to cover
both the tail and the rounding.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._chunks import map_chunks
from .errors import DomainError
from .phases import PhaseSeq, Role, as_phases, stream_key, uniform_stream

TWO_PI = 2.0 * math.pi
_U = 2.0 ** -53
_TWO64 = 2.0 ** 64


@dataclass(frozen=True)
class WParams:
    b: float
    beta: float
    a: float
    theorem_mode: bool

    @property
    def radius(self) -> float:
        """Bound on each component: sum of a^n."""
        return 1.0 / (1.0 - self.a)

    @property
    def integer_base(self) -> bool:
        return float(self.b).is_integer()

    @property
    def theorem_value(self) -> float:
        return 3.0 - 2.0 * self.beta


def make_params(b: float, beta: float) -> WParams:
    b, beta = float(b), float(beta)
    if not b > 1.0 or not math.isfinite(b):
        raise DomainError(f"b > 1 required (got b={b})")
    if not 0.0 < beta < 1.0:
        raise DomainError(f"0 < beta < 1 required (got beta={beta})")
    return WParams(b=b, beta=beta, a=b ** -beta, theorem_mode=beta < 0.5)


def _tail_order(a: float, scale: float, eps: float) -> int:
    """Smallest N >= 0 with scale * a^N / (1 - a) <= eps."""
    if not eps > 0:
        raise DomainError(f"eps > 0 required (got eps={eps})")
    head = scale / (1.0 - a)
    if head <= eps:
        return 0
    n = max(0, math.ceil(math.log(head / eps) / -math.log(a)))
    while n > 0 and head * a ** (n - 1) <= eps:
        n -= 1
    while head * a ** n > eps:
        n += 1
    return n


def truncation_order(p: WParams, eps: float) -> int:
    """Terms needed so the omitted tail of f is within ``eps`` in R^2.

    Each component tail is at most a^N / (1 - a), hence the sqrt(2).
    """
    return _tail_order(p.a, math.sqrt(2.0), eps)


def float_phase_cap(b: float) -> int:
    """Last term index whose float-formed phase keeps some accuracy."""
    return int(math.floor(53 * math.log(2.0) / math.log(b)))


def _float_roundoff(a: float, b: float, n_terms: int, tmax: float) -> float:
    # per-term phase error <= 4u * b^n * tmax (power, product, fmod), times 2pi,
    # plus a few ulps from the trig call itself
    n = np.arange(n_terms)
    return float(np.sum(a ** n * (TWO_PI * 4 * _U * (b ** n) * tmax + 4 * _U)))


def plan_terms(p: WParams, eps: float, scale: float = math.sqrt(2.0),
               tmax: float = 1.0) -> tuple[int, float]:
    """Number of terms and the error bound actually certified.

    For integer ``b`` the bound is the tail bound, which is <= eps. For
    non-integer ``b`` the term count is capped and the bound includes
    floating-point phase error, so it may exceed the requested ``eps``.
    """
    n = _tail_order(p.a, scale, eps)
    if p.integer_base:
        return n, scale * p.a ** n / (1.0 - p.a)
    n = min(n, float_phase_cap(p.b))
    tail = p.a ** n / (1.0 - p.a)
    return n, scale * (tail + _float_roundoff(p.a, p.b, n, max(tmax, 1.0)))


def certified_error(p: WParams, eps: float) -> float:
    return plan_terms(p, eps)[1]


# -- phase reduction ---------------------------------------------------------

def _exact_phases_slow(b: int, t: float, n_terms: int) -> np.ndarray:
    num, den = float(t).as_integer_ratio()
    r = num % den
    out = np.empty(n_terms)
    for n in range(n_terms):
        out[n] = r / den
        r = (r * b) % den
    return out


def power_phases(b: float, t: np.ndarray, n_terms: int):
    """Yield ``frac(b^n t)`` for n = 0 .. n_terms-1 as float arrays."""
    t = np.asarray(t, dtype=np.float64)
    if float(b).is_integer():
        bi = int(b)
        tf = t - np.floor(t)
        x = np.ldexp(tf, 64)
        on = x == np.floor(x)
        j = np.where(on, x, 0.0).astype(np.uint64)
        mul = np.uint64(bi % (1 << 64))
        off = np.flatnonzero(~on)
        slow = np.array([_exact_phases_slow(bi, tf[i], n_terms) for i in off])
        for n in range(n_terms):
            phi = j.astype(np.float64) * (1.0 / _TWO64)
            if off.size:
                phi[off] = slow[:, n]
            yield phi
            j = j * mul
    else:
        for n in range(n_terms):
            yield np.fmod(b ** n * t, 1.0)


def _frac(u: np.ndarray) -> np.ndarray:
    return u - np.floor(u)


class _Neumaier:
    """Compensated running sum over arrays."""

    def __init__(self, shape):
        self.s = np.zeros(shape)
        self.c = np.zeros(shape)

    def add(self, x):
        s = self.s
        tot = s + x
        big = np.abs(s) >= np.abs(x)
        self.c += np.where(big, (s - tot) + x, (x - tot) + s)
        self.s = tot

    def value(self):
        return self.s + self.c


def _series_block(p: WParams, theta: np.ndarray, lam: np.ndarray,
                  t: np.ndarray, n_terms: int) -> np.ndarray:
    acc1 = _Neumaier(t.shape)
    acc2 = _Neumaier(t.shape)
    for n, phi in enumerate(power_phases(p.b, t, n_terms)):
        amp = p.b ** (-p.beta * n)
        acc1.add(amp * np.cos(TWO_PI * _frac(phi + theta[n])))
        acc2.add(amp * np.sin(TWO_PI * _frac(phi + lam[n])))
    return np.stack([acc1.value(), acc2.value()], axis=-1)


@dataclass(frozen=True)
class EvalRequest:
    ts: np.ndarray
    eps: float

    def __post_init__(self):
        ts = np.asarray(self.ts, dtype=np.float64)
        if ts.ndim != 1:
            raise DomainError("ts must be a one-dimensional array")
        if np.any(np.diff(ts) < 0):
            raise DomainError("ts must be nondecreasing")
        if not self.eps > 0:
            raise DomainError(f"eps > 0 required (got eps={self.eps})")
        object.__setattr__(self, "ts", np.clip(ts, 0.0, 1.0))


def evaluate_at(p: WParams, theta, lam, ts, eps: float, *, workers: int = 1,
                clamp: bool = True) -> np.ndarray:
    """Points f(t) in R^2 for arbitrary abscissae (any order).

    Abscissae are clamped to [0, 1] unless ``clamp`` is false. Each row is
    within ``certified_error(p, eps)`` of the exact series value at that
    double ``t``; the result does not depend on ``workers``.
    """
    ts = np.asarray(ts, dtype=np.float64)
    if clamp:
        ts = np.clip(ts, 0.0, 1.0)
    tmax = float(np.max(np.abs(ts))) if ts.size else 1.0
    n_terms, _ = plan_terms(p, eps, tmax=tmax)
    th = as_phases(theta, n_terms)
    la = as_phases(lam, n_terms)
    flat = ts.ravel()
    parts = map_chunks(
        lambda _i, lo, hi: _series_block(p, th, la, flat[lo:hi], n_terms),
        flat.size, workers)
    out = np.concatenate(parts) if parts else np.empty((0, 2))
    return out.reshape(ts.shape + (2,))


def evaluate(p: WParams, theta, lam, req: EvalRequest, *,
             workers: int = 1) -> np.ndarray:
    return evaluate_at(p, theta, lam, req.ts, req.eps, workers=workers)


def eval_raw(p: WParams, theta, lam, ts, eps: float) -> np.ndarray:
    """Series formula without clamping; only meant for periodicity checks."""
    return evaluate_at(p, theta, lam, ts, eps, clamp=False)


def eval_scalar_classic(a: float, b: float, ts, eps: float) -> np.ndarray:
    """Classical W(x) = sum a^n cos(2 pi b^n x), tail <= a^N / (1 - a) <= eps."""
    a, b = float(a), float(b)
    if not (0.0 < a < 1.0 < b):
        raise DomainError(f"0 < a < 1 < b required (got a={a}, b={b})")
    if not a * b > 1.0:
        raise DomainError(f"a*b > 1 required (got a*b={a * b})")
    p = make_params(b, -math.log(a) / math.log(b))
    ts = np.asarray(ts, dtype=np.float64)
    n_terms = _tail_order(a, 1.0, eps)
    if not p.integer_base:
        n_terms = min(n_terms, float_phase_cap(b))
    acc = _Neumaier(ts.shape)
    for n, phi in enumerate(power_phases(b, ts, n_terms)):
        acc.add(a ** n * np.cos(TWO_PI * phi))
    return acc.value()


def holder_constant(p: WParams) -> float:
    """Coefficient C with |f(x) - f(y)| <= C |x - y|^beta on [0, 1]."""
    b, beta = p.b, p.beta
    g = b ** (1.0 - beta)
    return 4.0 * math.pi * g / (g - 1.0) + 4.0 / (1.0 - b ** -beta)


def holder_check(p: WParams, seed: int, n_pairs: int, mc_seed: int, eps: float = 1e-6, *,
                 workers: int = 1) -> dict:
    """Count pairs violating ``|f(x) - f(y)| <= C |x - y|^beta + 2 eps``.

    Pairs are uniform on [0, 1]^2, drawn from the ``mc_seed`` pair stream;
    ``eps`` in the bound is the certified evaluation error.
    """
    if n_pairs < 1:
        raise DomainError(f"n_pairs >= 1 required (got {n_pairs})")
    u = uniform_stream(stream_key(mc_seed, Role.PAIRS), 0, 2 * int(n_pairs))
    x, y = u[0::2], u[1::2]
    f = evaluate_at(p, PhaseSeq(seed, Role.THETA), PhaseSeq(seed, Role.LAMBDA),
                    np.concatenate([x, y]), eps, workers=workers)
    dist = np.linalg.norm(f[:n_pairs] - f[n_pairs:], axis=1)
    err = max(eps, certified_error(p, eps))
    bound = holder_constant(p) * np.abs(x - y) ** p.beta + 2.0 * err
    ratio = dist / bound
    viol = int(np.count_nonzero(dist > bound))
    return {"n_pairs": int(n_pairs), "violations": viol, "max_ratio": float(ratio.max()),
            "c_holder": holder_constant(p), "eps": err, "pass": viol == 0}

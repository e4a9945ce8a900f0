"""Reproducible i.i.d. uniform phase streams.

Every value is a pure function of ``(seed, role, index)``: the stream key is
derived from the seed and role, and entry ``n`` is the SplitMix64 output for
counter ``n``. Any entry can therefore be produced without generating its
predecessors, and prefixes never change when a stream is extended.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_MASK64 = (1 << 64) - 1
_INV_2_53 = 2.0 ** -53


class Role(enum.Enum):
    THETA = "theta"
    LAMBDA = "lambda"
    # internal streams, never used as series phases
    PAIRS = "pairs"
    REPLICATE = "replicate"


_ROLE_SALT = {
    Role.THETA: 0x7468657461A5A5A5,
    Role.LAMBDA: 0x6C616D6264615A5A,
    Role.PAIRS: 0x7061697273C3C3C3,
    Role.REPLICATE: 0x7265706C69636174,
}


def _mix64_int(z: int) -> int:
    z &= _MASK64
    z = ((z ^ (z >> 30)) * _M1) & _MASK64
    z = ((z ^ (z >> 27)) * _M2) & _MASK64
    return z ^ (z >> 31)


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer on a uint64 array (wrapping arithmetic)."""
    z = np.asarray(z, dtype=np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise DomainError(f"seed must be a 64-bit unsigned integer (got {seed})")
    return seed


def stream_key(seed: int, role: Role, replicate: int | None = None) -> int:
    """64-bit key of the ``(seed, role[, replicate])`` stream."""
    k = _mix64_int(_check_seed(seed) + _GAMMA)
    k = _mix64_int(k ^ _ROLE_SALT[Role(role)])
    if replicate is not None:
        k = _mix64_int(k + (int(replicate) + 1) * _GAMMA)
    return k


def _uniform_from_keys(keys: np.ndarray, n: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.uint64)
    ctr = (np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GAMMA))
    z = mix64(keys[..., None] + ctr)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def uniform_stream(key: int, start: int, stop: int) -> np.ndarray:
    """Entries ``start..stop-1`` of the uniform stream with the given key."""
    if stop <= start:
        return np.empty(0)
    ctr = np.arange(start + 1, stop + 1, dtype=np.uint64) * np.uint64(_GAMMA)
    z = mix64(np.uint64(key) + ctr)
    return (z >> np.uint64(11)).astype(np.float64) * _INV_2_53


def sample_phases(seed: int, role: Role | str, n: int) -> np.ndarray:
    """First ``n`` phases in [0, 1) of the ``(seed, role)`` stream."""
    if n < 0:
        raise DomainError(f"n >= 0 required (got {n})")
    return uniform_stream(stream_key(seed, Role(role)), 0, int(n))


def replicate_phases(seed: int, role: Role | str, replicates: np.ndarray,
                     n: int) -> np.ndarray:
    """Phase matrix of shape ``(len(replicates), n)``.

    Row ``i`` holds the first ``n`` phases of the stream for replicate
    ``replicates[i]``, so replicate ``r`` is identical no matter which batch
    it is generated in.
    """
    base = stream_key(seed, Role(role))
    reps = np.asarray(replicates, dtype=np.uint64)
    keys = mix64(np.uint64(base) + (reps + np.uint64(1)) * np.uint64(_GAMMA))
    return _uniform_from_keys(keys, n)


@dataclass
class PhaseSeq:
    """Lazily extended phase sequence (the role of Theta or Lambda)."""

    seed: int
    role: Role = Role.THETA
    _cache: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)

    def __post_init__(self):
        self.seed = _check_seed(self.seed)
        self.role = Role(self.role)

    def values(self, n: int) -> np.ndarray:
        if n > len(self._cache):
            key = stream_key(self.seed, self.role)
            extra = uniform_stream(key, len(self._cache), n)
            self._cache = np.concatenate([self._cache, extra])
        return self._cache[:n]

    def __getitem__(self, i: int) -> float:
        return float(self.values(i + 1)[i])


def as_phases(seq, n: int) -> np.ndarray:
    """First ``n`` phases of a PhaseSeq or of an explicit array."""
    if isinstance(seq, PhaseSeq):
        return seq.values(n)
    arr = np.asarray(seq, dtype=np.float64)
    if arr.ndim != 1 or len(arr) < n:
        raise DomainError(
            f"explicit phase array needs at least {n} entries (got {arr.shape})")
    return arr[:n]

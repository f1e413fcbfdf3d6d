"""Seedable standard-normal streams and Brownian-increment helpers.

Determinism contract: every variate is a pure function of
``(seed, stream_index, position)``, identical across runs, processes and
machines. The generator stack is fixed for the life of the repo; swapping
any piece silently changes every seeded regression number:

1. A splitmix64 step mixes ``(seed, stream_index)`` into a 128-bit key,
   so per-path substreams are independent and order-free.
2. Philox4x64-10, a counter-based block cipher, turns the key and a
   running block counter into raw 64-bit words (block ``c`` carries
   words ``4c .. 4c+3``); implemented here, verified against the
   reference implementation shipped with numpy.
3. Each word becomes a uniform strictly inside (0, 1) at the centre of
   its 53-bit bin: ``u = ((word >> 11) + 0.5) * 2**-53``.
4. Uniforms map to standard normals through the inverse normal CDF
   (``scipy.special.ndtri``).
"""
from __future__ import annotations

from typing import NamedTuple

import math

import numpy as np
from scipy.special import ndtri

from .errors import DomainError

_MASK64 = (1 << 64) - 1

# Philox4x64 round multipliers and key-schedule (Weyl) increments.
_PHILOX_M0 = np.uint64(0xD2E7470EE14C6C93)
_PHILOX_M1 = np.uint64(0xCA5A826395121157)
_PHILOX_W0 = np.uint64(0x9E3779B97F4A7C15)
_PHILOX_W1 = np.uint64(0xBB67AE8584CAA73B)
_LO32 = np.uint64(0xFFFFFFFF)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_U53_SCALE = 2.0 ** -53


def mix64(x: int) -> int:
    """One splitmix64 state step plus finalizer, on 64-bit integers."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def stream_key(seed: int, stream_index: int) -> tuple[int, int]:
    """Derive the 128-bit Philox key for substream ``stream_index`` of ``seed``.

    ``mix64`` is a bijection, so for a fixed seed every stream index maps
    to a distinct key, and distinct keys give independent Philox streams.
    """
    k0 = mix64(seed)
    k1 = mix64(k0 ^ mix64(stream_index))
    return k0, k1


def _mulhilo(a: np.ndarray, b: np.uint64) -> tuple[np.ndarray, np.ndarray]:
    # 64x64 -> 128-bit product via 32-bit limbs (numpy has no 128-bit ints).
    lo = a * b
    ah = a >> _S32
    al = a & _LO32
    bh = b >> _S32
    bl = b & _LO32
    carry = ((al * bl) >> _S32) + (ah * bl & _LO32) + (al * bh & _LO32)
    hi = ah * bh + ((ah * bl) >> _S32) + ((al * bh) >> _S32) + (carry >> _S32)
    return hi, lo


def _philox_blocks(counters: np.ndarray, k0: np.ndarray | np.uint64,
                   k1: np.ndarray | np.uint64) -> np.ndarray:
    """Philox4x64-10 blocks for counter words ``(c, 0, 0, 0)``.

    ``counters`` has shape (N,); ``k0``/``k1`` are scalars or shape-(N,)
    arrays. Returns raw words with shape (N, 4).
    """
    c0 = counters.astype(np.uint64, copy=True)
    c1 = np.zeros_like(c0)
    c2 = np.zeros_like(c0)
    c3 = np.zeros_like(c0)
    k0 = np.uint64(k0) if np.isscalar(k0) or isinstance(k0, int) else k0.copy()
    k1 = np.uint64(k1) if np.isscalar(k1) or isinstance(k1, int) else k1.copy()
    with np.errstate(over="ignore"):  # modular 64-bit arithmetic is intentional
        for r in range(10):
            if r > 0:
                k0 = k0 + _PHILOX_W0
                k1 = k1 + _PHILOX_W1
            hi0, lo0 = _mulhilo(c0, _PHILOX_M0)
            hi1, lo1 = _mulhilo(c2, _PHILOX_M1)
            c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return np.stack([c0, c1, c2, c3], axis=-1)


def _normals_from_raw(raw: np.ndarray) -> np.ndarray:
    u = ((raw >> _S11).astype(np.float64) + 0.5) * _U53_SCALE
    return ndtri(u)


def _validate_seed(seed: int) -> None:
    if not isinstance(seed, (int, np.integer)) or not 0 <= int(seed) < 2 ** 64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed!r}")


class RandomStream:
    """One reproducible standard-normal stream, keyed by (seed, stream_index).

    Streams are value-like: construct one per simulated path and advance
    it from a single execution context. Distinct streams may be advanced
    concurrently. The variate sequence does not depend on how draws are
    chunked across calls.
    """

    def __init__(self, seed: int, stream_index: int = 0):
        _validate_seed(seed)
        if not isinstance(stream_index, (int, np.integer)) or not 0 <= int(stream_index) < 2 ** 64:
            raise DomainError(
                f"stream_index must be a non-negative 64-bit integer, got {stream_index!r}"
            )
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self._k0, self._k1 = stream_key(self.seed, self.stream_index)
        self._pos = 0  # index of the next raw word to consume

    def __repr__(self) -> str:
        return (f"RandomStream(seed={self.seed}, stream_index={self.stream_index}, "
                f"position={self._pos})")

    @property
    def position(self) -> int:
        return self._pos

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` standard normal variates, advancing the stream."""
        if n < 0:
            raise DomainError(f"draw count must be non-negative, got {n}")
        if n == 0:
            return np.empty(0)
        first_block = self._pos // 4
        last_block = (self._pos + n - 1) // 4
        counters = np.arange(first_block, last_block + 1, dtype=np.uint64)
        raw = _philox_blocks(counters, np.uint64(self._k0), np.uint64(self._k1)).ravel()
        offset = self._pos - first_block * 4
        out = _normals_from_raw(raw[offset:offset + n])
        self._pos += n
        return out

    def next_normal(self) -> float:
        """Single standard normal draw."""
        return float(self.normals(1)[0])


def normal_matrix(seed: int, stream_indices: np.ndarray, n_draws: int) -> np.ndarray:
    """First ``n_draws`` variates of many streams at once.

    Row ``i`` equals ``RandomStream(seed, stream_indices[i]).normals(n_draws)``
    bit for bit; this is the vectorized engine fast path.
    """
    _validate_seed(seed)
    idx = np.asarray(stream_indices, dtype=np.uint64)
    if n_draws < 0:
        raise DomainError(f"draw count must be non-negative, got {n_draws}")
    n_streams = idx.shape[0]
    if n_streams == 0 or n_draws == 0:
        return np.empty((n_streams, n_draws))
    k0 = np.uint64(mix64(seed))
    # vectorized mix64 over the stream indices
    g = idx.copy()
    g = g + np.uint64(0x9E3779B97F4A7C15)
    g = (g ^ (g >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    g = (g ^ (g >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    g = g ^ (g >> np.uint64(31))
    k1 = g ^ k0
    k1 = k1 + np.uint64(0x9E3779B97F4A7C15)
    k1 = (k1 ^ (k1 >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    k1 = (k1 ^ (k1 >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    k1 = k1 ^ (k1 >> np.uint64(31))

    n_blocks = (n_draws + 3) // 4
    counters = np.broadcast_to(np.arange(n_blocks, dtype=np.uint64), (n_streams, n_blocks))
    raw = _philox_blocks(counters.reshape(-1), k0, np.repeat(k1, n_blocks))
    raw = raw.reshape(n_streams, n_blocks * 4)[:, :n_draws]
    return _normals_from_raw(raw)


class CorrelatedPair(NamedTuple):
    """A pair of standard normals with configured correlation."""

    z1: float | np.ndarray
    z2: float | np.ndarray


def correlated_pair(rho: float, g1, g2) -> CorrelatedPair:
    """Correlate two independent standard normals.

    ``z1 = g1`` and ``z2 = rho*g1 + sqrt(1 - rho^2)*g2``, so the marginals
    stay standard normal and ``corr(z1, z2) = rho``. ``g1``/``g2`` may be
    scalars or arrays. ``rho = +-1`` is exact: the orthogonal weight is
    computed as 0 with no epsilon guard.
    """
    if not -1.0 <= rho <= 1.0:
        raise DomainError(f"correlation must satisfy |rho| <= 1, got {rho}")
    z2 = rho * g1 + math.sqrt(1.0 - rho * rho) * g2
    return CorrelatedPair(g1, z2)


def wiener_increment(dt: float, z) -> float | np.ndarray:
    """Scale a standard normal draw into a Wiener increment over ``dt`` years."""
    if not dt > 0:
        raise DomainError(f"dt must be positive, got {dt}")
    return math.sqrt(dt) * z

"""Seeded location and fingerprint hash families.

Every hash is a keyed 64-bit mixer (two rounds of the murmur3 finalizer)
applied to a 64-bit element key.  Byte-string elements are first digested
to 64 bits with BLAKE2b; integers in ``[0, 2**64)`` are used as keys as-is.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .errors import ContractViolation, ParameterError

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xFF51AFD7ED558CCD)
_M2 = np.uint64(0xC4CEB9FE1A85EC53)
_SM1 = np.uint64(0xBF58476D1CE4E5B9)
_SM2 = np.uint64(0x94D049BB133111EB)
_ONE = np.uint64(1)
_R27 = np.uint64(27)
_R30 = np.uint64(30)
_R31 = np.uint64(31)
_R32 = np.uint64(32)
_R33 = np.uint64(33)

_U64_LIMIT = 1 << 64


@njit(cache=True, nogil=True)
def fmix64(h):
    h ^= h >> _R33
    h *= _M1
    h ^= h >> _R33
    h *= _M2
    h ^= h >> _R33
    return h


@njit(cache=True, nogil=True)
def loc_hash(seed, key, nbins):
    h = fmix64(fmix64(key ^ seed) + seed)
    # multiply-shift range reduction; nbins < 2**32
    return np.int64(((h >> _R32) * np.uint64(nbins)) >> _R32)


@njit(cache=True, nogil=True)
def fp_hash(seed, key, index, fbits):
    h = fmix64(fmix64(key ^ seed) + (np.uint64(index) + _ONE) * _GOLDEN)
    mask = (_ONE << np.uint64(fbits)) - _ONE
    return np.int64(h & mask)


@njit(cache=True, nogil=True)
def loc_hash_many(seed, keys, nbins, out):
    for i in range(keys.shape[0]):
        out[i] = loc_hash(seed, keys[i], nbins)


@njit(cache=True, nogil=True)
def fp_hash_many(seed, keys, index, fbits, out):
    for i in range(keys.shape[0]):
        out[i] = fp_hash(seed, keys[i], index, fbits)


@njit(cache=True, nogil=True)
def rng_next(state):
    """splitmix64 step on a one-element uint64 state array."""
    state[0] += _GOLDEN
    z = state[0]
    z = (z ^ (z >> _R30)) * _SM1
    z = (z ^ (z >> _R27)) * _SM2
    return z ^ (z >> _R31)


@njit(cache=True, nogil=True)
def rng_below(state, m):
    return np.int64(((rng_next(state) >> _R32) * np.uint64(m)) >> _R32)


def element_key(x) -> int:
    """Map an element (bytes-like or 64-bit int) to its 64-bit key."""
    if isinstance(x, (bytes, bytearray, memoryview)):
        return int.from_bytes(hashlib.blake2b(bytes(x), digest_size=8).digest(), "little")
    if isinstance(x, str):
        return element_key(x.encode())
    if isinstance(x, (int, np.integer)):
        v = int(x)
        if not 0 <= v < _U64_LIMIT:
            raise ParameterError(f"integer element {v} outside the 64-bit key space")
        return v
    raise TypeError(f"unsupported element type {type(x).__name__}")


def keys_array(elements) -> np.ndarray:
    """Vector form of :func:`element_key`; uint64 arrays pass through."""
    if isinstance(elements, np.ndarray) and elements.dtype == np.uint64:
        return elements
    return np.fromiter((element_key(x) for x in elements), dtype=np.uint64)


def _draw_seeds(rng: np.random.Generator, count: int) -> tuple[int, ...]:
    return tuple(int(s) for s in rng.integers(0, _U64_LIMIT, size=count, dtype=np.uint64))


@dataclass(frozen=True)
class HashFamily:
    location_seeds: tuple[int, ...]
    fingerprint_seed: int
    num_bins: int
    fingerprint_bits: int
    selector_domain: int = 1

    def __post_init__(self):
        if len(self.location_seeds) < 1:
            raise ParameterError("need at least one location hash")
        if not 1 <= self.num_bins < 1 << 32:
            raise ParameterError(f"num_bins must be in [1, 2**32), got {self.num_bins}")
        if not 1 <= self.fingerprint_bits <= 32:
            raise ParameterError(f"fingerprint_bits must be in [1, 32], got {self.fingerprint_bits}")
        if self.selector_domain < 1:
            raise ParameterError("selector_domain must be positive")

    @classmethod
    def random(cls, rng: np.random.Generator, k: int, num_bins: int, fingerprint_bits: int,
               selector_domain: int = 1) -> "HashFamily":
        seeds = _draw_seeds(rng, k + 1)
        return cls(seeds[:k], seeds[k], num_bins, fingerprint_bits, selector_domain)

    @property
    def k(self) -> int:
        return len(self.location_seeds)

    def seed_array(self) -> np.ndarray:
        """Location seeds followed by the fingerprint seed, as kernels expect."""
        return np.array(self.location_seeds + (self.fingerprint_seed,), dtype=np.uint64)

    def location_hash(self, beta: int, x) -> int:
        if not 0 <= beta < self.k:
            raise ContractViolation(f"table index {beta} outside [0, {self.k})")
        return int(loc_hash(np.uint64(self.location_seeds[beta]), np.uint64(element_key(x)),
                            self.num_bins))

    def fingerprint_hash(self, x, variant_index: int = 0) -> int:
        if not 0 <= variant_index < self.selector_domain:
            raise ContractViolation(
                f"variant index {variant_index} outside [0, {self.selector_domain})")
        return int(fp_hash(np.uint64(self.fingerprint_seed), np.uint64(element_key(x)),
                           variant_index, self.fingerprint_bits))

    def location_hash_many(self, beta: int, keys: np.ndarray) -> np.ndarray:
        if not 0 <= beta < self.k:
            raise ContractViolation(f"table index {beta} outside [0, {self.k})")
        keys = keys_array(keys)
        out = np.empty(keys.shape[0], dtype=np.int64)
        loc_hash_many(np.uint64(self.location_seeds[beta]), keys, self.num_bins, out)
        return out

    def fingerprint_hash_many(self, keys: np.ndarray, variant_index: int = 0) -> np.ndarray:
        if not 0 <= variant_index < self.selector_domain:
            raise ContractViolation(
                f"variant index {variant_index} outside [0, {self.selector_domain})")
        keys = keys_array(keys)
        out = np.empty(keys.shape[0], dtype=np.int64)
        fp_hash_many(np.uint64(self.fingerprint_seed), keys, variant_index,
                     self.fingerprint_bits, out)
        return out

    def reseed(self, rng: np.random.Generator) -> "HashFamily":
        """A new family with every seed drawn fresh; ``self`` is untouched."""
        seeds = _draw_seeds(rng, self.k + 1)
        return replace(self, location_seeds=seeds[: self.k], fingerprint_seed=seeds[self.k])

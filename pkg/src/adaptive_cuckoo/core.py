"""Storage grid, parameter derivation and the shared cuckoo eviction machinery."""

from __future__ import annotations

import copy
import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .dictionary import ReverseDictionary
from .errors import (CapacityExceeded, ConstructionError, ContractViolation,
                     DuplicateElement, ParameterError)
from .hashing import HashFamily, element_key, keys_array

REBUILD_ATTEMPTS = 20


class Location(NamedTuple):
    table: int
    bin: int
    slot: int


class FilterVariant(enum.IntEnum):
    VANILLA = K.VANILLA
    CUCKOOING = K.CUCKOOING
    CYCLIC = K.CYCLIC
    SWAPPING = K.SWAPPING

    @classmethod
    def parse(cls, name) -> "FilterVariant":
        if isinstance(name, cls):
            return name
        try:
            return cls[str(name).upper()]
        except KeyError:
            raise ParameterError(f"unknown filter variant {name!r}") from None


@dataclass(frozen=True)
class FilterParams:
    n: int
    k: int
    b: int
    gamma: float
    N: int
    f: int
    s: int = 0
    max_kicks: int = 500

    @property
    def epsilon_target(self) -> float:
        return self.b * self.k / (self.gamma * 2 ** self.f)

    @property
    def total_slots(self) -> int:
        return self.N * self.b * self.k

    @property
    def space_bits(self) -> int:
        return self.total_slots * (self.f + self.s)


def default_max_kicks(N: int, k: int) -> int:
    return max(500, 8 * math.ceil(math.log2(max(2, N * k))))


def derive_params(n: int, k: int, b: int, *, gamma: float | None = None,
                  occupancy: float | None = None, f: int, s: int = 0,
                  max_kicks: int | None = None) -> FilterParams:
    """Size the grid for ``n`` elements at load ``1/gamma``.

    Exactly one of ``gamma`` or ``occupancy`` must be given.
    """
    if (gamma is None) == (occupancy is None):
        raise ParameterError("give exactly one of gamma or occupancy")
    if occupancy is not None:
        if not 0 < occupancy < 1:
            raise ParameterError(f"occupancy must lie in (0, 1), got {occupancy}")
        gamma = 1.0 / occupancy
    if gamma <= 1:
        raise ParameterError(f"gamma must exceed 1, got {gamma}")
    if n < 1 or k < 2 or b < 1 or f < 1 or s < 0:
        raise ParameterError(f"need n>=1, k>=2, b>=1, f>=1, s>=0 (got n={n} k={k} b={b} f={f} s={s})")
    # tolerate float noise such as 2*16384/2 == 16384.000000001
    N = max(1, math.ceil(gamma * n / (b * k) - 1e-9))
    if max_kicks is None:
        max_kicks = default_max_kicks(N, k)
    if max_kicks < 0:
        raise ParameterError("max_kicks must be non-negative")
    return FilterParams(n=n, k=k, b=b, gamma=float(gamma), N=N, f=f, s=s, max_kicks=max_kicks)


class TableSet:
    """k x N x b slots: fingerprint, selector and an explicit occupancy bit."""

    def __init__(self, k: int, N: int, b: int, stats: np.ndarray):
        self.fp = np.zeros((k, N, b), dtype=np.int64)
        self.sel = np.zeros((k, N, b), dtype=np.int64)
        self.occ = np.zeros((k, N, b), dtype=np.bool_)
        self._stats = stats

    @property
    def occupancy_count(self) -> int:
        return int(self._stats[K.OCCUPIED])

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.fp.shape

    def is_occupied(self, loc: Location) -> bool:
        return bool(self.occ[loc])

    def slot(self, loc: Location) -> tuple[bool, int, int]:
        """(occupied, fingerprint, selector) at ``loc``."""
        return bool(self.occ[loc]), int(self.fp[loc]), int(self.sel[loc])


class InsertResult(enum.Enum):
    STORED = "stored"
    STORED_AFTER_REBUILD = "stored_after_rebuild"


class Move(NamedTuple):
    element: object
    element_id: int
    old: Location | None
    new: Location | None
    segment: int = 0


@dataclass(frozen=True)
class ChainResult:
    placed: bool
    moves: tuple[Move, ...]

    @property
    def needs_rebuild(self) -> bool:
        return not self.placed


class FilterCore:
    """Grid, hash family, dictionary and the insert/evict/rebuild machinery.

    Variant-specific query and fix semantics live in :class:`adaptive_cuckoo.variants.Filter`;
    the kernels dispatch on the variant code stored in ``cfg``.
    """

    def __init__(self, params: FilterParams, variant=FilterVariant.CUCKOOING, seed=None):
        variant = FilterVariant.parse(variant)
        if variant is FilterVariant.CYCLIC:
            if params.b != 1:
                raise ParameterError("the cyclic variant requires b == 1")
            if params.s < 1:
                raise ParameterError("the cyclic variant requires s >= 1 selector bits")
        elif params.s != 0:
            raise ParameterError("selector bits are only meaningful for the cyclic variant")
        if variant is FilterVariant.SWAPPING and params.b < 2:
            raise ParameterError("the swapping variant requires b > 1")
        self.params = params
        self.variant = variant
        self.seed = seed
        self._rng = np.random.default_rng(seed)
        self.family = HashFamily.random(self._rng, params.k, params.N, params.f,
                                        self._selector_domain(params, variant))
        self._seeds = self.family.seed_array()
        self._cfg = np.zeros(K.CFG_LEN, dtype=np.int64)
        self._cfg[K.K] = params.k
        self._cfg[K.NBINS] = params.N
        self._cfg[K.B] = params.b
        self._cfg[K.FBITS] = params.f
        self._cfg[K.VARIANT] = int(variant)
        self._cfg[K.SBITS] = params.s
        self._cfg[K.MAXKICKS] = params.max_kicks
        self._kstate = np.array([self._rng.integers(0, 1 << 64, dtype=np.uint64)], dtype=np.uint64)
        self._stats = np.zeros(K.STATS_LEN, dtype=np.int64)
        self._stats[K.HOMELESS] = -1
        self.tables = TableSet(params.k, params.N, params.b, self._stats)
        self.dict = ReverseDictionary(params.n, params.k, params.N, params.b, self._stats)
        self._path = np.zeros((params.k * params.b * (params.max_kicks + 2) + 2, K.PATH_COLS),
                              dtype=np.int64)
        self.rebuild_count = 0
        self.rebuild_attempts = 0
        self.needs_rebuild = False

    @staticmethod
    def _selector_domain(params: FilterParams, variant: FilterVariant) -> int:
        if variant is FilterVariant.CYCLIC:
            return 2 ** params.s
        if variant is FilterVariant.SWAPPING:
            return params.b
        return 1

    # kernel plumbing

    def _state(self):
        d = self.dict
        t = self.tables
        return (t.fp, t.sel, t.occ, d.owner, d.where, d.keys, self._seeds, self._cfg,
                self._kstate, self._stats)

    def _moves(self, npath: int) -> tuple[Move, ...]:
        element_of = self.dict.element_of
        return tuple(
            Move(element_of(eid), eid,
                 Location(ot, ob, os_) if ot >= 0 else None,
                 Location(nt, nb, ns) if nt >= 0 else None, seg)
            for eid, ot, ob, os_, nt, nb, ns, seg in self._path[:npath].tolist())

    def __len__(self) -> int:
        return self.dict.count

    @property
    def epsilon_target(self) -> float:
        return self.params.epsilon_target

    # placement

    def find_empty_slot(self, x) -> Location | None:
        """Lowest-table, lowest-slot empty candidate slot for ``x``."""
        out = np.empty(3, dtype=np.int64)
        if K.find_empty(np.uint64(element_key(x)), *self._state(), out):
            return Location(int(out[0]), int(out[1]), int(out[2]))
        return None

    def _register(self, x) -> int:
        key = element_key(x)
        if self.dict.contains_key(key):
            raise DuplicateElement(f"{x!r} is already stored")
        if self.dict.count >= self.params.n:
            raise CapacityExceeded(f"filter capacity n={self.params.n} reached")
        return self.dict.register(key, x)

    def insert(self, x) -> InsertResult:
        self._check_usable()
        eid = self._register(x)
        status, _ = K.insert(eid, self._path, *self._state())
        if status == K.NEEDS_REBUILD:
            self.rebuild()
            return InsertResult.STORED_AFTER_REBUILD
        return InsertResult.STORED

    def insert_many(self, elements) -> int:
        """Bulk insert; returns the number of rebuilds it triggered."""
        self._check_usable()
        keys = keys_array(elements)
        if len(np.unique(keys)) != len(keys):
            raise DuplicateElement("batch contains repeated elements")
        if np.isin(keys, self.dict.stored_keys()).any():
            raise DuplicateElement("batch overlaps stored elements")
        if self.dict.count + len(keys) > self.params.n:
            raise CapacityExceeded(f"filter capacity n={self.params.n} exceeded")
        objs = None if isinstance(elements, np.ndarray) else list(elements)
        start = self.dict.count
        self.dict.register_many(keys, objs)
        before = self.rebuild_count
        failed = K.insert_range(start, self.dict.count, self._path, *self._state())
        if failed >= 0:
            # rebuild reinserts every registered element, including the rest of the batch
            self.rebuild()
        return self.rebuild_count - before

    def evict_chain(self, x, start_beta: int) -> ChainResult:
        """Insert new element ``x`` by forcing it into full bin ``h_start_beta(x)``.

        On failure the filter is left with one homeless element and
        ``needs_rebuild`` set; call :meth:`rebuild`.
        """
        self._check_usable()
        if not 0 <= start_beta < self.params.k:
            raise ContractViolation(f"table index {start_beta} out of range")
        key = element_key(x)
        bn = self.family.location_hash(start_beta, key)
        if not self.tables.occ[start_beta, bn].all():
            raise ContractViolation("evict_chain requires the target bin to be full")
        eid = self._register(x)
        status, npath = K.evict_from(eid, start_beta, self._path, *self._state())
        moves = self._moves(npath)
        if status == K.NEEDS_REBUILD:
            self.needs_rebuild = True
            return ChainResult(False, moves)
        return ChainResult(True, moves)

    def rebuild(self) -> None:
        """Reseed every hash and reinsert the whole dictionary."""
        for _ in range(REBUILD_ATTEMPTS):
            self.rebuild_attempts += 1
            self.family = self.family.reseed(self._rng)
            self._seeds[:] = self.family.seed_array()
            K.clear(*self._state())
            if K.insert_range(0, self.dict.count, self._path, *self._state()) < 0:
                self.rebuild_count += 1
                self.needs_rebuild = False
                return
        raise ConstructionError(f"no valid configuration after {REBUILD_ATTEMPTS} reseeds")

    def _check_usable(self):
        if self.needs_rebuild:
            raise ContractViolation("filter has a homeless element; call rebuild() first")

    def clone(self):
        """Independent deep copy, rng state included; hooks are not carried over."""
        hook = self.__dict__.pop("hook", None)
        try:
            return copy.deepcopy(self)
        finally:
            if hook is not None:
                self.hook = hook

    # queries

    def query(self, q) -> bool:
        """True (present) iff some candidate slot holds q's expected fingerprint."""
        return bool(K.query(np.uint64(element_key(q)), *self._state()))

    def query_many(self, elements) -> np.ndarray:
        keys = keys_array(elements)
        out = np.empty(len(keys), dtype=np.bool_)
        K.query_many(keys, out, *self._state())
        return out

    def contains(self, x) -> bool:
        """Exact membership via the dictionary (counts as one access)."""
        return self.dict.contains(x)

    def location_of(self, x) -> Location | None:
        return self.dict.location_of(x)

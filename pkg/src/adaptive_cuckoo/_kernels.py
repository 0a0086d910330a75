"""Compiled inner loops for the filter grid.

All kernels share one state layout, always passed in this order::

    fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats

fp/sel/occ/owner are (k, N, b) grids; ``where`` is (capacity, 3) with rows
(table, bin, slot) or -1; ``seeds`` holds the k location seeds followed by
the fingerprint seed; ``cfg`` and ``stats`` are indexed by the constants
below.  Path buffers have rows (eid, old t, old bin, old slot, new t,
new bin, new slot, segment).
"""

import numpy as np
from numba import njit

from .hashing import fp_hash, loc_hash, rng_below

VANILLA = 0
CUCKOOING = 1
CYCLIC = 2
SWAPPING = 3

# cfg
K = 0
NBINS = 1
B = 2
FBITS = 3
VARIANT = 4
SBITS = 5
MAXKICKS = 6
CFG_LEN = 7

# stats
COUNT = 0
OCCUPIED = 1
ACCESSES = 2
HOMELESS = 3
STATS_LEN = 4

# statuses
PLACED = 0
NEEDS_REBUILD = 1
NOT_FP = 2
FIXED = 3
DONE = 4
STOPPED_FP = 5

PATH_COLS = 8


@njit(cache=True, nogil=True)
def slot_fingerprint(key, slot, alpha, seeds, cfg):
    var = cfg[VARIANT]
    if var == CYCLIC:
        idx = alpha
    elif var == SWAPPING:
        idx = slot
    else:
        idx = 0
    return fp_hash(seeds[cfg[K]], key, idx, cfg[FBITS])


@njit(cache=True, nogil=True)
def place(eid, t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    sel[t, bn, s] = 0
    fp[t, bn, s] = slot_fingerprint(keys[eid], s, 0, seeds, cfg)
    occ[t, bn, s] = True
    owner[t, bn, s] = eid
    where[eid, 0] = t
    where[eid, 1] = bn
    where[eid, 2] = s
    stats[OCCUPIED] += 1


@njit(cache=True, nogil=True)
def unplace(t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    eid = owner[t, bn, s]
    occ[t, bn, s] = False
    owner[t, bn, s] = -1
    where[eid, 0] = -1
    where[eid, 1] = -1
    where[eid, 2] = -1
    stats[OCCUPIED] -= 1
    return eid


@njit(cache=True, nogil=True)
def first_empty_in_bin(t, bn, occ, b):
    for s in range(b):
        if not occ[t, bn, s]:
            return s
    return -1


@njit(cache=True, nogil=True)
def find_empty(key, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats, out):
    """Lowest (table, slot) empty candidate for ``key``; writes ``out``, returns found."""
    k = cfg[K]
    for t in range(k):
        bn = loc_hash(seeds[t], key, cfg[NBINS])
        s = first_empty_in_bin(t, bn, occ, cfg[B])
        if s >= 0:
            out[0] = t
            out[1] = bn
            out[2] = s
            return True
    return False


@njit(cache=True, nogil=True)
def chain(hand, beta, move_row, seg, path, npath,
          fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Carry ``hand`` into table ``beta``, displacing until everything is placed.

    ``hand`` itself must go to ``beta``.  Each element it displaces takes an
    empty slot in any of its candidate bins (scanning tables from its next
    index round-robin) and only when none exists is forced into its next
    table, displacing in turn.

    Returns (status, npath).  On NEEDS_REBUILD the element left without a
    slot is recorded in ``stats[HOMELESS]``.
    """
    k = cfg[K]
    b = cfg[B]
    kicks = 0
    while True:
        # a displaced hand scans beta, beta+1, ..., skipping the table it was evicted from
        span = 1 if kicks == 0 else k - 1
        for j in range(span):
            t = (beta + j) % k
            bn = loc_hash(seeds[t], keys[hand], cfg[NBINS])
            s = first_empty_in_bin(t, bn, occ, b)
            if s >= 0:
                place(hand, t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
                if move_row >= 0:
                    path[move_row, 4] = t
                    path[move_row, 5] = bn
                    path[move_row, 6] = s
                return PLACED, npath
        bn = loc_hash(seeds[beta], keys[hand], cfg[NBINS])
        if kicks >= cfg[MAXKICKS]:
            stats[HOMELESS] = hand
            return NEEDS_REBUILD, npath
        s = rng_below(rng, b) if b > 1 else 0
        stats[ACCESSES] += 1
        victim = unplace(beta, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
        place(hand, beta, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
        if move_row >= 0:
            path[move_row, 4] = beta
            path[move_row, 5] = bn
            path[move_row, 6] = s
        if npath < path.shape[0]:
            path[npath, 0] = victim
            path[npath, 1] = beta
            path[npath, 2] = bn
            path[npath, 3] = s
            path[npath, 4] = -1
            path[npath, 5] = -1
            path[npath, 6] = -1
            path[npath, 7] = seg
            move_row = npath
            npath += 1
        else:
            move_row = -1
        hand = victim
        beta = (beta + 1) % k
        kicks += 1


@njit(cache=True, nogil=True)
def insert(eid, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Place a registered element; returns (status, npath)."""
    loc = np.empty(3, dtype=np.int64)
    if find_empty(keys[eid], fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats, loc):
        place(eid, loc[0], loc[1], loc[2], fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
        return PLACED, 0
    beta = rng_below(rng, cfg[K])
    return chain(eid, beta, -1, 0, path, 0,
                 fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)


@njit(cache=True, nogil=True)
def evict_from(eid, beta, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    return chain(eid, beta, -1, 0, path, 0,
                 fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)


@njit(cache=True, nogil=True)
def insert_range(start, stop, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Insert eids [start, stop); returns the eid that forced a rebuild, or -1."""
    for eid in range(start, stop):
        status, _ = insert(eid, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
        if status == NEEDS_REBUILD:
            return eid
    return -1


@njit(cache=True, nogil=True)
def clear(fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    fp[:] = 0
    sel[:] = 0
    occ[:] = False
    owner[:] = -1
    where[:] = -1
    stats[OCCUPIED] = 0
    stats[HOMELESS] = -1


@njit(cache=True, nogil=True)
def collides(key, t, bn, s, fp, sel, occ, seeds, cfg):
    if not occ[t, bn, s]:
        return False
    return fp[t, bn, s] == slot_fingerprint(key, s, sel[t, bn, s], seeds, cfg)


@njit(cache=True, nogil=True)
def query(key, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    k = cfg[K]
    b = cfg[B]
    var = cfg[VARIANT]
    f0 = fp_hash(seeds[k], key, 0, cfg[FBITS])
    for t in range(k):
        bn = loc_hash(seeds[t], key, cfg[NBINS])
        for s in range(b):
            if not occ[t, bn, s]:
                continue
            if var == VANILLA or var == CUCKOOING:
                if fp[t, bn, s] == f0:
                    return True
            elif fp[t, bn, s] == slot_fingerprint(key, s, sel[t, bn, s], seeds, cfg):
                return True
    return False


@njit(cache=True, nogil=True)
def query_many(qkeys, out, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    for i in range(qkeys.shape[0]):
        out[i] = query(qkeys[i], fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)


@njit(cache=True, nogil=True)
def colliders(key, out, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Write every colliding (table, bin, slot) in scan order; returns the count."""
    n = 0
    for t in range(cfg[K]):
        bn = loc_hash(seeds[t], key, cfg[NBINS])
        for s in range(cfg[B]):
            if collides(key, t, bn, s, fp, sel, occ, seeds, cfg):
                out[n, 0] = t
                out[n, 1] = bn
                out[n, 2] = s
                n += 1
    return n


@njit(cache=True, nogil=True)
def _record(path, npath, eid, ot, ob, os_, nt, nb, ns, seg):
    path[npath, 0] = eid
    path[npath, 1] = ot
    path[npath, 2] = ob
    path[npath, 3] = os_
    path[npath, 4] = nt
    path[npath, 5] = nb
    path[npath, 6] = ns
    path[npath, 7] = seg
    return npath + 1


@njit(cache=True, nogil=True)
def fix(key, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Apply the variant's false-positive fix for ``key``.

    Returns (status, npath) with status NOT_FP, FIXED or NEEDS_REBUILD.
    """
    k = cfg[K]
    b = cfg[B]
    var = cfg[VARIANT]
    found = np.empty((k * b, 3), dtype=np.int64)
    ncoll = colliders(key, found, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
    if ncoll == 0:
        return NOT_FP, 0
    if var == VANILLA:
        return FIXED, 0
    npath = 0
    seg = 0
    for c in range(ncoll):
        t = found[c, 0]
        bn = found[c, 1]
        s = found[c, 2]
        # an earlier fix in this call may already have cleared this slot
        if not collides(key, t, bn, s, fp, sel, occ, seeds, cfg):
            continue
        stats[ACCESSES] += 1
        eid = owner[t, bn, s]
        if var == CYCLIC:
            smask = (1 << cfg[SBITS]) - 1
            alpha = (sel[t, bn, s] + 1) & smask
            sel[t, bn, s] = alpha
            fp[t, bn, s] = slot_fingerprint(keys[eid], s, alpha, seeds, cfg)
            npath = _record(path, npath, eid, t, bn, s, t, bn, s, seg)
        elif var == SWAPPING:
            s2 = rng_below(rng, b - 1)
            if s2 >= s:
                s2 += 1
            unplace(t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
            if occ[t, bn, s2]:
                stats[ACCESSES] += 1
                other = unplace(t, bn, s2, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
                place(other, t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
                place(eid, t, bn, s2, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
                npath = _record(path, npath, eid, t, bn, s, t, bn, s2, seg)
                npath = _record(path, npath, other, t, bn, s2, t, bn, s, seg)
            else:
                place(eid, t, bn, s2, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
                npath = _record(path, npath, eid, t, bn, s, t, bn, s2, seg)
        else:
            unplace(t, bn, s, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
            row = npath
            npath = _record(path, npath, eid, t, bn, s, -1, -1, -1, seg)
            status, npath = chain(eid, (t + 1) % k, row, seg, path, npath,
                                  fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats)
            if status == NEEDS_REBUILD:
                return NEEDS_REBUILD, npath
        seg += 1
    return FIXED, npath


@njit(cache=True, nogil=True)
def replay(qkeys, member, start, stop_on_fp, counters, path,
           fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
    """Stream queries from ``start``; fix every false positive in place.

    ``counters`` accumulates (queries, false positives, fixes applied).
    Returns (status, next index): DONE, STOPPED_FP (the false positive at
    next-1 is left for the caller to fix) or NEEDS_REBUILD (already fixed
    up to the failing chain).
    """
    var = cfg[VARIANT]
    i = start
    n = qkeys.shape[0]
    while i < n:
        q = qkeys[i]
        counters[0] += 1
        if query(q, fp, sel, occ, owner, where, keys, seeds, cfg, rng, stats):
            stats[ACCESSES] += 1
            if not member[i]:
                counters[1] += 1
                if stop_on_fp:
                    return STOPPED_FP, i + 1
                if var != VANILLA:
                    counters[2] += 1
                    status, _ = fix(q, path, fp, sel, occ, owner, where, keys, seeds, cfg, rng,
                                    stats)
                    if status == NEEDS_REBUILD:
                        return NEEDS_REBUILD, i + 1
        i += 1
    return DONE, i

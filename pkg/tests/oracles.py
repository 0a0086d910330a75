"""Slow, independent reference implementations used as test oracles.

Everything here is plain Python integer arithmetic with no numpy or numba,
so it cannot share a bug with the compiled kernels.
"""

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def fmix64(h: int) -> int:
    h ^= h >> 33
    h = (h * 0xFF51AFD7ED558CCD) & MASK64
    h ^= h >> 33
    h = (h * 0xC4CEB9FE1A85EC53) & MASK64
    h ^= h >> 33
    return h


def location(seed: int, key: int, nbins: int) -> int:
    h = fmix64((fmix64(key ^ seed) + seed) & MASK64)
    return ((h >> 32) * nbins) >> 32


def fingerprint(seed: int, key: int, index: int, fbits: int) -> int:
    h = fmix64((fmix64(key ^ seed) + (index + 1) * GOLDEN) & MASK64)
    return h & ((1 << fbits) - 1)


def expected_index(variant: str, slot: int, selector: int) -> int:
    if variant == "CYCLIC":
        return selector
    if variant == "SWAPPING":
        return slot
    return 0


def naive_query(flt, key: int) -> bool:
    """Scan the candidate slots one by one, recomputing every hash from seeds."""
    fam = flt.family
    p = flt.params
    for beta in range(p.k):
        bn = location(fam.location_seeds[beta], key, p.N)
        for s in range(p.b):
            if not flt.tables.occ[beta, bn, s]:
                continue
            idx = expected_index(flt.variant.name, s, int(flt.tables.sel[beta, bn, s]))
            if fingerprint(fam.fingerprint_seed, key, idx, p.f) == int(flt.tables.fp[beta, bn, s]):
                return True
    return False


def naive_mutually_unfixable(S, Q, family) -> dict[int, set[int]]:
    """{x: colliders} for every x in S that has a full-hash collider in Q under every index."""
    seeds = family.location_seeds

    def full_hash(key, beta):
        return (location(seeds[beta], key, family.num_bins),
                fingerprint(family.fingerprint_seed, key, 0, family.fingerprint_bits))

    q_hashes = [[full_hash(q, beta) for beta in range(len(seeds))] for q in Q]
    out = {}
    for x in S:
        colliders = set()
        covered = 0
        for beta in range(len(seeds)):
            hx = full_hash(x, beta)
            hit = False
            for q, hq in zip(Q, q_hashes):
                if hq[beta] == hx:
                    colliders.add(q)
                    hit = True
            covered += hit
        if covered == len(seeds):
            out[x] = colliders
    return out

"""Adaptive adversaries against the filter variants.

A strategy plays through an :class:`AdaptivityGame`, which exposes only
``ask(q) -> present`` and a source of fresh non-member elements.  The game
applies each variant's fix on every false positive.  A strategy may end by
naming an element ``q_hat``; the game queries it once more and the adversary
wins iff that final answer is Present.

The oracles at the bottom (:func:`find_mutually_unfixable`,
:func:`range_sets`, :func:`cyclic_unfixable_queries`) read hash values
directly and are for analysis and cross-checks, never for strategies.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import FilterVariant
from .errors import BudgetError, ContractViolation, ParameterError
from .hashing import element_key, keys_array
from .variants import Filter

DEFAULT_QD_FACTOR = 4

TRANSCRIPT_FIELDS = ["trial", "seed", "outcome", "queries_used", "qd_size", "win"]


class Outcome(enum.Enum):
    FOUND = "found"
    EXHAUSTED = "exhausted"
    ABORTED_QD_TOO_LARGE = "aborted_qd_too_large"


@dataclass
class AttackOutcome:
    result: Outcome
    q_hat: int | None = None
    queries_used: int = 0
    qd_size: int | None = None
    trace: list[tuple[int, bool]] | None = None
    support: np.ndarray | None = None  # the query set Q, for strategies that fix one up front

    @property
    def found(self) -> bool:
        return self.result is Outcome.FOUND


class AdaptivityGame:
    """Black-box query channel between a strategy and a loaded filter."""

    def __init__(self, flt: Filter, rng: np.random.Generator, budget: int | None = None):
        self.__flt = flt
        self.rng = rng
        self.budget = budget
        self.transcript: list[tuple[int, bool]] = []

    @property
    def queries_used(self) -> int:
        return len(self.transcript)

    def ask(self, q) -> bool:
        """Query ``q``; a false positive is fixed before this returns."""
        if self.budget is not None and len(self.transcript) >= self.budget:
            raise BudgetError(f"strategy exceeded its budget of {self.budget} queries")
        present = self.__flt.observe(q, len(self.transcript)).present
        self.transcript.append((element_key(q), present))
        return present

    def fresh_element(self) -> int:
        """Uniform 64-bit key outside S."""
        while True:
            q = int(self.rng.integers(0, 1 << 64, dtype=np.uint64))
            if not self.__flt.dict.contains_key(q):
                return q

    def settle(self, q_hat) -> bool:
        """The final query on the named element; not charged to the budget."""
        if self.__flt.dict.contains_key(element_key(q_hat)):
            raise ContractViolation("q_hat must lie outside the stored set")
        present = self.__flt.observe(q_hat, len(self.transcript)).present
        self.transcript.append((element_key(q_hat), present))
        return present


class RepeatedQueryStrategy:
    """Query fresh candidates ``repeats`` times each; the first candidate that
    is a false positive on every repeat is named.

    Against the cyclic filter (``repeats = 2**s``) such a candidate collides
    with some stored element under every selector value, so no fix can clear
    it.  The same holds for swapping with ``repeats = b`` when b == 2.
    """

    def __init__(self, repeats: int, candidates: int):
        if repeats < 1 or candidates < 0:
            raise ParameterError("repeats must be positive and candidates non-negative")
        self.repeats = repeats
        self.candidates = candidates

    @property
    def budget(self) -> int:
        return self.repeats * self.candidates

    def __call__(self, game: AdaptivityGame) -> AttackOutcome:
        for _ in range(self.candidates):
            q = game.fresh_element()
            if all(game.ask(q) for _ in range(self.repeats)):
                return AttackOutcome(Outcome.FOUND, q, game.queries_used)
        return AttackOutcome(Outcome.EXHAUSTED, None, game.queries_used)


def round_robin_query_count(k: int, N: int, n: int, epsilon: float) -> int:
    """|Q| = ceil((1 + 1/k) N / (epsilon n**(1/k)))."""
    return math.ceil((1 + 1 / k) * N / (epsilon * n ** (1 / k)) - 1e-9)


class RoundRobinStrategy:
    """Attack on deterministic round-robin filters (cuckooing with b == 1).

    1. Draw |Q| fresh elements.
    2. Query all of Q in 2k rounds, each in a new random order.  Elements
       that are false positives in any of the last k rounds form Q_d.
    3. Give up if |Q_d| exceeds ``qd_factor * k``.
    4. Run C(|Q_d|, k) * k! rounds: pick a random ordered k-subset P of Q_d
       and query it twice through.  If all 2k answers are false positives,
       name P[0].
    """

    def __init__(self, k: int, query_count: int, qd_factor: int = DEFAULT_QD_FACTOR):
        if k < 1 or query_count < 0 or qd_factor < 0:
            raise ParameterError("invalid round-robin attack parameters")
        self.k = k
        self.query_count = query_count
        self.qd_factor = qd_factor

    @property
    def budget(self) -> int:
        k = self.k
        return 2 * k * self.query_count + 2 * k * math.comb(self.qd_factor * k, k) * math.factorial(k)

    def __call__(self, game: AdaptivityGame) -> AttackOutcome:
        rng = game.rng
        k = self.k
        pool: set[int] = set()
        Q = []
        while len(Q) < self.query_count:
            q = game.fresh_element()
            if q not in pool:
                pool.add(q)
                Q.append(q)
        Q = np.array(Q, dtype=np.uint64)
        qd: dict[int, None] = {}
        for rnd in range(2 * k):
            for q in rng.permutation(Q).tolist():
                if game.ask(q) and rnd >= k:
                    qd[q] = None
        candidates = list(qd)
        if len(candidates) > self.qd_factor * k:
            return AttackOutcome(Outcome.ABORTED_QD_TOO_LARGE, None, game.queries_used,
                                 len(candidates), support=Q)
        rounds = math.comb(len(candidates), k) * math.factorial(k)
        for _ in range(rounds):
            order = rng.choice(len(candidates), size=k, replace=False)
            P = [candidates[i] for i in order]
            answers = [game.ask(q) for q in P + P]
            if all(answers):
                return AttackOutcome(Outcome.FOUND, P[0], game.queries_used, len(candidates),
                                     support=Q)
        return AttackOutcome(Outcome.EXHAUSTED, None, game.queries_used, len(candidates),
                             support=Q)


@dataclass
class GameResult:
    win: bool
    outcome: AttackOutcome
    transcript: list[tuple[int, bool]] = field(default_factory=list)


def play_adaptivity_game(flt: Filter, strategy, rng: np.random.Generator,
                         budget: int | None = None) -> GameResult:
    """Run ``strategy`` against ``flt``; ``budget`` defaults to the strategy's own."""
    if budget is None:
        budget = getattr(strategy, "budget", None)
    game = AdaptivityGame(flt, rng, budget)
    outcome = strategy(game)
    win = False
    if outcome.q_hat is not None:
        win = game.settle(outcome.q_hat)
    outcome.trace = game.transcript
    return GameResult(win, outcome, game.transcript)


def _run(flt, strategy, rng) -> AttackOutcome:
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    game = AdaptivityGame(flt, rng, strategy.budget)
    outcome = strategy(game)
    outcome.trace = game.transcript
    return outcome


def attack_cyclic(flt: Filter, s: int | None = None, epsilon: float | None = None,
                  budget_multiplier: float = 8, rng=None) -> AttackOutcome:
    """Query random candidates 2**s times each, up to budget_multiplier / eps**(2**s) candidates."""
    if flt.variant is not FilterVariant.CYCLIC:
        raise ParameterError("attack_cyclic needs a cyclic filter")
    s = flt.params.s if s is None else s
    epsilon = flt.epsilon_target if epsilon is None else epsilon
    repeats = 2 ** s
    strategy = RepeatedQueryStrategy(repeats, math.floor(budget_multiplier / epsilon ** repeats))
    return _run(flt, strategy, rng)


def attack_swapping(flt: Filter, b: int | None = None, epsilon: float | None = None,
                    budget_multiplier: float = 8, rng=None) -> AttackOutcome:
    """As :func:`attack_cyclic` with b repeats per candidate."""
    if flt.variant is not FilterVariant.SWAPPING:
        raise ParameterError("attack_swapping needs a swapping filter")
    b = flt.params.b if b is None else b
    epsilon = flt.epsilon_target if epsilon is None else epsilon
    strategy = RepeatedQueryStrategy(b, math.floor(budget_multiplier / epsilon ** b))
    return _run(flt, strategy, rng)


def attack_round_robin(flt: Filter, epsilon: float | None = None,
                       qd_factor: int = DEFAULT_QD_FACTOR, rng=None) -> AttackOutcome:
    if flt.variant is not FilterVariant.CUCKOOING or flt.params.b != 1:
        raise ParameterError("attack_round_robin needs a cuckooing filter with b == 1")
    p = flt.params
    epsilon = flt.epsilon_target if epsilon is None else epsilon
    strategy = RoundRobinStrategy(p.k, round_robin_query_count(p.k, p.N, p.n, epsilon), qd_factor)
    return _run(flt, strategy, rng)


# Trial harness ---------------------------------------------------------------

@dataclass
class AttackConfig:
    attack: str  # "cyclic" | "swapping" | "round_robin"
    n: int = 4096
    k: int = 2
    b: int = 1
    f: int = 4
    s: int = 1
    gamma: float | None = None  # default: b*k, which makes N == n
    budget_multiplier: float = 8
    qd_factor: int = DEFAULT_QD_FACTOR

    def build(self, seed) -> Filter:
        variant = {"cyclic": "cyclic", "swapping": "swapping", "round_robin": "cuckooing"}.get(
            self.attack)
        if variant is None:
            raise ParameterError(f"unknown attack {self.attack!r}")
        gamma = self.gamma if self.gamma is not None else float(self.b * self.k)
        s = self.s if variant == "cyclic" else 0
        return Filter.create(variant, n=self.n, k=self.k, b=self.b, f=self.f, s=s, gamma=gamma,
                             seed=seed)


@dataclass
class AttackTrial:
    trial: int
    seed: int
    outcome: AttackOutcome
    win: bool
    flt: Filter | None = None

    def row(self) -> dict:
        return {"trial": self.trial, "seed": self.seed, "outcome": self.outcome.result.value,
                "queries_used": self.outcome.queries_used,
                "qd_size": "" if self.outcome.qd_size is None else self.outcome.qd_size,
                "win": int(self.win)}


def loaded_filter(cfg: AttackConfig, seed) -> Filter:
    """Filter built from ``cfg`` holding n uniform random 64-bit elements."""
    flt = cfg.build(seed)
    rng = np.random.default_rng([int(seed), 1])
    keys = np.unique(rng.integers(0, 1 << 64, size=cfg.n + 64, dtype=np.uint64))
    flt.insert_many(rng.permutation(keys)[: cfg.n])
    return flt


def run_attack_trial(cfg: AttackConfig, trial: int, base_seed: int,
                     keep_filter: bool = False) -> AttackTrial:
    from .workload import trial_seed

    seed = trial_seed(base_seed, trial)
    flt = loaded_filter(cfg, seed)
    rng = np.random.default_rng([seed, 2])
    if cfg.attack == "cyclic":
        outcome = attack_cyclic(flt, budget_multiplier=cfg.budget_multiplier, rng=rng)
    elif cfg.attack == "swapping":
        outcome = attack_swapping(flt, budget_multiplier=cfg.budget_multiplier, rng=rng)
    else:
        outcome = attack_round_robin(flt, qd_factor=cfg.qd_factor, rng=rng)
    win = False
    if outcome.q_hat is not None:
        win = flt.observe(outcome.q_hat).present
    outcome.trace = None
    return AttackTrial(trial, seed, outcome, win, flt if keep_filter else None)


def run_attack_trials(cfg: AttackConfig, trials: int, base_seed: int,
                      keep_filters: bool = False) -> list[AttackTrial]:
    return [run_attack_trial(cfg, t, base_seed, keep_filters) for t in range(trials)]


def write_transcript(trials, fh) -> None:
    w = csv.DictWriter(fh, fieldnames=TRANSCRIPT_FIELDS, lineterminator="\n")
    w.writeheader()
    for t in trials:
        w.writerow(t.row())


# Oracles ---------------------------------------------------------------------

@dataclass(frozen=True)
class MutuallyUnfixableSet:
    """``members`` holds every element of Q that fully collides with ``target``
    under some hash index; each index is covered by at least one member."""

    target: int
    members: tuple[int, ...]


@dataclass
class RangeSets:
    per_index: list[set[tuple[int, int]]]
    unfixable: set[int]


def _full_hash_codes(family, keys: np.ndarray, beta: int) -> np.ndarray:
    loc = family.location_hash_many(beta, keys)
    fp = family.fingerprint_hash_many(keys, 0)
    return loc * (1 << family.fingerprint_bits) + fp


def find_mutually_unfixable(S, Q, family) -> list[MutuallyUnfixableSet]:
    """Every x in S that collides with some member of Q under every hash index.

    A full hash of x under index beta is (location_beta(x), fingerprint(x)).
    Results follow the order of S.
    """
    s_keys = keys_array(S)
    q_keys = np.unique(keys_array(Q))
    if len(s_keys) == 0 or len(q_keys) == 0:
        return []
    k = family.k
    s_codes = [_full_hash_codes(family, s_keys, beta) for beta in range(k)]
    q_codes = [_full_hash_codes(family, q_keys, beta) for beta in range(k)]
    hit = np.ones(len(s_keys), dtype=bool)
    for beta in range(k):
        hit &= np.isin(s_codes[beta], q_codes[beta])
    out = []
    for i in np.nonzero(hit)[0]:
        members = set()
        for beta in range(k):
            members.update(q_keys[q_codes[beta] == s_codes[beta][i]].tolist())
        out.append(MutuallyUnfixableSet(int(s_keys[i]), tuple(sorted(members))))
    return out


def range_sets(S, Q, family) -> RangeSets:
    q_keys = np.unique(keys_array(Q))
    fbits = family.fingerprint_bits
    per_index = []
    for beta in range(family.k):
        codes = _full_hash_codes(family, q_keys, beta)
        per_index.append({(int(c) >> fbits, int(c) & ((1 << fbits) - 1)) for c in codes})
    unfixable = {m.target for m in find_mutually_unfixable(S, q_keys, family)}
    return RangeSets(per_index, unfixable)


def cyclic_unfixable_queries(flt: Filter, count: int, rng, batch: int = 1 << 16,
                             max_batches: int = 200) -> np.ndarray:
    """Non-members that collide, in the current configuration, with some stored
    element under every selector value of that element's slot."""
    if flt.variant is not FilterVariant.CYCLIC:
        raise ParameterError("cyclic_unfixable_queries needs a cyclic filter")
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    fam, d, p = flt.family, flt.dict, flt.params
    found: list[int] = []
    for _ in range(max_batches):
        cand = rng.integers(0, 1 << 64, size=batch, dtype=np.uint64)
        cand = cand[~np.isin(cand, d.stored_keys())]
        good = np.zeros(len(cand), dtype=bool)
        for beta in range(p.k):
            bins = fam.location_hash_many(beta, cand)
            owners = d.owner[beta, bins, 0]
            occupied = owners >= 0
            xs = d.keys[np.where(occupied, owners, 0)]
            match = occupied.copy()
            for a in range(2 ** p.s):
                match &= fam.fingerprint_hash_many(cand, a) == fam.fingerprint_hash_many(xs, a)
            good |= match
        found.extend(cand[good].tolist())
        if len(found) >= count:
            return np.array(found[:count], dtype=np.uint64)
    raise ParameterError(f"found only {len(found)} of {count} unfixable queries")

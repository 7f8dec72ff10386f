# tests/unit/test_cache.py

from collections import Counter

import numpy as np
import pytest

from app.models import SemanticCache
from app.operations.embedding import Embedding
from app.schemas import CacheParams, PriorDistribution

ACTIONS = ("north", "south", "east")


def unit(*values) -> Embedding:
    v = np.asarray(values, dtype=float)
    return Embedding(v / np.linalg.norm(v))


def prior(*weights) -> PriorDistribution:
    return PriorDistribution.from_weights(ACTIONS, weights or (1, 1, 1))


def raw_params(k=500.0, delta=0.8, r=0.1) -> CacheParams:
    # skips the range check so eviction and refresh edge cases stay small
    return CacheParams.model_construct(k=k, delta=delta, r=r)


def make_cache(k=500.0, delta=0.8, r=0.1, dim=3) -> SemanticCache:
    return SemanticCache(raw_params(k, delta, r), dim=dim)


class ReferenceCache:
    """Brute-force list model of lookup, insert and LRU eviction."""

    def __init__(self, capacity: int, delta: float):
        self.capacity = capacity
        self.delta = delta
        self.entries = []  # dicts: key, sid, last_access, inserted_at

    def lookup(self, q: np.ndarray, now: int):
        best, best_sim = None, None
        for i, e in enumerate(self.entries):
            sim = float(np.dot(e["key"], q))
            if best is None or sim > best_sim or (sim == best_sim and (e["inserted_at"], i) > (self.entries[best]["inserted_at"], best)):
                best, best_sim = i, sim
        if best is not None and best_sim > self.delta:
            self.entries[best]["last_access"] = now
            return self.entries[best]["sid"]
        return None

    def insert(self, q: np.ndarray, sid: str, now: int):
        self.entries.append({"key": q, "sid": sid, "last_access": now, "inserted_at": now})
        evicted = None
        while len(self.entries) > self.capacity:
            idx = min(range(len(self.entries)), key=lambda i: (self.entries[i]["last_access"], self.entries[i]["inserted_at"]))
            evicted = self.entries.pop(idx)["sid"]
        return evicted


# ---------------------------------------------
# Parameter ranges
# ---------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [{"k": 99.9}, {"k": 1000.5}, {"delta": 0.49}, {"delta": 0.995}, {"r": 0.0}, {"r": 0.25}],
    ids=["k_low", "k_high", "delta_low", "delta_high", "r_zero", "r_high"],
)
def test_params_outside_box_rejected(kwargs):
    with pytest.raises(ValueError):
        CacheParams(**kwargs)


def test_params_box_corners_accepted():
    assert CacheParams(k=100, delta=0.5, r=0.01).effective_capacity == 100
    assert CacheParams(k=1000, delta=0.99, r=0.2).effective_capacity == 1000


# ---------------------------------------------
# Lookup
# ---------------------------------------------


def test_empty_cache_misses():
    cache = make_cache()
    result = cache.lookup(unit(1, 0, 0), now=0)
    assert not result.hit
    assert cache.misses == 1 and cache.hits == 0
    assert cache.hit_rate == 0.0


def test_identical_key_hits_with_similarity_one():
    cache = make_cache(delta=0.8)
    p = prior(3, 1, 1)
    cache.insert(unit(1, 0, 0), p, now=0, source_state_id="s0")
    result = cache.lookup(unit(1, 0, 0), now=1)
    assert result.hit
    assert result.similarity == pytest.approx(1.0)
    assert result.prior == p
    assert result.entry.hits == 1 and result.entry.last_access == 1


def test_best_entry_above_threshold_wins():
    """
    Entries at similarity 0.85 and 0.95 to the query with delta 0.9.

    Steps:
    1. Build the two keys in the plane of the query.
    2. Look up the query; only the 0.95 entry clears the threshold.
    """
    cache = make_cache(delta=0.9)
    for sid, sim in (("low", 0.85), ("high", 0.95)):
        cache.insert(unit(sim, np.sqrt(1 - sim**2), 0), prior(), now=0, source_state_id=sid)
    result = cache.lookup(unit(1, 0, 0), now=1)
    assert result.hit and result.entry.source_state_id == "high"
    assert result.similarity == pytest.approx(0.95)


def test_threshold_is_strict():
    cache = make_cache(delta=0.8)
    cache.insert(unit(0.8, 0.6, 0), prior(), now=0)
    result = cache.lookup(unit(1, 0, 0), now=1)
    sim = result.similarity
    # the stored similarity is 0.8 up to rounding; a hit requires strictly more than delta
    assert result.hit == (sim > 0.8)


def test_tie_breaks_toward_latest_insert():
    cache = make_cache()
    cache.insert(unit(1, 0, 0), prior(1, 1, 1), now=0, source_state_id="old")
    cache.insert(unit(1, 0, 0), prior(2, 1, 1), now=5, source_state_id="new")
    assert cache.lookup(unit(1, 0, 0), now=6).entry.source_state_id == "new"


def test_peek_has_no_side_effects():
    cache = make_cache()
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="s")
    entry, sim = cache.peek(unit(1, 0, 0))
    assert entry.source_state_id == "s" and sim == pytest.approx(1.0)
    assert (cache.hits, cache.misses, entry.last_access, entry.hits) == (0, 0, 0, 0)
    miss, _ = cache.peek(unit(0, 1, 0))
    assert miss is None


def test_wrong_key_dimension_rejected():
    cache = make_cache(dim=3)
    with pytest.raises(ValueError, match="dimension"):
        cache.insert(Embedding(np.array([1.0, 0.0])), prior(), now=0)


def test_invalid_prior_rejected():
    cache = make_cache()
    with pytest.raises(ValueError):
        cache.insert(unit(1, 0, 0), {"north": 1.0}, now=0)


# ---------------------------------------------
# Eviction
# ---------------------------------------------


def test_capacity_two_evicts_first_inserted():
    cache = make_cache(k=2)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="a")
    cache.insert(unit(0, 1, 0), prior(), now=1, source_state_id="b")
    evicted = cache.insert(unit(0, 0, 1), prior(), now=2, source_state_id="c")
    assert evicted.source_state_id == "a"
    assert [e.source_state_id for e in cache.entries] == ["b", "c"]


def test_hit_refreshes_recency():
    cache = make_cache(k=2)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="a")
    cache.insert(unit(0, 1, 0), prior(), now=1, source_state_id="b")
    assert cache.lookup(unit(1, 0, 0), now=2).hit
    evicted = cache.insert(unit(0, 0, 1), prior(), now=3, source_state_id="c")
    assert evicted.source_state_id == "b"


def test_large_capacity_never_evicts(rng):
    cache = make_cache(k=1000)
    for i in range(10):
        assert cache.insert(unit(*rng.normal(size=3)), prior(), now=i) is None
    assert len(cache) == 10


@pytest.mark.parametrize("k, expected", [(2.4, 2), (2.5, 3), (0.2, 1)], ids=["round_down", "half_up", "at_least_one"])
def test_effective_capacity_rounding(k, expected):
    assert raw_params(k=k).effective_capacity == expected


def test_shrinking_capacity_evicts_immediately():
    cache = make_cache(k=4)
    for i, key in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0)]):
        cache.insert(unit(*key), prior(), now=i, source_state_id=str(i))
    evicted = cache.set_params(raw_params(k=2))
    assert [e.source_state_id for e in evicted] == ["0", "1"]
    assert len(cache) == 2


# ---------------------------------------------
# Oracle equivalence and threshold monotonicity
# ---------------------------------------------


def run_workload(cache: SemanticCache, keys: np.ndarray, order: np.ndarray):
    decisions = []
    for now, i in enumerate(order):
        q = Embedding(keys[i])
        result = cache.lookup(q, now)
        if result.hit:
            decisions.append(("hit", result.entry.source_state_id))
        else:
            evicted = cache.insert(q, prior(), now, source_state_id=f"k{i}@{now}")
            decisions.append(("miss", evicted.source_state_id if evicted else None))
    return decisions


def test_matches_brute_force_reference(rng):
    """
    1000 lookups over a pool of 40 keys with capacity 8.

    Steps:
    1. Replay the same workload through the cache and the reference model.
    2. Every hit/miss decision and every evicted entry must agree.
    """
    keys = rng.normal(size=(40, 3))
    keys /= np.linalg.norm(keys, axis=1, keepdims=True)
    order = rng.integers(0, 40, size=1000)

    cache = make_cache(k=8, delta=0.9)
    ref = ReferenceCache(capacity=8, delta=0.9)
    expected = []
    for now, i in enumerate(order):
        sid = ref.lookup(keys[i], now)
        if sid is not None:
            expected.append(("hit", sid))
        else:
            expected.append(("miss", ref.insert(keys[i], f"k{i}@{now}", now)))

    assert run_workload(cache, keys, order) == expected
    assert cache.hits + cache.misses == 1000
    assert len(cache) <= 8


def test_hit_count_monotone_in_threshold(rng):
    keys = rng.normal(size=(30, 4))
    keys /= np.linalg.norm(keys, axis=1, keepdims=True)
    queries = rng.normal(size=(500, 4))
    queries /= np.linalg.norm(queries, axis=1, keepdims=True)
    hits = []
    for delta in (0.5, 0.7, 0.9, 0.99):
        cache = make_cache(k=1000, delta=delta, dim=4)
        for i, key in enumerate(keys):
            cache.insert(Embedding(key.copy()), prior(), now=i)
        for now, q in enumerate(queries, start=len(keys)):
            cache.lookup(Embedding(q.copy()), now)
        hits.append(cache.hits)
    assert hits == sorted(hits, reverse=True)
    assert hits[0] > hits[-1]


# ---------------------------------------------
# Refresh
# ---------------------------------------------


class CountingProvider:
    def __init__(self):
        self.calls = Counter()

    def __call__(self, state_id):
        self.calls[state_id] += 1
        return prior(1, 2, 3)


def test_zero_refresh_rate_never_refreshes(rng):
    cache = make_cache(r=0.0)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="s")
    provider = CountingProvider()
    assert sum(cache.refresh_step({"s": 1.0}, provider, rng, now=t) for t in range(200)) == 0
    assert not provider.calls


def test_forced_refresh_replaces_prior():
    cache = make_cache(r=1.0)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="s")
    provider = CountingProvider()
    assert cache.refresh_step({"s": 1.0}, provider, np.random.default_rng(0), now=7) == 1
    entry = cache.entries[0]
    assert entry.prior == prior(1, 2, 3)
    assert entry.inserted_at == 7 and entry.last_access >= entry.inserted_at
    assert cache.refreshes == 1


def test_refresh_picks_highest_visitation_times_age():
    """Scores 0.5 * 10 = 5 and 0.9 * 2 = 1.8: the first entry is refreshed."""
    cache = make_cache(r=1.0)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="a")
    cache.insert(unit(0, 1, 0), prior(), now=8, source_state_id="b")
    provider = CountingProvider()
    cache.refresh_step({"a": 0.5, "b": 0.9}, provider, np.random.default_rng(0), now=10)
    assert provider.calls == Counter({"a": 1})


def test_uniform_refresh_strategy_spreads_over_entries():
    cache = make_cache(r=1.0)
    for i in range(3):
        cache.insert(unit(*np.eye(3)[i]), prior(), now=0, source_state_id=str(i))
    provider = CountingProvider()
    rng = np.random.default_rng(3)
    for t in range(300):
        cache.refresh_step({}, provider, rng, now=t + 1, strategy="uniform")
    assert set(provider.calls) == {"0", "1", "2"}


def test_provider_failure_leaves_entry_unchanged():
    cache = make_cache(r=1.0)
    p = prior(5, 1, 1)
    cache.insert(unit(1, 0, 0), p, now=0, source_state_id="s")

    def failing(state_id):
        raise RuntimeError("provider down")

    with pytest.raises(RuntimeError):
        cache.refresh_step({"s": 1.0}, failing, np.random.default_rng(0), now=3)
    assert cache.entries[0].prior == p and cache.entries[0].inserted_at == 0


def test_negative_visitation_rejected():
    cache = make_cache(r=1.0)
    cache.insert(unit(1, 0, 0), prior(), now=0, source_state_id="s")
    with pytest.raises(ValueError, match="negative visitation"):
        cache.refresh_step({"s": -1.0}, CountingProvider(), np.random.default_rng(0), now=1)


def test_snapshot_export(tmp_path):
    cache = make_cache()
    cache.insert(unit(1, 0, 0), prior(2, 1, 1), now=3, source_state_id="s")
    path = tmp_path / "cache.jsonl"
    cache.export_jsonl(path)
    lines = path.read_text().splitlines()
    assert len(lines) == 1
    record = cache.snapshot()[0]
    assert record.source_state_id == "s" and record.inserted_at == 3
    assert record.to_prior() == prior(2, 1, 1)

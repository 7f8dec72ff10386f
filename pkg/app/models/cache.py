# app/models/cache.py

"""
Semantic prior cache.

Entries pair an embedding key with the prior that was fetched for the state the
key came from. Lookup is an exhaustive cosine scan: the best-scoring entry is a
hit only when its similarity is strictly above ``delta``. Capacity is
``round(K)`` and the least recently used entry goes first.
"""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping

import numpy as np

from app.operations.embedding import Embedding
from app.schemas import CacheEntryRecord, CacheParams, PriorDistribution

logger = logging.getLogger("app.cache")


@dataclass
class CacheEntry:
    key: Embedding
    prior: PriorDistribution
    last_access: int
    inserted_at: int
    hits: int
    source_state_id: str

    def to_record(self) -> CacheEntryRecord:
        return CacheEntryRecord(
            key=[float(v) for v in self.key.values],
            prior=dict(self.prior.probs),
            last_access=self.last_access,
            inserted_at=self.inserted_at,
            hits=self.hits,
            source_state_id=self.source_state_id,
        )


@dataclass(frozen=True)
class LookupResult:
    hit: bool
    prior: PriorDistribution | None = None
    similarity: float | None = None
    entry: CacheEntry | None = None


class SemanticCache:
    def __init__(self, params: CacheParams, dim: int):
        self.params = params
        self.dim = dim
        self.entries: list[CacheEntry] = []
        self._keys = np.empty((0, dim), dtype=np.float64)
        self.hits = 0
        self.misses = 0
        self.refreshes = 0
        self.evictions = 0

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0

    def _best(self, query: Embedding) -> tuple[int | None, float | None]:
        if not self.entries:
            return None, None
        sims = self._keys @ query.values
        best = sims.max()
        ties = np.flatnonzero(sims == best)
        # most recently inserted wins a tie
        idx = max(ties, key=lambda i: (self.entries[i].inserted_at, i))
        return int(idx), float(best)

    def peek(self, query: Embedding) -> tuple[CacheEntry | None, float | None]:
        """Selection without side effects: no counters, no recency update."""
        idx, sim = self._best(query)
        if idx is None or not sim > self.params.delta:
            return None, sim
        return self.entries[idx], sim

    def lookup(self, query: Embedding, now: int) -> LookupResult:
        idx, sim = self._best(query)
        if idx is not None and sim > self.params.delta:
            entry = self.entries[idx]
            entry.last_access = now
            entry.hits += 1
            self.hits += 1
            return LookupResult(hit=True, prior=entry.prior, similarity=sim, entry=entry)
        self.misses += 1
        return LookupResult(hit=False, similarity=sim)

    def insert(
        self, key: Embedding, prior: PriorDistribution, now: int, source_state_id: str = ""
    ) -> CacheEntry | None:
        """Append an entry; return the entry evicted to respect capacity, if any."""
        if not isinstance(prior, PriorDistribution):
            raise ValueError("cache entries need a valid PriorDistribution")
        if key.dim != self.dim:
            raise ValueError(f"key dimension {key.dim} does not match cache dimension {self.dim}")
        self.entries.append(
            CacheEntry(key=key, prior=prior, last_access=now, inserted_at=now, hits=0, source_state_id=source_state_id)
        )
        self._keys = np.vstack([self._keys, key.values[None, :]])
        evicted = self._evict_to_capacity()
        return evicted[-1] if evicted else None

    def _evict_to_capacity(self) -> list[CacheEntry]:
        evicted = []
        capacity = self.params.effective_capacity
        while len(self.entries) > capacity:
            idx = min(
                range(len(self.entries)),
                key=lambda i: (self.entries[i].last_access, self.entries[i].inserted_at),
            )
            entry = self.entries.pop(idx)
            self._keys = np.delete(self._keys, idx, axis=0)
            self.evictions += 1
            evicted.append(entry)
            logger.debug("evicted %s (last_access=%d)", entry.source_state_id, entry.last_access)
        return evicted

    def set_params(self, params: CacheParams) -> list[CacheEntry]:
        self.params = params
        return self._evict_to_capacity()

    def refresh_step(
        self,
        visitation: Mapping[str, float],
        reprovider: Callable[[str], PriorDistribution],
        rng: np.random.Generator,
        now: int,
        strategy: str = "visitation",
    ) -> int:
        """With probability r, re-query the prior of one entry and replace it in place."""
        if rng.random() >= self.params.r or not self.entries:
            return 0
        if strategy == "visitation":
            scores = []
            for entry in self.entries:
                mu = visitation.get(entry.source_state_id, 0.0)
                if mu < 0:
                    raise ValueError(f"negative visitation density for {entry.source_state_id}")
                scores.append(mu * (now - entry.inserted_at))
            idx = int(np.argmax(scores))
        elif strategy == "uniform":
            idx = int(rng.integers(len(self.entries)))
        else:
            raise ValueError(f"unknown refresh strategy: {strategy}")

        entry = self.entries[idx]
        prior = reprovider(entry.source_state_id)
        entry.prior = prior
        entry.inserted_at = now
        entry.last_access = max(entry.last_access, now)
        self.refreshes += 1
        return 1

    def snapshot(self) -> list[CacheEntryRecord]:
        return [e.to_record() for e in self.entries]

    def export_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for record in self.snapshot():
                fh.write(json.dumps(record.model_dump(), sort_keys=True) + "\n")

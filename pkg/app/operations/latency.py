# app/operations/latency.py

from dataclasses import asdict, dataclass

import numpy as np

from app.schemas import LatencyModel, RunMetrics


@dataclass(frozen=True)
class LatencySummary:
    hit_rate: float
    weighted_mean_ms: float
    mean_ms: float
    median_ms: float
    p95_ms: float
    steps: int

    def as_row(self) -> dict:
        return asdict(self)


def weighted_latency(h: float, model: LatencyModel) -> float:
    return h * model.hit_cost_ms + (1.0 - h) * model.miss_cost_ms


def latency_report(metrics: RunMetrics, model: LatencyModel) -> LatencySummary:
    """Virtual-latency summary: hit-rate weighted mean plus the per-step distribution."""
    lookups = metrics.hits + metrics.misses
    if lookups == 0:
        raise ValueError("latency report needs at least one cache lookup or provider query")
    h = metrics.hits / lookups
    weighted = weighted_latency(h, model)
    lat = np.asarray(metrics.step_latencies_ms, dtype=float)
    if lat.size == 0:
        mean = median = p95 = weighted
    else:
        mean, median, p95 = float(lat.mean()), float(np.median(lat)), float(np.percentile(lat, 95))
    return LatencySummary(
        hit_rate=h,
        weighted_mean_ms=weighted,
        mean_ms=mean,
        median_ms=median,
        p95_ms=p95,
        steps=int(lat.size),
    )

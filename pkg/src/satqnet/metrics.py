"""End-to-end path metrics, secure key rate and Monte Carlo aggregates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .channel import qber
from .routing import Path, edge_key


class MissingEdgeError(KeyError):
    """A path references an edge absent from the registry."""


@dataclass(frozen=True)
class PathMetrics:
    """Metrics of one routed path at one step."""

    f_eff: float
    r_eff_bps: float
    key_rate_bps: float
    hops: int
    qber_path: float
    qber_exceeded: bool


@dataclass(frozen=True)
class AggregateStats:
    """Means and sample deviations over a group of path records."""

    mean_f_eff: float
    mean_r_eff_bps: float
    mean_path_len: float
    perf_index: float
    count: int
    std_f_eff: float
    std_r_eff_bps: float
    std_path_len: float


def path_fidelity(path: Path, links) -> float:
    """Product of edge fidelities along the path; empty path gives 1."""
    f = 1.0
    for a, b in zip(path, path[1:]):
        e = edge_key(a, b)
        if e not in links:
            raise MissingEdgeError(e)
        f *= links[e].fidelity
    return f


def path_rate(path: Path, links) -> float:
    """Bottleneck (minimum) edge rate along a non-empty path."""
    if len(path) < 2:
        raise ValueError("path_rate requires a path with at least one edge")
    rates = []
    for a, b in zip(path, path[1:]):
        e = edge_key(a, b)
        if e not in links:
            raise MissingEdgeError(e)
        rates.append(links[e].rate_bps)
    return min(rates)


def secure_key_rate(f_eff: float, r_eff_bps: float) -> float:
    """Secure key rate R_eff * (1 - 2 Q(F_eff)), which reduces to R_eff * F_eff.

    With Q = (1 - F)/2 the error penalty equals F exactly; the reduced
    product form is used so the identity holds to machine precision.
    """
    if not 0 <= f_eff <= 1:
        raise ValueError("f_eff must be in [0, 1]")
    if r_eff_bps < 0:
        raise ValueError("r_eff_bps must be >= 0")
    return max(r_eff_bps * f_eff, 0.0)


def path_metrics(path: Path, links, q_max: float) -> PathMetrics:
    """Bundle end-to-end fidelity, rate, key rate and QBER compliance."""
    f_eff = path_fidelity(path, links)
    r_eff = path_rate(path, links)
    q = qber(f_eff)
    return PathMetrics(
        f_eff=f_eff,
        r_eff_bps=r_eff,
        key_rate_bps=secure_key_rate(f_eff, r_eff),
        hops=len(path) - 1,
        qber_path=q,
        qber_exceeded=q > q_max,
    )


def performance_index(stats: AggregateStats) -> float:
    """Fidelity-rate efficiency normalized by mean path length."""
    if stats.mean_path_len <= 0:
        raise ValueError("performance index undefined for mean path length <= 0")
    return stats.mean_f_eff * stats.mean_r_eff_bps / stats.mean_path_len


def _mean_std(values: list[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate(records) -> AggregateStats:
    """Means and sample std over path records; raises on an empty group."""
    records = list(records)
    if not records:
        raise ValueError("aggregate requires at least one record")
    mean_f, std_f = _mean_std([r.f_eff for r in records])
    mean_r, std_r = _mean_std([r.r_eff_bps for r in records])
    mean_l, std_l = _mean_std([float(r.hops) for r in records])
    perf = mean_f * mean_r / mean_l if mean_l > 0 else float("nan")
    return AggregateStats(
        mean_f_eff=mean_f,
        mean_r_eff_bps=mean_r,
        mean_path_len=mean_l,
        perf_index=perf,
        count=len(records),
        std_f_eff=std_f,
        std_r_eff_bps=std_r,
        std_path_len=std_l,
    )


def aggregate_grouped(tagged_records, key_names: tuple[str, ...]):
    """Aggregate (tag_tuple, record) pairs per tag, in sorted tag order."""
    groups: dict[tuple, list] = {}
    for tag, record in tagged_records:
        if len(tag) != len(key_names):
            raise ValueError("tag length must match key_names")
        groups.setdefault(tuple(tag), []).append(record)
    return {tag: aggregate(groups[tag]) for tag in sorted(groups)}

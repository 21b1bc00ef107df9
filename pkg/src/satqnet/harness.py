"""Closed-loop simulation episodes, Monte Carlo driver and sweeps.

Each step runs the fixed phase ordering sense -> adapt -> route ->
recover: orbital propagation and channel sampling refresh link state,
dispersion statistics recalibrate the weight vector, the sampled
source/destination demands are routed over the feasible subgraph, and
the recovery pass purifies, excludes and smooths trust afterwards.

All randomness derives from a per-episode seed sequence split into
per-purpose substreams, so toggling one noise source never shifts the
draws of another and episodes can run in parallel deterministically.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import link_state as ls
from . import metrics as mt
from . import orbital as orb
from . import routing as rt
from .config import ScenarioConfig

REGIMES = tuple(ch.REGIME_DEFAULTS)

ROUTE_COLUMNS = [
    "run",
    "t",
    "s",
    "d",
    "no_path",
    "path",
    "hops",
    "cost",
    "f_eff",
    "r_eff_bps",
    "key_rate_bps",
    "qber",
    "qber_exceeded",
    "failover_used",
]

SWEEP_COLUMNS = [
    "sweep",
    "n_nodes",
    "regime",
    "sigma_fade",
    "rho",
    "loss_model",
    "mean_f_eff",
    "std_f_eff",
    "mean_r_eff_bps",
    "std_r_eff_bps",
    "mean_path_len",
    "std_path_len",
    "mean_key_rate_bps",
    "norm_key_rate",
    "perf_index",
    "availability",
    "qber_ok_frac",
    "n_runs",
    "n_routed",
]

LINK_COLUMNS = ["run", "t", "i", "j", "fidelity", "rate_bps", "trust", "transmittance", "flagged"]


@dataclass
class EpisodeRecord:
    """All rows and traces produced by one simulation episode."""

    run_index: int
    route_rows: list[dict]
    weight_trace: list[rt.WeightVector]
    link_rows: list[dict] = field(default_factory=list)
    clamp_count: int = 0
    flag_count: int = 0
    density_per_km3: float = 0.0

    @property
    def routed_rows(self) -> list[dict]:
        return [r for r in self.route_rows if not r["no_path"]]

    @property
    def availability(self) -> float:
        if not self.route_rows:
            return 0.0
        return len(self.routed_rows) / len(self.route_rows)


def _episode_streams(base_seed: int, run_index: int):
    """Independent per-purpose generators for one episode."""
    root = np.random.SeedSequence([base_seed, run_index])
    build, fade, trust, zeta, pairs = (np.random.default_rng(s) for s in root.spawn(5))
    return build, fade, trust, zeta, pairs


def _sample_pair(rng: np.random.Generator, n: int) -> tuple[int, int]:
    s = int(rng.integers(n))
    d = int(rng.integers(n - 1))
    if d >= s:
        d += 1
    return s, d


def run_episode(config: ScenarioConfig, run_index: int = 0) -> EpisodeRecord:
    """Run one closed-loop episode; fully determined by (config, run_index)."""
    rng_build, rng_fade, rng_trust, rng_zeta, rng_pairs = _episode_streams(
        config.base_seed, run_index
    )
    params = config.channel_params()
    constellation = orb.build_constellation(
        n_nodes=config.n_nodes,
        altitude_km=config.altitude_km,
        inclination_rad=config.inclination_rad,
        planes=config.resolved_planes,
        min_spacing_km=config.min_spacing_km,
        rng=rng_build,
    )
    density = orb.volumetric_density(constellation, config.shell_thickness_km)

    registry: dict[rt.Edge, ls.LinkState] = {}
    route_cache: dict[tuple[int, int], rt.RoutePair] = {}
    weights = rt.WeightVector(1.0, 1.0, 0.2, 0.6)
    clamp_stats = ch.ClampStats()
    prev_edges: frozenset[rt.Edge] = frozenset()
    rows: list[dict] = []
    link_rows: list[dict] = []
    weight_trace: list[rt.WeightVector] = []
    flag_count = 0

    for step in range(config.n_steps):
        t = step * config.step_s

        # --- sense: geometry, channel draws, link-state refresh ---
        state = orb.propagate(constellation, t)
        vg = orb.visibility_graph(state, config.d_max_km)
        edges = list(vg.edges)  # lexicographic order by construction
        cur_edges = frozenset(edges)
        for e in sorted(prev_edges - cur_edges):
            registry.pop(e, None)

        for link in registry.values():
            if link.excluded_until is not None and t >= link.excluded_until:
                link.excluded_until = None

        if edges:
            dist = np.array([vg.edges[e] for e in edges])
            loss = ch.total_loss_db(dist, params)
            eta = ch.sample_transmittance(
                loss, params.sigma_fade, rng_fade, clamp_stats, params.db_divisor
            )
            fid = ch.link_fidelity(loss, params)
            rate = ch.link_rate(eta, fid, params)
            q = ch.qber(fid)
            for k, e in enumerate(edges):
                link = registry.get(e)
                if link is None:
                    trust0 = rng_trust.uniform(config.trust_init_low, config.trust_init_high)
                    link = ls.LinkState(e[0], e[1], trust=trust0, window=config.window)
                    registry[e] = link
                ls.update_link(
                    link,
                    ch.LinkSample(
                        loss_total_db=float(loss[k]),
                        transmittance=float(eta[k]),
                        fidelity=float(fid[k]),
                        rate_bps=float(rate[k]),
                        qber=float(q[k]),
                    ),
                    t,
                )
                ls.evolve_trust(link, rng_trust, config.trust_sigma)
                _, _, flagged = ls.deviation_flags(link, config.eps_f, config.eps_r)
                if flagged:
                    flag_count += 1

        # --- adapt: dispersion statistics drive the weight update ---
        if edges:
            stats = ls.network_dispersion(registry[e] for e in edges)
        else:
            stats = ls.DispersionStats(0.0, 0.0)
        weights = rt.update_weights(weights, stats, t, rng_zeta)
        weight_trace.append(weights)

        # --- route: feasibility, costs, demand service with failover ---
        active = [registry[e] for e in edges]
        if edges:
            rate_ref = float(np.median([registry[e].rate_bps for e in edges]))
        else:
            rate_ref = 0.0
        feasible = rt.feasible_subgraph(active, config.f_min, config.t_min)
        cost_edges = {
            e: rt.link_cost(
                registry[e], weights, vg.edges[e], config.d_max_km,
                rate_ref, config.rate_cost_cap,
            )
            for e in edges
            if e in feasible
        }
        usable = frozenset(cost_edges)

        for _ in range(config.pairs_per_step):
            s, d = _sample_pair(rng_pairs, config.n_nodes)
            failover_used = False
            served: rt.Path | None = None
            cost: float | None = None

            cached = route_cache.get((s, d))
            if cached is not None:
                cached_edges = set(rt.path_edges(cached.primary))
                if cached.alternate is not None:
                    cached_edges |= set(rt.path_edges(cached.alternate))
                broken = {e for e in cached_edges if e not in usable}
                if broken & set(rt.path_edges(cached.primary)):
                    surviving = rt.failover(cached, broken)
                    if surviving is not None and surviving != cached.primary:
                        served = surviving
                        cost = rt.recompute_path_cost(cost_edges, served)
                        failover_used = True
                    # broken pair either way: next occurrence recomputes fresh
                    del route_cache[(s, d)]

            if served is None:
                pair_route = rt.route_pair(
                    cost_edges, s, d, edge_disjoint=config.second_path_edge_disjoint
                )
                if pair_route is not None:
                    route_cache[(s, d)] = pair_route
                    served = pair_route.primary
                    cost = pair_route.primary_cost

            if served is None:
                rows.append(
                    {
                        "run": run_index,
                        "t": t,
                        "s": s,
                        "d": d,
                        "no_path": True,
                        "path": "",
                        "hops": None,
                        "cost": None,
                        "f_eff": None,
                        "r_eff_bps": None,
                        "key_rate_bps": None,
                        "qber": None,
                        "qber_exceeded": None,
                        "failover_used": False,
                    }
                )
                continue

            pm = mt.path_metrics(served, registry, config.q_max)
            rows.append(
                {
                    "run": run_index,
                    "t": t,
                    "s": s,
                    "d": d,
                    "no_path": False,
                    "path": "-".join(str(n) for n in served),
                    "hops": pm.hops,
                    "cost": cost,
                    "f_eff": pm.f_eff,
                    "r_eff_bps": pm.r_eff_bps,
                    "key_rate_bps": pm.key_rate_bps,
                    "qber": pm.qber_path,
                    "qber_exceeded": pm.qber_exceeded,
                    "failover_used": failover_used,
                }
            )

        # --- recover: purification, exclusion, trust smoothing ---
        rt.recover(registry, config.f_min, t, config.exclusion_s)

        if config.record_link_snapshots and edges:
            for row in ls.snapshot_rows(
                (registry[e] for e in edges), t, config.eps_f, config.eps_r
            ):
                row["run"] = run_index
                link_rows.append(row)

        prev_edges = cur_edges

    return EpisodeRecord(
        run_index=run_index,
        route_rows=rows,
        weight_trace=weight_trace,
        link_rows=link_rows,
        clamp_count=clamp_stats.count,
        flag_count=flag_count,
        density_per_km3=density,
    )


def _run_episode_task(args: tuple[ScenarioConfig, int]) -> EpisodeRecord:
    return run_episode(args[0], args[1])


def run_monte_carlo(
    config: ScenarioConfig, parallel: int = 1
) -> list[EpisodeRecord]:
    """Run the configured number of episodes; order is by run index."""
    tasks = [(config, k) for k in range(config.n_mc)]
    if parallel > 1 and config.n_mc > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(_run_episode_task, tasks))
    else:
        records = [run_episode(cfg, k) for cfg, k in tasks]
    return records


def _route_row_metrics(row: dict) -> mt.PathMetrics:
    return mt.PathMetrics(
        f_eff=row["f_eff"],
        r_eff_bps=row["r_eff_bps"],
        key_rate_bps=row["key_rate_bps"],
        hops=row["hops"],
        qber_path=row["qber"],
        qber_exceeded=row["qber_exceeded"],
    )


def summarize(
    records: list[EpisodeRecord], config: ScenarioConfig, sweep: str = "run"
) -> dict:
    """Reduce Monte Carlo episodes to one aggregate table row."""
    routed = [_route_row_metrics(r) for rec in records for r in rec.routed_rows]
    total_rows = sum(len(rec.route_rows) for rec in records)
    row: dict = {
        "sweep": sweep,
        "n_nodes": config.n_nodes,
        "regime": config.regime,
        "sigma_fade": config.resolved_sigma_fade,
        "rho": records[0].density_per_km3 if records else 0.0,
        "loss_model": config.loss_model,
        "n_runs": len(records),
        "n_routed": len(routed),
        "availability": (len(routed) / total_rows) if total_rows else 0.0,
        "norm_key_rate": None,
    }
    if routed:
        agg = mt.aggregate(routed)
        mean_k = sum(r.key_rate_bps for r in routed) / len(routed)
        qber_ok = sum(1 for r in routed if not r.qber_exceeded) / len(routed)
        row.update(
            {
                "mean_f_eff": agg.mean_f_eff,
                "std_f_eff": agg.std_f_eff,
                "mean_r_eff_bps": agg.mean_r_eff_bps,
                "std_r_eff_bps": agg.std_r_eff_bps,
                "mean_path_len": agg.mean_path_len,
                "std_path_len": agg.std_path_len,
                "mean_key_rate_bps": mean_k,
                "perf_index": mt.performance_index(agg),
                "qber_ok_frac": qber_ok,
            }
        )
    else:
        row.update(
            {
                "mean_f_eff": None,
                "std_f_eff": None,
                "mean_r_eff_bps": None,
                "std_r_eff_bps": None,
                "mean_path_len": None,
                "std_path_len": None,
                "mean_key_rate_bps": None,
                "perf_index": None,
                "qber_ok_frac": None,
            }
        )
    return row


def sweep_nodes(
    base: ScenarioConfig,
    sizes: tuple[int, ...] = (25, 50, 100),
    regimes: tuple[str, ...] = REGIMES,
    parallel: int = 1,
) -> list[dict]:
    """One Monte Carlo cell per (size, regime); rows in sweep order."""
    rows = []
    for size in sizes:
        for regime in regimes:
            cfg = base.replace(n_nodes=size, regime=regime, atm_loss_db=None, sigma_fade=None)
            records = run_monte_carlo(cfg, parallel)
            rows.append(summarize(records, cfg, sweep="nodes"))
    return rows


def sweep_fading(
    base: ScenarioConfig,
    sigmas: tuple[float, ...] = (0.02, 0.04, 0.06, 0.08, 0.10, 0.12),
    parallel: int = 1,
) -> list[dict]:
    """Sweep the fading deviation at fixed regime attenuation.

    Key rates are reported normalized to the smallest sigma's mean.
    """
    rows = []
    for sigma in sigmas:
        cfg = base.replace(sigma_fade=sigma)
        records = run_monte_carlo(cfg, parallel)
        rows.append(summarize(records, cfg, sweep="fading"))
    reference = None
    for row in sorted(rows, key=lambda r: r["sigma_fade"]):
        if row["mean_key_rate_bps"] is not None:
            reference = row["mean_key_rate_bps"]
            break
    for row in rows:
        if reference and row["mean_key_rate_bps"] is not None:
            row["norm_key_rate"] = row["mean_key_rate_bps"] / reference
    return rows


def nodes_for_density(base: ScenarioConfig, density_per_km3: float) -> int:
    """Invert the shell-volume density for the fixed default shell."""
    radius = orb.EARTH_RADIUS_KM + base.altitude_km
    volume = orb.shell_volume_km3(radius, base.shell_thickness_km)
    n = round(density_per_km3 * volume)
    return max(2, int(n))


def sweep_density(
    base: ScenarioConfig,
    node_counts: tuple[int, ...] = (12, 18, 27, 40),
    parallel: int = 1,
) -> list[dict]:
    """Sweep volumetric density by scaling node count at the fixed shell."""
    rows = []
    for n in node_counts:
        cfg = base.replace(n_nodes=n)
        records = run_monte_carlo(cfg, parallel)
        rows.append(summarize(records, cfg, sweep="density"))
    return rows


# --- deterministic text output -------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def write_csv(path: str, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(c)) for c in columns])


def write_summary_json(path: str, config: ScenarioConfig, rows: list[dict]) -> None:
    payload = {"config": config.resolved_dict(), "rows": rows}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_id(config: ScenarioConfig, extra: str = "") -> str:
    """Timestamp-free identifier derived from the resolved config."""
    blob = json.dumps(config.resolved_dict(), sort_keys=True) + extra
    return hashlib.sha256(blob.encode()).hexdigest()[:10]

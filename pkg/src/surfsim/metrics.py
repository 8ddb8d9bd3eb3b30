"""Evaluation metrics computed from a SimTrace.

All metrics are pure post-processing over the trace, so recomputing from a
serialized trace log reproduces a report exactly. Hop indexing follows the
message's hop budget: a reception's hop is the origination TTL minus the TTL
carried by the received copy.
"""

import math
from dataclasses import dataclass, field

from .config import ScenarioConfig, from_dict
from .errors import AggregationError, ConfigError, UndefinedRatioError
from .topology import Topology, neighbors
from .trace import SimTrace


@dataclass(frozen=True)
class MetricsReport:
    strategy: str
    channel_count: int
    node_count: int
    ttl: int
    seed: int
    per_node_delivery: dict = field(default_factory=dict)   # node -> fraction
    accumulative_receivers: tuple = ()                       # indexed by hop
    competitors: int | None = None
    contention_ratio: float | None = None

    def run_key(self) -> tuple:
        return (self.strategy, self.channel_count, self.node_count, self.ttl,
                self.competitors)


def _receptions(trace: SimTrace) -> dict[int, dict[int, int]]:
    """node -> {msg -> hop of first reception}."""
    got: dict[int, dict[int, int]] = {}
    for rec in trace.slots:
        for rx in rec.rx:
            got.setdefault(rx.node, {})[rx.msg] = rx.hop
    return got


def delivery_ratio(trace: SimTrace) -> dict[int, float]:
    """Per non-origin node: distinct messages received over messages originated."""
    total = len(trace.messages)
    if total == 0:
        raise UndefinedRatioError("no messages were originated in this trace")
    origins = {m.origin for m in trace.messages}
    got = _receptions(trace)
    return {node: len(got.get(node, {})) / total
            for node in range(trace.node_count) if node not in origins}


def accumulative_receivers(trace: SimTrace) -> list[float]:
    """Entry h: distinct nodes first reached within h hops, averaged over messages."""
    if not trace.messages:
        return [0.0] * (trace.meta["config"].get("ttl", 0) + 1)
    max_ttl = max(m.ttl for m in trace.messages)
    hops_by_msg: dict[int, list[int]] = {m.msg_id: [] for m in trace.messages}
    for rec in trace.slots:
        for rx in rec.rx:
            hops_by_msg[rx.msg].append(rx.hop)
    curve = [0.0] * (max_ttl + 1)
    for hops in hops_by_msg.values():
        for h in range(max_ttl + 1):
            curve[h] += sum(1 for hop in hops if hop <= h)
    return [c / len(trace.messages) for c in curve]


def source_receiver_ratio(trace: SimTrace) -> float | None:
    """Contention metric: mean, over the source's non-competitor neighbors, of
    the fraction of the source's messages each one received. None if the
    source has no eligible neighbor."""
    contention = trace.meta["config"].get("contention")
    if contention is None:
        raise ConfigError("trace was not produced by a contention scenario")
    source = contention["source"]
    competitor_ids = set(trace.meta.get("competitor_ids", ()))
    topo = Topology.from_positions(trace.positions, trace.radius)
    receivers = sorted(neighbors(topo, source) - competitor_ids)
    src_msgs = {m.msg_id for m in trace.messages if m.origin == source}
    if not receivers or not src_msgs:
        return None
    got = _receptions(trace)
    ratios = [len(set(got.get(r, {})) & src_msgs) / len(src_msgs) for r in receivers]
    return sum(ratios) / len(ratios)


def compute_report(trace: SimTrace) -> MetricsReport:
    cfg = trace.meta["config"]
    contention = cfg.get("contention")
    if contention is not None:
        return MetricsReport(
            strategy=cfg["strategy"], channel_count=cfg["channel_count"],
            node_count=cfg["node_count"], ttl=cfg["ttl"], seed=trace.seed,
            competitors=contention["competitors"],
            contention_ratio=source_receiver_ratio(trace))
    return MetricsReport(
        strategy=cfg["strategy"], channel_count=cfg["channel_count"],
        node_count=cfg["node_count"], ttl=cfg["ttl"], seed=trace.seed,
        per_node_delivery=delivery_ratio(trace),
        accumulative_receivers=tuple(accumulative_receivers(trace)))


@dataclass(frozen=True)
class AggregatedMetrics:
    strategy: str
    channel_count: int
    node_count: int
    ttl: int
    runs: int
    competitors: int | None = None
    delivery_mean: dict = field(default_factory=dict)
    delivery_std: dict = field(default_factory=dict)
    accumulative_mean: tuple = ()
    accumulative_std: tuple = ()
    contention_mean: float | None = None
    contention_std: float | None = None


def _mean_std(values) -> tuple[float, float]:
    values = list(values)
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_runs(reports) -> AggregatedMetrics:
    """Elementwise mean and sample stddev over runs of one configuration."""
    reports = list(reports)
    if not reports:
        raise AggregationError("nothing to aggregate")
    key = reports[0].run_key()
    for r in reports[1:]:
        if r.run_key() != key:
            raise AggregationError(
                f"mixed run parameters: {r.run_key()} vs {key}")
    first = reports[0]
    out = dict(strategy=first.strategy, channel_count=first.channel_count,
               node_count=first.node_count, ttl=first.ttl, runs=len(reports),
               competitors=first.competitors)
    if first.contention_ratio is not None or first.competitors is not None:
        ratios = [r.contention_ratio for r in reports if r.contention_ratio is not None]
        if ratios:
            mean, std = _mean_std(ratios)
            out["contention_mean"] = mean
            out["contention_std"] = std
        return AggregatedMetrics(**out)
    nodes = sorted(first.per_node_delivery)
    delivery_mean, delivery_std = {}, {}
    for node in nodes:
        mean, std = _mean_std([r.per_node_delivery[node] for r in reports])
        delivery_mean[node] = mean
        delivery_std[node] = std
    hops = len(first.accumulative_receivers)
    acc = [_mean_std([r.accumulative_receivers[h] for r in reports]) for h in range(hops)]
    return AggregatedMetrics(
        **out, delivery_mean=delivery_mean, delivery_std=delivery_std,
        accumulative_mean=tuple(m for m, _ in acc),
        accumulative_std=tuple(s for _, s in acc))


def contention_curve(base_config: ScenarioConfig, competitor_counts, seeds):
    """Mean source-receiver delivery ratio per competitor count.

    Each count reruns the base contention scenario over all seeds; rows come
    back ordered by competitor count as (count, mean, std, runs).
    """
    from .engine import run_dissemination

    seeds = list(seeds)
    if not seeds:
        raise ConfigError("contention_curve needs at least one seed")
    if base_config.contention is None:
        raise ConfigError("base config must define a contention scenario")
    rows = []
    for count in sorted(competitor_counts):
        raw = base_config.to_dict()
        raw["contention"]["competitors"] = int(count)
        cfg = from_dict(raw)
        ratios = []
        for seed in seeds:
            trace = run_dissemination(cfg, seed)
            ratio = source_receiver_ratio(trace)
            if ratio is not None:
                ratios.append(ratio)
        mean, std = _mean_std(ratios)
        rows.append((int(count), mean, std, len(ratios)))
    return rows

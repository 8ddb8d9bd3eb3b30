"""Channel selection policies: SURF, RD, SB, and CA.

All four are pure decision functions over per-node observations plus a caller
owned random stream. Senders and idle receivers run the same rule, which is
what lets a sender's neighborhood converge on its channel.

The SURF weight combines PR availability with a contention utility:

    w(c) = (1 - o_pr(c)) * u(n_cr(c)),   u(n) = n * max(0, 1 - n / N_ref)

u is unimodal with its peak at N_ref / 2 active CRs: an empty channel offers
no connectivity, an overcrowded one no usable capacity. The weight function is
deliberately small and isolated so alternative shapes can be swapped in.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, UncoverableNeighborError


@dataclass(frozen=True)
class SurfParams:
    """contention_cap is the CR count at which a channel stops being useful."""

    contention_cap: int
    weight_floor: float = 1e-12

    def __post_init__(self):
        if self.contention_cap < 1:
            raise ConfigError("contention_cap must be at least 1")
        if self.weight_floor < 0.0:
            raise ConfigError("weight_floor must be non-negative")


def default_contention_cap(node_count: int, radius: float) -> int:
    """Expected in-range CR count on the unit square, clamped to at least 2."""
    return max(2, round(node_count * math.pi * radius * radius))


@dataclass(frozen=True)
class CaAssignment:
    """Per-node channel sets handed out by the central authority."""

    acs: tuple[tuple[int, ...], ...]
    set_size: int
    channel_count: int

    def __post_init__(self):
        for node, channels in enumerate(self.acs):
            if len(channels) != self.set_size or len(set(channels)) != self.set_size:
                raise ConfigError(f"node {node}: Acs must hold {self.set_size} distinct channels")
            for c in channels:
                if not (0 <= c < self.channel_count):
                    raise ConfigError(f"node {node}: channel id {c} out of range")


@dataclass(frozen=True)
class Decision:
    """A node's per-slot channel commitment: transmit or overhear."""

    role: str                     # "transmit" or "overhear"
    channels: tuple[int, ...]     # single channel, or an ordered list for SB/CA
    channel_count: int

    def __post_init__(self):
        if self.role not in ("transmit", "overhear"):
            raise ConfigError(f"unknown role {self.role!r}")
        if not self.channels:
            raise ConfigError("a decision must name at least one channel")
        if len(set(self.channels)) != len(self.channels):
            raise ConfigError("decision channel list has duplicates")
        for c in self.channels:
            if not (0 <= c < self.channel_count):
                raise ConfigError(f"channel id {c} out of range")


def contention_utility(n_cr, cap: int):
    """u(n) = n * max(0, 1 - n / cap); works elementwise on arrays."""
    n = np.asarray(n_cr, dtype=float)
    return n * np.maximum(0.0, 1.0 - n / cap)


def surf_weight(obs, params: SurfParams) -> float:
    """Weight of one channel given its observation."""
    return float((1.0 - obs.o_pr) * contention_utility(obs.n_cr, params.contention_cap))


def pick_channel(weights: np.ndarray, o_pr: np.ndarray, weight_floor: float,
                 rng: np.random.Generator) -> int:
    """Argmax with uniform random tie-breaking.

    Weights at or below the floor are treated as dead; if every channel is
    dead the node falls back to the least PR-occupied channel. Scaling all
    weights by a positive constant cannot change the outcome.
    """
    live = weights > weight_floor
    if live.any():
        ties = np.flatnonzero(weights == weights[live].max())
    else:
        ties = np.flatnonzero(o_pr == o_pr.min())
    if ties.size == 1:
        return int(ties[0])
    return int(ties[int(rng.integers(ties.size))])


def select_channel_surf(observations, params: SurfParams,
                        rng: np.random.Generator) -> int:
    """Pick the best channel for transmission or overhearing."""
    if not observations:
        raise ConfigError("need at least one channel observation")
    obs = sorted(observations, key=lambda o: o.channel_id)
    if [o.channel_id for o in obs] != list(range(len(obs))):
        raise ConfigError("observations must cover channels 0..Ch-1 exactly once")
    weights = np.array([surf_weight(o, params) for o in obs])
    o_pr = np.array([o.o_pr for o in obs])
    return pick_channel(weights, o_pr, params.weight_floor, rng)


def select_channel_rd(channel_count: int, rng: np.random.Generator) -> int:
    """Uniform random channel."""
    if channel_count < 1:
        raise ConfigError("channel_count must be at least 1")
    return int(rng.integers(channel_count))


def compute_ecs_sb(neighbor_availability: dict) -> list[int]:
    """Greedy essential channel set covering every neighbor.

    Repeatedly picks the channel available to the most still-uncovered
    neighbors, lowest channel id on ties, until all neighbors are covered.
    Returned in selection order.
    """
    for nb, avail in neighbor_availability.items():
        if not avail:
            raise UncoverableNeighborError(f"neighbor {nb} has no available channel")
    uncovered = set(neighbor_availability)
    ecs: list[int] = []
    while uncovered:
        counts: dict[int, int] = {}
        for nb in uncovered:
            for c in neighbor_availability[nb]:
                counts[c] = counts.get(c, 0) + 1
        best = min(counts, key=lambda c: (-counts[c], c))
        ecs.append(best)
        uncovered = {nb for nb in uncovered if best not in neighbor_availability[nb]}
    return ecs


def assign_ca(node_count: int, channel_count: int, k: int,
              rng: np.random.Generator) -> CaAssignment:
    """Give each node an independent uniform random k-subset of the channels."""
    if node_count < 1:
        raise ConfigError("node_count must be at least 1")
    if not (1 <= k <= channel_count):
        raise ConfigError(f"set size k must lie in [1, {channel_count}]")
    acs = tuple(
        tuple(int(c) for c in sorted(rng.choice(channel_count, size=k, replace=False)))
        for _ in range(node_count)
    )
    return CaAssignment(acs=acs, set_size=k, channel_count=channel_count)

"""Primary-radio channel occupancy and per-node channel observations.

Channel state is a boolean vector with one entry per channel, True while a
primary radio holds that channel. Each channel evolves as an independent
two-state ON/OFF Markov chain: simple enough to configure from a target load,
yet temporally correlated like real PR traffic. Sensing is perfect and PR
activity is global, so every node sees the same channel state; what differs
between nodes is the CR activity they can observe in range.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError, DegenerateChainError, InsufficientHistoryError
from .topology import Topology, neighbors
from .trace import SimTrace


def stationary_occupancy(p_on: float, p_off: float) -> float:
    """Long-run ON fraction p_on / (p_on + p_off) of one channel's chain."""
    if p_on == 0.0 and p_off == 0.0:
        raise DegenerateChainError("p_on = p_off = 0 leaves occupancy undefined")
    return p_on / (p_on + p_off)


@dataclass(frozen=True)
class PrActivityModel:
    """Per-channel ON/OFF transition probabilities.

    p_on is the per-slot OFF to ON probability, p_off the reverse. total_load
    records the aggregate demand L when the model was derived from one; the
    construction puts stationary occupancy L / Ch on every channel, so more
    channels means proportionally lower per-channel occupancy.
    """

    p_on: tuple[float, ...]
    p_off: tuple[float, ...]
    total_load: float | None = None

    def __post_init__(self):
        if not self.p_on or len(self.p_on) != len(self.p_off):
            raise ConfigError("p_on and p_off must be non-empty and equally long")
        for i, (on, off) in enumerate(zip(self.p_on, self.p_off)):
            if not (0.0 <= on <= 1.0):
                raise ConfigError(f"p_on[{i}] outside [0, 1]")
            if not (0.0 <= off <= 1.0):
                raise ConfigError(f"p_off[{i}] outside [0, 1]")
            if on == 0.0 and off == 0.0:
                raise ConfigError(f"channel {i}: p_on + p_off must be positive")

    @property
    def channel_count(self) -> int:
        return len(self.p_on)

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.p_on), np.array(self.p_off)

    @classmethod
    def from_rates(cls, p_on, p_off) -> "PrActivityModel":
        return cls(p_on=tuple(float(p) for p in p_on),
                   p_off=tuple(float(p) for p in p_off))

    @classmethod
    def from_total_load(cls, channel_count: int, total_load: float,
                        switching: float = 0.4) -> "PrActivityModel":
        """Spread an aggregate demand L evenly over Ch channels.

        Every channel gets stationary occupancy L / Ch. `switching` fixes
        p_on + p_off, i.e. how fast channels flip (correlation time is about
        1 / switching slots).
        """
        if channel_count < 1:
            raise ConfigError("channel_count must be at least 1")
        if not (0.0 <= total_load <= channel_count):
            raise ConfigError(f"total_load must lie in [0, {channel_count}]")
        if not (0.0 < switching <= 1.0):
            raise ConfigError("switching must lie in (0, 1]")
        rho = total_load / channel_count
        p_on = switching * rho
        p_off = switching * (1.0 - rho)
        return cls(p_on=(p_on,) * channel_count, p_off=(p_off,) * channel_count,
                   total_load=float(total_load))

    def occupancies(self) -> list[float]:
        return [stationary_occupancy(on, off) for on, off in zip(self.p_on, self.p_off)]

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        """Draw the slot-0 state from each channel's stationary distribution."""
        return rng.random(self.channel_count) < np.array(self.occupancies())


def step_pr_activity(model: PrActivityModel, prev: np.ndarray,
                     rng: np.random.Generator) -> np.ndarray:
    """Advance every channel one slot; each transitions independently."""
    prev = np.asarray(prev, dtype=bool)
    if prev.shape != (model.channel_count,):
        raise ConfigError(
            f"state has {prev.shape} entries, model has {model.channel_count} channels")
    p_on, p_off = model._arrays
    u = rng.random(model.channel_count)
    return np.where(prev, u >= p_off, u < p_on)


def observe_pr_occupancy(history, channel_id: int) -> float:
    """Fraction of window slots the channel was ON. Sensing is perfect."""
    states = list(history)
    if not states:
        raise InsufficientHistoryError("occupancy needs at least one observed slot")
    first = np.asarray(states[0])
    if not (0 <= channel_id < first.shape[0]):
        raise ConfigError(f"channel id {channel_id} out of range")
    on = sum(1 for s in states if bool(np.asarray(s)[channel_id]))
    return on / len(states)


@dataclass(frozen=True)
class ChannelObservation:
    """One node's view of one channel: PR occupancy, CR presence, weight."""

    channel_id: int
    o_pr: float
    n_cr: int
    weight: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.o_pr <= 1.0):
            raise ConfigError("o_pr must lie in [0, 1]")
        if self.n_cr < 0:
            raise ConfigError("n_cr must be non-negative")
        if self.weight < 0.0:
            raise ConfigError("weight must be non-negative")
        if self.o_pr == 1.0 and self.weight != 0.0:
            raise ConfigError("a fully PR-occupied channel must have weight 0")


def estimate_cr_count(trace: SimTrace, topo: Topology, node_id: int, channel_id: int,
                      start_slot: int, stop_slot: int, mode: str = "oracle") -> int:
    """Count active CRs that node_id can attribute to a channel over a window.

    oracle mode counts every in-range node that transmitted or listened on the
    channel during slots [start_slot, stop_slot). sampled mode counts only the
    distinct in-range transmitters node_id actually decoded there, which lower
    bounds the oracle.
    """
    if not (0 <= node_id < topo.node_count):
        raise ConfigError(f"node id {node_id} out of range")
    if not (0 <= channel_id < trace.channel_count):
        raise ConfigError(f"channel id {channel_id} out of range")
    if mode not in ("oracle", "sampled"):
        raise ConfigError(f"unknown estimation mode {mode!r}")
    window = [rec for rec in trace.slots if start_slot <= rec.slot < stop_slot]
    if not window:
        raise InsufficientHistoryError("estimation window is empty")
    in_range = neighbors(topo, node_id)
    seen: set[int] = set()
    if mode == "oracle":
        for rec in window:
            for v in in_range:
                if rec.node_channel[v] == channel_id:
                    seen.add(v)
    else:
        for rec in window:
            for e in rec.tx:
                if e.channel == channel_id and node_id in e.delivered:
                    seen.add(e.node)
    return len(seen)

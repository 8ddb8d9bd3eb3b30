"""Slotted-time dissemination engine.

Time advances in synchronous slots. Each slot:

  1. every channel's PR chain advances one step;
  2. messages scheduled for this slot are originated;
  3. every node commits to one channel, either to transmit (one transmission
     per node per slot) or to overhear; nodes re-run their strategy on fresh
     observations every slot;
  4. the slot resolves: a transmission on a PR-ON channel is interrupted and
     nobody receives it; otherwise a tuned in-range listener decodes iff
     exactly one of its in-range neighbors transmitted on its channel
     (two or more is a collision at that listener);
  5. first-time receivers queue a TTL-decremented rebroadcast a jittered
     1..jitter_max slots ahead. Each node broadcasts a message at most once,
     and the attempt is spent even when a PR interrupt or a collision eats it:
     broadcast traffic carries no acknowledgements, so a sender never learns
     whether anyone received. Per-transmission losses therefore compound hop
     by hop, which is exactly the pressure channel selection is meant to ease.

Before any traffic flows the engine runs observation_window warm-up slots in
which nodes only tune, so selection starts from a full history window. The
run ends when no queued work remains, or is flagged truncated at max_slots.

A SB or CA sender transmits the same message once per channel of its ECS or
Acs in consecutive slots (single radio, sequential multi-channel broadcast).

In a contention scenario (config.contention) a designated source at the
square's center emits a fresh single-hop message every slot while competitor
nodes jam with background messages pinned to the source's channel; every
other node is tuned to the source's channel. This isolates the cost of CR
contention from channel alignment.
"""

from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .errors import ConfigError
from .rng import stream
from .spectrum import step_pr_activity
from .strategy import (SurfParams, assign_ca, contention_utility, pick_channel,
                       select_channel_rd)
from .topology import Topology, generate_topology
from .trace import (COLLIDED, DELIVERED, NO_LISTENER, PR_INTERRUPTED,
                    MessageInfo, RxEvent, SimTrace, SlotRecord, TxEvent)


class PendingTx(NamedTuple):
    due: int
    seq: int
    msg: int
    carry: int   # hop budget the transmission will carry (already decremented)


@dataclass
class NodeState:
    """Mutable per-node runtime state."""

    node_id: int
    received: set = field(default_factory=set)
    relayed: set = field(default_factory=set)
    pending: list = field(default_factory=list)
    plan: list = field(default_factory=list)   # channels left in the active broadcast
    plan_msg: int | None = None
    plan_ttl: int = 0
    current_channel: int = -1
    is_transmitting: bool = False
    _seq: int = 0

    def next_seq(self) -> int:
        self._seq += 1
        return self._seq

    def pop_due(self, slot: int) -> PendingTx | None:
        due = [p for p in self.pending if p.due <= slot]
        if not due:
            return None
        item = min(due, key=lambda p: (p.due, p.seq))
        self.pending.remove(item)
        return item

    def earliest_due(self, slot: int) -> tuple[int, int] | None:
        due = [p for p in self.pending if p.due <= slot]
        if not due:
            return None
        item = min(due, key=lambda p: (p.due, p.seq))
        return (item.due, item.seq)


def schedule_rebroadcast(state: NodeState, msg_id: int, carried_ttl: int,
                         current_slot: int, jitter_max: int,
                         rng: np.random.Generator) -> int | None:
    """Queue one TTL-decremented rebroadcast d slots ahead, d uniform in [1, jitter_max].

    Returns the scheduled slot, or None when the hop budget is spent or the
    node already rebroadcast this message.
    """
    if carried_ttl <= 0 or msg_id in state.relayed:
        return None
    due = current_slot + 1 + int(rng.integers(jitter_max))
    state.relayed.add(msg_id)
    state.pending.append(PendingTx(due, state.next_seq(), msg_id, carried_ttl - 1))
    return due


def resolve_slot(transmissions, listeners, channel_state, topo: Topology):
    """Resolve one slot: outcomes per transmission plus successful decodes.

    transmissions: list of (node, channel, msg, carried_ttl).
    listeners: mapping node -> tuned channel (transmitters excluded).
    Returns (tx_events, decodes) with decodes as
    (listener, transmitter, channel, msg, carried_ttl) tuples.
    """
    channel_state = np.asarray(channel_state, dtype=bool)
    by_ch: dict[int, list[int]] = {}
    for i, (node, channel, _msg, _carry) in enumerate(transmissions):
        by_ch.setdefault(channel, []).append(i)
    delivered: list[list[int]] = [[] for _ in transmissions]
    heard = [False] * len(transmissions)
    decodes = []
    for lnode in sorted(listeners):
        lch = listeners[lnode]
        if channel_state[lch]:
            continue  # PR holds the channel, nothing is decodable
        cands = [i for i in by_ch.get(lch, ())
                 if topo.adjacency[lnode, transmissions[i][0]]]
        for i in cands:
            heard[i] = True
        if len(cands) == 1:
            i = cands[0]
            node, channel, msg, carry = transmissions[i]
            delivered[i].append(lnode)
            decodes.append((lnode, node, channel, msg, carry))
    events = []
    for i, (node, channel, msg, carry) in enumerate(transmissions):
        if channel_state[channel]:
            outcome, to = PR_INTERRUPTED, ()
        elif delivered[i]:
            outcome, to = DELIVERED, tuple(sorted(delivered[i]))
        elif heard[i]:
            outcome, to = COLLIDED, ()
        else:
            outcome, to = NO_LISTENER, ()
        events.append(TxEvent(node, channel, msg, carry, outcome, to))
    return events, decodes


class ActivityWindow:
    """Rolling window of recent slots backing all per-node observations."""

    def __init__(self, node_count: int, channel_count: int, length: int,
                 track_decodes: bool = False):
        self.length = length
        self.node_count = node_count
        self.channel_count = channel_count
        self._records = deque()
        self._pr_on = np.zeros(channel_count, dtype=np.int64)
        self._node_ch = np.zeros((node_count, channel_count), dtype=np.int32)
        self._decodes = (np.zeros((node_count, node_count, channel_count), dtype=np.int32)
                         if track_decodes else None)

    def __len__(self) -> int:
        return len(self._records)

    def push(self, pr_state, node_channels, decodes) -> None:
        pr = np.asarray(pr_state, dtype=bool).copy()
        chans = np.asarray(node_channels, dtype=np.int64).copy()
        self._records.append((pr, chans, tuple(decodes)))
        self._pr_on += pr
        np.add.at(self._node_ch, (np.arange(self.node_count), chans), 1)
        if self._decodes is not None:
            for lnode, txnode, channel in decodes:
                self._decodes[lnode, txnode, channel] += 1
        if len(self._records) > self.length:
            pr, chans, dec = self._records.popleft()
            self._pr_on -= pr
            np.add.at(self._node_ch, (np.arange(self.node_count), chans), -1)
            if self._decodes is not None:
                for lnode, txnode, channel in dec:
                    self._decodes[lnode, txnode, channel] -= 1

    def o_pr(self) -> np.ndarray:
        if not self._records:
            return np.zeros(self.channel_count)
        return self._pr_on / len(self._records)

    def last_pr(self) -> np.ndarray:
        if not self._records:
            return np.zeros(self.channel_count, dtype=bool)
        return self._records[-1][0]

    def oracle_ncr(self, adj_int: np.ndarray) -> np.ndarray:
        """Distinct in-range nodes seen on each channel over the whole window."""
        return adj_int @ (self._node_ch > 0).astype(np.int64)

    def snapshot_ncr(self, adj_int: np.ndarray) -> np.ndarray:
        """In-range nodes active on each channel in the most recent slot.

        Selection feeds on this instantaneous count: over a long window every
        re-tuning neighbor touches most channels, so the distinct-over-window
        count saturates toward full degree everywhere and carries no signal.
        """
        if not self._records:
            return np.zeros((self.node_count, self.channel_count), dtype=np.int64)
        _pr, chans, _dec = self._records[-1]
        active = np.zeros((self.node_count, self.channel_count), dtype=np.int64)
        active[np.arange(self.node_count), chans] = 1
        return adj_int @ active

    def sampled_ncr(self) -> np.ndarray:
        """Distinct in-range transmitters each node decoded, per channel."""
        return (self._decodes > 0).sum(axis=1)


class Simulation:
    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self.seed = int(seed)
        n = cfg.node_count
        self.model = cfg.pr_model()
        self.contention = cfg.contention
        if cfg.positions is not None:
            self.topo = Topology.from_positions(cfg.positions, cfg.radius)
        elif self.contention is not None:
            # pin the source at the center so its neighborhood is seed-stable
            pos = stream(self.seed, "topology").random((n, 2))
            pos[self.contention.source] = (0.5, 0.5)
            self.topo = Topology.from_positions(pos, cfg.radius)
        else:
            self.topo = generate_topology(n, cfg.radius, stream(self.seed, "topology"))
        self.adj_int = self.topo.adjacency.astype(np.int64)
        self.neighbor_ids = [
            [int(v) for v in np.flatnonzero(self.topo.adjacency[i])] for i in range(n)]

        self.pr_rng = stream(self.seed, "pr")
        self.decide_rng = [stream(self.seed, "decide", i) for i in range(n)]
        self.jitter_rng = [stream(self.seed, "jitter", i) for i in range(n)]

        self.surf_params = SurfParams(contention_cap=cfg.resolved_contention_cap(),
                                      weight_floor=cfg.surf.weight_floor)
        self.acs = None
        if cfg.strategy == "ca":
            if cfg.ca.assignment is not None:
                self.acs = [list(a) for a in cfg.ca.assignment]
            else:
                self.acs = [list(a) for a in
                            assign_ca(n, cfg.channel_count, cfg.ca.set_size,
                                      stream(self.seed, "ca")).acs]
        self.sb_sets = None
        if cfg.strategy == "sb":
            # every node supports its own random channel subset; senders must
            # cover the subsets of their neighbors, receivers sit on the
            # lowest-id channel they support
            sb_rng = stream(self.seed, "sb")
            self.sb_sets = [
                sorted(int(c) for c in
                       sb_rng.choice(cfg.channel_count, size=cfg.sb.set_size,
                                     replace=False))
                for _ in range(n)]

        self.window = ActivityWindow(n, cfg.channel_count, cfg.observation_window,
                                     track_decodes=cfg.estimation_mode == "sampled")
        self.nodes = [NodeState(i) for i in range(n)]
        self.messages: list[MessageInfo] = []
        self.init_ttl: dict[int, int] = {}
        self.warmup = cfg.observation_window

        if self.contention is not None:
            src = self.contention.source
            self.competitor_ids = [i for i in range(n) if i != src][:self.contention.competitors]
            self.msg_plan = []
        else:
            self.competitor_ids = []
            self.msg_plan = sorted(
                ((m.slot + self.warmup, m.origin) for m in cfg.messages))
        self._plan_idx = 0

    # ------------------------------------------------------------------ setup

    def _register_message(self, origin: int, slot: int, ttl: int, queue: bool) -> int:
        msg_id = len(self.messages)
        self.messages.append(MessageInfo(msg_id, origin, slot, ttl))
        self.init_ttl[msg_id] = ttl
        node = self.nodes[origin]
        node.received.add(msg_id)
        node.relayed.add(msg_id)
        if queue and ttl >= 1:
            node.pending.append(PendingTx(slot, node.next_seq(), msg_id, ttl - 1))
        return msg_id

    def _originate(self, t: int) -> None:
        if self.contention is not None:
            if self.warmup <= t < self.warmup + self.contention.source_messages:
                self._register_message(self.contention.source, t, ttl=1, queue=True)
            return
        while self._plan_idx < len(self.msg_plan) and self.msg_plan[self._plan_idx][0] == t:
            slot, origin = self.msg_plan[self._plan_idx]
            self._register_message(origin, slot, ttl=self.cfg.ttl, queue=True)
            self._plan_idx += 1

    def _has_work(self, t: int) -> bool:
        if self.contention is not None:
            if t < self.warmup + self.contention.source_messages:
                return True
        elif self._plan_idx < len(self.msg_plan):
            return True
        return any(nd.plan or nd.pending for nd in self.nodes)

    # ------------------------------------------------------------- per slot

    def _observations(self):
        o_pr = self.window.o_pr()
        weights = None
        if self.cfg.strategy == "surf":
            # SURF is the occupancy-aware strategy: a channel sensed busy in
            # the last slot counts as fully occupied right now, so its weight
            # is zero and the fallback ranks only currently free channels.
            # The baselines stay blind to occupancy dynamics by design.
            o_pr = np.where(self.window.last_pr(), 1.0, o_pr)
            if self.cfg.estimation_mode == "sampled":
                ncr = self.window.sampled_ncr()
            else:
                ncr = self.window.snapshot_ncr(self.adj_int)
            utility = contention_utility(ncr, self.surf_params.contention_cap)
            weights = (1.0 - o_pr)[None, :] * utility
        return o_pr, weights

    def _tx_channels(self, node: int, o_pr, weights) -> list[int]:
        strat = self.cfg.strategy
        rng = self.decide_rng[node]
        if strat == "surf":
            return [pick_channel(weights[node], o_pr, self.surf_params.weight_floor, rng)]
        if strat == "rd":
            return [select_channel_rd(self.cfg.channel_count, rng)]
        if strat == "sb":
            # without a control channel a node cannot discover its neighbors'
            # support sets, so the broadcast sweeps the sender's own set
            return list(self.sb_sets[node])
        return list(self.acs[node])

    def _listen_channel(self, node: int, o_pr, weights) -> int:
        strat = self.cfg.strategy
        rng = self.decide_rng[node]
        if strat == "surf":
            return pick_channel(weights[node], o_pr, self.surf_params.weight_floor, rng)
        if strat == "rd":
            return select_channel_rd(self.cfg.channel_count, rng)
        if strat == "sb":
            return self.sb_sets[node][0]
        acs = self.acs[node]
        return acs[int(rng.integers(len(acs)))]

    def _decide_node(self, node: int, t: int, o_pr, weights, may_start: bool):
        """Advance one node's transmit plan or pick its listening channel."""
        nd = self.nodes[node]
        if not nd.plan and may_start:
            item = nd.pop_due(t)
            if item is not None:
                nd.plan = self._tx_channels(node, o_pr, weights)
                nd.plan_msg = item.msg
                nd.plan_ttl = item.carry
        if nd.plan:
            channel = nd.plan.pop(0)
            tx = (node, channel, nd.plan_msg, nd.plan_ttl)
            if not nd.plan:
                nd.plan_msg = None
            return channel, tx
        return self._listen_channel(node, o_pr, weights), None

    def _serialize_starter(self, t: int) -> int | None:
        """With serialized transmissions, only one node may hold the air."""
        if any(nd.plan for nd in self.nodes):
            return None
        best = None
        for nd in self.nodes:
            key = nd.earliest_due(t)
            if key is not None and (best is None or key < best[0]):
                best = (key, nd.node_id)
        return None if best is None else best[1]

    def _decide_all(self, t: int, o_pr, weights):
        n = self.cfg.node_count
        channels = [0] * n
        transmissions = []

        if self.cfg.serialize_transmissions:
            starter = self._serialize_starter(t)
            def may_start(i): return i == starter
        else:
            def may_start(i): return True

        if self.contention is not None:
            src = self.contention.source
            src_ch, src_tx = self._decide_node(src, t, o_pr, weights, may_start(src))
            channels[src] = src_ch
            if src_tx is not None:
                transmissions.append(src_tx)
            competing = (self.warmup <= t < self.warmup + self.contention.source_messages)
            for node in range(n):
                if node == src:
                    continue
                channels[node] = src_ch  # receivers and competitors mirror the source
                if competing and node in self.competitor_ids:
                    msg_id = self._register_message(node, t, ttl=1, queue=False)
                    transmissions.append((node, src_ch, msg_id, 0))
        else:
            for node in range(n):
                channel, tx = self._decide_node(node, t, o_pr, weights, may_start(node))
                channels[node] = channel
                if tx is not None:
                    transmissions.append(tx)

        transmissions.sort(key=lambda tx: tx[0])
        return channels, transmissions

    def _process_decodes(self, t: int, decodes):
        rx_events = []
        for lnode, txnode, _channel, msg, carry in sorted(decodes):
            nd = self.nodes[lnode]
            if msg in nd.received:
                continue
            nd.received.add(msg)
            hop = self.init_ttl[msg] - carry
            rx_events.append(RxEvent(lnode, msg, txnode, carry, hop))
            schedule_rebroadcast(nd, msg, carry, t, self.cfg.jitter_max,
                                 self.jitter_rng[lnode])
        return rx_events

    # ----------------------------------------------------------------- main

    def run(self) -> SimTrace:
        cfg = self.cfg
        horizon = self.warmup + cfg.max_slots
        slots = []
        truncated = False
        state = None
        t = 0
        while True:
            if t >= self.warmup and not self._has_work(t):
                break
            if t >= horizon:
                truncated = True
                break
            if t == 0:
                state = self.model.initial_state(self.pr_rng)
            else:
                state = step_pr_activity(self.model, state, self.pr_rng)
            self._originate(t)
            o_pr, weights = self._observations()
            channels, transmissions = self._decide_all(t, o_pr, weights)
            tx_nodes = {tx[0] for tx in transmissions}
            listeners = {i: channels[i] for i in range(cfg.node_count)
                         if i not in tx_nodes}
            tx_events, decodes = resolve_slot(transmissions, listeners, state, self.topo)
            rx_events = self._process_decodes(t, decodes)
            for i, nd in enumerate(self.nodes):
                nd.current_channel = channels[i]
                nd.is_transmitting = i in tx_nodes
            slots.append(SlotRecord(
                slot=t,
                pr_on=tuple(int(c) for c in np.flatnonzero(state)),
                node_channel=tuple(int(c) for c in channels),
                is_tx=tuple(i in tx_nodes for i in range(cfg.node_count)),
                tx=tuple(tx_events),
                rx=tuple(rx_events)))
            self.window.push(state, channels,
                             [(l, s, ch) for l, s, ch, _m, _c in decodes])
            t += 1

        meta = {
            "config": cfg.to_dict(),
            "seed": self.seed,
            "version": __version__,
            "warmup_slots": self.warmup,
            "positions": [[float(x), float(y)] for x, y in self.topo.positions],
            "competitor_ids": list(self.competitor_ids),
        }
        return SimTrace(meta=meta, messages=self.messages, slots=slots,
                        truncated=truncated)


def run_dissemination(cfg: ScenarioConfig, seed: int | None = None) -> SimTrace:
    """Run one seeded simulation; the trace is a pure function of (cfg, seed)."""
    if seed is None:
        seed = cfg.seed
    if seed < 0:
        raise ConfigError("seed must be non-negative")
    return Simulation(cfg, seed).run()

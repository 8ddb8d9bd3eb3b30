"""Per-slot event record of a simulation run.

A SimTrace is the single source of truth for all metrics: it captures, for
every slot, the PR channel state, each node's tuning decision, every
transmission with its outcome, and every first-time reception. Traces
serialize to a line-oriented text log (one event per line) so they can be
archived, diffed, and replayed through the metrics pipeline or an independent
slot resolver.
"""

import json
from dataclasses import dataclass, field

# Transmission outcomes, mutually exclusive per (transmitter, slot).
PR_INTERRUPTED = "pr_interrupted"
DELIVERED = "delivered"
COLLIDED = "collided"
NO_LISTENER = "no_listener"

TRACE_HEADER = "# surfsim trace v1"


@dataclass(frozen=True)
class MessageInfo:
    msg_id: int
    origin: int
    slot: int  # absolute origination slot
    ttl: int   # hop budget at origination


@dataclass(frozen=True)
class TxEvent:
    node: int
    channel: int
    msg: int
    ttl: int                      # hop budget carried by this copy
    outcome: str
    delivered: tuple[int, ...] = ()  # nodes that decoded this transmission


@dataclass(frozen=True)
class RxEvent:
    node: int
    msg: int
    from_node: int
    ttl: int   # hop budget carried by the received copy
    hop: int   # origination ttl minus carried ttl


@dataclass(frozen=True)
class SlotRecord:
    slot: int
    pr_on: tuple[int, ...]           # channels held by a PR this slot
    node_channel: tuple[int, ...]    # channel each node is tuned or transmitting on
    is_tx: tuple[bool, ...]          # True where the node transmitted this slot
    tx: tuple[TxEvent, ...] = ()
    rx: tuple[RxEvent, ...] = ()


@dataclass
class SimTrace:
    meta: dict
    messages: list[MessageInfo] = field(default_factory=list)
    slots: list[SlotRecord] = field(default_factory=list)
    truncated: bool = False

    @property
    def node_count(self) -> int:
        return self.meta["config"]["node_count"]

    @property
    def channel_count(self) -> int:
        return self.meta["config"]["channel_count"]

    @property
    def strategy(self) -> str:
        return self.meta["config"]["strategy"]

    @property
    def seed(self) -> int:
        return self.meta["seed"]

    @property
    def positions(self) -> list[tuple[float, float]]:
        return [tuple(p) for p in self.meta["positions"]]

    @property
    def radius(self) -> float:
        return self.meta["config"]["radius"]


def _ids(values) -> str:
    return ",".join(str(v) for v in values)


def _parse_ids(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(v) for v in text.split(","))


def write_trace(trace: SimTrace, path) -> None:
    """Serialize one event per line; output is byte-stable for a given trace."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(TRACE_HEADER + "\n")
        meta = dict(trace.meta)
        meta["truncated"] = trace.truncated
        fh.write("meta " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
        next_msg = 0
        for rec in trace.slots:
            while next_msg < len(trace.messages) and trace.messages[next_msg].slot == rec.slot:
                m = trace.messages[next_msg]
                fh.write(f"msg slot={m.slot} id={m.msg_id} origin={m.origin} ttl={m.ttl}\n")
                next_msg += 1
            fh.write(f"pr slot={rec.slot} on={_ids(rec.pr_on)}\n")
            for node, (ch, is_tx) in enumerate(zip(rec.node_channel, rec.is_tx)):
                role = "tx" if is_tx else "listen"
                fh.write(f"tune slot={rec.slot} node={node} role={role} ch={ch}\n")
            for e in rec.tx:
                line = (f"tx slot={rec.slot} node={e.node} ch={e.channel} msg={e.msg}"
                        f" ttl={e.ttl} outcome={e.outcome}")
                if e.outcome == DELIVERED:
                    line += f" to={_ids(e.delivered)}"
                fh.write(line + "\n")
            for e in rec.rx:
                fh.write(f"rx slot={rec.slot} node={e.node} msg={e.msg}"
                         f" from={e.from_node} ttl={e.ttl} hop={e.hop}\n")


def _fields(parts) -> dict:
    out = {}
    for part in parts:
        key, _, value = part.partition("=")
        out[key] = value
    return out


def read_trace(path) -> SimTrace:
    """Parse a trace log written by write_trace."""
    meta = None
    messages = []
    slots: dict[int, dict] = {}

    def slot_bucket(s: int) -> dict:
        if s not in slots:
            slots[s] = {"pr": (), "tune": {}, "tx": [], "rx": []}
        return slots[s]

    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            kind, _, rest = line.partition(" ")
            if kind == "meta":
                meta = json.loads(rest)
                continue
            f = _fields(rest.split(" "))
            s = int(f["slot"])
            if kind == "msg":
                messages.append(MessageInfo(int(f["id"]), int(f["origin"]), s, int(f["ttl"])))
            elif kind == "pr":
                slot_bucket(s)["pr"] = _parse_ids(f["on"])
            elif kind == "tune":
                slot_bucket(s)["tune"][int(f["node"])] = (int(f["ch"]), f["role"] == "tx")
            elif kind == "tx":
                slot_bucket(s)["tx"].append(TxEvent(
                    int(f["node"]), int(f["ch"]), int(f["msg"]), int(f["ttl"]),
                    f["outcome"], _parse_ids(f.get("to", ""))))
            elif kind == "rx":
                slot_bucket(s)["rx"].append(RxEvent(
                    int(f["node"]), int(f["msg"]), int(f["from"]), int(f["ttl"]), int(f["hop"])))
            else:
                raise ValueError(f"unknown trace line kind: {kind!r}")

    if meta is None:
        raise ValueError("trace has no meta line")
    truncated = bool(meta.pop("truncated", False))
    records = []
    for s in sorted(slots):
        bucket = slots[s]
        tune = bucket["tune"]
        n = len(tune)
        node_channel = tuple(tune[i][0] for i in range(n))
        is_tx = tuple(tune[i][1] for i in range(n))
        records.append(SlotRecord(s, bucket["pr"], node_channel, is_tx,
                                  tuple(bucket["tx"]), tuple(bucket["rx"])))
    return SimTrace(meta=meta, messages=messages, slots=records, truncated=truncated)

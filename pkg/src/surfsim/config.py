"""Scenario configuration: JSON schema, validation, defaults.

Configs are plain JSON documents. Every key is validated and unknown keys are
rejected, so a typo fails loudly instead of silently running the defaults.
parse_and_validate returns a fully resolved ScenarioConfig whose canonical
dict form (to_dict) round-trips and feeds the config hash in run manifests.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .spectrum import PrActivityModel
from .strategy import default_contention_cap

SCHEMA_VERSION = 1
STRATEGIES = ("surf", "rd", "sb", "ca")
ESTIMATION_MODES = ("oracle", "sampled")


@dataclass(frozen=True)
class PrSpec:
    total_load: float | None = None
    switching: float = 0.4
    p_on: tuple[float, ...] | None = None
    p_off: tuple[float, ...] | None = None


@dataclass(frozen=True)
class SurfSpec:
    contention_cap: int | None = None   # None: derived from expected degree
    weight_floor: float = 1e-12


@dataclass(frozen=True)
class CaSpec:
    set_size: int = 2
    assignment: tuple[tuple[int, ...], ...] | None = None


@dataclass(frozen=True)
class SbSpec:
    """Per-node channel support for selective broadcasting.

    Every SB node draws its own random subset of set_size channels; the
    sender's essential channel set covers its neighbors' subsets while each
    receiver listens on the lowest-id channel of its own."""

    set_size: int = 2


@dataclass(frozen=True)
class MessageSpec:
    origin: int
    slot: int = 0


@dataclass(frozen=True)
class ContentionSpec:
    """Single-hop contention experiment: a saturated source, background
    competitors pinned to its channel, and receivers tuned to it."""

    source: int = 0
    competitors: int = 0
    source_messages: int = 20


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 70
    channel_count: int = 15
    radius: float = 0.25
    pr: PrSpec = field(default_factory=PrSpec)
    strategy: str = "surf"
    surf: SurfSpec = field(default_factory=SurfSpec)
    sb: SbSpec = field(default_factory=SbSpec)
    ca: CaSpec = field(default_factory=CaSpec)
    ttl: int = 8
    observation_window: int = 20
    jitter_max: int = 4
    max_slots: int = 500
    messages: tuple[MessageSpec, ...] = (MessageSpec(origin=0, slot=0),)
    estimation_mode: str = "oracle"
    contention: ContentionSpec | None = None
    positions: tuple[tuple[float, float], ...] | None = None
    serialize_transmissions: bool = False
    seed: int = 0

    def pr_model(self) -> PrActivityModel:
        if self.pr.p_on is not None:
            return PrActivityModel.from_rates(self.pr.p_on, self.pr.p_off)
        return PrActivityModel.from_total_load(
            self.channel_count, self.pr.total_load, self.pr.switching)

    def resolved_contention_cap(self) -> int:
        if self.surf.contention_cap is not None:
            return self.surf.contention_cap
        return default_contention_cap(self.node_count, self.radius)

    def to_dict(self) -> dict:
        pr: dict = {}
        if self.pr.p_on is not None:
            pr = {"p_on": list(self.pr.p_on), "p_off": list(self.pr.p_off)}
        else:
            pr = {"total_load": self.pr.total_load, "switching": self.pr.switching}
        out = {
            "schema_version": SCHEMA_VERSION,
            "node_count": self.node_count,
            "channel_count": self.channel_count,
            "radius": self.radius,
            "pr": pr,
            "strategy": self.strategy,
            "surf": {"contention_cap": self.surf.contention_cap,
                     "weight_floor": self.surf.weight_floor},
            "sb": {"set_size": self.sb.set_size},
            "ca": {"set_size": self.ca.set_size,
                   "assignment": None if self.ca.assignment is None
                   else [list(a) for a in self.ca.assignment]},
            "ttl": self.ttl,
            "observation_window": self.observation_window,
            "jitter_max": self.jitter_max,
            "max_slots": self.max_slots,
            "estimation_mode": self.estimation_mode,
            "serialize_transmissions": self.serialize_transmissions,
            "seed": self.seed,
        }
        if self.contention is not None:
            out["contention"] = {"source": self.contention.source,
                                 "competitors": self.contention.competitors,
                                 "source_messages": self.contention.source_messages}
        else:
            out["messages"] = [{"origin": m.origin, "slot": m.slot} for m in self.messages]
        if self.positions is not None:
            out["positions"] = [[x, y] for x, y in self.positions]
        return out


def config_hash(cfg: ScenarioConfig) -> str:
    canon = json.dumps(cfg.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise ConfigError(message)


def _check_keys(raw: dict, allowed, where: str) -> None:
    for key in raw:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")


def _as_int(raw, key: str, minimum=None, maximum=None) -> int:
    value = raw
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{key} must be an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{key} must be <= {maximum}, got {value}")
    return value


def _as_float(raw, key: str, minimum=None, maximum=None) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(f"{key} must be a number")
    value = float(raw)
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key} must be >= {minimum}, got {value}")
    if maximum is not None and value > maximum:
        raise ConfigError(f"{key} must be <= {maximum}, got {value}")
    return value


def _parse_pr(raw, channel_count: int) -> PrSpec:
    if not isinstance(raw, dict):
        raise ConfigError("pr must be an object")
    _check_keys(raw, {"total_load", "switching", "p_on", "p_off"}, "pr")
    has_load = "total_load" in raw
    has_rates = "p_on" in raw or "p_off" in raw
    if has_load and has_rates:
        raise ConfigError("pr: give either total_load or p_on/p_off, not both")
    if has_rates:
        if "p_on" not in raw or "p_off" not in raw:
            raise ConfigError("pr: p_on and p_off must be given together")
        if "switching" in raw:
            raise ConfigError("pr.switching only applies with total_load")
        p_on = raw["p_on"]
        p_off = raw["p_off"]
        for name, probs in (("p_on", p_on), ("p_off", p_off)):
            if not isinstance(probs, list) or len(probs) != channel_count:
                raise ConfigError(f"pr.{name} must list one probability per channel")
        p_on = tuple(_as_float(p, f"pr.p_on[{i}]", 0.0, 1.0) for i, p in enumerate(p_on))
        p_off = tuple(_as_float(p, f"pr.p_off[{i}]", 0.0, 1.0) for i, p in enumerate(p_off))
        for i, (on, off) in enumerate(zip(p_on, p_off)):
            _require(on + off > 0.0, f"pr channel {i}: p_on + p_off must be positive")
        return PrSpec(p_on=p_on, p_off=p_off)
    if not has_load:
        raise ConfigError("pr needs total_load or p_on/p_off")
    load = _as_float(raw["total_load"], "pr.total_load", 0.0, float(channel_count))
    switching = _as_float(raw.get("switching", 0.4), "pr.switching")
    _require(0.0 < switching <= 1.0, "pr.switching must lie in (0, 1]")
    return PrSpec(total_load=load, switching=switching)


def from_dict(raw: dict) -> ScenarioConfig:
    """Validate a raw config mapping and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    allowed = {"schema_version", "node_count", "channel_count", "radius", "pr",
               "strategy", "surf", "sb", "ca", "ttl", "observation_window",
               "jitter_max", "max_slots", "messages", "estimation_mode", "contention",
               "positions", "serialize_transmissions", "seed"}
    _check_keys(raw, allowed, "config")

    version = _as_int(raw.get("schema_version", SCHEMA_VERSION), "schema_version")
    _require(version == SCHEMA_VERSION, f"unsupported schema_version {version}")

    n = _as_int(raw.get("node_count", 70), "node_count", minimum=1)
    ch = _as_int(raw.get("channel_count", 15), "channel_count", minimum=1)
    radius = _as_float(raw.get("radius", 0.25), "radius")
    _require(0.0 < radius <= math.sqrt(2.0), "radius must lie in (0, sqrt(2)]")

    pr = _parse_pr(raw.get("pr", {"total_load": 0.3 * ch}), ch)

    strategy = raw.get("strategy", "surf")
    _require(strategy in STRATEGIES, f"unknown strategy {strategy!r}")

    surf_raw = raw.get("surf", {})
    if not isinstance(surf_raw, dict):
        raise ConfigError("surf must be an object")
    _check_keys(surf_raw, {"contention_cap", "weight_floor"}, "surf")
    cap = surf_raw.get("contention_cap")
    if cap is not None:
        cap = _as_int(cap, "surf.contention_cap", minimum=1)
    floor = _as_float(surf_raw.get("weight_floor", 1e-12), "surf.weight_floor", minimum=0.0)
    surf = SurfSpec(contention_cap=cap, weight_floor=floor)

    sb_raw = raw.get("sb", {})
    if not isinstance(sb_raw, dict):
        raise ConfigError("sb must be an object")
    _check_keys(sb_raw, {"set_size"}, "sb")
    sb = SbSpec(set_size=_as_int(sb_raw.get("set_size", min(2, ch)), "sb.set_size",
                                 minimum=1, maximum=ch))

    ca_raw = raw.get("ca", {})
    if not isinstance(ca_raw, dict):
        raise ConfigError("ca must be an object")
    _check_keys(ca_raw, {"set_size", "assignment"}, "ca")
    set_size = _as_int(ca_raw.get("set_size", min(2, ch)), "ca.set_size",
                       minimum=1, maximum=ch)
    assignment = ca_raw.get("assignment")
    if assignment is not None:
        if not isinstance(assignment, list) or len(assignment) != n:
            raise ConfigError("ca.assignment must list one channel set per node")
        assignment = tuple(
            tuple(_as_int(c, f"ca.assignment[{i}]", 0, ch - 1) for c in row)
            for i, row in enumerate(assignment))
        for i, row in enumerate(assignment):
            _require(len(row) == set_size and len(set(row)) == set_size,
                     f"ca.assignment[{i}] must hold {set_size} distinct channels")
    ca = CaSpec(set_size=set_size, assignment=assignment)

    ttl = _as_int(raw.get("ttl", 8), "ttl", minimum=0)
    window = _as_int(raw.get("observation_window", 20), "observation_window", minimum=1)
    jitter = _as_int(raw.get("jitter_max", 4), "jitter_max", minimum=1)
    max_slots = _as_int(raw.get("max_slots", 500), "max_slots", minimum=1)

    mode = raw.get("estimation_mode", "oracle")
    _require(mode in ESTIMATION_MODES, f"unknown estimation_mode {mode!r}")

    contention = None
    if "contention" in raw:
        _require("messages" not in raw,
                 "contention runs define their own traffic; drop the messages key")
        c_raw = raw["contention"]
        if not isinstance(c_raw, dict):
            raise ConfigError("contention must be an object")
        _check_keys(c_raw, {"source", "competitors", "source_messages"}, "contention")
        source = _as_int(c_raw.get("source", 0), "contention.source", 0, n - 1)
        competitors = _as_int(c_raw.get("competitors", 0), "contention.competitors",
                              minimum=0, maximum=max(0, n - 2))
        msgs = _as_int(c_raw.get("source_messages", 20), "contention.source_messages",
                       minimum=1)
        contention = ContentionSpec(source=source, competitors=competitors,
                                    source_messages=msgs)
        messages: tuple[MessageSpec, ...] = ()
    else:
        msg_raw = raw.get("messages", [{"origin": 0, "slot": 0}])
        if not isinstance(msg_raw, list) or not msg_raw:
            raise ConfigError("messages must be a non-empty list")
        messages = []
        for i, m in enumerate(msg_raw):
            if not isinstance(m, dict):
                raise ConfigError(f"messages[{i}] must be an object")
            _check_keys(m, {"origin", "slot"}, f"messages[{i}]")
            origin = _as_int(m.get("origin", 0), f"messages[{i}].origin", 0, n - 1)
            slot = _as_int(m.get("slot", 0), f"messages[{i}].slot", minimum=0)
            messages.append(MessageSpec(origin=origin, slot=slot))
        messages = tuple(sorted(messages, key=lambda m: (m.slot, m.origin)))

    positions = raw.get("positions")
    if positions is not None:
        if not isinstance(positions, list) or len(positions) != n:
            raise ConfigError("positions must list one (x, y) pair per node")
        positions = tuple(
            (_as_float(p[0], f"positions[{i}].x", 0.0, 1.0),
             _as_float(p[1], f"positions[{i}].y", 0.0, 1.0))
            for i, p in enumerate(positions))

    serialize = raw.get("serialize_transmissions", False)
    if not isinstance(serialize, bool):
        raise ConfigError("serialize_transmissions must be a boolean")

    seed = _as_int(raw.get("seed", 0), "seed", minimum=0)

    cfg = ScenarioConfig(
        node_count=n, channel_count=ch, radius=radius, pr=pr, strategy=strategy,
        surf=surf, sb=sb, ca=ca, ttl=ttl, observation_window=window,
        jitter_max=jitter, max_slots=max_slots, messages=messages,
        estimation_mode=mode, contention=contention, positions=positions,
        serialize_transmissions=serialize, seed=seed)
    cfg.pr_model()  # surfaces rate problems at validation time
    return cfg


def parse_and_validate(text: str) -> ScenarioConfig:
    """Parse a JSON config document; reject schema and range violations."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return from_dict(raw)


def apply_override(raw: dict, dotted_key: str, value) -> dict:
    """Return a copy of a raw config dict with one dotted key replaced."""
    out = json.loads(json.dumps(raw))
    parts = dotted_key.split(".")
    cursor = out
    for part in parts[:-1]:
        nxt = cursor.get(part)
        if not isinstance(nxt, dict):
            nxt = {}
            cursor[part] = nxt
        cursor = nxt
    cursor[parts[-1]] = value
    return out

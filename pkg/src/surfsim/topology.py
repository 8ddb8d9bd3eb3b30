"""CR node placement and the in-range communication graph.

Nodes live on the unit square and two nodes are neighbors iff their Euclidean
distance is at most the communication radius (unit-disk connectivity). The
topology is immutable once built.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

MAX_RADIUS = float(np.sqrt(2.0))


@dataclass(frozen=True)
class Topology:
    positions: np.ndarray   # (N, 2) float64
    radius: float
    adjacency: np.ndarray   # (N, N) bool, symmetric, irreflexive

    @property
    def node_count(self) -> int:
        return self.positions.shape[0]

    @classmethod
    def from_positions(cls, positions, radius: float) -> "Topology":
        pos = np.asarray(positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] == 0:
            raise ConfigError("positions must be a non-empty list of (x, y) pairs")
        if not (0.0 < radius <= MAX_RADIUS):
            raise ConfigError(f"radius must lie in (0, sqrt(2)], got {radius}")
        delta = pos[:, None, :] - pos[None, :, :]
        dist = np.sqrt((delta ** 2).sum(axis=2))
        adjacency = dist <= radius
        np.fill_diagonal(adjacency, False)
        pos.setflags(write=False)
        adjacency.setflags(write=False)
        return cls(positions=pos, radius=float(radius), adjacency=adjacency)


def generate_topology(n: int, radius: float, rng: np.random.Generator) -> Topology:
    """Place n nodes i.i.d. uniform on the unit square and derive adjacency."""
    if n < 1:
        raise ConfigError("node_count must be at least 1")
    positions = rng.random((n, 2))
    return Topology.from_positions(positions, radius)


def neighbors(topo: Topology, node_id: int) -> set[int]:
    if not (0 <= node_id < topo.node_count):
        raise ConfigError(f"node id {node_id} out of range")
    return {int(v) for v in np.flatnonzero(topo.adjacency[node_id])}


def connected_fraction(topo: Topology, source: int) -> float:
    """Fraction of the other nodes reachable from source (BFS over adjacency)."""
    n = topo.node_count
    if not (0 <= source < n):
        raise ConfigError(f"source id {source} out of range")
    if n == 1:
        return 1.0
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    frontier = [source]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(topo.adjacency[u]):
                if not seen[v]:
                    seen[v] = True
                    nxt.append(int(v))
        frontier = nxt
    return (int(seen.sum()) - 1) / (n - 1)


def dump_topology(topo: Topology, path) -> None:
    """Write a plain-text node list (id, x, y per line) for cross-run reuse."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# radius {topo.radius!r}\n")
        for i, (x, y) in enumerate(topo.positions):
            fh.write(f"{i} {float(x)!r} {float(y)!r}\n")


def load_topology(path, radius: float | None = None) -> Topology:
    """Rebuild a topology from a dump; radius defaults to the dumped value."""
    rows = []
    file_radius = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "radius":
                file_radius = float(parts[1])
            continue
        idx, x, y = line.split()
        rows.append((int(idx), float(x), float(y)))
    rows.sort()
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ConfigError("topology file must list node ids 0..N-1 exactly once")
    if radius is None:
        radius = file_radius
    if radius is None:
        raise ConfigError("no radius given and none recorded in the topology file")
    return Topology.from_positions([(x, y) for _, x, y in rows], radius)

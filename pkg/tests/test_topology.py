import math

import numpy as np
import pytest

from surfsim.errors import ConfigError
from surfsim.rng import stream
from surfsim.topology import (Topology, connected_fraction, dump_topology,
                              generate_topology, load_topology, neighbors)


def brute_force_adjacency(positions, radius):
    n = len(positions)
    adj = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            dx = positions[i][0] - positions[j][0]
            dy = positions[i][1] - positions[j][1]
            adj[i, j] = math.sqrt(dx * dx + dy * dy) <= radius
    return adj


def test_single_node_has_no_edges():
    topo = generate_topology(1, 0.5, stream(0, "topology"))
    assert topo.adjacency.shape == (1, 1)
    assert not topo.adjacency.any()


def test_two_forced_positions_one_edge():
    topo = Topology.from_positions([(0.0, 0.0), (0.0, 0.1)], radius=0.2)
    assert topo.adjacency[0, 1] and topo.adjacency[1, 0]
    assert neighbors(topo, 0) == {1}


def test_generated_adjacency_matches_brute_force():
    topo = generate_topology(70, 0.25, stream(42, "topology"))
    expected = brute_force_adjacency(topo.positions, 0.25)
    assert (topo.adjacency == expected).all()


def test_adjacency_symmetric_irreflexive_over_seeds():
    for seed in range(10):
        n = 5 + seed * 7
        topo = generate_topology(n, 0.1 + 0.05 * seed, stream(seed, "topology"))
        assert (topo.adjacency == topo.adjacency.T).all()
        assert not topo.adjacency.diagonal().any()
        assert (topo.adjacency == brute_force_adjacency(topo.positions, topo.radius)).all()


def test_generation_deterministic():
    a = generate_topology(40, 0.3, stream(9, "topology"))
    b = generate_topology(40, 0.3, stream(9, "topology"))
    assert (a.positions == b.positions).all()
    assert (a.adjacency == b.adjacency).all()


def test_bad_arguments():
    with pytest.raises(ConfigError):
        generate_topology(0, 0.2, stream(0, "topology"))
    with pytest.raises(ConfigError):
        Topology.from_positions([(0.1, 0.1)], radius=0.0)
    with pytest.raises(ConfigError):
        Topology.from_positions([(0.1, 0.1)], radius=2.0)


def test_neighbors_range_check():
    topo = generate_topology(3, 0.2, stream(1, "topology"))
    with pytest.raises(ConfigError):
        neighbors(topo, 3)


def test_connected_fraction_star():
    center = (0.5, 0.5)
    arms = [(0.5 + 0.28, 0.5), (0.5 - 0.28, 0.5), (0.5, 0.5 + 0.28), (0.5, 0.5 - 0.28)]
    topo = Topology.from_positions([center] + arms, radius=0.3)
    # arms reach only the center
    assert neighbors(topo, 1) == {0}
    assert connected_fraction(topo, 0) == 1.0
    assert connected_fraction(topo, 1) == 1.0


def test_connected_fraction_isolated_source():
    topo = Topology.from_positions([(0.0, 0.0), (0.9, 0.9), (0.9, 0.8)], radius=0.2)
    assert connected_fraction(topo, 0) == 0.0
    assert connected_fraction(topo, 1) == 0.5


def test_connected_fraction_full_graph():
    topo = Topology.from_positions([(0.5, 0.5), (0.55, 0.5), (0.5, 0.55)], radius=0.2)
    assert connected_fraction(topo, 0) == 1.0


def test_dump_load_roundtrip(tmp_path):
    topo = generate_topology(25, 0.3, stream(4, "topology"))
    path = tmp_path / "nodes.txt"
    dump_topology(topo, path)
    again = load_topology(path)
    assert (again.positions == topo.positions).all()
    assert (again.adjacency == topo.adjacency).all()
    assert again.radius == topo.radius
    # explicit radius override rebuilds adjacency under the new rule
    wide = load_topology(path, radius=1.0)
    assert wide.adjacency.sum() >= topo.adjacency.sum()

import math

import pytest
from hypothesis import given, strategies as st

from oracles import replay_positions
from wsnsim.model import NodeState
from wsnsim.rng import SplitMix64
from wsnsim.topology import assign_layers, deploy_uniform, deployment_from_nodes, distance, layer_of


@pytest.mark.parametrize("a, b, d", [((0, 0), (3, 4), 5), ((7.5, -2), (7.5, -2), 0),
                                     ((50, 50), (50, 150), 100)])
def test_distance(a, b, d):
    assert distance(a, b) == d


def test_deploy_matches_replay(cfg):
    dep = deploy_uniform(cfg, SplitMix64(42))
    assert dep.positions == replay_positions(42, 100, 100.0, 100.0)
    # frozen from the oracle run
    assert dep.nodes[0].pos == (74.15648787718233, 15.991039287692011)
    assert dep.nodes[2].pos == (3.803016854024621, 86.82280765465323)


def test_deploy_consumes_two_draws_per_node(cfg):
    rng = SplitMix64(5)
    deploy_uniform(cfg.with_overrides(node_count=17), rng)
    ref = SplitMix64(5)
    for _ in range(34):
        ref.next_u64()
    assert rng.getstate() == ref.getstate()


def test_deploy_deterministic(cfg):
    a = deploy_uniform(cfg, SplitMix64(cfg.seed))
    b = deploy_uniform(cfg, SplitMix64(cfg.seed))
    assert a.to_csv() == b.to_csv()
    assert a == b


def test_deploy_properties(cfg):
    dep = deploy_uniform(cfg, SplitMix64(3))
    assert [n.id for n in dep.nodes] == list(range(100))
    for n in dep.nodes:
        assert 0 <= n.pos[0] <= 100 and 0 <= n.pos[1] <= 100
        assert n.energy == cfg.initial_energy and n.alive and n.layer >= 1
    assert dep.d_min <= dep.d_max
    assert dep.layer_count == max(n.layer for n in dep.nodes)


def test_single_node(cfg):
    dep = deploy_uniform(cfg.with_overrides(node_count=1), SplitMix64(1))
    assert len(dep.nodes) == 1 and dep.d_min == dep.d_max and dep.nodes[0].layer >= 1


def test_layer_boundaries():
    assert layer_of(0.0, 30) == 1
    assert layer_of(30.0, 30) == 1
    assert layer_of(30.0 + 1e-9, 30) == 2
    assert layer_of(100.0, 30) == 4


def test_assign_layers_node_at_50_50():
    dep = deployment_from_nodes([NodeState(0, (50.0, 50.0), 0.5), NodeState(1, (50.0, 150.0), 0.5)],
                                (50, 150), 30.0)
    assert [n.layer for n in dep.nodes] == [4, 1]
    assert dep.layer_count == 4
    assert assign_layers(dep, 200.0).layer_count == 1


@given(st.lists(st.tuples(st.floats(0, 100), st.floats(0, 100)), min_size=2, max_size=40),
       st.floats(1, 80))
def test_layer_monotone_in_distance(points, r_layer):
    nodes = [NodeState(i, p, 1.0) for i, p in enumerate(points)]
    dep = deployment_from_nodes(nodes, (50, 150), r_layer)
    by_dist = sorted(dep.nodes, key=lambda n: distance(n.pos, dep.bs_position))
    layers = [n.layer for n in by_dist]
    assert layers == sorted(layers)


def test_csv_schema(cfg):
    dep = deploy_uniform(cfg.with_overrides(node_count=3), SplitMix64(1))
    lines = dep.to_csv().splitlines()
    assert lines[0] == "id,x,y,layer" and len(lines) == 4
    x = float(lines[1].split(",")[1])
    assert x == dep.nodes[0].pos[0]

"""Node deployment, geometry and the BS-centred layer rings."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

from .model import NetworkConfig, NodeState
from .rng import SplitMix64


@dataclass(frozen=True)
class Deployment:
    nodes: tuple[NodeState, ...]
    bs_position: tuple[float, float]
    d_min: float
    d_max: float
    layer_count: int

    @property
    def positions(self) -> list[tuple[float, float]]:
        return [n.pos for n in self.nodes]

    def bs_distances(self) -> list[float]:
        return [distance(n.pos, self.bs_position) for n in self.nodes]

    def distance_matrix(self) -> list[list[float]]:
        pos = self.positions
        return [[distance(a, b) for b in pos] for a in pos]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["id", "x", "y", "layer"])
        for n in self.nodes:
            w.writerow([n.id, repr(n.pos[0]), repr(n.pos[1]), n.layer])
        return buf.getvalue()


def distance(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def deploy_uniform(cfg: NetworkConfig, rng: SplitMix64) -> Deployment:
    """Scatter ``cfg.node_count`` nodes uniformly over the field.

    Each node consumes exactly two draws, x then y, in id order.
    """
    nodes = []
    for i in range(cfg.node_count):
        x = rng.random() * cfg.field_width
        y = rng.random() * cfg.field_height
        nodes.append(NodeState(id=i, pos=(x, y), energy=cfg.initial_energy))
    return deployment_from_nodes(nodes, cfg.bs_position, cfg.proto.r_layer)


def deployment_from_nodes(nodes, bs_position, r_layer: float) -> Deployment:
    """Wrap explicit node states (e.g. a hand-built scenario) into a Deployment."""
    bs = (float(bs_position[0]), float(bs_position[1]))
    nodes = tuple(nodes)
    dists = [distance(n.pos, bs) for n in nodes]
    dep = Deployment(nodes=nodes, bs_position=bs, d_min=min(dists), d_max=max(dists),
                     layer_count=1)
    return assign_layers(dep, r_layer)


def layer_of(d: float, r_layer: float) -> int:
    return max(1, math.ceil(d / r_layer))


def assign_layers(dep: Deployment, r_layer: float) -> Deployment:
    if r_layer <= 0:
        raise ValueError("r_layer must be positive")
    nodes = tuple(
        replace(n, layer=layer_of(distance(n.pos, dep.bs_position), r_layer))
        for n in dep.nodes
    )
    return replace(dep, nodes=nodes, layer_count=max(n.layer for n in nodes))

"""Cluster-head election and cluster formation.

LEACH uses the classic rotating threshold. LAYERED elects tentative heads
with probability proportional to residual energy, then lets them compete
inside a radius that shrinks toward the base station, so clusters close to
the BS end up smaller (they carry the relay traffic of outer layers).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import NetworkConfig, NodeState, Protocol, ProtocolParams
from .rng import SplitMix64
from .topology import Deployment, distance


@dataclass(frozen=True)
class ClusterAssignment:
    round: int
    heads: frozenset[int]
    membership: dict[int, int]
    cluster_sizes: dict[int, int]

    def members_of(self, head: int) -> list[int]:
        return sorted(n for n, h in self.membership.items() if h == head and n != head)

    def check_partition(self, nodes: Iterable[NodeState]) -> None:
        alive = {n.id for n in nodes if n.alive}
        if set(self.membership) != alive:
            raise AssertionError(f"round {self.round}: membership does not cover alive nodes exactly")
        if not self.heads <= alive or not set(self.membership.values()) <= self.heads:
            raise AssertionError(f"round {self.round}: membership points outside head set")
        if any(self.membership[h] != h for h in self.heads):
            raise AssertionError(f"round {self.round}: head not mapped to itself")
        if sum(self.cluster_sizes.values()) != len(alive):
            raise AssertionError(f"round {self.round}: cluster sizes do not sum to alive count")

    def csv_rows(self, layers) -> list[tuple]:
        return [(self.round, n, h, layers[h]) for n, h in sorted(self.membership.items())]


@dataclass(frozen=True)
class ControlMessage:
    """One setup-phase transmission and the nodes that must receive it."""
    kind: str  # "adv", "join" or "schedule"
    sender: int
    receivers: tuple[int, ...]
    distance: float


def competition_radius(pp: ProtocolParams, d_node_bs: float, d_min: float, d_max: float) -> float:
    if d_max == d_min:
        return pp.r0
    return pp.r0 * (1.0 - pp.c_unequal * (d_max - d_node_bs) / (d_max - d_min))


def rotation_epoch(p_ch: float) -> int:
    return math.ceil(1.0 / p_ch)


def leach_threshold(p_ch: float, round: int, eligible: bool) -> float:
    if not eligible:
        return 0.0
    t = p_ch / (1.0 - p_ch * (round % rotation_epoch(p_ch)))
    # float rounding pushes the last-round-of-epoch value just past 1
    return min(1.0, t)


def leach_eligible(node: NodeState, round: int, epoch: int) -> bool:
    """False if the node already served as CH in the current rotation epoch."""
    return node.rounds_since_ch is None or node.rounds_since_ch > round % epoch


def _fallback_head(candidates: Iterable[NodeState]) -> int:
    best = min(candidates, key=lambda n: (-n.energy, n.id))
    return best.id


def elect_heads(nodes: list[NodeState], dep: Deployment, cfg: NetworkConfig, round: int,
                rng: SplitMix64) -> set[int]:
    if not any(n.alive for n in nodes):
        raise ValueError("elect_heads needs at least one alive node")
    pp = cfg.proto
    alive = [n for n in nodes if n.alive]
    if cfg.protocol is Protocol.LEACH:
        epoch = rotation_epoch(pp.p_ch)
        eligible = [n for n in alive if leach_eligible(n, round, epoch)]
        heads = set()
        for n in eligible:
            if rng.random() < leach_threshold(pp.p_ch, round, True):
                heads.add(n.id)
        if not heads:
            # a forced head repeats within the epoch only once rotation is exhausted
            heads = {_fallback_head(eligible or alive)}
    else:
        tentative = set()
        e0 = cfg.initial_energy
        for n in nodes:
            if n.alive and rng.random() < pp.p_ch * (n.energy / e0):
                tentative.add(n.id)
        heads = resolve_competition(tentative, nodes, dep, pp) if tentative else set()
        if not heads:
            heads = {_fallback_head(alive)}
    return heads


def resolve_competition(tentative: set[int], nodes: list[NodeState], dep: Deployment,
                        pp: ProtocolParams) -> set[int]:
    """Confirm tentative heads in descending residual energy.

    A candidate is dropped when a confirmed head sits closer than the
    smaller of the two competition radii.
    """
    if not tentative:
        raise ValueError("resolve_competition needs at least one tentative head")
    bs = dep.bs_position
    radius = {
        i: competition_radius(pp, distance(nodes[i].pos, bs), dep.d_min, dep.d_max)
        for i in tentative
    }
    confirmed: list[int] = []
    for i in sorted(tentative, key=lambda i: (-nodes[i].energy, i)):
        p = nodes[i].pos
        if all(distance(p, nodes[h].pos) >= min(radius[i], radius[h]) for h in confirmed):
            confirmed.append(i)
    return set(confirmed)


def form_clusters(heads: set[int], nodes: list[NodeState], dep: Deployment, cfg: NetworkConfig,
                  round: int = 0, dist: Optional[list[list[float]]] = None,
                  ) -> tuple[ClusterAssignment, list[ControlMessage]]:
    """Attach every alive non-head to its nearest head.

    Also returns the setup-phase control traffic (advertise, join,
    schedule) in the order the engine must charge it. The list is empty
    when ``ctrl_packet_bits`` is 0.
    """
    if not heads:
        raise ValueError("form_clusters needs at least one head")
    if dist is None:
        dist = dep.distance_matrix()
    head_list = sorted(heads)
    membership = {h: h for h in head_list}
    for n in nodes:
        if not n.alive or n.id in heads:
            continue
        row = dist[n.id]
        # strict < keeps the lowest head id on ties
        best = head_list[0]
        for h in head_list[1:]:
            if row[h] < row[best]:
                best = h
        membership[n.id] = best
    membership = dict(sorted(membership.items()))
    sizes = {h: 0 for h in head_list}
    for h in membership.values():
        sizes[h] += 1
    assignment = ClusterAssignment(round=round, heads=frozenset(heads), membership=membership,
                                   cluster_sizes=sizes)

    messages: list[ControlMessage] = []
    if cfg.ctrl_packet_bits > 0:
        messages = _control_messages(assignment, nodes, dep, cfg, dist)
    return assignment, messages


def _control_messages(a: ClusterAssignment, nodes, dep, cfg, dist) -> list[ControlMessage]:
    pp = cfg.proto
    head_list = sorted(a.heads)
    others = [n.id for n in nodes if n.alive and n.id not in a.heads]
    msgs = []
    for h in head_list:
        if cfg.protocol is Protocol.LEACH:
            r = pp.r0
        else:
            r = competition_radius(pp, distance(nodes[h].pos, dep.bs_position), dep.d_min, dep.d_max)
        heard = tuple(i for i in others if dist[h][i] <= r)
        msgs.append(ControlMessage("adv", h, heard, r))
    for i in others:
        h = a.membership[i]
        msgs.append(ControlMessage("join", i, (h,), dist[i][h]))
    for h in head_list:
        members = a.members_of(h)
        if members:
            far = max(dist[h][m] for m in members)
            msgs.append(ControlMessage("schedule", h, tuple(members), far))
    return msgs


def clusters_csv(assignments: Iterable[ClusterAssignment], layers) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "node", "head", "layer_of_head"])
    for a in assignments:
        w.writerows(a.csv_rows(layers))
    return buf.getvalue()

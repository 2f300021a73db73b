"""Inter-cluster routing: every head forwards toward a richer head in a lower layer."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Optional

from .model import NodeState, RadioParams
from .topology import Deployment, distance

BS = -1  # next-hop / path marker for the base station


class RoutingLoopDetected(RuntimeError):
    """A route failed to reach the BS through strictly decreasing layers."""


@dataclass(frozen=True)
class RoutingTable:
    round: int
    next_hop: dict[int, int]
    paths: dict[int, tuple[int, ...]]

    def csv_rows(self) -> list[tuple]:
        return [(self.round, h, "BS" if self.next_hop[h] == BS else self.next_hop[h],
                 len(self.paths[h]) - 1)
                for h in sorted(self.next_hop)]


def select_next_hop(head: int, heads: Iterable[int], nodes: list[NodeState], dep: Deployment,
                    radio: RadioParams, dist: Optional[list[list[float]]] = None) -> int:
    node = nodes[head]
    layer = node.layer
    if layer == 1:
        return BS
    bs = dep.bs_position
    r_max = radio.tx_range
    best, best_key = BS, None
    for h in heads:
        cand = nodes[h]
        if h == head or not cand.alive or cand.layer >= layer:
            continue
        d = dist[head][h] if dist is not None else distance(node.pos, cand.pos)
        if d > r_max:
            continue
        key = (-cand.energy, distance(cand.pos, bs), h)
        if best_key is None or key < best_key:
            best, best_key = h, key
    return best


def direct_routes(heads: Iterable[int], round: int = 0) -> RoutingTable:
    """Single-hop table: every head sends straight to the BS (LEACH)."""
    heads = sorted(heads)
    return RoutingTable(round, {h: BS for h in heads}, {h: (h, BS) for h in heads})


def build_routes(heads: Iterable[int], nodes: list[NodeState], dep: Deployment, radio: RadioParams,
                 round: int = 0, dist: Optional[list[list[float]]] = None) -> RoutingTable:
    heads = sorted(heads)
    if not heads:
        raise ValueError("build_routes needs at least one head")
    next_hop = {h: select_next_hop(h, heads, nodes, dep, radio, dist) for h in heads}
    paths = {}
    for h in heads:
        path = [h]
        cur = h
        while cur != BS:
            nxt = next_hop.get(cur)
            if nxt is None:
                raise RoutingLoopDetected(f"round {round}: head {cur} has no next hop")
            if nxt != BS and nodes[nxt].layer >= nodes[cur].layer:
                raise RoutingLoopDetected(
                    f"round {round}: hop {cur}->{nxt} does not descend a layer")
            path.append(nxt)
            cur = nxt
            if len(path) > len(heads) + 1:
                raise RoutingLoopDetected(f"round {round}: path from {h} exceeds head count")
        paths[h] = tuple(path)
    return RoutingTable(round, next_hop, paths)


def routes_csv(tables: Iterable[RoutingTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["round", "head", "next_hop", "path_len"])
    for t in tables:
        w.writerows(t.csv_rows())
    return buf.getvalue()

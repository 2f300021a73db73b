"""Round-based simulation loop and energy accounting."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from typing import Optional

from . import radio
from .cluster import ClusterAssignment, elect_heads, form_clusters
from .metrics import RoundReport, SimulationSummary, fmt, summarize
from .model import NetworkConfig, NodeState, Protocol, Role, ensure_valid
from .rng import SplitMix64
from .route import BS, RoutingLoopDetected, RoutingTable, build_routes, direct_routes
from .topology import Deployment, deploy_uniform

CONSERVATION_TOL = 1e-9


class InvariantViolation(RuntimeError):
    """An internal accounting invariant broke; this is a simulator bug."""


class Action(str, enum.Enum):
    TX_DATA = "TX_DATA"
    RX_DATA = "RX_DATA"
    TX_CTRL = "TX_CTRL"
    RX_CTRL = "RX_CTRL"
    AGGREGATE = "AGGREGATE"


@dataclass(frozen=True, slots=True)
class LedgerEntry:
    round: int
    node: int
    action: Action
    # for AGGREGATE: total fused bits (packet bits x input signals)
    bits: int
    distance: float
    joules: float


def action_cost(params, action: Action, bits: int, distance: float) -> float:
    if action is Action.TX_DATA or action is Action.TX_CTRL:
        return radio.tx_cost(params, bits, distance)
    if action is Action.AGGREGATE:
        return radio.aggregation_cost(params, bits, 1)
    return radio.rx_cost(params, bits)


class EnergyLedger:
    """Append-only record of energy debits.

    Per-node totals are always kept; individual entries only when
    ``keep_entries`` is set (trace mode).
    """

    def __init__(self, node_count: int, keep_entries: bool = False):
        self.keep_entries = keep_entries
        self.entries: list[LedgerEntry] = []
        self.spent = [0.0] * node_count
        self.count = 0

    def record(self, round: int, node: int, action: Action, bits: int, distance: float,
               joules: float) -> None:
        self.spent[node] += joules
        self.count += 1
        if self.keep_entries:
            self.entries.append(LedgerEntry(round, node, action, bits, distance, joules))

    def total(self) -> float:
        return math.fsum(self.spent)

    def __len__(self):
        return self.count

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "node", "action", "bits", "distance_m", "joules"])
        for e in self.entries:
            w.writerow([e.round, e.node, e.action.value, e.bits, fmt(e.distance), fmt(e.joules)])
        return buf.getvalue()


@dataclass
class SimState:
    cfg: NetworkConfig
    deployment: Deployment
    nodes: list[NodeState]
    rng: SplitMix64
    ledger: EnergyLedger
    dist: list[list[float]]
    bs_dist: list[float]
    round: int = 0
    delivered_packets: int = 0
    generated_packets: int = 0
    readings_delivered: int = 0
    residual_prev: float = 0.0
    round_spent: list[float] = field(default_factory=list)
    trace: bool = False
    assignments: list[ClusterAssignment] = field(default_factory=list)
    routes: list[RoutingTable] = field(default_factory=list)

    @property
    def initial_total(self) -> float:
        return self.cfg.node_count * self.cfg.initial_energy

    def residual_total(self) -> float:
        return math.fsum(n.energy for n in self.nodes)

    def alive_count(self) -> int:
        return sum(1 for n in self.nodes if n.alive)


def conservation_tolerance(cfg: NetworkConfig, debits: int) -> float:
    """1e-9 J, widened only when per-node budgets are so large that each
    debit's rounding error (half an ulp of the budget, twice: residual and
    running total) can exceed it."""
    return max(CONSERVATION_TOL, debits * cfg.initial_energy * 2.0**-52)


def init_state(cfg: NetworkConfig, deployment: Optional[Deployment] = None,
               trace: bool = False) -> SimState:
    """Deploy (unless a deployment is given) and build the round-0 state."""
    rng = SplitMix64(cfg.seed)
    if deployment is None:
        deployment = deploy_uniform(cfg, rng)
    nodes = [NodeState(id=n.id, pos=n.pos, energy=n.energy, layer=n.layer)
             for n in deployment.nodes]
    if len(nodes) != cfg.node_count:
        raise ValueError("deployment size does not match cfg.node_count")
    state = SimState(
        cfg=cfg, deployment=deployment, nodes=nodes, rng=rng,
        ledger=EnergyLedger(len(nodes), keep_entries=trace),
        dist=deployment.distance_matrix(), bs_dist=deployment.bs_distances(),
        trace=trace,
    )
    state.residual_prev = state.residual_total()
    state.round_spent = [0.0] * len(nodes)
    return state


def spend(state: SimState, node: int, action: Action, bits: int, distance: float = 0.0) -> bool:
    """Debit one action from ``node``.

    Returns True when the action takes effect. A node that cannot afford
    the full cost is drained to exactly zero, marked dead, and the action
    is lost (returns False).
    """
    n = state.nodes[node]
    if not n.alive:
        raise InvariantViolation(f"round {state.round}: dead node {node} asked to spend")
    cost = action_cost(state.cfg.radio, action, bits, distance)
    if n.energy >= cost:
        n.energy -= cost
        paid, ok = cost, True
    else:
        paid, ok = n.energy, False
        n.energy = 0.0
        n.alive = False
    state.ledger.record(state.round, node, action, bits, distance, paid)
    state.round_spent[node] += paid
    return ok


def _setup(state: SimState):
    cfg, nodes = state.cfg, state.nodes
    r = state.round
    for n in nodes:
        n.role = Role.MEMBER
        n.cluster_head = None
        if n.rounds_since_ch is not None:
            n.rounds_since_ch += 1

    heads = elect_heads(nodes, state.deployment, cfg, r, state.rng)
    assignment, messages = form_clusters(heads, nodes, state.deployment, cfg, r, state.dist)
    assignment.check_partition(nodes)
    for i, h in assignment.membership.items():
        nodes[i].cluster_head = h
    for h in heads:
        nodes[h].role = Role.CH
        nodes[h].rounds_since_ch = 0

    bits = cfg.ctrl_packet_bits
    for msg in messages:
        if not nodes[msg.sender].alive:
            continue
        if spend(state, msg.sender, Action.TX_CTRL, bits, msg.distance):
            for i in msg.receivers:
                if nodes[i].alive:
                    spend(state, i, Action.RX_CTRL, bits)

    live_heads = [h for h in sorted(heads) if nodes[h].alive]
    if cfg.protocol is Protocol.LEACH:
        table = direct_routes(live_heads, r)
    elif live_heads:
        table = build_routes(live_heads, nodes, state.deployment, cfg.radio, r, state.dist)
    else:
        table = RoutingTable(r, {}, {})
    return assignment, table


def _frame(state: SimState, assignment: ClusterAssignment, table: RoutingTable,
           relayed: dict[int, int]) -> None:
    cfg, nodes, dist = state.cfg, state.nodes, state.dist
    k = cfg.data_packet_bits
    state.generated_packets += sum(1 for n in nodes if n.alive)

    inbox: dict[int, list[int]] = {h: [] for h in assignment.heads}
    for i, h in assignment.membership.items():
        if i == h or not nodes[i].alive:
            continue
        if spend(state, i, Action.TX_DATA, k, dist[i][h]) and nodes[h].alive:
            inbox[h].append(i)

    for h in sorted(assignment.heads):
        if not nodes[h].alive or h not in table.paths:
            continue
        received = 0
        for _ in inbox[h]:
            if not spend(state, h, Action.RX_DATA, k):
                break
            received += 1
        if not nodes[h].alive:
            continue
        if not spend(state, h, Action.AGGREGATE, k * (received + 1)):
            continue
        path = table.paths[h]
        cur = h
        for nxt in path[1:]:
            d = state.bs_dist[cur] if nxt == BS else dist[cur][nxt]
            if not spend(state, cur, Action.TX_DATA, k, d):
                break
            if nxt == BS:
                state.delivered_packets += 1
                state.readings_delivered += received + 1
                break
            if not nodes[nxt].alive or not spend(state, nxt, Action.RX_DATA, k):
                break
            relayed[nxt] = relayed.get(nxt, 0) + 1
            cur = nxt


def run_round(state: SimState) -> RoundReport:
    """Setup (election, clustering, routing) then the steady-state frames."""
    if not any(n.alive for n in state.nodes):
        raise InvariantViolation("run_round called with no alive node")
    cfg = state.cfg
    state.round_spent = [0.0] * len(state.nodes)
    delivered0, generated0 = state.delivered_packets, state.generated_packets
    readings0 = state.readings_delivered

    assignment, table = _setup(state)
    relayed: dict[int, int] = {}
    for _ in range(cfg.frames_per_round):
        if not any(n.alive for n in state.nodes):
            break
        _frame(state, assignment, table, relayed)

    residual = state.residual_total()
    gap = residual + state.ledger.total() - state.initial_total
    if abs(gap) > conservation_tolerance(cfg, len(state.ledger)):
        raise InvariantViolation(
            f"round {state.round}: energy conservation broken by {gap:.3e} J")
    if state.delivered_packets > state.generated_packets:
        raise InvariantViolation(f"round {state.round}: delivered exceeds generated")

    layers = state.deployment.nodes
    by_layer: dict[int, list[int]] = {}
    for h, size in assignment.cluster_sizes.items():
        by_layer.setdefault(layers[h].layer, []).append(size)
    report = RoundReport(
        round=state.round,
        alive=state.alive_count(),
        residual_total=residual,
        dissipated_this_round=state.residual_prev - residual,
        packets_delivered=state.delivered_packets - delivered0,
        packets_generated=state.generated_packets - generated0,
        head_count=len(assignment.heads),
        per_layer_mean_cluster_size={
            layer: sum(s) / len(s) for layer, s in sorted(by_layer.items())},
        per_head_load={
            h: (assignment.cluster_sizes[h] - 1, relayed.get(h, 0), state.round_spent[h])
            for h in sorted(assignment.heads)},
        readings_delivered=state.readings_delivered - readings0,
    )
    if state.trace:
        state.assignments.append(assignment)
        state.routes.append(table)
    state.residual_prev = residual
    state.round += 1
    return report


@dataclass
class SimulationResult:
    summary: SimulationSummary
    reports: list[RoundReport]
    ledger: Optional[EnergyLedger]
    state: SimState


def run_simulation(cfg: NetworkConfig, trace: bool = False,
                   deployment: Optional[Deployment] = None) -> SimulationResult:
    """Run rounds until ``max_rounds`` or until every node is dead."""
    ensure_valid(cfg)
    state = init_state(cfg, deployment, trace)
    reports = []
    while state.round < cfg.max_rounds and any(n.alive for n in state.nodes):
        reports.append(run_round(state))
    summary = summarize(reports, cfg.node_count)
    return SimulationResult(summary, reports, state.ledger if trace else None, state)


__all__ = [
    "Action", "EnergyLedger", "InvariantViolation", "LedgerEntry", "RoutingLoopDetected",
    "SimState", "SimulationResult", "action_cost", "init_state", "run_round",
    "run_simulation", "spend",
]

"""Per-round measurements, lifetime milestones and multi-seed comparison."""

from __future__ import annotations

import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from .model import NetworkConfig, Protocol


def fmt(x) -> str:
    """Canonical CSV cell: 12 significant digits for floats, blank for unset."""
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


@dataclass
class RoundReport:
    round: int
    alive: int
    residual_total: float
    dissipated_this_round: float
    packets_delivered: int
    packets_generated: int
    head_count: int
    per_layer_mean_cluster_size: dict[int, float] = field(default_factory=dict)
    # head -> (members excluding the head, relayed packets, joules spent this round)
    per_head_load: dict[int, tuple[int, int, float]] = field(default_factory=dict)
    # sensor readings carried by the delivered aggregate packets
    readings_delivered: int = 0


@dataclass
class SimulationSummary:
    fnd_round: Optional[int] = None
    hnd_round: Optional[int] = None
    lnd_round: Optional[int] = None
    total_delivered: int = 0
    total_generated: int = 0
    delivery_ratio: Optional[float] = None
    joules_per_delivered_packet: Optional[float] = None
    ch_load_cv: Optional[float] = None
    rounds_simulated: int = 0
    total_dissipated: float = 0.0
    readings_delivered: int = 0
    reading_delivery_ratio: Optional[float] = None

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, c) for c in self.columns()]


def coefficient_of_variation(values: Sequence[float]) -> Optional[float]:
    if not values:
        return None
    mean = math.fsum(values) / len(values)
    if mean == 0:
        return None
    return statistics.pstdev(values, mean) / mean


def summarize(reports: Sequence[RoundReport], node_count: Optional[int] = None) -> SimulationSummary:
    """Reduce a run's round reports to lifetime milestones and totals.

    ``node_count`` defaults to the alive count before the first round,
    which is only known when nothing died in it; pass it explicitly.
    """
    s = SimulationSummary()
    if not reports:
        return s
    n = node_count if node_count is not None else reports[0].alive
    for r in reports:
        if s.fnd_round is None and r.alive < n:
            s.fnd_round = r.round
        if s.hnd_round is None and r.alive <= n / 2:
            s.hnd_round = r.round
        if s.lnd_round is None and r.alive == 0:
            s.lnd_round = r.round
    s.rounds_simulated = len(reports)
    s.total_delivered = sum(r.packets_delivered for r in reports)
    s.total_generated = sum(r.packets_generated for r in reports)
    s.readings_delivered = sum(r.readings_delivered for r in reports)
    s.total_dissipated = math.fsum(r.dissipated_this_round for r in reports)
    if s.total_generated:
        s.delivery_ratio = s.total_delivered / s.total_generated
        s.reading_delivery_ratio = s.readings_delivered / s.total_generated
    if s.total_delivered:
        s.joules_per_delivered_packet = s.total_dissipated / s.total_delivered
    s.ch_load_cv = coefficient_of_variation(
        [load[2] for r in reports for load in r.per_head_load.values()])
    return s


# -- comparison -------------------------------------------------------------

@dataclass(frozen=True)
class ProtocolVariant:
    protocol: Protocol
    c_unequal: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "ProtocolVariant":
        """``leach``, ``layered`` or ``layered:<c_unequal>``."""
        name, _, c = text.strip().partition(":")
        proto = Protocol.parse(name)
        if c:
            if proto is Protocol.LEACH:
                raise ValueError("LEACH takes no unequal factor")
            return cls(proto, float(c))
        return cls(proto)

    def label(self, cfg: Optional[NetworkConfig] = None) -> str:
        if self.protocol is Protocol.LEACH:
            return "LEACH"
        c = self.c_unequal
        if c is None:
            if cfg is None:
                return "LAYERED"
            c = cfg.proto.c_unequal
        return f"LAYERED(c={c:g})"

    def apply(self, cfg: NetworkConfig) -> NetworkConfig:
        if self.c_unequal is None:
            return cfg.with_overrides(protocol=self.protocol)
        return cfg.with_overrides(protocol=self.protocol, proto__c_unequal=self.c_unequal)


DEFAULT_VARIANTS = (ProtocolVariant(Protocol.LEACH), ProtocolVariant(Protocol.LAYERED, 0.0),
                    ProtocolVariant(Protocol.LAYERED, 0.5))

# metric -> True when larger is better
COMPARED_METRICS = {
    "fnd_round": True,
    "lnd_round": True,
    "delivery_ratio": True,
    "joules_per_delivered_packet": False,
    "ch_load_cv": False,
}


class RunError(RuntimeError):
    def __init__(self, label: str, seed: int, cause: BaseException):
        super().__init__(f"{label} seed={seed}: {cause}")
        self.label, self.seed, self.cause = label, seed, cause


@dataclass
class RunOutcome:
    summary: SimulationSummary
    alive: list[int]
    residual: list[float]


@dataclass
class ComparisonTable:
    labels: list[str]
    seeds: list[int]
    max_rounds: int
    runs: dict[tuple[str, int], RunOutcome]

    def summary(self, label: str, seed: int) -> SimulationSummary:
        return self.runs[(label, seed)].summary

    def values(self, label: str, metric: str) -> list[Optional[float]]:
        """Per-seed values; unset milestones count as surviving ``max_rounds``."""
        out = []
        for seed in self.seeds:
            v = getattr(self.summary(label, seed), metric)
            if v is None and metric.endswith("_round"):
                v = self.max_rounds
            out.append(v)
        return out

    def median(self, label: str, metric: str) -> Optional[float]:
        vals = [v for v in self.values(label, metric) if v is not None]
        return statistics.median(vals) if vals else None

    def win_rate(self, label: str, metric: str) -> float:
        """Fraction of seeds where ``label`` is strictly best on ``metric``."""
        larger = COMPARED_METRICS[metric]
        wins = 0
        for i in range(len(self.seeds)):
            col = {lab: self.values(lab, metric)[i] for lab in self.labels}
            mine = col[label]
            if mine is None:
                continue
            others = [v for lab, v in col.items() if lab != label and v is not None]
            if all((mine > v) if larger else (mine < v) for v in others):
                wins += 1
        return wins / len(self.seeds)

    def mean_series(self, label: str, attr: str) -> list[float]:
        """Cross-seed mean per round; finished runs hold their last value."""
        series = [getattr(self.runs[(label, s)], attr) for s in self.seeds]
        length = max((len(x) for x in series), default=0)
        out = []
        for t in range(length):
            vals = [x[t] if t < len(x) else (x[-1] if x else 0) for x in series]
            out.append(math.fsum(vals) / len(vals))
        return out


def _run_one(cfg: NetworkConfig) -> RunOutcome:
    from .engine import run_simulation

    res = run_simulation(cfg)
    return RunOutcome(res.summary, [r.alive for r in res.reports],
                      [r.residual_total for r in res.reports])


def compare_runs(cfg: NetworkConfig, protocols: Sequence[ProtocolVariant], seeds: Sequence[int],
                 workers: int = 1) -> ComparisonTable:
    """Run every (protocol, seed) pair and collect their summaries."""
    if not protocols or not seeds:
        raise ValueError("compare_runs needs at least one protocol and one seed")
    labels = []
    for v in protocols:
        label = v.label(cfg)
        while label in labels:
            label += "'"
        labels.append(label)
    jobs = [(label, seed, v.apply(cfg).with_overrides(seed=seed))
            for label, v in zip(labels, protocols) for seed in seeds]
    runs = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [(label, seed, pool.submit(_run_one, c)) for label, seed, c in jobs]
            for label, seed, fut in futures:
                try:
                    runs[(label, seed)] = fut.result()
                except Exception as exc:
                    raise RunError(label, seed, exc) from exc
    else:
        for label, seed, c in jobs:
            try:
                runs[(label, seed)] = _run_one(c)
            except Exception as exc:
                raise RunError(label, seed, exc) from exc
    return ComparisonTable(labels, list(seeds), cfg.max_rounds, runs)

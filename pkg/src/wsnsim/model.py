"""Scenario and node types, configuration validation and JSON loading."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, fields, replace
from functools import cached_property
from pathlib import Path
from typing import Any, Optional


class Protocol(str, enum.Enum):
    LEACH = "LEACH"
    LAYERED = "LAYERED"

    @classmethod
    def parse(cls, value) -> "Protocol":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                pass
        raise ValueError(f"unknown protocol {value!r} (expected one of: leach, layered)")


class Role(enum.Enum):
    MEMBER = "MEMBER"
    CH = "CH"
    TENTATIVE_CH = "TENTATIVE_CH"


@dataclass(frozen=True)
class RadioParams:
    e_elec: float = 50e-9
    eps_fs: float = 10e-12
    eps_mp: float = 0.0013e-12
    e_da: float = 5e-9
    # None means "use the crossover distance"
    r_tx_max: Optional[float] = None

    @cached_property
    def d0(self) -> float:
        return math.sqrt(self.eps_fs / self.eps_mp)

    @property
    def tx_range(self) -> float:
        return self.d0 if self.r_tx_max is None else self.r_tx_max


@dataclass(frozen=True)
class ProtocolParams:
    p_ch: float = 0.05
    r0: float = 40.0
    c_unequal: float = 0.5
    r_layer: float = 30.0


@dataclass(frozen=True)
class NetworkConfig:
    field_width: float = 100.0
    field_height: float = 100.0
    node_count: int = 100
    bs_position: tuple[float, float] = (50.0, 150.0)
    initial_energy: float = 0.5
    radio: RadioParams = field(default_factory=RadioParams)
    data_packet_bits: int = 4000
    ctrl_packet_bits: int = 200
    frames_per_round: int = 1
    max_rounds: int = 2000
    seed: int = 42
    protocol: Protocol = Protocol.LAYERED
    proto: ProtocolParams = field(default_factory=ProtocolParams)

    def with_overrides(self, **kw) -> "NetworkConfig":
        """Copy with top-level fields or ``proto``/``radio`` sub-fields replaced.

        Sub-fields are addressed as ``proto__c_unequal=0.0``.
        """
        top, sub = {}, {"proto": {}, "radio": {}}
        for key, value in kw.items():
            if "__" in key:
                group, name = key.split("__", 1)
                sub[group][name] = value
            else:
                top[key] = value
        if sub["proto"]:
            top["proto"] = replace(top.get("proto", self.proto), **sub["proto"])
        if sub["radio"]:
            top["radio"] = replace(top.get("radio", self.radio), **sub["radio"])
        return replace(self, **top)


@dataclass(slots=True)
class NodeState:
    id: int
    pos: tuple[float, float]
    energy: float
    alive: bool = True
    role: Role = Role.MEMBER
    layer: int = 1
    cluster_head: Optional[int] = None
    # None until the node first serves as CH
    rounds_since_ch: Optional[int] = None


@dataclass
class ValidationResult:
    violations: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def fields(self) -> list[str]:
        return [name for name, _ in self.violations]

    def __str__(self):
        lines = [f"{name}: {msg}" for name, msg in self.violations]
        lines += [f"warning: {name}: {msg}" for name, msg in self.warnings]
        return "\n".join(lines) if lines else "ok"


class ConfigError(ValueError):
    """Raised when a configuration cannot be parsed or fails validation."""

    def __init__(self, message: str, result: Optional[ValidationResult] = None):
        super().__init__(message)
        self.result = result


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def validate_config(cfg: NetworkConfig) -> ValidationResult:
    """Check every field; never stops at the first failure."""
    res = ValidationResult()
    bad = res.violations.append

    def positive(name, value):
        if not _is_number(value) or value <= 0:
            bad((name, f"must be a positive number, got {value!r}"))
            return False
        return True

    positive("field_width", cfg.field_width)
    positive("field_height", cfg.field_height)
    positive("initial_energy", cfg.initial_energy)

    if not _is_int(cfg.node_count) or cfg.node_count < 1:
        bad(("node_count", f"must be an integer >= 1, got {cfg.node_count!r}"))
    for name in ("frames_per_round", "max_rounds"):
        value = getattr(cfg, name)
        lo = 1 if name == "frames_per_round" else 0
        if not _is_int(value) or value < lo:
            bad((name, f"must be an integer >= {lo}, got {value!r}"))
    if not _is_int(cfg.data_packet_bits) or cfg.data_packet_bits < 1:
        bad(("data_packet_bits", f"must be an integer >= 1, got {cfg.data_packet_bits!r}"))
    if not _is_int(cfg.ctrl_packet_bits) or cfg.ctrl_packet_bits < 0:
        bad(("ctrl_packet_bits", f"must be an integer >= 0, got {cfg.ctrl_packet_bits!r}"))
    if not _is_int(cfg.seed) or not 0 <= cfg.seed < 2**64:
        bad(("seed", f"must be a 64-bit unsigned integer, got {cfg.seed!r}"))

    bs = cfg.bs_position
    if (not isinstance(bs, (tuple, list)) or len(bs) != 2
            or not all(_is_number(v) for v in bs)):
        bad(("bs_position", f"must be a pair of numbers, got {bs!r}"))

    if not isinstance(cfg.protocol, Protocol):
        bad(("protocol", f"must be one of LEACH, LAYERED, got {cfg.protocol!r}"))

    radio = cfg.radio
    radio_ok = True
    for name in ("e_elec", "eps_fs", "eps_mp", "e_da"):
        radio_ok &= positive(f"radio.{name}", getattr(radio, name))
    if radio.r_tx_max is not None:
        if positive("radio.r_tx_max", radio.r_tx_max) and radio_ok and radio.r_tx_max > radio.d0:
            res.warnings.append((
                "radio.r_tx_max",
                f"{radio.r_tx_max:g} m exceeds crossover distance d0={radio.d0:.3f} m; "
                "multipath regime reachable on inter-cluster hops",
            ))

    pp = cfg.proto
    if not _is_number(pp.p_ch) or not 0 < pp.p_ch < 1:
        bad(("proto.p_ch", f"must lie in the open interval (0, 1), got {pp.p_ch!r}"))
    positive("proto.r0", pp.r0)
    if not _is_number(pp.c_unequal) or not 0 <= pp.c_unequal < 1:
        bad(("proto.c_unequal", f"must lie in [0, 1), got {pp.c_unequal!r}"))
    positive("proto.r_layer", pp.r_layer)
    return res


# -- JSON ------------------------------------------------------------------

_TOP_KEYS = {f.name for f in fields(NetworkConfig)}
_RADIO_KEYS = {f.name for f in fields(RadioParams)}
_PROTO_KEYS = {f.name for f in fields(ProtocolParams)}


def config_from_dict(data: dict[str, Any], base: Optional[NetworkConfig] = None) -> NetworkConfig:
    """Build a config from a JSON-style mapping layered over ``base`` (defaults).

    Unknown keys and malformed values raise :class:`ConfigError`; range
    checks are left to :func:`validate_config`.
    """
    base = base or NetworkConfig()
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    problems = []
    problems += [f"{k}: unknown key" for k in sorted(set(data) - _TOP_KEYS)]

    radio = data.get("radio", {}) or {}
    proto = data.get("proto", {}) or {}
    for name, sub, keys in (("radio", radio, _RADIO_KEYS), ("proto", proto, _PROTO_KEYS)):
        if not isinstance(sub, dict):
            problems.append(f"{name}: must be an object")
            continue
        problems += [f"{name}.{k}: unknown key" for k in sorted(set(sub) - keys)]

    kw = {k: v for k, v in data.items() if k in _TOP_KEYS and k not in ("radio", "proto")}
    if "bs_position" in kw and isinstance(kw["bs_position"], list):
        kw["bs_position"] = tuple(kw["bs_position"])
    if "protocol" in kw:
        try:
            kw["protocol"] = Protocol.parse(kw["protocol"])
        except ValueError as exc:
            problems.append(f"protocol: {exc}")
            del kw["protocol"]
    if problems:
        raise ConfigError("\n".join(problems))

    cfg = replace(base, **kw)
    if radio:
        cfg = replace(cfg, radio=replace(cfg.radio, **radio))
    if proto:
        cfg = replace(cfg, proto=replace(cfg.proto, **proto))
    return cfg


def config_to_dict(cfg: NetworkConfig) -> dict[str, Any]:
    return {
        "field_width": cfg.field_width,
        "field_height": cfg.field_height,
        "node_count": cfg.node_count,
        "bs_position": list(cfg.bs_position),
        "initial_energy": cfg.initial_energy,
        "radio": {f.name: getattr(cfg.radio, f.name) for f in fields(RadioParams)},
        "data_packet_bits": cfg.data_packet_bits,
        "ctrl_packet_bits": cfg.ctrl_packet_bits,
        "frames_per_round": cfg.frames_per_round,
        "max_rounds": cfg.max_rounds,
        "seed": cfg.seed,
        "protocol": cfg.protocol.value,
        "proto": {f.name: getattr(cfg.proto, f.name) for f in fields(ProtocolParams)},
    }


def load_config(path, validate: bool = True) -> NetworkConfig:
    """Read a JSON config file. Syntax errors report line and column."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    cfg = config_from_dict(data)
    if validate:
        ensure_valid(cfg)
    return cfg


def ensure_valid(cfg: NetworkConfig) -> ValidationResult:
    res = validate_config(cfg)
    if not res.ok:
        raise ConfigError(str(res), res)
    return res

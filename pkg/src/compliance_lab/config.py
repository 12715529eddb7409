"""JSON experiment configs: parsing, validation and error locations."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .economics import ExternalityModel, UtilityKind, scheme_from_json
from .errors import ComplianceLabError, MalformedConfig
from .execution import ExecutionConfig, RouterKind, RouterSpec
from .infractions import InfractionKind
from .ledger import ChainRule, DEFAULT_CHECKPOINT_DEPTH
from .protocols import Family, ProtocolSpec
from .strategies import HONEST, parse_descriptor

SCHEMA_VERSION = 1

TOP_KEYS = {"schema", "name", "parties", "protocol", "slots", "router", "chain_rule", "checkpoint_depth",
            "scheme", "utility", "query_cost", "profiles", "strategies", "epsilon", "runs", "seed",
            "max_depth", "confidence", "max_runs", "infractions", "externality", "output", "profile"}
PROTOCOL_KEYS = {"family", "q", "delta", "epoch_length", "phi", "predictable"}
ROUTER_KEYS = {"kind", "drop_probability"}


@dataclass
class ExperimentConfig:
    execution: ExecutionConfig
    name: str = "experiment"
    profiles: list = field(default_factory=list)
    strategies: list = field(default_factory=list)
    epsilon: float = 0.0
    runs: int = 200
    seed: int = 0
    max_depth: int = 3
    confidence: float = 0.99
    max_runs: int | None = None
    infractions: tuple = (InfractionKind.Conf, InfractionKind.Abs, InfractionKind.Self)
    externality: ExternalityModel | None = None
    output: str | None = None
    digest: str = ""


def _need(obj, key, where):
    if key not in obj:
        raise MalformedConfig("required key missing", f"{where}.{key}" if where else key)
    return obj[key]


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise MalformedConfig("expected a JSON object", where or "config")
    extra = sorted(set(obj) - allowed)
    if extra:
        raise MalformedConfig(f"unknown keys {extra}", where or "config")


def _epsilon(v) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    try:
        return float(v)
    except (TypeError, ValueError) as exc:
        raise MalformedConfig(f"not a number: {v!r}", "epsilon") from exc


def parse_config(obj: dict) -> ExperimentConfig:
    _check_keys(obj, TOP_KEYS, "")
    if obj.get("schema", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise MalformedConfig(f"unsupported schema version {obj.get('schema')!r}", "schema")
    parties = _need(obj, "parties", "")
    if not isinstance(parties, list) or not all(isinstance(p, (int, float)) for p in parties):
        raise MalformedConfig("expected a list of powers", "parties")
    proto = _need(obj, "protocol", "")
    _check_keys(proto, PROTOCOL_KEYS, "protocol")
    try:
        family = Family(_need(proto, "family", "protocol"))
    except ValueError as exc:
        raise MalformedConfig(f"unknown family {proto.get('family')!r}", "protocol.family") from exc
    spec = ProtocolSpec(family, int(proto.get("q", 0)), float(proto.get("delta", 0.0)),
                        proto.get("epoch_length"), tuple(proto.get("phi", ())),
                        bool(proto.get("predictable", False)))
    router = obj.get("router", {"kind": "Synchronous"})
    _check_keys(router, ROUTER_KEYS, "router")
    try:
        rspec = RouterSpec(RouterKind(router.get("kind", "Synchronous")), float(router.get("drop_probability", 0.0)))
    except ValueError as exc:
        raise MalformedConfig(f"unknown router {router.get('kind')!r}", "router.kind") from exc
    try:
        rule = ChainRule(obj.get("chain_rule", "LongestChain"))
        utility = UtilityKind(obj.get("utility", "Profit")).value
    except ValueError as exc:
        raise MalformedConfig(str(exc), "chain_rule/utility") from exc
    scheme = scheme_from_json(obj["scheme"]) if "scheme" in obj else None
    exe = ExecutionConfig(tuple(parties), spec, int(_need(obj, "slots", "")), rspec, rule,
                          int(obj.get("checkpoint_depth", DEFAULT_CHECKPOINT_DEPTH)), scheme,
                          utility, float(obj.get("query_cost", 0.0)))
    if scheme is not None and hasattr(scheme, "shares"):
        scheme.shares(exe.powers)
    n = exe.n_parties
    profiles = obj.get("profiles", [])
    if "profile" in obj:
        profiles = [obj["profile"]] + list(profiles)
    parsed_profiles = []
    for k, prof in enumerate(profiles):
        if not isinstance(prof, list) or len(prof) != n:
            raise MalformedConfig(f"profile {k} must list {n} strategies", "profiles")
        parsed_profiles.append(tuple(parse_descriptor(d) for d in prof))
    if not parsed_profiles:
        parsed_profiles = [tuple([HONEST] * n)]
    for prof in parsed_profiles:
        for d in prof:
            d.validate_for(exe.n_slots)
    strategies = [parse_descriptor(d) for d in obj.get("strategies", [])]
    try:
        kinds = tuple(InfractionKind(k) for k in obj.get("infractions", ["Conf", "Abs", "Self"]))
    except ValueError as exc:
        raise MalformedConfig(str(exc), "infractions") from exc
    ext = None
    if "externality" in obj:
        e = obj["externality"]
        _check_keys(e, {"exchange_rate", "external_reward", "by_profile"}, "externality")
        rewards = {}
        for item in e.get("external_reward", []):
            rewards[(int(item["party"]), str(parse_descriptor(item["strategy"])))] = float(item["b"])
        ext = ExternalityModel(dict(e.get("exchange_rate", {"honest": 1.0, "deviant": 1.0})), rewards,
                               dict(e.get("by_profile", {})))
    runs = int(obj.get("runs", 200))
    if runs < 1:
        raise MalformedConfig("must be >= 1", "runs")
    digest = ExecutionConfig.digest(exe)
    return ExperimentConfig(exe, str(obj.get("name", "experiment")), parsed_profiles, strategies,
                            _epsilon(obj.get("epsilon", 0.0)), runs, int(obj.get("seed", 0)),
                            int(obj.get("max_depth", 3)), float(obj.get("confidence", 0.99)),
                            obj.get("max_runs"), kinds, ext, obj.get("output"), digest)


def _locate(text: str, field: str | None) -> int | None:
    if not field:
        return None
    key = field.split(".")[-1].split("[")[0].split("/")[0]
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return lineno
    top = field.split(".")[0].split("[")[0]
    for lineno, line in enumerate(text.splitlines(), start=1):
        if f'"{top}"' in line:
            return lineno
    return None


class ConfigError(ComplianceLabError):
    """Config failure with a file:line location for the CLI."""


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}") from exc
    try:
        return parse_config(obj)
    except MalformedConfig as exc:
        line = _locate(text, exc.field)
        where = f"{path}:{line}" if line else str(path)
        raise ConfigError(f"{where}: {exc}") from exc
    except (ComplianceLabError, TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc

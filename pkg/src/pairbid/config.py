"""YAML scenario files.

A file holds ``schema_version: 1`` plus any of the top-level run settings
(``seed``, ``horizon``, ``algorithm``, ``resale_profile``, ``slot_hours``,
``payment``, ``lease_slots``, ``counter_bid_cost``) and the sections ``graph``, ``mvnos``,
``request_gen``, ``catalog``, ``pricing`` and ``weights``. Anything left out
keeps its default. Unknown keys are errors so typos do not pass silently.
"""
from __future__ import annotations

import logging
import math
from dataclasses import fields, replace
from pathlib import Path
from typing import Any, Mapping

import yaml

from .exceptions import ConfigError
from .model import DEFAULT_SERVICE_TYPES, CostMarkup, FlatPrice, MvnoProfile
from .network import GraphConfig, PowerParams, build_graph
from .sim import RequestGenParams, Scenario
from .upper import NbWeights, SliceCatalog

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
TOP_LEVEL = ("seed", "horizon", "algorithm", "resale_profile", "slot_hours", "payment", "lease_slots",
             "counter_bid_cost")
SECTIONS = ("graph", "mvnos", "request_gen", "catalog", "pricing", "weights")


def _check_keys(section: str, data: Mapping, allowed) -> None:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{section}: expected a mapping, got {type(data).__name__}")
    unknown = set(data) - set(allowed)
    if unknown:
        raise ConfigError(f"{section}: unknown key(s) {', '.join(sorted(map(str, unknown)))}")


def _names(cls) -> list[str]:
    return [f.name for f in fields(cls)]


def _pair(value, what: str) -> tuple:
    if value is None:
        return None
    if not isinstance(value, (list, tuple)) or len(value) != 2:
        raise ConfigError(f"{what}: expected [lo, hi]")
    return tuple(value)


def _graph(data: Mapping) -> GraphConfig:
    _check_keys("graph", data, _names(GraphConfig))
    kw = dict(data)
    if kw.get("edges") is not None:
        kw["edges"] = tuple(tuple(e) for e in kw["edges"])
    if "power" in kw:
        _check_keys("graph.power", kw["power"], _names(PowerParams))
        kw["power"] = PowerParams(**kw["power"])
    if "link_overrides" in kw:
        kw["link_overrides"] = {tuple(int(x) for x in str(k).split("-")): v
                                for k, v in kw["link_overrides"].items()}
    config = GraphConfig(**kw)
    build_graph(config)  # surface topology errors at load time
    return config


def _policy(data) -> CostMarkup | FlatPrice:
    if data is None:
        return CostMarkup(0.0)
    _check_keys("mvnos.counter_bid", data, ("flat", "cost_markup"))
    if len(data) != 1:
        raise ConfigError("mvnos.counter_bid: give exactly one of flat / cost_markup")
    (kind, value), = data.items()
    return FlatPrice(float(value)) if kind == "flat" else CostMarkup(float(value))


def _mvnos(items) -> tuple[MvnoProfile, ...]:
    if not isinstance(items, list) or not items:
        raise ConfigError("mvnos: expected a nonempty list")
    out = []
    for m in items:
        _check_keys("mvnos[]", m, ("id", "resale_gain", "capacity_bound", "counter_bid"))
        if "id" not in m:
            raise ConfigError("mvnos[]: every MVNO needs an id")
        bound = m.get("capacity_bound")
        out.append(MvnoProfile(m["id"], float(m.get("resale_gain", 0.1)),
                               math.inf if bound is None else float(bound), _policy(m.get("counter_bid"))))
    return tuple(out)


def _request_gen(data: Mapping) -> RequestGenParams:
    _check_keys("request_gen", data, _names(RequestGenParams))
    kw = dict(data)
    for key in ("traffic", "unit_price", "duration"):
        if key in kw:
            kw[key] = _pair(kw[key], f"request_gen.{key}")
    if kw.get("nodes") is not None:
        kw["nodes"] = tuple(kw["nodes"])
    return RequestGenParams(**kw)


def _catalog(data: Mapping, default: SliceCatalog) -> SliceCatalog:
    _check_keys("catalog", data, ("variants", "nodes", "base_rate"))
    kw = {}
    if "variants" in data:
        kw["variants"] = tuple(float(v) for v in data["variants"])
    if data.get("nodes") is not None:
        kw["nodes"] = tuple(data["nodes"])
    if "base_rate" in data:
        kw["base_rate"] = dict(data["base_rate"])
    return replace(default, services=dict(DEFAULT_SERVICE_TYPES), **kw)


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    """Build a :class:`Scenario` from parsed YAML."""
    if data is None:
        data = {}
    _check_keys("config", data, ("schema_version",) + TOP_LEVEL + SECTIONS)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    base = Scenario()
    kw: dict[str, Any] = {k: data[k] for k in TOP_LEVEL if k in data}
    try:
        if "graph" in data:
            kw["graph"] = _graph(data["graph"])
        if "mvnos" in data:
            kw["mvnos"] = _mvnos(data["mvnos"])
        if "request_gen" in data:
            kw["request_gen"] = _request_gen(data["request_gen"])
        if "catalog" in data:
            kw["catalog"] = _catalog(data["catalog"], base.catalog)
        if "weights" in data:
            _check_keys("weights", data["weights"], _names(NbWeights))
            kw["weights"] = NbWeights(**data["weights"])
        if "pricing" in data:
            p = data["pricing"]
            _check_keys("pricing", p, ("upper", "lower", "lower_base_price"))
            if "upper" in p:
                kw["upper_pricing"] = p["upper"]
            if "lower" in p:
                kw["lower_pricing"] = p["lower"]
            if "lower_base_price" in p:
                kw["lower_base_price"] = dict(p["lower_base_price"])
        return Scenario(**kw)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path) -> Scenario:
    """Read a YAML scenario file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    logger.debug("loaded config %s", path)
    return scenario_from_dict(data)

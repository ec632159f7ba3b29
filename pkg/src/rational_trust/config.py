"""Versioned key=value config files for market simulations.

Layout::

    # rational-trust config v1
    [market]     rounds, buyers_per_round, trust_variant, buyer_policy, ...
    [costs]      low, high, p_high
    [trust]      TrustParams fields
    [utility]    UtilityParams fields
    [seller:NAME]  strategy, count, price_honest, price_defect, strategy params

Omitted keys take their dataclass defaults. :func:`dump_config` writes every
key explicitly, so its output re-parses to an equal :class:`MarketConfig`.
"""

from __future__ import annotations

import configparser
import dataclasses
from importlib import resources
from pathlib import Path

from .errors import ConfigError, ParameterError
from .market import (
    STRATEGIES,
    BuyerPolicy,
    CostModel,
    MarketConfig,
    MultiTactic,
    SellerSpec,
    Strategy,
)
from .trust import TrustParams, TrustVariant
from .utility import UtilityParams

CONFIG_HEADER = "# rational-trust config v1"

_MARKET_KEYS = {
    "rounds": int,
    "buyers_per_round": int,
    "trust_variant": TrustVariant,
    "buyer_policy": BuyerPolicy,
    "feedback_aggregation_threshold": float,
    "feedback_noise": float,
    "unit_cost_honest": float,
    "unit_cost_defect": float,
    "rng_seed": int,
}
_SELLER_KEYS = {"count": int, "price_honest": float, "price_defect": float}
_STRATEGY_PARAMS = {
    "honest_rounds": int,
    "defect_rounds": int,
    "identity_count": int,
    "cost_threshold": float,
    "fake_rate": float,
    "target_rate": float,
    "coalition": lambda v: frozenset(x.strip() for x in v.split(",") if x.strip()),
}


def _fields(cls) -> dict:
    return {f.name: f.type for f in dataclasses.fields(cls)}


def _caster(cls, name):
    default = getattr(cls(), name)
    return type(default)


def _convert(raw: str, cast, key: str):
    try:
        return cast(raw.strip())
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"cannot parse {raw!r}: {exc}", key) from None


def _section(cp, name: str, allowed: dict, prefix: str) -> dict:
    if not cp.has_section(name):
        return {}
    out = {}
    for key, raw in cp.items(name):
        if key not in allowed:
            raise ConfigError(f"unknown key (valid: {', '.join(sorted(allowed))})", f"{prefix}.{key}")
        out[key] = _convert(raw, allowed[key], f"{prefix}.{key}")
    return out


def _build(cls, kwargs: dict, section: str):
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except ParameterError as exc:
        raise ConfigError(str(exc), section) from None


def _strategy(name: str, kind: str, params: dict) -> Strategy:
    section = f"seller:{name}"
    if kind == "multi_tactic":
        kinds = [k.strip() for k in params.pop("composition", "").split(",") if k.strip()]
        if not kinds:
            raise ConfigError("multi_tactic needs a composition list", f"{section}.composition")
        parts = tuple(_strategy(name, k, _relevant(k, params, section)) for k in kinds)
        return MultiTactic(parts)
    if kind not in STRATEGIES:
        raise ConfigError(
            f"unknown strategy {kind!r} (valid: {', '.join(STRATEGIES)})", f"{section}.strategy"
        )
    cls = STRATEGIES[kind]
    accepted = {f.name for f in dataclasses.fields(cls)}
    extra = set(params) - accepted
    if extra:
        raise ConfigError(f"not a parameter of {kind}", f"{section}.{sorted(extra)[0]}")
    return _build(cls, params, section)


def _relevant(kind: str, params: dict, section: str) -> dict:
    if kind not in STRATEGIES or kind == "multi_tactic":
        raise ConfigError(f"invalid multi_tactic component {kind!r}", f"{section}.composition")
    accepted = {f.name for f in dataclasses.fields(STRATEGIES[kind])}
    return {k: v for k, v in params.items() if k in accepted}


def parse_config(text: str) -> MarketConfig:
    """Parse config text; raises :class:`ConfigError` naming the bad key."""
    first = next((ln.strip() for ln in text.splitlines() if ln.strip()), "")
    if first != CONFIG_HEADER:
        raise ConfigError(f"first line must be {CONFIG_HEADER!r}", "header")
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0], "syntax") from None

    known = {"market", "costs", "trust", "utility"}
    for name in cp.sections():
        if name not in known and not name.startswith("seller:"):
            raise ConfigError("unknown section", name)

    market = _section(cp, "market", _MARKET_KEYS, "market")
    costs = _section(cp, "costs", {k: float for k in _fields(CostModel)}, "costs")
    trust = _section(cp, "trust", {k: _caster(TrustParams, k) for k in _fields(TrustParams)}, "trust")
    utility = _section(
        cp, "utility", {k: _caster(UtilityParams, k) for k in _fields(UtilityParams)}, "utility"
    )

    sellers = []
    for name in cp.sections():
        if not name.startswith("seller:"):
            continue
        group = name.split(":", 1)[1].strip()
        if not group:
            raise ConfigError("seller group needs a name", name)
        items = dict(cp.items(name))
        kind = items.pop("strategy", "honest").strip()
        spec_kwargs, params = {}, {}
        for key, raw in items.items():
            full = f"{name}.{key}"
            if key in _SELLER_KEYS:
                spec_kwargs[key] = _convert(raw, _SELLER_KEYS[key], full)
            elif key == "composition":
                params[key] = raw
            elif key in _STRATEGY_PARAMS:
                params[key] = _convert(raw, _STRATEGY_PARAMS[key], full)
            else:
                raise ConfigError("unknown key", full)
        strategy = _strategy(group, kind, params)
        sellers.append(_build(lambda **kw: SellerSpec(group, strategy, **kw), spec_kwargs, name))

    return _build(
        MarketConfig,
        dict(
            sellers=tuple(sellers),
            trust=_build(TrustParams, trust, "trust"),
            utility=_build(UtilityParams, utility, "utility"),
            costs=_build(CostModel, costs, "costs"),
            **market,
        ),
        "market",
    )


def load_config(path: str | Path) -> MarketConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}", "file") from None
    return parse_config(text)


def default_config_text() -> str:
    return resources.files("rational_trust").joinpath("data/default.cfg").read_text("utf-8")


def default_config() -> MarketConfig:
    return parse_config(default_config_text())


def _fmt(value) -> str:
    if isinstance(value, (TrustVariant, BuyerPolicy)):
        return value.value
    if isinstance(value, frozenset):
        return ", ".join(sorted(value))
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _strategy_items(strategy: Strategy) -> list[tuple[str, str]]:
    items = [("strategy", strategy.kind)]
    if isinstance(strategy, MultiTactic):
        items.append(("composition", ", ".join(c.kind for c in strategy.components)))
        parts = strategy.components
    else:
        parts = (strategy,)
    for part in parts:
        for f in dataclasses.fields(part):
            items.append((f.name, _fmt(getattr(part, f.name))))
    return items


def dump_config(config: MarketConfig) -> str:
    """Effective config with every default spelled out."""
    lines = [CONFIG_HEADER, "", "[market]"]
    for key in _MARKET_KEYS:
        lines.append(f"{key} = {_fmt(getattr(config, key))}")
    for section, obj in (("costs", config.costs), ("trust", config.trust), ("utility", config.utility)):
        lines += ["", f"[{section}]"]
        lines += [f"{f.name} = {_fmt(getattr(obj, f.name))}" for f in dataclasses.fields(obj)]
    for spec in config.sellers:
        lines += ["", f"[seller:{spec.name}]"]
        lines += [f"{k} = {v}" for k, v in _strategy_items(spec.strategy)]
        lines += [f"{k} = {_fmt(getattr(spec, k))}" for k in _SELLER_KEYS]
    return "\n".join(lines) + "\n"

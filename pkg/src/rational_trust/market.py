"""Agent-based marketplace with honest and attacking sellers.

Each round sellers act on their strategy and buyers pick listings. Reports
from buyers and colluders collapse into one action per identity, which feeds
the configured trust update. Identity resets requested by attackers are
applied last.

A run is a pure function of its :class:`MarketConfig`, including the seed.
Randomness is split into independent streams (buyers, feedback, costs,
collusion) so that a same-seed twin run with one seller's strategy swapped
shares every draw it can.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, ParameterError
from .trust import (
    Action,
    TransactionFeatures,
    TrustParams,
    TrustState,
    TrustVariant,
    update,
)
from .utility import UtilityParams, selection_weight

C, D = Action.COOPERATE, Action.DEFECT


class BuyerPolicy(str, enum.Enum):
    PRICE_FIRST = "price_first"
    TRUST_PROPORTIONAL = "trust_proportional"


def buyer_select(
    sellers: Sequence[tuple[float, float]],
    policy: BuyerPolicy | str,
    rng: np.random.Generator,
) -> int:
    """Index of the listing a buyer picks from ``(price, trust)`` pairs.

    ``price_first`` only considers the cheapest listings; both policies then
    pick proportionally to the selection weight, uniformly if every weight is
    zero. Exactly one uniform draw is consumed per call.
    """
    if not sellers:
        raise ParameterError("buyer_select needs at least one seller")
    policy = BuyerPolicy(policy)
    u = rng.random()
    if policy is BuyerPolicy.PRICE_FIRST:
        cheapest = min(price for price, _ in sellers)
        candidates = [i for i, (price, _) in enumerate(sellers) if price == cheapest]
    else:
        candidates = list(range(len(sellers)))
    weights = np.array([selection_weight(sellers[i][1]) for i in candidates])
    total = weights.sum()
    if total <= 0:
        return candidates[min(int(u * len(candidates)), len(candidates) - 1)]
    pick = int(np.searchsorted(np.cumsum(weights), u * total, side="right"))
    return candidates[min(pick, len(candidates) - 1)]


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True)
class Context:
    round: int
    transaction_cost: float


@dataclass(frozen=True)
class Decision:
    action: Action
    reset_identity: bool = False
    identity_count: int = 1


class Strategy:
    """Base class; subclasses are immutable parameter holders."""

    kind = "strategy"
    coalition: frozenset = frozenset()

    def decide(self, agent: "SellerAgent", ctx: Context) -> Decision:
        raise NotImplementedError

    def params(self) -> dict:
        return {}


@dataclass(frozen=True)
class Honest(Strategy):
    kind = "honest"

    def decide(self, agent, ctx):
        return Decision(C)


@dataclass(frozen=True)
class AlwaysDefect(Strategy):
    kind = "always_defect"

    def decide(self, agent, ctx):
        return Decision(D)


@dataclass(frozen=True)
class Lag(Strategy):
    """Cooperate for ``honest_rounds`` rounds, then defect for good."""

    honest_rounds: int = 10
    kind = "lag"

    def __post_init__(self):
        if self.honest_rounds < 0:
            raise ParameterError("honest_rounds must be >= 0")

    def decide(self, agent, ctx):
        return Decision(C if ctx.round <= self.honest_rounds else D)

    def params(self):
        return {"honest_rounds": self.honest_rounds}


@dataclass(frozen=True)
class ReEntry(Strategy):
    """Build trust, defect ``defect_rounds`` times, then return as a newcomer.

    Each identity cooperates for its first ``honest_rounds`` rounds and then
    defects; the round of the ``defect_rounds``-th defection ends with a
    reset directive. ``honest_rounds=0`` gives a pure whitewasher.
    """

    defect_rounds: int = 3
    honest_rounds: int = 0
    kind = "re_entry"

    def __post_init__(self):
        if self.defect_rounds < 1 or self.honest_rounds < 0:
            raise ParameterError("re_entry needs defect_rounds >= 1, honest_rounds >= 0")

    def decide(self, agent, ctx):
        age = agent.identity_age
        if age < self.honest_rounds:
            return Decision(C)
        done = age - self.honest_rounds + 1
        return Decision(D, reset_identity=done >= self.defect_rounds)

    def params(self):
        return {"defect_rounds": self.defect_rounds, "honest_rounds": self.honest_rounds}


@dataclass(frozen=True)
class Sybil(Strategy):
    """Trade through ``identity_count`` accounts at once, all cooperating."""

    identity_count: int = 3
    kind = "sybil"

    def __post_init__(self):
        if self.identity_count < 1:
            raise ParameterError("identity_count must be >= 1")

    def decide(self, agent, ctx):
        return Decision(C, identity_count=self.identity_count)

    def params(self):
        return {"identity_count": self.identity_count}


@dataclass(frozen=True)
class Imbalance(Strategy):
    """Defect exactly when the round's transaction cost exceeds the threshold."""

    cost_threshold: float = 5.0
    kind = "imbalance"

    def decide(self, agent, ctx):
        return Decision(D if ctx.transaction_cost > self.cost_threshold else C)

    def params(self):
        return {"cost_threshold": self.cost_threshold}


@dataclass(frozen=True)
class MultiTactic(Strategy):
    """Union of component attacks: defect or reset if any component does."""

    components: tuple[Strategy, ...] = ()
    kind = "multi_tactic"

    def __post_init__(self):
        if not self.components:
            raise ParameterError("multi_tactic needs at least one component")

    @property
    def coalition(self):
        return frozenset().union(*(c.coalition for c in self.components))

    def decide(self, agent, ctx):
        parts = [c.decide(agent, ctx) for c in self.components]
        return Decision(
            D if any(p.action == D for p in parts) else C,
            reset_identity=any(p.reset_identity for p in parts),
            identity_count=max(p.identity_count for p in parts),
        )

    def params(self):
        out = {"composition": ", ".join(c.kind for c in self.components)}
        for c in self.components:
            out.update(c.params())
        return out


@dataclass(frozen=True)
class BallotStuffing(Strategy):
    """Defect on real buyers and file fake positive transactions among colluders.

    Each member files ``fake_rate`` fake cooperative transactions per round for
    every other coalition member (fractional rates are realized randomly).
    """

    coalition: frozenset = frozenset()
    fake_rate: float = 3.0
    kind = "ballot_stuffing"

    def __post_init__(self):
        if not self.coalition:
            raise ParameterError("ballot_stuffing needs a nonempty coalition")
        if self.fake_rate < 0:
            raise ParameterError("fake_rate must be >= 0")

    def decide(self, agent, ctx):
        return Decision(D)

    def params(self):
        return {"coalition": ", ".join(sorted(self.coalition)), "fake_rate": self.fake_rate}


@dataclass(frozen=True)
class BadMouthing(Strategy):
    """Sell honestly but file fake negative reviews against outsiders.

    Each member files ``target_rate`` fake defect reports per round against
    every non-coalition identity that made a sale that round.
    """

    coalition: frozenset = frozenset()
    target_rate: float = 1.0
    kind = "bad_mouthing"

    def __post_init__(self):
        if not self.coalition:
            raise ParameterError("bad_mouthing needs a nonempty coalition")
        if self.target_rate < 0:
            raise ParameterError("target_rate must be >= 0")

    def decide(self, agent, ctx):
        return Decision(C)

    def params(self):
        return {"coalition": ", ".join(sorted(self.coalition)), "target_rate": self.target_rate}


def decide_action(
    agent: "SellerAgent", round: int, transaction_cost: float = 1.0
) -> tuple[Action, float, Decision]:
    """Action, listed price and identity directive for ``agent`` this round."""
    dec = agent.strategy.decide(agent, Context(round, transaction_cost))
    return dec.action, agent.price(dec.action), dec


STRATEGIES: dict[str, type[Strategy]] = {
    cls.kind: cls
    for cls in (
        Honest, AlwaysDefect, Lag, ReEntry, Sybil, Imbalance, MultiTactic,
        BallotStuffing, BadMouthing,
    )
}


# --------------------------------------------------------------------------
# configuration and agents


@dataclass(frozen=True)
class SellerSpec:
    """A group of ``count`` sellers sharing a strategy.

    Persistent ids are ``f"{name}-{i}"``; coalitions refer to group names.
    """

    name: str
    strategy: Strategy = field(default_factory=Honest)
    count: int = 1
    price_honest: float = 3.0
    price_defect: float = 2.0

    def __post_init__(self):
        if self.count < 1:
            raise ParameterError(f"seller group {self.name!r}: count must be >= 1")
        if self.price_honest < 0 or self.price_defect < 0:
            raise ParameterError(f"seller group {self.name!r}: prices must be >= 0")

    def persistent_ids(self) -> list[str]:
        return [f"{self.name}-{i}" for i in range(self.count)]


@dataclass(frozen=True)
class CostModel:
    """Two-point distribution of per-round transaction costs."""

    low: float = 1.0
    high: float = 10.0
    p_high: float = 0.2

    def __post_init__(self):
        if not 0 <= self.p_high <= 1:
            raise ParameterError("p_high must lie in [0, 1]")
        if self.low < 0 or self.high < 0:
            raise ParameterError("costs must be >= 0")
        if self.mean <= 0:
            raise ParameterError("mean transaction cost must be > 0")

    @property
    def mean(self) -> float:
        return self.low * (1 - self.p_high) + self.high * self.p_high


@dataclass(frozen=True)
class MarketConfig:
    sellers: tuple[SellerSpec, ...]
    buyers_per_round: int = 10
    rounds: int = 200
    trust_variant: TrustVariant = TrustVariant.F2
    trust: TrustParams = field(default_factory=TrustParams)
    utility: UtilityParams = field(default_factory=UtilityParams)
    buyer_policy: BuyerPolicy = BuyerPolicy.TRUST_PROPORTIONAL
    feedback_aggregation_threshold: float = 0.5
    feedback_noise: float = 0.0
    unit_cost_honest: float = 2.0
    unit_cost_defect: float = 0.0
    costs: CostModel = field(default_factory=CostModel)
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "sellers", tuple(self.sellers))
        object.__setattr__(self, "trust_variant", TrustVariant(self.trust_variant))
        object.__setattr__(self, "buyer_policy", BuyerPolicy(self.buyer_policy))
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1", "market.rounds")
        if self.buyers_per_round < 1:
            raise ConfigError("buyers_per_round must be >= 1", "market.buyers_per_round")
        if not self.sellers:
            raise ConfigError("at least one seller group is required", "seller")
        if not 0 < self.feedback_aggregation_threshold <= 1:
            raise ConfigError(
                "must lie in (0, 1]", "market.feedback_aggregation_threshold"
            )
        if not 0 <= self.feedback_noise <= 1:
            raise ConfigError("must lie in [0, 1]", "market.feedback_noise")
        names = [s.name for s in self.sellers]
        if len(set(names)) != len(names):
            raise ConfigError("seller group names must be unique", "seller")
        for spec in self.sellers:
            for ref in spec.strategy.coalition:
                if ref not in names:
                    raise ConfigError(
                        f"coalition references unknown group {ref!r}", f"seller:{spec.name}.coalition"
                    )

    def unit_margin(self, action: Action, price: float) -> float:
        cost = self.unit_cost_honest if action == C else self.unit_cost_defect
        return price - cost


@dataclass
class SellerAgent:
    """Mutable per-run state of one persistent seller."""

    persistent_id: str
    group: str
    strategy: Strategy
    price_honest: float = 3.0
    price_defect: float = 2.0
    identities: list[TrustState] = field(default_factory=list)
    identity_history: list[TrustState] = field(default_factory=list)
    cumulative_revenue: float = 0.0
    identity_age: int = 0
    _next_identity: int = 0

    @property
    def current_identity(self) -> TrustState:
        return self.identities[0]

    def new_identity(self) -> TrustState:
        state = TrustState(identity_id=f"{self.persistent_id}#{self._next_identity}")
        self._next_identity += 1
        return state

    def ensure_identities(self, count: int):
        while len(self.identities) < count:
            self.identities.append(self.new_identity())

    def reset_identities(self):
        """Retire every identity and re-enter with fresh newcomer state."""
        count = len(self.identities)
        self.identity_history.extend(self.identities)
        self.identities = [self.new_identity() for _ in range(count)]
        self.identity_age = 0

    def price(self, action: Action) -> float:
        return self.price_honest if action == C else self.price_defect


@dataclass(frozen=True)
class FeedbackEvent:
    reporter: str
    subject: str
    reported_action: Action
    transaction_cost: float
    genuine: bool


def aggregate_feedback(events: Sequence[FeedbackEvent], threshold: float) -> Action | None:
    """Collapse a period's reports about one identity into a single action.

    Returns ``None`` when there are no reports (no update this period).
    """
    if not events:
        return None
    cooperative = sum(1 for e in events if e.reported_action == C)
    return C if cooperative / len(events) >= threshold else D


# --------------------------------------------------------------------------
# trace


@dataclass(frozen=True)
class SellerRow:
    round: int
    persistent_id: str
    identity_id: str
    action: Action
    price: float
    units_sold: int
    trust: float
    lifetime: int
    revenue: float


@dataclass
class RoundRecord:
    round: int
    rows: list[SellerRow]
    feedback: list[FeedbackEvent]
    buyer_choices: list[str]
    resets: list[str] = field(default_factory=list)


@dataclass
class SimulationTrace:
    config: MarketConfig
    records: list[RoundRecord]
    agents: list[SellerAgent]

    def rows(self):
        for rec in self.records:
            yield from rec.rows

    def seller_ids(self) -> list[str]:
        return [a.persistent_id for a in self.agents]

    def total_revenue(self, persistent_id: str) -> float:
        return sum(r.revenue for r in self.rows() if r.persistent_id == persistent_id)

    def total_margin(self, persistent_id: str) -> float:
        """Revenue net of unit costs; defective units are cheaper to supply."""
        return sum(
            r.units_sold * self.config.unit_margin(r.action, r.price)
            for r in self.rows()
            if r.persistent_id == persistent_id
        )

    def summary(self) -> dict[str, dict]:
        out = {}
        for agent in self.agents:
            rows = [r for r in self.rows() if r.persistent_id == agent.persistent_id]
            last = self.records[-1].rows if self.records else []
            final = [r.trust for r in last if r.persistent_id == agent.persistent_id]
            out[agent.persistent_id] = {
                "strategy": agent.strategy.kind,
                "units_sold": sum(r.units_sold for r in rows),
                "revenue": sum(r.revenue for r in rows),
                "margin": self.total_margin(agent.persistent_id),
                "defect_rounds": len({r.round for r in rows if r.action == D}),
                "identities_used": len(agent.identity_history) + len(agent.identities),
                "final_trust": min(final) if final else 0.0,
            }
        return out


# --------------------------------------------------------------------------
# simulation


class Market:
    """Round-by-round market state; use :func:`run` for whole simulations."""

    def __init__(self, config: MarketConfig):
        self.config = config
        seq = np.random.SeedSequence(config.rng_seed)
        buyers, feedback, costs, collusion = seq.spawn(4)
        self.rng_buyers = np.random.default_rng(buyers)
        self.rng_feedback = np.random.default_rng(feedback)
        self.rng_costs = np.random.default_rng(costs)
        self.rng_collusion = np.random.default_rng(collusion)
        self.agents: list[SellerAgent] = []
        for spec in config.sellers:
            for pid in spec.persistent_ids():
                agent = SellerAgent(
                    pid, spec.name, spec.strategy, spec.price_honest, spec.price_defect
                )
                agent.ensure_identities(1)
                self.agents.append(agent)
        self.round = 0

    def _coalition_members(self, strategy: Strategy) -> set[str]:
        return {a.persistent_id for a in self.agents if a.group in strategy.coalition}

    def step(self) -> RoundRecord:
        cfg = self.config
        self.round += 1
        r = self.round

        # per-seller transaction cost, drawn for every seller so streams line up
        high = self.rng_costs.random(len(self.agents)) < cfg.costs.p_high
        cost = {
            a.persistent_id: cfg.costs.high if h else cfg.costs.low
            for a, h in zip(self.agents, high)
        }

        decisions = {}
        listings: list[tuple[SellerAgent, int]] = []
        for agent in self.agents:
            dec = agent.strategy.decide(agent, Context(r, cost[agent.persistent_id]))
            agent.ensure_identities(dec.identity_count)
            decisions[agent.persistent_id] = dec
            listings.extend((agent, k) for k in range(len(agent.identities)))

        offers = [
            (agent.price(decisions[agent.persistent_id].action), agent.identities[k].trust)
            for agent, k in listings
        ]
        units = [0] * len(listings)
        choices = []
        for _ in range(cfg.buyers_per_round):
            i = buyer_select(offers, cfg.buyer_policy, self.rng_buyers)
            units[i] += 1
            agent, k = listings[i]
            choices.append(agent.identities[k].identity_id)

        events: dict[str, list[FeedbackEvent]] = {}
        fake_volume: dict[str, int] = {}
        for idx, (agent, k) in enumerate(listings):
            ident = agent.identities[k].identity_id
            action = decisions[agent.persistent_id].action
            flips = self.rng_feedback.random(units[idx]) < cfg.feedback_noise
            for n, flip in enumerate(flips):
                reported = Action(1 - action) if flip else action
                events.setdefault(ident, []).append(
                    FeedbackEvent(f"buyer{r}.{idx}.{n}", ident, reported, cost[agent.persistent_id], True)
                )
        self._inject_collusion(listings, units, cost, events, fake_volume)

        rows = []
        for idx, (agent, k) in enumerate(listings):
            state = agent.identities[k]
            action = decisions[agent.persistent_id].action
            price = agent.price(action)
            alpha = aggregate_feedback(events.get(state.identity_id, []), cfg.feedback_aggregation_threshold)
            if alpha is not None:
                volume = units[idx] + fake_volume.get(state.identity_id, 0)
                features = TransactionFeatures(cost[agent.persistent_id], cfg.costs.mean)
                state = update(cfg.trust_variant, state, alpha, cfg.trust, features, volume)
                agent.identities[k] = state
            revenue = units[idx] * price
            agent.cumulative_revenue += revenue
            rows.append(
                SellerRow(r, agent.persistent_id, state.identity_id, action, price,
                          units[idx], state.trust, state.lifetime, revenue)
            )

        resets = []
        for agent in self.agents:
            agent.identity_age += 1
            if decisions[agent.persistent_id].reset_identity:
                agent.reset_identities()
                resets.append(agent.persistent_id)

        feedback = [e for evs in events.values() for e in evs]
        return RoundRecord(r, rows, feedback, choices, resets)

    def _inject_collusion(self, listings, units, cost, events, fake_volume):
        rng = self.rng_collusion

        def draws(rate: float) -> int:
            whole = math.floor(rate)
            return whole + (1 if rng.random() < rate - whole else 0)

        sold = {agent.identities[k].identity_id for i, (agent, k) in enumerate(listings) if units[i]}
        for agent in self.agents:
            for strat in _flatten(agent.strategy):
                members = self._coalition_members(strat)
                if isinstance(strat, BallotStuffing):
                    for other in self.agents:
                        if other is agent or other.persistent_id not in members:
                            continue
                        for state in other.identities:
                            n = draws(strat.fake_rate)
                            for j in range(n):
                                events.setdefault(state.identity_id, []).append(
                                    FeedbackEvent(agent.persistent_id, state.identity_id, C,
                                                  cost[other.persistent_id], False)
                                )
                            fake_volume[state.identity_id] = fake_volume.get(state.identity_id, 0) + n
                elif isinstance(strat, BadMouthing):
                    for other in self.agents:
                        if other.persistent_id in members or other is agent:
                            continue
                        for state in other.identities:
                            if state.identity_id not in sold:
                                continue
                            for _ in range(draws(strat.target_rate)):
                                events[state.identity_id].append(
                                    FeedbackEvent(agent.persistent_id, state.identity_id, D,
                                                  cost[other.persistent_id], False)
                                )


def _flatten(strategy: Strategy):
    if isinstance(strategy, MultiTactic):
        for c in strategy.components:
            yield from _flatten(c)
    else:
        yield strategy


def run(config: MarketConfig) -> SimulationTrace:
    market = Market(config)
    records = [market.step() for _ in range(config.rounds)]
    return SimulationTrace(config, records, market.agents)


def with_strategy(config: MarketConfig, group: str, strategy: Strategy) -> MarketConfig:
    """Copy of ``config`` with seller group ``group`` switched to ``strategy``."""
    sellers = tuple(
        replace(s, strategy=strategy) if s.name == group else s for s in config.sellers
    )
    if sellers == config.sellers and all(s.name != group for s in config.sellers):
        raise ConfigError(f"no seller group named {group!r}", "seller")
    return replace(config, sellers=sellers)

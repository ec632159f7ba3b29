"""Behavioral, adversarial and operational evaluation plus equilibrium sweeps."""

from __future__ import annotations

import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, ParameterError
from .games import COOPERATE, DEFECT, pure_nash, sellers_dilemma
from .market import (
    BadMouthing,
    BallotStuffing,
    Honest,
    Imbalance,
    Lag,
    MarketConfig,
    MultiTactic,
    ReEntry,
    SimulationTrace,
    Strategy,
    Sybil,
    run,
    with_strategy,
)
from .trust import Action, TransactionFeatures, TrustParams, TrustState, TrustVariant, update
from .utility import UtilityParams, base_utility, external_gain_beta, future_loss_gamma

# --------------------------------------------------------------------------
# behavioral


@dataclass(frozen=True)
class MarginReport:
    margins: tuple[float, ...]  # index = round, entry 0 is the pre-update state
    detection_threshold: float
    first_crossing: int | None
    cooperative: tuple[str, ...]
    defecting: tuple[str, ...]


def behavioral_eval(trace: SimulationTrace, detection_threshold: float = 0.5) -> MarginReport:
    """Trust margin between always-cooperating and always-defecting sellers."""
    actions: dict[str, set] = {}
    for row in trace.rows():
        actions.setdefault(row.persistent_id, set()).add(row.action)
    coop = tuple(p for p, a in actions.items() if a == {Action.COOPERATE})
    defect = tuple(p for p, a in actions.items() if a == {Action.DEFECT})
    if not coop or not defect:
        raise ParameterError("behavioral_eval needs an always-cooperating and an always-defecting seller")
    margins = [0.0]
    for rec in trace.records:
        low = min(r.trust for r in rec.rows if r.persistent_id in coop)
        high = max(r.trust for r in rec.rows if r.persistent_id in defect)
        margins.append(low - high)
    first = next((i for i, m in enumerate(margins) if m > detection_threshold), None)
    return MarginReport(tuple(margins), detection_threshold, first, coop, defect)


# --------------------------------------------------------------------------
# adversarial


def standard_attacks(group: str = "attacker") -> dict[str, Strategy]:
    """The seven attack strategies with reference parameters.

    Coalition attacks name ``group`` as their coalition, so that group needs
    at least two members for fake reports to have someone to target.
    """
    re_entry = ReEntry(defect_rounds=3, honest_rounds=10)
    return {
        "sybil": Sybil(identity_count=3),
        "lag": Lag(honest_rounds=50),
        "re_entry": re_entry,
        "imbalance": Imbalance(cost_threshold=5.0),
        "multi_tactic": MultiTactic((re_entry, Imbalance(cost_threshold=5.0))),
        "ballot_stuffing": BallotStuffing(coalition=frozenset({group}), fake_rate=3.0),
        "bad_mouthing": BadMouthing(coalition=frozenset({group}), target_rate=1.0),
    }


def attack_names() -> list[str]:
    return list(standard_attacks())


@dataclass(frozen=True)
class VariantResult:
    variant: TrustVariant
    deltas: tuple[float, ...]

    @property
    def seeds(self) -> int:
        return len(self.deltas)

    @property
    def mean(self) -> float:
        return float(np.mean(self.deltas))

    @property
    def stddev(self) -> float | None:
        return float(np.std(self.deltas, ddof=1)) if len(self.deltas) > 1 else None

    @property
    def stderr(self) -> float | None:
        sd = self.stddev
        return None if sd is None else sd / math.sqrt(self.seeds)


@dataclass(frozen=True)
class ProfitabilityReport:
    attack: str
    group: str
    results: tuple[VariantResult, ...]

    def for_variant(self, variant) -> VariantResult:
        variant = TrustVariant(variant)
        return next(r for r in self.results if r.variant is variant)


def group_margin(trace: SimulationTrace, group: str) -> float:
    cfg = trace.config
    return sum(
        r.units_sold * cfg.unit_margin(r.action, r.price)
        for r in trace.rows()
        if r.persistent_id.rsplit("-", 1)[0] == group
    )


def _delta(job) -> float:
    attacked, twin, group = job
    return group_margin(run(attacked), group) - group_margin(run(twin), group)


def adversarial_eval(
    config: MarketConfig,
    attack: Strategy,
    variants: Iterable[TrustVariant | str] = ("f1", "f2"),
    seeds: int = 30,
    group: str = "attacker",
    seed_base: int | None = None,
    workers: int | None = None,
    name: str | None = None,
) -> ProfitabilityReport:
    """Margin of ``group`` playing ``attack`` minus its same-seed honest twin.

    Margins are units sold times (price - unit cost), so a cheap defective
    unit can be worth more than an honest one. Seeds run from ``seed_base``
    (default: the config's ``rng_seed``); ``workers > 1`` evaluates them in
    separate processes, and results are merged in seed order.
    """
    if seeds < 1:
        raise ParameterError("seeds must be >= 1")
    if all(s.name != group for s in config.sellers):
        raise ConfigError(f"no seller group named {group!r}", "seller")
    base = config.rng_seed if seed_base is None else seed_base
    results = []
    for variant in variants:
        variant = TrustVariant(variant)
        jobs = []
        for i in range(seeds):
            cfg = replace(config, trust_variant=variant, rng_seed=base + i)
            jobs.append((with_strategy(cfg, group, attack), with_strategy(cfg, group, Honest()), group))
        if workers and workers > 1:
            with ProcessPoolExecutor(workers) as pool:
                deltas = list(pool.map(_delta, jobs))
        else:
            deltas = [_delta(j) for j in jobs]
        results.append(VariantResult(variant, tuple(deltas)))
    return ProfitabilityReport(name or attack.kind, group, tuple(results))


def format_profitability(reports: Sequence[ProfitabilityReport]) -> str:
    """CSV table: attack, variant, mean delta, stddev (NA for one seed), seeds."""
    out = io.StringIO()
    out.write("attack,variant,mean_delta,stddev,seeds\n")
    for rep in reports:
        for res in rep.results:
            sd = "NA" if res.stddev is None else f"{res.stddev:.6g}"
            out.write(f"{rep.attack},{res.variant.value},{res.mean:.6g},{sd},{res.seeds}\n")
    return out.getvalue()


# --------------------------------------------------------------------------
# operational

REENTER = "reenter"


@dataclass(frozen=True)
class Prediction:
    states: tuple[TrustState, ...]  # states[0] is the starting state
    utilities: tuple[float, ...]

    @property
    def total_utility(self) -> float:
        return float(sum(self.utilities))

    @property
    def trust(self) -> tuple[float, ...]:
        return tuple(s.trust for s in self.states)


def operational_predict(
    state: TrustState,
    script: Sequence[Action | str | None],
    variant: TrustVariant | str,
    params: TrustParams,
    utility: UtilityParams | None = None,
    features: TransactionFeatures | None = None,
) -> Prediction:
    """Replay a hypothetical action script through the trust update.

    Script entries: an :class:`Action` (updated state, utility is the base
    utility at the new trust plus the external gain on defection), ``None``
    (idle period, no update, no utility) or ``"reenter"`` (fresh newcomer
    identity, no utility).
    """
    utility = utility or UtilityParams()
    states, utils = [state], []
    for step in script:
        if step is None:
            states.append(state)
            utils.append(0.0)
            continue
        if step == REENTER:
            state = TrustState.newcomer()
            states.append(state)
            utils.append(0.0)
            continue
        action = Action.parse(step)
        state = update(variant, state, action, params, features)
        gain = utility.omega * external_gain_beta(utility) if action == Action.DEFECT else 0.0
        states.append(state)
        utils.append(base_utility(state.trust, utility.omega) + gain)
    return Prediction(tuple(states), tuple(utils))


# --------------------------------------------------------------------------
# equilibrium sweep

CC, DD, BOUNDARY = "CC", "DD", "boundary"


@dataclass(frozen=True)
class SweepPoint:
    rho_lifetime: float
    sigma: float
    label: str
    analytic: str  # label predicted by gamma(k) versus sigma

    @property
    def agrees(self) -> bool:
        return self.label == self.analytic


@dataclass(frozen=True)
class SweepReport:
    points: tuple[SweepPoint, ...]
    mu: float
    omega: float
    k: int

    @property
    def misclassified(self) -> list[SweepPoint]:
        return [p for p in self.points if p.label != BOUNDARY and not p.agrees]

    def _brackets(self) -> list[tuple[float, float, float]]:
        """Per rho*l column: (rho*l, largest CC sigma, smallest DD sigma)."""
        cols: dict[float, dict[str, list[float]]] = {}
        for p in self.points:
            cols.setdefault(p.rho_lifetime, {CC: [], DD: [], BOUNDARY: []})[p.label].append(p.sigma)
        out = []
        for x, c in cols.items():
            if c[BOUNDARY]:
                out.append((x, c[BOUNDARY][0], c[BOUNDARY][0]))
            elif c[CC] and c[DD]:
                out.append((x, max(c[CC]), min(c[DD])))
        return out

    def fitted_slope(self) -> float | None:
        """Geometric-mean ratio sigma*/rho*l over columns that cross the boundary.

        sigma* is the geometric midpoint of each column's CC/DD bracket.
        """
        ratios = [math.sqrt(lo * hi) / x for x, lo, hi in self._brackets() if x > 0]
        if not ratios:
            return None
        return float(math.exp(np.mean(np.log(ratios))))

    def boundary_agreement(self) -> tuple[int, int]:
        """(columns whose bracket contains gamma, columns with a bracket)."""
        br = self._brackets()
        hits = sum(
            1 for x, lo, hi in br
            if lo <= x * self.analytic_slope <= hi and lo <= hi
        )
        return hits, len(br)

    @property
    def analytic_slope(self) -> float:
        return (self.k + 1) / 4


def classify_point(rho_lifetime: float, sigma: float, mu: float, omega: float, k: int) -> str:
    g = sellers_dilemma("f2", mu, sigma, rho=rho_lifetime, lifetime=1, omega=omega, k=k)
    ne = pure_nash(g)
    if ne == {(COOPERATE, COOPERATE)}:
        return CC
    if ne == {(DEFECT, DEFECT)}:
        return DD
    return BOUNDARY


def default_grid(n: int = 50, low: float = 1e-4, high: float = 1e-1) -> np.ndarray:
    return np.logspace(math.log10(low), math.log10(high), n)


def equilibrium_sweep(
    rho_lifetimes: Sequence[float] | None = None,
    sigmas: Sequence[float] | None = None,
    mu: float = 0.05,
    omega: float = 100.0,
    k: int = 5,
) -> SweepReport:
    rho_lifetimes = default_grid() if rho_lifetimes is None else rho_lifetimes
    sigmas = default_grid() if sigmas is None else sigmas
    if len(rho_lifetimes) == 0 or len(sigmas) == 0:
        raise ParameterError("sweep grid must be nonempty")
    points = []
    for x in rho_lifetimes:
        for s in sigmas:
            x, s = float(x), float(s)
            gamma = future_loss_gamma(
                UtilityParams(omega=omega, sigma=s, mu_effective=mu, rho=x, lifetime=1, recovery_steps_k=k)
            )
            analytic = CC if gamma > s else DD if gamma < s else BOUNDARY
            points.append(SweepPoint(x, s, classify_point(x, s, mu, omega, k), analytic))
    return SweepReport(tuple(points), mu, omega, k)


def format_sweep_csv(report: SweepReport) -> str:
    out = io.StringIO()
    out.write("# rational-trust region-map v1\n")
    out.write("rho_lifetime,sigma,label,analytic\n")
    for p in report.points:
        out.write(f"{p.rho_lifetime!r},{p.sigma!r},{p.label},{p.analytic}\n")
    return out.getvalue()

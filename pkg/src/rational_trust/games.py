"""Finite normal-form games: pure Nash equilibria and pure-action dominance.

Payoffs are stored as a float array of shape ``(*action_counts, n_players)``;
``payoffs[a_1, ..., a_n, i]`` is player ``i``'s payoff at outcome ``a``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParameterError
from .trust import Action, TrustVariant
from .utility import UtilityParams, overall_utility

GAME_FORMAT_HEADER = "# rational-trust game v1"


class Dominance(str, enum.Enum):
    STRICT = "strict"
    WEAK = "weak"
    NONE = "none"


@dataclass(frozen=True, eq=False)
class NormalFormGame:
    payoffs: np.ndarray
    action_labels: tuple[tuple[str, ...], ...] | None = None
    name: str = ""

    def __post_init__(self):
        payoffs = np.array(self.payoffs, dtype=float)
        if payoffs.ndim < 3:
            raise ParameterError("payoffs must have shape (*action_counts, n_players)")
        n = payoffs.ndim - 1
        if payoffs.shape[-1] != n:
            raise ParameterError(
                f"last axis must hold one payoff per player ({n}), got {payoffs.shape[-1]}"
            )
        if n < 2:
            raise ParameterError("a game needs at least two players")
        if any(c < 1 for c in payoffs.shape[:-1]):
            raise ParameterError("every player needs at least one action")
        if not np.all(np.isfinite(payoffs)):
            raise ParameterError("payoffs must be finite")
        payoffs.setflags(write=False)
        object.__setattr__(self, "payoffs", payoffs)
        if self.action_labels is not None:
            labels = tuple(tuple(str(x) for x in row) for row in self.action_labels)
            if len(labels) != n or any(
                len(row) != c for row, c in zip(labels, payoffs.shape[:-1])
            ):
                raise ParameterError("action_labels must match action_counts")
            object.__setattr__(self, "action_labels", labels)

    @property
    def player_count(self) -> int:
        return self.payoffs.ndim - 1

    @property
    def action_counts(self) -> tuple[int, ...]:
        return tuple(self.payoffs.shape[:-1])

    def outcomes(self) -> Iterable[tuple[int, ...]]:
        return itertools.product(*(range(c) for c in self.action_counts))

    def payoff(self, outcome: Sequence[int], player: int) -> float:
        return float(self.payoffs[tuple(outcome) + (player,)])

    def label(self, player: int, action: int) -> str:
        if self.action_labels is None:
            return str(action)
        return self.action_labels[player][action]

    def format_outcome(self, outcome: Sequence[int]) -> str:
        return "(" + ",".join(self.label(i, a) for i, a in enumerate(outcome)) + ")"

    def __eq__(self, other):
        if not isinstance(other, NormalFormGame):
            return NotImplemented
        return (
            self.payoffs.shape == other.payoffs.shape
            and bool(np.array_equal(self.payoffs, other.payoffs))
            and self.action_labels == other.action_labels
        )

    __hash__ = None


@dataclass
class EquilibriumReport:
    pure_equilibria: frozenset
    dominated_actions: dict[int, dict[int, Dominance]] = field(default_factory=dict)


def _check_player(g: NormalFormGame, player: int):
    if not 0 <= player < g.player_count:
        raise IndexError(f"player {player} out of range for {g.player_count}-player game")


def _check_action(g: NormalFormGame, player: int, action: int):
    _check_player(g, player)
    if not 0 <= action < g.action_counts[player]:
        raise IndexError(f"action {action} out of range for player {player}")


def best_responses(
    g: NormalFormGame, player: int, others: Sequence[int], tol: float = 0.0
) -> frozenset[int]:
    """Actions of ``player`` that maximize its payoff against ``others``.

    ``others`` lists the opponents' actions in player order with ``player``
    left out.
    """
    _check_player(g, player)
    if len(others) != g.player_count - 1:
        raise ParameterError(
            f"others must fix {g.player_count - 1} opponents, got {len(others)}"
        )
    index = list(others)
    index.insert(player, slice(None))
    column = g.payoffs[tuple(index) + (player,)]
    best = column.max()
    return frozenset(int(a) for a in np.flatnonzero(column >= best - tol))


def pure_nash(g: NormalFormGame, tol: float = 0.0) -> frozenset[tuple[int, ...]]:
    """All outcomes where every player is playing a best response."""
    stable = np.ones(g.action_counts, dtype=bool)
    for i in range(g.player_count):
        u = g.payoffs[..., i]
        stable &= u >= u.max(axis=i, keepdims=True) - tol
    return frozenset(tuple(int(a) for a in idx) for idx in np.argwhere(stable))


def classify_dominance(
    g: NormalFormGame, player: int, action: int, tol: float = 0.0
) -> Dominance:
    """Strongest pure-action dominance relation that applies to ``action``.

    Weak means never better than some alternative, so an action that ties
    another everywhere counts as weakly dominated.
    """
    _check_action(g, player, action)
    u = np.moveaxis(g.payoffs[..., player], player, 0)
    mine = u[action]
    result = Dominance.NONE
    for other in range(g.action_counts[player]):
        if other == action:
            continue
        diff = u[other] - mine
        if np.all(diff > tol):
            return Dominance.STRICT
        if np.all(diff >= -tol):
            result = Dominance.WEAK
    return result


def analyze(g: NormalFormGame, tol: float = 0.0) -> EquilibriumReport:
    dominated = {
        i: {a: classify_dominance(g, i, a, tol) for a in range(g.action_counts[i])}
        for i in range(g.player_count)
    }
    return EquilibriumReport(pure_nash(g, tol), dominated)


# Action index convention for the 2x2 builders: 0 = cooperate, 1 = defect.
COOPERATE, DEFECT = 0, 1
_CD_LABELS = (("C", "D"), ("C", "D"))


def prisoners_dilemma() -> NormalFormGame:
    payoffs = np.array(
        [
            [[0.0, 0.0], [-2.0, 1.0]],
            [[1.0, -2.0], [-1.0, -1.0]],
        ]
    )
    return NormalFormGame(payoffs, _CD_LABELS, name="prisoners_dilemma")


def sellers_dilemma(
    variant: TrustVariant | str,
    mu: float,
    sigma: float,
    rho: float = 0.0,
    lifetime: float = 0.0,
    omega: float = 100.0,
    k: int = 5,
) -> NormalFormGame:
    """Two-seller dilemma whose payoffs are the per-period overall utilities.

    Each seller's payoff depends only on its own action, so the matrix is
    symmetric with the defect payoff independent of the opponent.
    """
    variant = TrustVariant(variant)
    if variant is TrustVariant.EXTENDED:
        raise ParameterError("sellers_dilemma supports variants f1 and f2 only")
    if rho * lifetime < 0:
        raise ParameterError("rho * lifetime must be >= 0")
    p = UtilityParams(
        omega=omega, sigma=sigma, mu_effective=mu, rho=rho, lifetime=lifetime,
        recovery_steps_k=k,
    )
    own = {
        COOPERATE: overall_utility(variant, Action.COOPERATE, p),
        DEFECT: overall_utility(variant, Action.DEFECT, p),
    }
    payoffs = np.empty((2, 2, 2))
    for a, b in itertools.product((COOPERATE, DEFECT), repeat=2):
        payoffs[a, b] = (own[a], own[b])
    return NormalFormGame(payoffs, _CD_LABELS, name=f"sellers_dilemma_{variant.value}")


def dump_game(g: NormalFormGame) -> str:
    """Serialize ``g`` as one ``actions | payoffs`` row per outcome."""
    lines = [GAME_FORMAT_HEADER, "actions " + " ".join(map(str, g.action_counts))]
    if g.action_labels is not None:
        lines.append("labels " + " / ".join(" ".join(row) for row in g.action_labels))
    for outcome in g.outcomes():
        values = " ".join(repr(g.payoff(outcome, i)) for i in range(g.player_count))
        lines.append(" ".join(map(str, outcome)) + " | " + values)
    return "\n".join(lines) + "\n"


def load_game(text: str) -> NormalFormGame:
    lines = [ln.strip() for ln in text.splitlines()]
    if not lines or lines[0] != GAME_FORMAT_HEADER:
        raise ParameterError(f"missing game header {GAME_FORMAT_HEADER!r}")
    counts = None
    labels = None
    rows = {}
    for ln in lines[1:]:
        if not ln or ln.startswith("#"):
            continue
        if ln.startswith("actions "):
            counts = tuple(int(x) for x in ln.split()[1:])
        elif ln.startswith("labels "):
            labels = tuple(tuple(part.split()) for part in ln[len("labels "):].split("/"))
        else:
            lhs, _, rhs = ln.partition("|")
            rows[tuple(int(x) for x in lhs.split())] = [float(x) for x in rhs.split()]
    if counts is None:
        raise ParameterError("missing 'actions' line")
    payoffs = np.full(counts + (len(counts),), np.nan)
    for outcome, values in rows.items():
        if len(outcome) != len(counts) or len(values) != len(counts):
            raise ParameterError(f"malformed row for outcome {outcome}")
        payoffs[outcome] = values
    if np.isnan(payoffs).any():
        raise ParameterError("payoffs missing for some outcomes")
    return NormalFormGame(payoffs, labels)

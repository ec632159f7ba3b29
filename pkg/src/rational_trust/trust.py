"""Trust values and the f1 / f2 / extended trust update rules.

Trust lives in [-1, +1] and every newcomer starts at 0. A period's update
takes the previous state and a single binary action (cooperate/defect) and
returns a new :class:`TrustState`; states are never mutated in place.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field, replace

from .errors import ParameterError

TRUST_MIN = -1.0
TRUST_MAX = 1.0

_identity_counter = itertools.count(1)


class Action(enum.IntEnum):
    DEFECT = 0
    COOPERATE = 1

    @property
    def label(self) -> str:
        return "C" if self is Action.COOPERATE else "D"

    @classmethod
    def parse(cls, value) -> "Action":
        if isinstance(value, Action):
            return value
        if isinstance(value, str):
            key = value.strip().upper()
            if key in ("C", "COOPERATE", "1"):
                return cls.COOPERATE
            if key in ("D", "DEFECT", "0"):
                return cls.DEFECT
            raise ValueError(f"unknown action {value!r}")
        return cls(int(value))


def clamp(value: float) -> float:
    return min(TRUST_MAX, max(TRUST_MIN, value))


@dataclass(frozen=True)
class TrustParams:
    """Parameterization of the trust adjustment curves and update rules.

    ``eta``, ``theta`` and ``kappa`` are the slow, normal and strong plateaus;
    ``epsilon`` is the width of the boundary tapers near -1 and +1. ``rho`` is
    the per-period lifetime reward coefficient used by f2. ``n0``,
    ``lambda_exp`` belong to the extended update only.
    """

    eta: float = 0.01
    theta: float = 0.05
    kappa: float = 0.09
    epsilon: float = 0.1
    mu_max: float = 0.1
    rho: float = 0.001
    recovery_steps_k: int = 5
    activity_threshold: int = 1
    n0: int = 20
    lambda_exp: float = 2.0

    def __post_init__(self):
        if not 0 <= self.eta <= self.theta <= self.kappa <= self.mu_max:
            raise ParameterError(
                "need 0 <= eta <= theta <= kappa <= mu_max, got "
                f"{self.eta}, {self.theta}, {self.kappa}, {self.mu_max}"
            )
        if not 0 < self.epsilon < 1:
            raise ParameterError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.rho < 0:
            raise ParameterError(f"rho must be >= 0, got {self.rho}")
        if self.recovery_steps_k < 1:
            raise ParameterError("recovery_steps_k must be >= 1")
        if self.activity_threshold < 0:
            raise ParameterError("activity_threshold must be >= 0")
        if self.n0 <= 0:
            raise ParameterError(f"n0 must be positive, got {self.n0}")
        if self.lambda_exp < 1:
            raise ParameterError(f"lambda_exp must be >= 1, got {self.lambda_exp}")


@dataclass(frozen=True)
class TrustState:
    """Trust value, lifetime and transaction count of one seller identity."""

    trust: float = 0.0
    lifetime: int = 0
    total_transactions: int = 0
    identity_id: str = field(default_factory=lambda: f"id{next(_identity_counter)}")

    def __post_init__(self):
        if not TRUST_MIN <= self.trust <= TRUST_MAX:
            raise ParameterError(f"trust {self.trust} outside [-1, +1]")
        if self.lifetime < 0 or self.total_transactions < 0:
            raise ParameterError("lifetime and total_transactions must be >= 0")

    @classmethod
    def newcomer(cls, identity_id: str | None = None) -> "TrustState":
        if identity_id is None:
            return cls()
        return cls(identity_id=identity_id)


@dataclass(frozen=True)
class TransactionFeatures:
    """Cost of the period's transaction relative to the community average."""

    transaction_cost: float = 1.0
    reference_cost: float = 1.0

    def __post_init__(self):
        if self.transaction_cost < 0:
            raise ParameterError("transaction_cost must be >= 0")
        if self.reference_cost <= 0:
            raise ParameterError("reference_cost must be > 0")


def mu(x: float, p: TrustParams) -> float:
    """Reward increment for cooperating at trust ``x``.

    ``eta`` below -0.5, ``theta`` above it, with a linear taper to zero on
    [1 - epsilon, 1] and a linear ramp up from zero on [-1, epsilon - 1].
    """
    eps = p.epsilon
    if x >= 1 - eps:
        return p.theta * (1 - x) / eps
    if x < eps - 1:
        return p.eta * (x + 1) / eps
    if x < -0.5:
        return p.eta
    return p.theta


def mu_prime(x: float, p: TrustParams) -> float:
    """Penalty magnitude for defecting at trust ``x``; ``kappa`` except near -1."""
    eps = p.epsilon
    if x < eps - 1:
        return p.kappa * (x + 1) / eps
    return p.kappa


def lifetime_bonus(lifetime: int, p: TrustParams) -> float:
    return min(p.rho * lifetime, p.mu_max)


def _advance(s: TrustState, trust: float, transactions: int, p: TrustParams) -> TrustState:
    active = transactions >= p.activity_threshold
    return replace(
        s,
        trust=clamp(trust),
        lifetime=s.lifetime + (1 if active else 0),
        total_transactions=s.total_transactions + transactions,
    )


def update_f1(s: TrustState, a: Action, p: TrustParams, transactions: int = 1) -> TrustState:
    """Lifetime-independent update: ``trust +/- mu`` depending on the action.

    ``transactions`` is the number of transactions the identity completed in
    the period; it advances ``total_transactions`` and, when it reaches
    ``p.activity_threshold``, the lifetime.
    """
    if a == Action.COOPERATE:
        t = s.trust + mu(s.trust, p)
    else:
        t = s.trust - mu_prime(s.trust, p)
    return _advance(s, t, transactions, p)


def update_f2(s: TrustState, a: Action, p: TrustParams, transactions: int = 1) -> TrustState:
    """f1 plus the lifetime reward ``min(rho * lifetime, mu_max)`` for either action."""
    if a == Action.COOPERATE:
        t = s.trust + mu(s.trust, p)
    else:
        t = s.trust - mu_prime(s.trust, p)
    t += lifetime_bonus(s.lifetime, p)
    return _advance(s, t, transactions, p)


def update_extended(
    s: TrustState,
    a: Action,
    f: TransactionFeatures,
    p: TrustParams,
    transactions: int = 1,
) -> TrustState:
    """f2 with three attack-specific modifiers.

    * reward scaled by ``min(1, n / n0)`` where ``n`` is the identity's past
      transaction count (splitting activity across accounts pays less);
    * penalty scaled by ``max(1, cost / reference_cost)``;
    * penalty scaled again by ``lambda_exp`` when trust is already in the
      saturated region ``[1 - epsilon, 1]``.

    With ``n >= n0``, ``cost == reference_cost`` and trust below
    ``1 - epsilon`` this is exactly :func:`update_f2`.
    """
    if a == Action.COOPERATE:
        scale = min(1.0, s.total_transactions / p.n0)
        t = s.trust + mu(s.trust, p) * scale
    else:
        penalty = mu_prime(s.trust, p) * max(1.0, f.transaction_cost / f.reference_cost)
        if s.trust >= 1 - p.epsilon:
            penalty *= p.lambda_exp
        t = s.trust - penalty
    t += lifetime_bonus(s.lifetime, p)
    return _advance(s, t, transactions, p)


class TrustVariant(str, enum.Enum):
    F1 = "f1"
    F2 = "f2"
    EXTENDED = "extended"


def update(
    variant: TrustVariant | str,
    s: TrustState,
    a: Action,
    p: TrustParams,
    features: TransactionFeatures | None = None,
    transactions: int = 1,
) -> TrustState:
    """Dispatch to the update rule named by ``variant``."""
    variant = TrustVariant(variant)
    if variant is TrustVariant.F1:
        return update_f1(s, a, p, transactions)
    if variant is TrustVariant.F2:
        return update_f2(s, a, p, transactions)
    return update_extended(s, a, features or TransactionFeatures(), p, transactions)

"""Seller utilities for the seller's dilemma under f1 and f2.

The defect branch always earns the external gain ``beta = mu + sigma``; under
f2 it additionally forfeits ``gamma``, the lifetime credit lost by leaving and
re-entering with a fresh identity.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ParameterError
from .trust import Action, TrustVariant


@dataclass(frozen=True)
class UtilityParams:
    omega: float = 100.0
    sigma: float = 0.01
    mu_effective: float = 0.05
    rho: float = 0.01
    lifetime: float = 1.0
    recovery_steps_k: int = 5
    delta_rounds: int = 1

    def __post_init__(self):
        if self.omega <= 0:
            raise ParameterError(f"omega must be > 0, got {self.omega}")
        if self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if not 0 <= self.mu_effective < 0.1:
            raise ParameterError(f"mu_effective must lie in [0, 0.1), got {self.mu_effective}")
        if self.rho < 0 or self.lifetime < 0:
            raise ParameterError("rho and lifetime must be >= 0")
        if self.recovery_steps_k < 1:
            raise ParameterError(f"recovery_steps_k must be >= 1, got {self.recovery_steps_k}")
        if self.delta_rounds < 1:
            raise ParameterError("delta_rounds must be >= 1")


def selection_weight(t: float) -> float:
    """Map trust in [-1, 1] to a selection probability in [0, 1]."""
    return (t + 1) / 2


def base_utility(t: float, omega: float) -> float:
    if omega <= 0:
        raise ParameterError(f"omega must be > 0, got {omega}")
    return omega * selection_weight(t)


def external_gain_beta(p: UtilityParams) -> float:
    return p.mu_effective + p.sigma


def future_loss_gamma(p: UtilityParams) -> float:
    """Lifetime credit lost by re-entry, ``(rho * l / 2) * (k + 1) / 2``.

    Closed form of ``(rho / 2) * sum_{j=0..k} (l - j * l / k)``: the lifetime
    is assumed to climb back from 0 to ``l`` in ``k`` equal steps. ``k = 5``
    gives ``1.5 * rho * l``.
    """
    k = p.recovery_steps_k
    if k < 1:
        raise ParameterError(f"recovery_steps_k must be >= 1, got {k}")
    return p.rho * p.lifetime * ((k + 1) / 4)


def psi(p: UtilityParams) -> float:
    """f2 cooperation kernel ``((mu + rho * l) + 1) / 2``."""
    return ((p.mu_effective + p.rho * p.lifetime) + 1) / 2


def overall_utility(variant: TrustVariant | str, action: Action, p: UtilityParams) -> float:
    """Per-period utility of one seller, trust from the previous period cancelled.

    Under f1 the defect payoff is ``(-mu + 1) / 2 + beta``, which simplifies to
    ``(mu + 1) / 2 + sigma``; under f2 it is ``Psi + sigma - gamma``.
    """
    variant = TrustVariant(variant)
    action = Action(action)
    mu = p.mu_effective
    if variant is TrustVariant.F1:
        if action == Action.COOPERATE:
            return p.omega * (mu + 1) / 2
        return p.omega * ((mu + 1) / 2 + p.sigma)
    if variant is TrustVariant.F2:
        kernel = psi(p)
        if action == Action.COOPERATE:
            return p.omega * kernel
        # sigma - gamma grouped so that sigma == gamma ties exactly with Psi
        return p.omega * (kernel + (p.sigma - future_loss_gamma(p)))
    raise ParameterError(f"no closed-form utility for variant {variant.value!r}")


def cooperation_is_equilibrium(p: UtilityParams) -> bool:
    return future_loss_gamma(p) > p.sigma

"""Sum-rate evaluation: power allocation, closed forms, bound, Monte Carlo.

All rates are in bits/s/Hz (base-2 logs). Power allocation is long-term: it
depends on pathloss and the user split only, never on a fading realization,
so the Monte Carlo estimator and the closed forms share the same allocation.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import LinkBudget, link_budget, prepare_sampler
from .scenario import RisType, ScenarioConfig, reflection_zone_mask

LN2 = math.log(2.0)


def _log2_1p(x: float) -> float:
    return math.log1p(x) / LN2


# --- scalar rate curves (user counts may be fractional) -----------------------

def reflective_rate(n_reflect: float, radiation_reflect: float,
                    link_constant: float) -> float:
    """Sum rate serving only the reflection zone, power split equally."""
    if n_reflect <= 0.0:
        return 0.0
    return n_reflect * _log2_1p(radiation_reflect / (link_constant * n_reflect))


def transmissive_rate(n_transmit: float, radiation_transmit: float,
                      link_constant: float) -> float:
    """Sum rate serving only the transmission zone, power split equally."""
    if n_transmit <= 0.0:
        return 0.0
    return n_transmit * _log2_1p(radiation_transmit / (link_constant * n_transmit))


def hybrid_reflect_fraction(n_transmit: float, n_total: float,
                            radiation_reflect: float, radiation_transmit: float,
                            link_constant: float, simplified: bool = False) -> float:
    """Optimal per-user power share for reflection-zone users (hybrid mode).

    The unconstrained optimum is
        L * (2 n_T / n) * (1/eps_t - 1/eps_r) + 1/n,
    clamped to [0, 1/n_R] so the transmission-zone share stays feasible.
    `simplified=True` returns the unclamped value, which is the form the
    asymptotic diagnostics differentiate. When the reflection zone is empty
    the share is irrelevant; 0.0 is returned so the transmission zone gets
    the whole budget.
    """
    raw = link_constant * (2.0 * n_transmit / n_total) \
        * (1.0 / radiation_transmit - 1.0 / radiation_reflect) + 1.0 / n_total
    if simplified:
        return raw
    n_reflect = n_total - n_transmit
    if n_reflect <= 0.0:
        return 0.0
    return min(max(raw, 0.0), 1.0 / n_reflect)


def hybrid_rate(n_transmit: float, n_total: float, radiation_reflect: float,
                radiation_transmit: float, link_constant: float,
                reflect_fraction: float | None = None) -> float:
    """Sum rate of the hybrid mode; both zones served, energy split halved.

    Uses the clamped optimal reflect fraction unless one is supplied. Empty
    zones contribute zero (the n*log2(1 + c/n) terms extend continuously to
    zero at n = 0).
    """
    n_reflect = n_total - n_transmit
    lam = reflect_fraction
    if lam is None:
        lam = hybrid_reflect_fraction(n_transmit, n_total, radiation_reflect,
                                      radiation_transmit, link_constant)
    rate = 0.0
    if n_reflect > 0.0:
        rate += n_reflect * _log2_1p(radiation_reflect * lam / (2.0 * link_constant))
    if n_transmit > 0.0:
        share = (1.0 - n_reflect * lam) / n_transmit
        rate += n_transmit * _log2_1p(radiation_transmit * share / (2.0 * link_constant))
    return rate


# --- allocation ----------------------------------------------------------------

@dataclass(frozen=True)
class PowerAllocation:
    """Per-user fractions of the total transmit power (they sum to 1 when
    anyone is served, and to 0 otherwise)."""

    per_ue: np.ndarray
    reflect_fraction: float | None
    scheme: RisType

    def __post_init__(self):
        per_ue = np.asarray(self.per_ue, dtype=float)
        per_ue.flags.writeable = False
        object.__setattr__(self, "per_ue", per_ue)

    @property
    def n_served(self) -> int:
        return int(np.count_nonzero(self.per_ue))


def allocate_power(cfg: ScenarioConfig, ris_type: RisType,
                   budget: LinkBudget) -> PowerAllocation:
    """Long-term power split for one surface type.

    Reflective and transmissive modes put equal shares on their own zone and
    nothing on the other. The hybrid mode gives every reflection-zone user
    the clamped optimal fraction and spreads the remainder equally over the
    transmission zone. An empty served set yields the all-zero allocation and
    a warning.
    """
    s = cfg.users_total
    s_r = cfg.users_reflection
    s_t = cfg.users_transmission
    per_ue = np.zeros(s)
    lam = None

    if ris_type is RisType.REFLECTIVE:
        if s_r == 0:
            warnings.warn("no served UEs: reflective surface with an empty "
                          "reflection zone", stacklevel=2)
        else:
            per_ue[:s_r] = 1.0 / s_r
    elif ris_type is RisType.TRANSMISSIVE:
        if s_t == 0:
            warnings.warn("no served UEs: transmissive surface with an empty "
                          "transmission zone", stacklevel=2)
        else:
            per_ue[s_r:] = 1.0 / s_t
    else:
        panel = cfg.panel
        lam = hybrid_reflect_fraction(s_t, s, panel.radiation_reflect,
                                      panel.radiation_transmit, budget.link_constant)
        per_ue[:s_r] = lam
        if s_t > 0:
            per_ue[s_r:] = (1.0 - s_r * lam) / s_t
    return PowerAllocation(per_ue=per_ue, reflect_fraction=lam, scheme=ris_type)


# --- rate evaluation -------------------------------------------------------------

@dataclass(frozen=True)
class CapacityReport:
    """Per-type rates: canonical closed form, bound for the given allocation,
    and the Monte Carlo estimate with its standard error."""

    closed_form: float
    upper_bound: float
    monte_carlo_mean: float
    monte_carlo_stderr: float
    trials: int
    ris_type: RisType


def closed_form_rate(cfg: ScenarioConfig, ris_type: RisType,
                     budget: LinkBudget) -> float:
    """Canonical sum rate of one type under its own long-term allocation."""
    panel = cfg.panel
    eps_r, eps_t = panel.radiation_reflect, panel.radiation_transmit
    big_l = budget.link_constant
    if ris_type is RisType.REFLECTIVE:
        return reflective_rate(cfg.users_reflection, eps_r, big_l)
    if ris_type is RisType.TRANSMISSIVE:
        return transmissive_rate(cfg.users_transmission, eps_t, big_l)
    return hybrid_rate(cfg.users_transmission, cfg.users_total, eps_r, eps_t, big_l)


def upper_bound(cfg: ScenarioConfig, ris_type: RisType, alloc: PowerAllocation,
                budget: LinkBudget) -> float:
    """Averaged-channel bound on the ergodic sum rate for a given allocation.

    Per user: log2(1 + (P_T / sigma^2) * share * beta_zone * K_t * M N *
    amplitude_zone^2). With the type's own allocation this equals the closed
    form exactly.
    """
    mask = reflection_zone_mask(cfg)
    beta = np.where(mask, budget.avg_pathloss_reflect, budget.avg_pathloss_transmit)
    gamma_sq = np.where(mask, ris_type.amplitude_reflect ** 2,
                        ris_type.amplitude_transmit ** 2)
    snr = (cfg.transmit_power / cfg.noise_variance) * alloc.per_ue * beta \
        * cfg.bs_antennas * cfg.panel.element_count * gamma_sq
    return float(np.sum(np.log1p(snr)) / LN2)


def monte_carlo_capacity(cfg: ScenarioConfig, ris_type: RisType,
                         alloc: PowerAllocation, trials: int, base_seed,
                         fading="gaussian") -> CapacityReport:
    """Estimate the ergodic sum rate by averaging over channel draws.

    Each trial draws an independent channel, computes
    sum over users of log2(1 + (P_T / sigma^2) * share_s * row_power_s)
    with row_power_s the squared norm of the user's channel row, and the
    report carries the sample mean and standard error. Trial t uses the
    substream seeded by (base_seed, t), so runs are reproducible and trials
    could be farmed out in parallel without changing the result; the final
    reduction is a fixed-order sum over the per-trial array.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    base = base_seed if isinstance(base_seed, tuple) else (base_seed,)
    budget = link_budget(cfg)
    gain = (cfg.transmit_power / cfg.noise_variance) * alloc.per_ue
    draw = prepare_sampler(cfg, ris_type, fading)
    rates = np.empty(trials)
    for t in range(trials):
        entries = draw(base + (t,))
        row_power = np.sum(entries.real ** 2 + entries.imag ** 2, axis=1)
        rates[t] = float(np.sum(np.log1p(gain * row_power)) / LN2)
    mean = float(rates.mean())
    stderr = float(rates.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return CapacityReport(
        closed_form=closed_form_rate(cfg, ris_type, budget),
        upper_bound=upper_bound(cfg, ris_type, alloc, budget),
        monte_carlo_mean=mean,
        monte_carlo_stderr=stderr,
        trials=trials,
        ris_type=ris_type,
    )

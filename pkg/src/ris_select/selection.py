"""Surface-type decision: crossover splits, condition table, asymptotics.

The three closed-form rate curves are compared as functions of the number of
transmission-zone users (treated as a continuous variable for root finding;
verdicts are produced at the integer split). The transmissive-minus-reflective
difference is exactly monotone; the two hybrid differences are monotone in
the near-isotropic, high-SNR regime, which is what makes the condition table
work. Outside that regime the table verdict is still produced but marked
advisory, and the brute-force comparison of the closed forms is the verdict
to trust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity import (
    LN2,
    hybrid_rate,
    hybrid_reflect_fraction,
    reflective_rate,
    transmissive_rate,
)
from .channel import LinkBudget, link_budget
from .scenario import (
    RegimeReport,
    RisType,
    ScenarioConfig,
    validate_approximation_regime,
)

ROOT_TOL = 1e-9
SCAN_POINTS = 100
BISECT_MAX_ITERS = 200
FD_STEP = 1e-6
DOMINANCE_FLOOR_DEFAULT = 10.0


class RegimeViolationError(RuntimeError):
    """A difference curve broke the monotonicity the condition table assumes."""

    def __init__(self, message: str, regime: RegimeReport):
        super().__init__(message)
        self.regime = regime


class CertificateError(RuntimeError):
    """A monotonicity check failed at a named grid point."""


# --- rate curves over the continuous user split --------------------------------

def _curves(cfg: ScenarioConfig, budget: LinkBudget):
    panel = cfg.panel
    eps_r, eps_t = panel.radiation_reflect, panel.radiation_transmit
    big_l = budget.link_constant
    s = float(cfg.users_total)

    def c_reflect(x):
        return reflective_rate(s - x, eps_r, big_l)

    def c_transmit(x):
        return transmissive_rate(x, eps_t, big_l)

    def c_hybrid(x):
        return hybrid_rate(x, s, eps_r, eps_t, big_l)

    return c_reflect, c_transmit, c_hybrid


def _f_lemma(x: float) -> float:
    """f(x) = x (ln x - 1) + 1; positive on (1, inf), zero at 1.

    Evaluated as x log1p(x - 1) - (x - 1): the naive form cancels
    catastrophically near x = 1, where f(1 + e) is about e^2 / 2.
    """
    e = x - 1.0
    return x * math.log1p(e) - e


def transmissive_rate_derivative(n_transmit: float, radiation_transmit: float,
                                 link_constant: float) -> float:
    """Analytic slope of the transmissive rate in the user split."""
    x = 1.0 + radiation_transmit / (link_constant * n_transmit)
    return _f_lemma(x) / (LN2 * x)


def reflective_rate_derivative(n_transmit: float, n_total: float,
                               radiation_reflect: float,
                               link_constant: float) -> float:
    """Analytic slope of the reflective rate in the user split (negative)."""
    x = 1.0 + radiation_reflect / (link_constant * (n_total - n_transmit))
    return -_f_lemma(x) / (LN2 * x)


# --- thresholds -------------------------------------------------------------------

@dataclass(frozen=True)
class SelectionThresholds:
    """Continuous user splits where two rate curves coincide; None when the
    pair does not cross inside [1, S-1]."""

    split_reflect_transmit: float | None
    split_reflect_hybrid: float | None
    split_transmit_hybrid: float | None
    rate_at_equal_split: float | None


def _sign_pattern_monotone(values, increasing: bool) -> bool:
    signs = [v for v in np.sign(values) if v != 0.0]
    if not signs:
        return True
    diffs = np.diff(signs)
    return bool(np.all(diffs >= 0)) if increasing else bool(np.all(diffs <= 0))


def _bisect(func, lo: float, hi: float) -> float | None:
    flo, fhi = func(lo), func(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if (flo > 0.0) == (fhi > 0.0):
        return None
    for _ in range(BISECT_MAX_ITERS):
        mid = 0.5 * (lo + hi)
        if hi - lo <= ROOT_TOL:
            return mid
        fm = func(mid)
        if fm == 0.0:
            return mid
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_thresholds(cfg: ScenarioConfig, budget: LinkBudget) -> SelectionThresholds:
    """Locate the pairwise crossings of the three rate curves on [1, S-1].

    Each difference is first sampled at 100 points; a sign pattern that is
    not monotone means the closed-form comparisons cannot be trusted and a
    RegimeViolationError (carrying the regime report) is raised. Otherwise
    each crossing is bisected to within 1e-9 in the continuous split, or
    reported absent when the difference never changes sign.
    """
    if cfg.users_total < 2:
        raise ValueError("threshold search needs at least two users")
    c_reflect, c_transmit, c_hybrid = _curves(cfg, budget)
    lo, hi = 1.0, float(cfg.users_total - 1)
    grid = np.linspace(lo, hi, SCAN_POINTS)

    differences = (
        ("transmissive minus reflective",
         lambda x: c_transmit(x) - c_reflect(x), True),
        ("reflective minus hybrid",
         lambda x: c_reflect(x) - c_hybrid(x), False),
        ("transmissive minus hybrid",
         lambda x: c_transmit(x) - c_hybrid(x), True),
    )
    roots = []
    for name, diff, increasing in differences:
        values = [diff(x) for x in grid]
        if not _sign_pattern_monotone(values, increasing):
            raise RegimeViolationError(
                f"approximation regime violated: the {name} difference is not "
                f"monotone over the user split",
                regime=validate_approximation_regime(cfg),
            )
        roots.append(_bisect(diff, lo, hi))

    split_rt, split_rh, split_th = roots
    rate_eq = c_reflect(split_rt) if split_rt is not None else None
    return SelectionThresholds(
        split_reflect_transmit=split_rt,
        split_reflect_hybrid=split_rh,
        split_transmit_hybrid=split_th,
        rate_at_equal_split=rate_eq,
    )


# --- the decision -----------------------------------------------------------------

@dataclass(frozen=True)
class TableRow:
    """The condition-table cell a decision landed in.

    Signs are -1/0/+1 of: hybrid minus the common rate at the
    reflect/transmit crossing, hybrid minus reflective at split 1, and hybrid
    minus transmissive at split S-1. `advisory` is set when the table's
    assumptions do not hold for this config and the brute-force verdict
    should be trusted instead.
    """

    sign_at_crossover: int
    sign_at_low_edge: int
    sign_at_high_edge: int
    position: str
    advisory: bool
    note: str = ""


@dataclass(frozen=True)
class SelectionDecision:
    """Verdicts of the condition table and of the direct comparison.

    `optimal` is the table verdict; `brute_force_optimal` is the argmax of
    the three closed forms at the integer split (ties broken reflective,
    then transmissive, then hybrid)."""

    optimal: RisType
    table_row: TableRow
    thresholds: SelectionThresholds
    regime: RegimeReport
    brute_force_optimal: RisType
    agrees: bool


def brute_force_optimal(cfg: ScenarioConfig, budget: LinkBudget):
    """Directly compare the three closed forms at the configured split.

    Returns (winner, rates) with rates keyed by RisType. Ties prefer
    reflective over transmissive over hybrid.
    """
    c_reflect, c_transmit, c_hybrid = _curves(cfg, budget)
    x = float(cfg.users_transmission)
    rates = {
        RisType.REFLECTIVE: c_reflect(x),
        RisType.TRANSMISSIVE: c_transmit(x),
        RisType.HYBRID: c_hybrid(x),
    }
    winner = RisType.REFLECTIVE
    for candidate in (RisType.TRANSMISSIVE, RisType.HYBRID):
        if rates[candidate] > rates[winner]:
            winner = candidate
    return winner, rates


def _sign(x: float) -> int:
    return (x > 0.0) - (x < 0.0)


def decide_type(cfg: ScenarioConfig, budget: LinkBudget | None = None) -> SelectionDecision:
    """Pick the best surface type for a deployment.

    Boundary splits (no users on one side) go straight to the single-zone
    type. Otherwise the condition table is evaluated from the crossing
    thresholds and compared against the brute-force argmax. A failing regime
    report (or a missing reflect/transmit crossing) marks the table verdict
    advisory; monotonicity violations raise RegimeViolationError from the
    threshold search.
    """
    if budget is None:
        budget = link_budget(cfg)
    regime = validate_approximation_regime(cfg)
    brute, _rates = brute_force_optimal(cfg, budget)
    s = cfg.users_total
    s_t = cfg.users_transmission

    if s_t == 0 or s_t == s:
        empty = SelectionThresholds(None, None, None, None)
        verdict = RisType.REFLECTIVE if s_t == 0 else RisType.TRANSMISSIVE
        side = "transmission" if s_t == 0 else "reflection"
        row = TableRow(0, 0, 0, position=f"boundary: empty {side} zone",
                       advisory=False, note="single-zone split decided directly")
        return SelectionDecision(optimal=verdict, table_row=row, thresholds=empty,
                                 regime=regime, brute_force_optimal=brute,
                                 agrees=verdict is brute)

    thresholds = find_thresholds(cfg, budget)
    c_reflect, c_transmit, c_hybrid = _curves(cfg, budget)
    advisory = not regime.ok
    note = "" if regime.ok else "regime report failed; trust the brute-force verdict"

    split_rt = thresholds.split_reflect_transmit
    if split_rt is None:
        # The two single-zone curves never meet, so the table's case split
        # does not apply; fall back to the direct comparison.
        row = TableRow(0, 0, 0, position="not applicable", advisory=True,
                       note="reflective and transmissive curves do not cross")
        return SelectionDecision(optimal=brute, table_row=row, thresholds=thresholds,
                                 regime=regime, brute_force_optimal=brute, agrees=True)

    hyb_at_cross = c_hybrid(split_rt) - thresholds.rate_at_equal_split
    hyb_low = c_hybrid(1.0) - c_reflect(1.0)
    hyb_high = c_hybrid(float(s - 1)) - c_transmit(float(s - 1))
    signs = (_sign(hyb_at_cross), _sign(hyb_low), _sign(hyb_high))

    if hyb_at_cross <= 0.0:
        if s_t > split_rt:
            verdict, position = RisType.TRANSMISSIVE, "above reflect/transmit split"
        else:
            verdict, position = RisType.REFLECTIVE, "at or below reflect/transmit split"
    elif hyb_low > 0.0 and hyb_high > 0.0:
        verdict, position = RisType.HYBRID, "every split"
    elif hyb_low > 0.0:
        split_th = thresholds.split_transmit_hybrid
        if split_th is not None and s_t >= split_th:
            verdict, position = RisType.TRANSMISSIVE, "at or above transmit/hybrid split"
        else:
            verdict, position = RisType.HYBRID, "below transmit/hybrid split"
    elif hyb_high > 0.0:
        split_rh = thresholds.split_reflect_hybrid
        if split_rh is not None and s_t <= split_rh:
            verdict, position = RisType.REFLECTIVE, "at or below reflect/hybrid split"
        else:
            verdict, position = RisType.HYBRID, "above reflect/hybrid split"
    else:
        split_rh = thresholds.split_reflect_hybrid
        split_th = thresholds.split_transmit_hybrid
        if split_rh is not None and s_t <= split_rh:
            verdict, position = RisType.REFLECTIVE, "at or below reflect/hybrid split"
        elif split_th is not None and s_t >= split_th:
            verdict, position = RisType.TRANSMISSIVE, "at or above transmit/hybrid split"
        else:
            verdict, position = RisType.HYBRID, "between the hybrid splits"

    row = TableRow(*signs, position=position, advisory=advisory, note=note)
    return SelectionDecision(optimal=verdict, table_row=row, thresholds=thresholds,
                             regime=regime, brute_force_optimal=brute,
                             agrees=verdict is brute)


# --- monotonicity certificate -------------------------------------------------------

@dataclass(frozen=True)
class MonotonicityCertificate:
    """Evidence that the single-zone rate curves are strictly monotone."""

    grid: np.ndarray
    transmit_slope: np.ndarray
    reflect_slope: np.ndarray
    max_relative_error: float
    lemma_min: float
    lemma_points: int


def monotonicity_certificate(cfg: ScenarioConfig, budget: LinkBudget,
                             grid_points: int = 41) -> MonotonicityCertificate:
    """Certify the analytic slopes against finite differences.

    Evaluates the analytic slope of both single-zone curves on an interior
    grid of the continuous split, cross-checks each against a central finite
    difference (relative error at most 1e-6 at step 1e-6), and asserts the
    transmissive slope is strictly positive and the reflective strictly
    negative. Also samples f(x) = x (ln x - 1) + 1 over (1, 1e6] and checks
    positivity. Violations raise CertificateError naming the grid point.
    """
    if cfg.users_total < 3:
        raise ValueError("certificate needs at least three users")
    panel = cfg.panel
    eps_r, eps_t = panel.radiation_reflect, panel.radiation_transmit
    big_l = budget.link_constant
    s = float(cfg.users_total)
    c_reflect, c_transmit, _ = _curves(cfg, budget)

    grid = np.linspace(1.0, s - 1.0, grid_points + 2)[1:-1]
    transmit_slope = np.empty_like(grid)
    reflect_slope = np.empty_like(grid)
    worst = 0.0
    for i, x in enumerate(grid):
        ct_slope = transmissive_rate_derivative(x, eps_t, big_l)
        cr_slope = reflective_rate_derivative(x, s, eps_r, big_l)
        fd_ct = (c_transmit(x + FD_STEP) - c_transmit(x - FD_STEP)) / (2.0 * FD_STEP)
        fd_cr = (c_reflect(x + FD_STEP) - c_reflect(x - FD_STEP)) / (2.0 * FD_STEP)
        err_ct = abs(fd_ct - ct_slope) / abs(ct_slope)
        err_cr = abs(fd_cr - cr_slope) / abs(cr_slope)
        worst = max(worst, err_ct, err_cr)
        if err_ct > 1e-6 or err_cr > 1e-6:
            raise CertificateError(
                f"analytic slope disagrees with finite difference at split {x:.6f} "
                f"(errors {err_ct:.3e}, {err_cr:.3e})"
            )
        if ct_slope <= 0.0:
            raise CertificateError(f"transmissive slope not positive at split {x:.6f}")
        if cr_slope >= 0.0:
            raise CertificateError(f"reflective slope not negative at split {x:.6f}")
        transmit_slope[i] = ct_slope
        reflect_slope[i] = cr_slope

    lemma_xs = 1.0 + np.logspace(-9.0, math.log10(1e6 - 1.0), 300)
    lemma_vals = np.array([_f_lemma(float(x)) for x in lemma_xs])
    bad = np.nonzero(lemma_vals <= 0.0)[0]
    if bad.size:
        raise CertificateError(f"lemma positivity fails at x = {lemma_xs[bad[0]]!r}")

    return MonotonicityCertificate(
        grid=grid,
        transmit_slope=transmit_slope,
        reflect_slope=reflect_slope,
        max_relative_error=worst,
        lemma_min=float(lemma_vals.min()),
        lemma_points=len(lemma_xs),
    )


# --- asymptotic diagnostics -----------------------------------------------------------

@dataclass(frozen=True)
class DerivativeDominanceReport:
    """How flat the hybrid rate curve is next to the reflective one."""

    log_pattern_term: float
    mismatch_term: float
    mismatch_reflect: float
    mismatch_transmit: float
    hybrid_slope: float
    reflect_slope: float
    ratio: float
    dominance_floor: float
    dominant: bool


def _hybrid_slope_terms(cfg: ScenarioConfig, budget: LinkBudget):
    """Shared pieces of the hybrid-slope decomposition (unclamped share)."""
    panel = cfg.panel
    eps_r, eps_t = panel.radiation_reflect, panel.radiation_transmit
    big_l = budget.link_constant
    s = float(cfg.users_total)
    s_t = float(cfg.users_transmission)
    s_r = s - s_t
    lam = hybrid_reflect_fraction(s_t, s, eps_r, eps_t, big_l, simplified=True)
    share = (1.0 - s_r * lam) / s_t
    mismatch_reflect = eps_r / eps_t - 1.0
    mismatch_transmit = 1.0 - eps_t / eps_r
    log_term = math.log(eps_t / eps_r) / LN2
    mismatch_term = (s_r / s) * mismatch_reflect / (LN2 * (1.0 + eps_r * lam / (2.0 * big_l))) \
        + (s_t / s) * mismatch_transmit / (1.0 + eps_t * share / (2.0 * big_l))
    return lam, log_term, mismatch_term, mismatch_reflect, mismatch_transmit


def derivative_dominance(cfg: ScenarioConfig, budget: LinkBudget,
                         dominance_floor: float = DOMINANCE_FLOOR_DEFAULT
                         ) -> DerivativeDominanceReport:
    """Compare the reflective and hybrid slopes at the configured split.

    Valid only while the hybrid reflect fraction is strictly inside its
    clamp interval; a clamped share raises ValueError ("decomposition not
    applicable"). The hybrid slope is measured by central differences on the
    exact (clamped) curve; the reflective slope is analytic. `dominant`
    reports whether their magnitude ratio clears `dominance_floor`.
    """
    s = cfg.users_total
    s_t = cfg.users_transmission
    if not 1 <= s_t <= s - 1:
        raise ValueError("both zones must hold at least one user")
    s_r = s - s_t
    panel = cfg.panel
    raw = hybrid_reflect_fraction(float(s_t), float(s), panel.radiation_reflect,
                                  panel.radiation_transmit, budget.link_constant,
                                  simplified=True)
    if not 0.0 < raw < 1.0 / s_r:
        raise ValueError(
            "decomposition not applicable: the hybrid power share is clamped "
            f"(raw value {raw:.6g} outside (0, {1.0 / s_r:.6g}))"
        )
    lam, log_term, mismatch_term, mm_r, mm_t = _hybrid_slope_terms(cfg, budget)
    _, _, c_hybrid = _curves(cfg, budget)
    x = float(s_t)
    hybrid_slope = (c_hybrid(x + FD_STEP) - c_hybrid(x - FD_STEP)) / (2.0 * FD_STEP)
    reflect_slope = reflective_rate_derivative(x, float(s), panel.radiation_reflect,
                                               budget.link_constant)
    ratio = math.inf if hybrid_slope == 0.0 else abs(reflect_slope) / abs(hybrid_slope)
    return DerivativeDominanceReport(
        log_pattern_term=log_term,
        mismatch_term=mismatch_term,
        mismatch_reflect=mm_r,
        mismatch_transmit=mm_t,
        hybrid_slope=hybrid_slope,
        reflect_slope=reflect_slope,
        ratio=ratio,
        dominance_floor=dominance_floor,
        dominant=ratio > dominance_floor,
    )


@dataclass(frozen=True)
class AsymptoticDiagnostics:
    """Element-count threshold for hybrid dominance plus slope diagnostics.

    `element_count_scale` is the link constant stripped of the panel size
    (so it equals link_constant * M N). The hybrid type beats both
    single-zone types whenever the panel size exceeds
    element_count_scale * 2 ** max(reflect_exponent, transmit_exponent).
    `hybrid_vs_transmit_approx` is the high-SNR estimate of the hybrid minus
    transmissive rate gap.
    """

    element_count_scale: float
    reflect_exponent: float
    transmit_exponent: float
    element_count_threshold: float
    log_pattern_term: float
    mismatch_term: float
    mismatch_reflect: float
    mismatch_transmit: float
    hybrid_vs_transmit_approx: float
    element_count: int
    hybrid_favored: bool


def asymptotic_checks(cfg: ScenarioConfig, budget: LinkBudget) -> AsymptoticDiagnostics:
    """Evaluate the large-panel dominance threshold at the configured split."""
    s = cfg.users_total
    s_t = cfg.users_transmission
    if not 1 <= s_t <= s - 1:
        raise ValueError("both zones must hold at least one user")
    s_r = s - s_t
    panel = cfg.panel
    eps_r, eps_t = panel.radiation_reflect, panel.radiation_transmit

    # Size-free link constant, computed from first principles rather than via
    # link_constant * M N so the identity between the two stays testable.
    cos_sq = budget.cos_sq_incidence
    scale = 64.0 * math.pi ** 3 \
        * (cfg.bs_ris_distance * cfg.ris_ue_distance) ** cfg.pathloss_exponent \
        * cfg.noise_variance / (
            cfg.transmit_power * cfg.wavelength ** 2 * cfg.antenna_gain
            * panel.element_width * panel.element_height * panel.element_gain
            * cos_sq * cfg.bs_antennas
        )

    def log2(x):
        return math.log(x) / LN2

    reflect_exp = (s - s_t * log2(eps_r) + s * log2(s) - s_r * log2(s_r)) / s_t
    transmit_exp = (s - s_r * log2(eps_t) + s * log2(s) - s_t * log2(s_t)) / s_r
    threshold = scale * 2.0 ** max(reflect_exp, transmit_exp)

    big_l = budget.link_constant
    approx = (-s + s_r * log2(eps_t) - s * log2(s) + s_t * log2(s_t)
              - s_r * log2(big_l))
    _, log_term, mismatch_term, mm_r, mm_t = _hybrid_slope_terms(cfg, budget)

    mn = panel.element_count
    return AsymptoticDiagnostics(
        element_count_scale=scale,
        reflect_exponent=reflect_exp,
        transmit_exponent=transmit_exp,
        element_count_threshold=threshold,
        log_pattern_term=log_term,
        mismatch_term=mismatch_term,
        mismatch_reflect=mm_r,
        mismatch_transmit=mm_t,
        hybrid_vs_transmit_approx=approx,
        element_count=mn,
        hybrid_favored=mn > threshold,
    )

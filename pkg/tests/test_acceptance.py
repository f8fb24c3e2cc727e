"""Acceptance gate: one test per release criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. The power-sweep dataset is produced twice through the real CLI (same
seed) so the reproducibility criterion exercises the full pipeline.
"""

import time
import warnings
from dataclasses import replace

import numpy as np
import pytest

from conftest import REFERENCE_SCENARIO, make_config, random_config
from ris_select import (
    RisType,
    allocate_power,
    asymptotic_checks,
    brute_force_optimal,
    closed_form_rate,
    decide_type,
    find_thresholds,
    link_budget,
    monotonicity_certificate,
    monte_carlo_capacity,
    upper_bound,
    zone_gain_statistics,
)
from ris_select.cli import main

GRID_SIDES = (50, 100, 150)
GRID_DISTANCES = (50.0, 100.0)


def _report(criterion, detail):
    print(f"\n[acceptance] criterion {criterion}: PASS ({detail})")


@pytest.fixture(scope="module")
def fig2a_runs(tmp_path_factory):
    """Two identical CLI runs of the power-sweep preset, with timings."""
    runs = []
    for tag in ("first", "second"):
        out = tmp_path_factory.mktemp(f"fig2a_{tag}")
        started = time.monotonic()
        rc = main(["--scenario", str(REFERENCE_SCENARIO), "--preset", "fig2a",
                   "--out", str(out), "--seed", "7"])
        elapsed = time.monotonic() - started
        assert rc == 0
        runs.append((out / "fig2a.csv", elapsed))
    return runs


def test_criterion_1_jensen_bound_over_power_sweep(fig2a_runs):
    csv_path, elapsed = fig2a_runs[0]
    rows = [line.split(",") for line in csv_path.read_text().splitlines()[1:]]
    assert len(rows) == 48  # 16 power points x 3 types
    violations = 0
    for row in rows:
        bound, mc_mean, stderr = float(row[3]), float(row[4]), float(row[5])
        if mc_mean > bound + 2.0 * stderr:
            violations += 1
    assert violations == 0
    assert elapsed < 60.0, f"power sweep took {elapsed:.1f}s"
    _report(1, f"48/48 cells bounded, {elapsed:.1f}s")


def test_criterion_2_bound_tightness():
    cfg = make_config()
    budget = link_budget(cfg)
    worst = 0.0
    for index, ris_type in enumerate(RisType):
        alloc = allocate_power(cfg, ris_type, budget)
        report = monte_carlo_capacity(cfg, ris_type, alloc, trials=1000,
                                      base_seed=(101, index))
        gap = (report.upper_bound - report.monte_carlo_mean) / report.upper_bound
        worst = max(worst, gap)
        assert gap <= 0.1, (ris_type, gap)
    _report(2, f"worst relative gap {worst:.4f} <= 0.1 at 1000 trials")


def test_criterion_3_aggregated_gain_statistics():
    cfg = make_config()  # 50 x 50 panel: 2500 elements
    cases = [
        (RisType.REFLECTIVE, True, 1.0),
        (RisType.TRANSMISSIVE, False, 1.0),
        (RisType.HYBRID, True, 0.5),
    ]
    started = time.monotonic()
    for law_index, law in enumerate(("gaussian", "uniform_phase")):
        for case_index, (ris_type, reflection, target) in enumerate(cases):
            stats = zone_gain_statistics(cfg, ris_type, reflection, trials=10_000,
                                         fading=law, seed=(55, law_index, case_index))
            assert stats.expected_variance == pytest.approx(target, rel=1e-12)
            assert abs(stats.variance - target) <= 3.0 * stats.variance_stderr, (
                law, ris_type, stats.variance)
    elapsed = time.monotonic() - started
    assert elapsed < 10.0, f"statistics took {elapsed:.1f}s"
    _report(3, f"6 law/type cells within 3 standard errors, {elapsed:.1f}s")


def test_criterion_4_monotone_single_zone_rates():
    checked = 0
    for side in GRID_SIDES:
        for distance in GRID_DISTANCES:
            base = make_config(rows=side, cols=side, bs_ris_distance=distance,
                               ris_ue_distance=distance)
            budget = link_budget(base)
            transmissive, reflective = [], []
            for split in range(1, 10):
                cfg = replace(base, users_transmission=split)
                transmissive.append(closed_form_rate(cfg, RisType.TRANSMISSIVE, budget))
                reflective.append(closed_form_rate(cfg, RisType.REFLECTIVE, budget))
            assert all(b > a for a, b in zip(transmissive, transmissive[1:]))
            assert all(b < a for a, b in zip(reflective, reflective[1:]))
            cert = monotonicity_certificate(base, budget)
            assert cert.max_relative_error <= 1e-6
            checked += 1
    _report(4, f"{checked} grid configs strictly monotone, derivatives to 1e-6")


def test_criterion_5_distance_regime():
    far = make_config(rows=100, cols=100, bs_ris_distance=200.0,
                      ris_ue_distance=200.0)
    far_budget = link_budget(far)
    for split in range(1, 10):
        _, rates = brute_force_optimal(replace(far, users_transmission=split),
                                       far_budget)
        assert rates[RisType.HYBRID] < max(rates[RisType.REFLECTIVE],
                                           rates[RisType.TRANSMISSIVE]), split

    near = make_config(rows=100, cols=100, bs_ris_distance=50.0,
                       ris_ue_distance=50.0)
    near_budget = link_budget(near)
    hybrid_wins = 0
    for split in range(1, 10):
        _, rates = brute_force_optimal(replace(near, users_transmission=split),
                                       near_budget)
        if rates[RisType.HYBRID] > max(rates[RisType.REFLECTIVE],
                                       rates[RisType.TRANSMISSIVE]):
            hybrid_wins += 1
    assert hybrid_wins >= 1
    _report(5, f"far: hybrid inferior at all 9 splits; "
               f"near: hybrid wins {hybrid_wins} splits")


def test_criterion_6_element_count_threshold():
    base = make_config(rows=150, cols=150, bs_ris_distance=100.0,
                       ris_ue_distance=100.0)
    budget = link_budget(base)
    panel_size = base.panel.element_count
    counterexamples = []
    conservative = []
    predicted = 0
    for split in range(1, 10):
        cfg = replace(base, users_transmission=split)
        diag = asymptotic_checks(cfg, budget)
        _, rates = brute_force_optimal(cfg, budget)
        hybrid_wins = rates[RisType.HYBRID] > max(rates[RisType.REFLECTIVE],
                                                  rates[RisType.TRANSMISSIVE])
        if panel_size > diag.element_count_threshold:
            predicted += 1
            if not hybrid_wins:
                counterexamples.append(split)
        elif hybrid_wins:
            # threshold was only necessary here, not tight; report, don't fail
            conservative.append(split)
    assert not counterexamples, counterexamples
    assert predicted > 0
    if conservative:
        print(f"\n[acceptance] criterion 6 note: threshold conservative at "
              f"splits {conservative}")
    _report(6, f"{predicted} predicted cells all correct, "
               f"{len(conservative)} conservative cells")


def test_criterion_7_allocation_identity_randomized():
    rng = np.random.default_rng(20240809)
    clamp_low = clamp_high = 0
    checked = 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # empty-zone allocations occur by design
        configs = [random_config(rng) for _ in range(998)]
        # engineered extremes so both clamp sides are exercised by construction
        configs.append(make_config(
            radiation_reflect=0.02, radiation_transmit=1.0, rows=2, cols=2,
            bs_antennas=1, bs_ris_distance=300.0, ris_ue_distance=300.0,
            transmit_power=1e-2, noise_variance=1e-11))
        configs.append(make_config(
            radiation_reflect=1.0, radiation_transmit=0.02,
            users_transmission=9, bs_ris_distance=200.0, ris_ue_distance=200.0))
        for cfg in configs:
            budget = link_budget(cfg)
            for ris_type in RisType:
                alloc = allocate_power(cfg, ris_type, budget)
                bound = upper_bound(cfg, ris_type, alloc, budget)
                closed = closed_form_rate(cfg, ris_type, budget)
                assert abs(bound - closed) <= 1e-10 * max(abs(closed), 1e-30)
                checked += 1
            hybrid = allocate_power(cfg, RisType.HYBRID, budget)
            if cfg.users_reflection and hybrid.reflect_fraction == 0.0:
                clamp_low += 1
            if cfg.users_reflection and cfg.users_transmission \
                    and hybrid.reflect_fraction == 1.0 / cfg.users_reflection:
                clamp_high += 1
    assert clamp_low >= 1 and clamp_high >= 1, (clamp_low, clamp_high)
    _report(7, f"{checked} identities at 1e-10; clamp hits low={clamp_low} "
               f"high={clamp_high}")


def test_criterion_8_decision_table_agreement():
    cells = valid = agreements = 0
    disagreements = []
    for side in GRID_SIDES:
        for distance in GRID_DISTANCES:
            base = make_config(rows=side, cols=side, bs_ris_distance=distance,
                               ris_ue_distance=distance)
            for split in range(1, 10):
                cfg = replace(base, users_transmission=split)
                decision = decide_type(cfg)
                cells += 1
                if not decision.regime.ok:
                    continue
                valid += 1
                if decision.agrees:
                    agreements += 1
                else:
                    disagreements.append((side, distance, split, decision))
    assert cells == 54
    assert valid > 0
    assert agreements / valid >= 0.95, f"{agreements}/{valid}"
    for side, distance, split, decision in disagreements:
        th = decision.thresholds
        nearest = min(abs(split - t) for t in (th.split_reflect_transmit,
                                               th.split_reflect_hybrid,
                                               th.split_transmit_hybrid)
                      if t is not None)
        assert nearest <= 1.0, (side, distance, split)
    _report(8, f"{agreements}/{valid} regime-valid cells agree "
               f"({len(disagreements)} near-threshold disagreements)")


def test_criterion_9_bit_identical_sweeps(fig2a_runs):
    (first, _), (second, _) = fig2a_runs
    assert first.read_bytes() == second.read_bytes()
    _report(9, "two seeded power sweeps byte-identical")

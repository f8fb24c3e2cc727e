"""Link budget and channel sampling: formulas, statistics, determinism."""

import math

import numpy as np
import pytest

from conftest import make_config
from ris_select import (
    DegenerateGeometryError,
    FADING_LAWS,
    RisType,
    aggregated_gain_statistics,
    config_digest,
    dump_channel,
    link_budget,
    prepare_sampler,
    sample_channel,
    zone_gain_statistics,
)
from ris_select.channel import gaussian_fading, resolve_fading, rng_for_seed


def test_link_budget_reference_value():
    cfg = make_config()
    budget = link_budget(cfg)
    # independent evaluation of the full expression
    p_t = 10.0 ** 1.3
    sigma_sq = 10.0 ** -12.6
    cos_sq = (50.0 ** 2 - 15.0 ** 2) / 50.0 ** 2
    expected = (64.0 * math.pi ** 3 * (50.0 * 50.0) ** 2 * sigma_sq
                / (p_t * 0.1 ** 2 * 1.0 * 0.02 * 0.02 * 1.0 * cos_sq * 12 * 2500))
    assert budget.link_constant == pytest.approx(expected, rel=1e-12)
    assert budget.link_constant == pytest.approx(1.430e-3, rel=1e-3)
    assert budget.cos_sq_incidence == pytest.approx(0.91, abs=1e-15)


def test_link_budget_identity_both_zones():
    for overrides in (
        {},
        {"radiation_transmit": 0.3, "pathloss_exponent": 2.7},
        {"bs_ris_distance": 120.0, "ris_ue_distance": 35.0, "wavelength": 0.05},
        {"rows": 7, "cols": 13, "bs_antennas": 5, "antenna_gain": 2.5},
    ):
        cfg = make_config(**overrides)
        budget = link_budget(cfg)
        mn = cfg.panel.element_count
        for beta, eps in ((budget.avg_pathloss_reflect, cfg.panel.radiation_reflect),
                          (budget.avg_pathloss_transmit, cfg.panel.radiation_transmit)):
            lhs = budget.link_constant * beta * cfg.transmit_power * cfg.bs_antennas * mn
            assert lhs == pytest.approx(cfg.noise_variance * eps, rel=1e-12)


def test_pathloss_ratio_is_radiation_ratio():
    cfg = make_config(radiation_reflect=0.8, radiation_transmit=0.3)
    budget = link_budget(cfg)
    assert budget.avg_pathloss_reflect / budget.avg_pathloss_transmit \
        == pytest.approx(0.8 / 0.3, rel=1e-14)


def test_equal_radiation_equal_pathloss():
    budget = link_budget(make_config(radiation_transmit=1.0))
    assert budget.avg_pathloss_reflect == budget.avg_pathloss_transmit


def test_distance_doubling_scales_link_constant_sixteenfold():
    # equal heights so the incidence factor stays fixed at 1
    near = link_budget(make_config(bs_height=20.0, ris_height=20.0))
    far = link_budget(make_config(bs_height=20.0, ris_height=20.0,
                                  bs_ris_distance=100.0, ris_ue_distance=100.0))
    assert far.link_constant == pytest.approx(16.0 * near.link_constant, rel=1e-12)


def test_grazing_incidence_raises():
    cfg = make_config(bs_ris_distance=15.0, bs_height=30.0, ris_height=15.0)
    with pytest.raises(DegenerateGeometryError):
        link_budget(cfg)


def test_reflective_type_zeroes_transmission_rows():
    cfg = make_config(rows=4, cols=4, users_total=5, users_transmission=2)
    draw = sample_channel(cfg, RisType.REFLECTIVE, seed=1)
    assert np.all(draw.entries[cfg.users_reflection:, :] == 0.0)
    assert np.all(draw.entries[: cfg.users_reflection, :] != 0.0)


def test_single_element_reduction():
    # one element, flat phases: entry = sqrt(beta_zone) * g / sqrt(2)
    cfg = make_config(rows=1, cols=1, users_total=2, users_transmission=1,
                      bs_antennas=3)
    seed = 99
    draw = sample_channel(cfg, RisType.HYBRID, seed=seed)
    budget = link_budget(cfg)
    g = gaussian_fading(rng_for_seed(seed), (2, 3, 1))[:, :, 0]
    amp = np.array([math.sqrt(budget.avg_pathloss_reflect),
                    math.sqrt(budget.avg_pathloss_transmit)])
    expected = g * math.sqrt(0.5) * amp[:, None]
    np.testing.assert_allclose(draw.entries, expected, rtol=1e-14)


def test_channel_matrix_shape_and_finiteness():
    cfg = make_config(rows=5, cols=3, users_total=6, users_transmission=2,
                      bs_antennas=4)
    for law in sorted(FADING_LAWS):
        draw = sample_channel(cfg, RisType.HYBRID, seed=8, fading=law)
        assert draw.entries.shape == (6, 4)
        assert np.all(np.isfinite(draw.entries))
        assert draw.ris_type is RisType.HYBRID
        assert draw.seed == 8


def test_sampling_is_bit_deterministic():
    cfg = make_config(rows=6, cols=6)
    a = sample_channel(cfg, RisType.HYBRID, seed=1234)
    b = sample_channel(cfg, RisType.HYBRID, seed=1234)
    c = sample_channel(cfg, RisType.HYBRID, seed=1235)
    assert np.array_equal(a.entries, b.entries)
    assert not np.array_equal(a.entries, c.entries)


def test_tuple_seeds_give_distinct_streams():
    cfg = make_config(rows=6, cols=6)
    a = sample_channel(cfg, RisType.HYBRID, seed=(7, 0))
    b = sample_channel(cfg, RisType.HYBRID, seed=(7, 1))
    assert not np.array_equal(a.entries, b.entries)


def test_zero_mean_and_variance_law():
    cfg = make_config(rows=20, cols=20)
    budget = link_budget(cfg)
    mn = cfg.panel.element_count
    trials = 2500
    draw = prepare_sampler(cfg, RisType.HYBRID)
    entries = np.stack([draw((5, t)) for t in range(trials)])

    mask = np.zeros(cfg.users_total, bool)
    mask[: cfg.users_reflection] = True
    beta = np.where(mask, budget.avg_pathloss_reflect, budget.avg_pathloss_transmit)
    target = beta * mn * 0.5  # hybrid squared amplitude is 1/2

    emp_mean = entries.mean(axis=0)
    bound = (4.0 / math.sqrt(trials)) * np.sqrt(target)
    assert np.all(np.abs(emp_mean) <= bound[:, None])

    power = np.abs(entries) ** 2
    emp_var = power.mean(axis=0)
    stderr = power.std(axis=0, ddof=1) / math.sqrt(trials)
    assert np.all(np.abs(emp_var - target[:, None]) <= 3.0 * stderr)


def test_hybrid_energy_split_conserved():
    cfg = make_config(rows=20, cols=20)
    budget = link_budget(cfg)
    mn = cfg.panel.element_count
    trials = 2500
    draw = prepare_sampler(cfg, RisType.HYBRID)
    entries = np.stack([draw((6, t)) for t in range(trials)])
    s_r = cfg.users_reflection

    reflect = (np.abs(entries[:, :s_r, :]) ** 2 / budget.avg_pathloss_reflect).ravel()
    transmit = (np.abs(entries[:, s_r:, :]) ** 2 / budget.avg_pathloss_transmit).ravel()
    total = reflect.mean() + transmit.mean()
    stderr = math.hypot(reflect.std(ddof=1) / math.sqrt(reflect.size),
                        transmit.std(ddof=1) / math.sqrt(transmit.size))
    assert abs(total - mn) <= 4.0 * stderr


def test_magnitude_distribution_ignores_phase_grid():
    # deterministic two-sample z test at the 1% level on mean squared gains
    rng = np.random.default_rng(2024)
    grid = rng.uniform(0.0, 2.0 * np.pi, size=(10, 10))
    cfg_flat = make_config(rows=10, cols=10)
    cfg_twisted = make_config(rows=10, cols=10, phase_reflect=grid,
                              phase_transmit=grid[::-1])
    trials = 4000

    def mean_power(cfg, tag):
        draw = prepare_sampler(cfg, RisType.HYBRID)
        samples = np.stack([draw((tag, t)) for t in range(trials)])
        return np.abs(samples) ** 2

    power_a = mean_power(cfg_flat, 1)
    power_b = mean_power(cfg_twisted, 2)
    za = power_a.reshape(trials, -1).mean(axis=1)
    zb = power_b.reshape(trials, -1).mean(axis=1)
    diff = za.mean() - zb.mean()
    stderr = math.hypot(za.std(ddof=1) / math.sqrt(trials),
                        zb.std(ddof=1) / math.sqrt(trials))
    assert abs(diff) <= 2.576 * stderr


@pytest.mark.parametrize("law", sorted(FADING_LAWS))
def test_aggregated_variance_matches_amplitude(law):
    cfg = make_config(rows=8, cols=8)
    report = aggregated_gain_statistics(cfg, RisType.HYBRID, trials=4000,
                                        fading=law, seed=11)
    for stats in (report.reflect, report.transmit):
        assert stats.expected_variance == pytest.approx(0.5, rel=1e-12)
        assert abs(stats.variance - stats.expected_variance) <= 3.0 * stats.variance_stderr
        assert abs(stats.mean) <= 4.0 * math.sqrt(stats.expected_variance / stats.trials)


def test_aggregated_gain_normality_for_large_panels():
    cfg = make_config(rows=50, cols=50)
    report = aggregated_gain_statistics(cfg, RisType.TRANSMISSIVE, trials=3000,
                                        fading="uniform_phase", seed=4)
    assert abs(report.transmit.kurtosis_real) < 0.25
    assert abs(report.transmit.kurtosis_imag) < 0.25
    # the dead zone of a single-function surface carries no energy at all
    assert report.reflect.variance == 0.0


def test_single_element_keeps_fading_law_shape():
    cfg = make_config(rows=1, cols=1)
    stats = zone_gain_statistics(cfg, RisType.REFLECTIVE, True, trials=4000,
                                 fading="uniform_phase", seed=12)
    # unit-modulus law: cos(theta) has excess kurtosis -1.5, nothing like a normal
    assert stats.variance == pytest.approx(1.0, abs=0.05)
    assert stats.kurtosis_real < -1.0


def test_statistics_require_enough_trials():
    with pytest.raises(ValueError):
        aggregated_gain_statistics(make_config(rows=2, cols=2), RisType.HYBRID, 99)


def test_unknown_fading_law_rejected():
    with pytest.raises(ValueError, match="unknown fading law"):
        resolve_fading("rayleigh_of_unusual_size")


def test_fading_laws_are_unit_variance():
    rng = rng_for_seed(5)
    for name, law in FADING_LAWS.items():
        batch = law(rng, (20000,))
        assert abs(batch.mean()) < 0.02, name
        assert np.mean(np.abs(batch) ** 2) == pytest.approx(1.0, abs=0.03), name


def test_sample_warns_when_no_user_is_served():
    cfg = make_config(users_total=4, users_transmission=4, rows=2, cols=2)
    with pytest.warns(UserWarning, match="no user receives power"):
        draw = sample_channel(cfg, RisType.REFLECTIVE, seed=0)
    assert np.all(draw.entries == 0.0)
    cfg = make_config(users_total=4, users_transmission=0, rows=2, cols=2)
    with pytest.warns(UserWarning, match="no user receives power"):
        sample_channel(cfg, RisType.TRANSMISSIVE, seed=0)


def test_dump_channel_format(tmp_path):
    cfg = make_config(rows=3, cols=3, users_total=4, users_transmission=2)
    draw = sample_channel(cfg, RisType.HYBRID, seed=77)
    path = tmp_path / "draw.txt"
    dump_channel(draw, cfg, path)

    lines = path.read_text().splitlines()
    header = lines[0].split()
    assert header[:2] == ["#", "scenario"]
    assert header[2] == config_digest(cfg)
    assert "77" in lines[0]
    assert lines[1] == f"# rows {cfg.users_total} cols {cfg.bs_antennas}"
    values = np.array([[float(p) for p in line.split()] for line in lines[2:]])
    rebuilt = (values[:, 0] + 1j * values[:, 1]).reshape(draw.entries.shape)
    np.testing.assert_allclose(rebuilt, draw.entries, rtol=1e-15)

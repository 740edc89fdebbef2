"""Synthetic series and sweep generation against analytic oracles."""

import numpy as np
import pytest

from adssm import (BandRange, EmitterSpec, ExpModelParams, InputError,
                   LogisticModelParams, ScenarioError, ScenarioSpec, SweepConfig,
                   ascent_trajectory, band_average_power, extract_band_psd,
                   gen_metric_series, gen_sweep_dataset, load_scenario,
                   occupancy_threshold, resolve_band, save_scenario, sparsity,
                   spectral_entropy)

CENTERS = 5.0 + 10.0 * np.arange(15)
SWEEP = SweepConfig(f_start=100.0, f_stop=131.0, step=4.0, sample_rate=8.0,
                    fft_size=8, edge_trim=2, samples_per_capture=64)
BAND = BandRange(name="b", f_low_hz=110.0, f_high_hz=120.0)
ALWAYS_ON = dict(activation_h50_m=-1e9, activation_k=1.0)


def make_scenario(emitters, seed=7, noise_averages=100, n_snapshots=15):
    traj = tuple((float(10 * i), float(5 + 10 * i)) for i in range(n_snapshots))
    return ScenarioSpec(
        name="t", seed=seed, sweep=SWEEP, bands=(BAND,), trajectory=traj,
        emitters={"b": tuple(emitters)} if emitters else {},
        noise_floor_db={}, default_noise_floor_db=-100.0,
        noise_averages=noise_averages, planted={},
    )


def test_metric_series_exact_without_noise():
    plant = ExpModelParams(-20.0, -60.0, 30.0)
    series = gen_metric_series(plant, CENTERS)
    model = plant.x_inf - (plant.x_inf - plant.x_zero) * np.exp(-CENTERS / plant.tau)
    assert np.array_equal(series.means, model)
    assert np.all(np.array([b.std for b in series.bins]) == 0.0)
    assert series.metric == "power"


def test_metric_series_noise_is_seeded():
    plant = ExpModelParams(-20.0, -60.0, 30.0)
    a = gen_metric_series(plant, CENTERS, noise_sigma=0.5, seed=3)
    b = gen_metric_series(plant, CENTERS, noise_sigma=0.5, seed=3)
    c = gen_metric_series(plant, CENTERS, noise_sigma=0.5, seed=4)
    assert np.array_equal(a.means, b.means)
    assert not np.array_equal(a.means, c.means)


def test_metric_series_logistic_clipped_to_unit_interval():
    plant = LogisticModelParams(k=0.15, h_s=35.0)
    for seed in range(10):
        series = gen_metric_series(plant, CENTERS, noise_sigma=0.5, seed=seed)
        assert series.metric == "sparsity"
        assert np.all(series.means >= 0.0) and np.all(series.means <= 1.0)


def test_metric_series_center_validation():
    plant = ExpModelParams(-20.0, -60.0, 30.0)
    with pytest.raises(InputError):
        gen_metric_series(plant, [10.0, 5.0])
    with pytest.raises(InputError):
        gen_metric_series(plant, [-5.0, 10.0])
    with pytest.raises(InputError):
        gen_metric_series(plant, [])


def test_ascent_trajectory():
    traj = ascent_trajectory(h_max=150.0, rate=5.0, dwell=2.0)
    times = [t for t, _ in traj]
    heights = [h for _, h in traj]
    assert times[0] == 0.0 and heights[0] == 0.0
    assert heights[-1] == 150.0
    assert np.all(np.diff(times) > 0)
    assert np.allclose(np.diff(heights), 10.0)
    with pytest.raises(ScenarioError):
        ascent_trajectory(h_max=100.0, rate=0.0, dwell=1.0)


def test_scenario_round_trip(tmp_path):
    em = EmitterSpec(bins=(0, 1, 2), peak_power_db=-25.0, excess_loss_db=35.0,
                     clutter_height_m=28.0, activation_h50_m=40.0, activation_k=0.2,
                     jitter_sigma_db=1.5)
    spec = make_scenario([em])
    spec = ScenarioSpec(
        **{**{f: getattr(spec, f) for f in spec.__dataclass_fields__},
           "planted": {"b": {"power": ExpModelParams(-25.0, -60.0, 28.0)}}})
    clone = ScenarioSpec.from_dict(spec.to_dict())
    assert clone == spec
    path = tmp_path / "scenario.json"
    save_scenario(path, spec)
    assert load_scenario(path) == spec


def test_sweep_dataset_is_deterministic():
    spec = make_scenario([EmitterSpec(bins="all", peak_power_db=-20.0,
                                      excess_loss_db=40.0, clutter_height_m=30.0,
                                      jitter_sigma_db=2.0, **ALWAYS_ON)])
    _, rec_a, truth_a = gen_sweep_dataset(spec)
    _, rec_b, truth_b = gen_sweep_dataset(spec)
    assert truth_a == truth_b
    for a, b in zip(rec_a, rec_b):
        assert np.array_equal(a.psd, b.psd)
    spec2 = make_scenario([EmitterSpec(bins="all", peak_power_db=-20.0,
                                       excess_loss_db=40.0, clutter_height_m=30.0,
                                       jitter_sigma_db=2.0, **ALWAYS_ON)], seed=8)
    _, rec_c, _ = gen_sweep_dataset(spec2)
    assert not np.array_equal(rec_a[0].psd, rec_c[0].psd)


def test_always_on_emitter_band_power_tracks_planted_curve():
    spec = make_scenario([EmitterSpec(bins="all", peak_power_db=-20.0,
                                      excess_loss_db=40.0, clutter_height_m=30.0,
                                      **ALWAYS_ON)])
    grid, records, _ = gen_sweep_dataset(spec)
    band = resolve_band(grid, "b", BAND.f_low_hz, BAND.f_high_hz)
    assert band.n_bins == 11
    for rec in records:
        level = -20.0 - 40.0 * np.exp(-rec.altitude / 30.0)
        got = band_average_power(extract_band_psd(rec, band))
        assert np.isclose(got, level, atol=1e-10)
        # uniform occupancy makes the normalized entropy exactly 1
        bits, norm = spectral_entropy(extract_band_psd(rec, band))
        assert np.isclose(norm, 1.0, atol=1e-12)
        assert np.isclose(bits, np.log2(11), atol=1e-9)


def test_partial_band_emitter_touches_only_its_bins():
    spec = make_scenario([EmitterSpec(bins=(2, 3, 4), peak_power_db=-30.0,
                                      excess_loss_db=20.0, clutter_height_m=25.0,
                                      **ALWAYS_ON)])
    grid, records, _ = gen_sweep_dataset(spec)
    band = resolve_band(grid, "b", BAND.f_low_hz, BAND.f_high_hz)
    rec = records[-1]
    psd = extract_band_psd(rec, band)
    level = -30.0 - 20.0 * np.exp(-rec.altitude / 25.0)
    assert np.allclose(10 * np.log10(psd[2:5]), level)
    others = np.delete(psd, [2, 3, 4])
    assert np.all(10 * np.log10(others) < -80.0)   # noise around -100 dB


def test_zero_emitter_false_alarms_match_gamma_tail():
    scipy_stats = pytest.importorskip("scipy.stats")
    for navg, bound in ((100, 1e-3), (1, None)):
        spec = make_scenario([], noise_averages=navg, n_snapshots=40)
        grid, records, _ = gen_sweep_dataset(spec)
        band = resolve_band(grid, "b", BAND.f_low_hz, BAND.f_high_hz)
        pool = np.concatenate([extract_band_psd(r, band) for r in records])
        gamma_db = occupancy_threshold(pool)
        rate = float(np.mean([sparsity(extract_band_psd(r, band), gamma_db)
                              for r in records]))
        mu = 10.0 ** (-100.0 / 10.0)
        thr = 10.0 ** (gamma_db / 10.0)
        expect = float(scipy_stats.gamma.sf(thr * navg / mu, navg))
        if bound is not None:
            assert rate < bound and expect < bound
        else:
            # raw exponential noise: most bins clear floor + 3 dB
            assert abs(rate - expect) < 0.05
            assert 0.85 < rate < 0.95


def test_staggered_activation_probability():
    em = EmitterSpec(bins="all", peak_power_db=-20.0, excess_loss_db=0.0,
                     clutter_height_m=30.0, activation_h50_m=75.0, activation_k=0.15)
    # many snapshots at one altitude: empirical activation rate ~ logistic
    traj = tuple((float(i), 75.0) for i in range(400))
    spec = ScenarioSpec(name="t", seed=5, sweep=SWEEP, bands=(BAND,),
                        trajectory=traj, emitters={"b": (em,)}, noise_floor_db={},
                        default_noise_floor_db=-100.0, noise_averages=100, planted={})
    grid, records, _ = gen_sweep_dataset(spec)
    band = resolve_band(grid, "b", BAND.f_low_hz, BAND.f_high_hz)
    on = [extract_band_psd(r, band)[0] > 1e-5 for r in records]  # -20 dB vs noise
    assert abs(np.mean(on) - 0.5) < 0.08


def test_truth_sidecar_contents():
    ems = [
        EmitterSpec(bins=(0, 1, 2), peak_power_db=-20.0, excess_loss_db=40.0,
                    clutter_height_m=30.0, activation_h50_m=20.0, activation_k=0.3),
        EmitterSpec(bins="all", peak_power_db=-25.0, excess_loss_db=40.0,
                    clutter_height_m=30.0, activation_h50_m=80.0, activation_k=0.3),
    ]
    spec = make_scenario(ems)
    spec = ScenarioSpec(
        **{**{f: getattr(spec, f) for f in spec.__dataclass_fields__},
           "planted": {"b": {"power": ExpModelParams(-20.0, -60.0, 30.0)}}})
    _, records, truth = gen_sweep_dataset(spec)
    assert truth["n_snapshots"] == len(records) == 15
    assert truth["altitude_max_m"] == 145.0
    assert truth["bands"][0]["n_bins"] == 11
    assert truth["planted"]["b"]["power"]["tau"] == 30.0
    derived = truth["derived"]["b"]
    # 11 of 14 weighted bins belong to the 80 m emitter
    assert derived["activation_h50_weighted_median_m"] == 80.0
    assert np.isclose(derived["occupied_bin_fraction"], 14.0 / 11.0)


def test_emitter_bins_must_fit_band():
    spec = make_scenario([EmitterSpec(bins=(0, 11), peak_power_db=-20.0,
                                      excess_loss_db=40.0, clutter_height_m=30.0,
                                      **ALWAYS_ON)])
    with pytest.raises(ScenarioError):
        gen_sweep_dataset(spec)


def test_emitter_spec_validation():
    with pytest.raises(ScenarioError):
        EmitterSpec(bins="all", peak_power_db=-20.0, excess_loss_db=-1.0,
                    clutter_height_m=30.0, **ALWAYS_ON)
    with pytest.raises(ScenarioError):
        EmitterSpec(bins="all", peak_power_db=-20.0, excess_loss_db=10.0,
                    clutter_height_m=0.0, **ALWAYS_ON)
    with pytest.raises(ScenarioError):
        EmitterSpec(bins="all", peak_power_db=-20.0, excess_loss_db=10.0,
                    clutter_height_m=30.0, activation_h50_m=0.0, activation_k=0.0)

import numpy as np
import pytest
from scipy import stats

from immimo import device, mimo
from immimo.device import DeviceSpec


@pytest.fixture
def luo():
    return device.device_preset("luo2022")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


class TestDeviceSpec:
    def test_presets_exist(self):
        for name in ("zeng2023", "jerry2017", "luo2022"):
            spec = device.device_preset(name)
            assert spec.g_on > spec.g_off > 0

    def test_luo_values(self, luo):
        assert luo.g_on == pytest.approx(27.5e-6)
        assert luo.g_off == pytest.approx(1e-6)
        assert luo.n_p == 150
        assert luo.gamma == pytest.approx(0.0365)
        assert luo.dt_w == pytest.approx(0.63e-9)

    def test_default_preset_is_luo(self):
        assert device.device_preset().n_p == device.device_preset("luo2022").n_p

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            device.device_preset("nope")

    def test_gamma_warning_band(self):
        with pytest.warns(UserWarning):
            DeviceSpec(g_on=2e-6, g_off=1e-6, n_p=10, gamma=0.055, dt_w=1e-9)
        with pytest.raises(ValueError):
            DeviceSpec(g_on=2e-6, g_off=1e-6, n_p=10, gamma=0.07, dt_w=1e-9)

    def test_invalid_ranges(self):
        with pytest.raises(ValueError):
            DeviceSpec(g_on=1e-6, g_off=2e-6, n_p=10, gamma=0.01, dt_w=1e-9)
        with pytest.raises(ValueError):
            DeviceSpec(g_on=2e-6, g_off=1e-6, n_p=0, gamma=0.01, dt_w=1e-9)


class TestMapping:
    def test_luo_mu(self, luo):
        assert device.map_coefficient(luo) == pytest.approx(8.8333e-6, rel=1e-4)

    def test_unit_range(self):
        spec = DeviceSpec(g_on=4.0, g_off=1.0, n_p=10, gamma=0.01, dt_w=1e-9)
        assert device.map_coefficient(spec) == pytest.approx(1.0)

    def test_three_sigma_identity(self, luo):
        mu = device.map_coefficient(luo)
        assert mu * 3 + luo.g_off == pytest.approx(luo.g_on)

    def test_negative_entry(self):
        spec = DeviceSpec(g_on=4e-6, g_off=1e-6, n_p=10, gamma=0.01, dt_w=1e-9)
        (gp, gm), dg = device.target_pair(-2.0, spec)
        assert gp == pytest.approx(1e-6)
        assert gm == pytest.approx(3e-6)
        assert dg == pytest.approx(2e-6)

    def test_zero_entry(self, luo):
        (gp, gm), dg = device.target_pair(0.0, luo)
        assert gp == gm == luo.g_off
        assert dg == 0.0

    def test_full_scale_reaches_g_on(self, luo):
        (gp, _), dg = device.target_pair(3.0, luo)
        assert gp == pytest.approx(luo.g_on)
        assert device.pulse_count(dg, luo) == luo.n_p

    def test_clips_beyond_three(self, luo):
        (gp, _), _ = device.target_pair(5.7, luo)
        assert gp == pytest.approx(luo.g_on)


class TestProgramCell:
    def test_noiseless_is_exact(self, rng):
        spec = DeviceSpec(g_on=4e-6, g_off=1e-6, n_p=30, gamma=0.0, dt_w=1e-9)
        achieved, n = device.program_cell(1.3e-6, spec, rng)
        assert n == 13
        assert achieved == pytest.approx(13 * spec.g_range / 30)

    def test_full_range_pulse_count(self, luo, rng):
        _, n = device.program_cell(luo.g_range, luo, rng)
        assert n == luo.n_p

    def test_out_of_range_target(self, luo, rng):
        with pytest.raises(ValueError):
            device.program_cell(2 * luo.g_range, luo, rng)

    def test_variance_matches_law(self, luo, rng):
        # Var[dh] = 3 gamma^2 N_p |h| for the pulse train
        h = 2.0
        dh = device.simulate_dh_pulse_train(h, luo, rng, trials=100_000)
        expected = 3 * luo.gamma**2 * luo.n_p * h
        assert abs(dh.var() / expected - 1) < 0.05
        # and the mean offset vanishes when |h| N_p / 3 is an integer
        assert abs(dh.mean()) < 3 * dh.std() / np.sqrt(dh.size)


class TestSampleDh:
    def test_zero_entry(self, luo, rng):
        assert device.sample_dh(0.0, luo, rng) == 0.0

    def test_zero_gamma(self, rng):
        spec = DeviceSpec(g_on=4e-6, g_off=1e-6, n_p=30, gamma=0.0, dt_w=1e-9)
        assert device.sample_dh(1.5, spec, rng) == 0.0

    def test_matches_pulse_train_distribution(self, luo, rng):
        # closed form and pulse-train oracle agree (two-sample KS)
        h = 1.5
        fast = np.array([device.sample_dh(h, luo, rng) for _ in range(10_000)])
        oracle = device.simulate_dh_pulse_train(h, luo, rng, trials=10_000)
        _, p_value = stats.ks_2samp(fast, oracle)
        assert p_value > 0.01

    def test_matrix_variant_matches_law(self, luo, rng):
        h = np.full((200, 50), 1.2)
        dh = device.sample_dh_matrix(h, luo, rng)
        expected = 3 * luo.gamma**2 * luo.n_p * 1.2
        assert abs(dh.var() / expected - 1) < 0.05


class TestProgramMatrix:
    def test_zero_matrix(self, luo, rng):
        result = device.program_matrix(np.zeros((4, 6)), luo, rng)
        assert result.pulse_counts.sum() == 0
        assert result.total_latency == 0.0
        assert np.array_equal(result.realized(luo), np.zeros((4, 6)))

    def test_noiseless_quantization_bound(self, rng):
        spec = DeviceSpec(g_on=4e-6, g_off=1e-6, n_p=150, gamma=0.0, dt_w=1e-9)
        h = np.clip(rng.standard_normal((12, 8)), -3, 3)
        result = device.program_matrix(h, spec, rng)
        step_err = spec.g_range / (2 * spec.n_p * device.map_coefficient(spec))
        assert np.abs(result.realized(spec) - h).max() <= step_err + 1e-12

    def test_row_latency_is_max_in_row(self, luo, rng):
        h = np.array([[1.0, -2.0, 3.0]])
        result = device.program_matrix(h, luo, rng)
        expected_counts = [round(luo.n_p / 3), round(2 * luo.n_p / 3), luo.n_p]
        assert result.pulse_counts.tolist() == [expected_counts]
        assert result.latency_per_row[0] == pytest.approx(luo.dt_w * luo.n_p)
        assert result.total_latency == pytest.approx(luo.dt_w * luo.n_p)

    def test_rejects_non_matrix(self, luo, rng):
        with pytest.raises(ValueError):
            device.program_matrix(np.zeros(5), luo, rng)


class TestProgrammingLatency:
    def test_single_pulse_cap(self, rng):
        spec = DeviceSpec(g_on=4e-6, g_off=1e-6, n_p=1, gamma=0.01, dt_w=1e-9)
        cfg = mimo.MimoConfig(n_t=4, n_r=6)
        for _ in range(10):
            t_p = device.total_programming_latency(cfg, spec, rng)
            assert t_p <= 2 * 2 * cfg.n_r * spec.dt_w + 1e-18

    def test_doubling_rows_roughly_doubles(self, luo, rng):
        means = []
        for n_r in (6, 12):
            cfg = mimo.MimoConfig(n_t=4, n_r=n_r)
            means.append(
                np.mean([
                    device.total_programming_latency(cfg, luo, rng)
                    for _ in range(20)
                ])
            )
        assert abs(means[1] / means[0] - 2) < 0.1 * 2

    def test_monotone_in_np_and_nr(self, rng):
        base = dict(g_on=27.5e-6, g_off=1e-6, gamma=0.0365, dt_w=0.63e-9)
        mean_tp = {}
        for n_p in (50, 150):
            for n_r in (4, 8):
                spec = DeviceSpec(n_p=n_p, **base)
                cfg = mimo.MimoConfig(n_t=4, n_r=n_r)
                mean_tp[(n_p, n_r)] = np.mean([
                    device.total_programming_latency(cfg, spec, rng)
                    for _ in range(50)
                ])
        assert mean_tp[(150, 4)] >= mean_tp[(50, 4)]
        assert mean_tp[(150, 8)] >= mean_tp[(50, 8)]
        assert mean_tp[(50, 8)] >= mean_tp[(50, 4)]
        assert mean_tp[(150, 8)] >= mean_tp[(150, 4)]

    @pytest.mark.parametrize("n_t", [4, 16, 64])
    def test_row_latency_bound_contains_simulation(self, luo, rng, n_t):
        # expected per-row latency stays below the closed-form bound
        bound = device.row_latency_bound(n_t, luo)
        cfg = mimo.MimoConfig(n_t=n_t, n_r=n_t)
        rows = []
        for _ in range(30):
            h = mimo.to_real(mimo.generate_channel(cfg, rng))
            rows.extend(device.program_matrix(h, luo, rng).latency_per_row)
        assert np.mean(rows) <= bound

    def test_bound_requires_nt_at_least_two(self, luo):
        with pytest.raises(ValueError):
            device.row_latency_bound(1, luo)


class TestLemma1Law:
    @pytest.mark.parametrize("h", [0.5, 1.0, 2.0, 3.0])
    def test_variance_ratio(self, luo, h):
        rng = np.random.default_rng(int(h * 10))
        dh = device.simulate_dh_pulse_train(h, luo, rng, trials=100_000)
        ratio = dh.var() / (3 * luo.gamma**2 * luo.n_p * h)
        assert 0.95 <= ratio <= 1.05
        assert abs(dh.mean()) <= 3 * dh.std() / np.sqrt(dh.size)

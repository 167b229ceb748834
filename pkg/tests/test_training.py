import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from taylorse.autodiff import ParamStore, Tensor, backward, ops, precision
from taylorse.dsp import ComplexSpectrogram, compress
from taylorse.training import (ConfigError, LossConfig, NumericalError, OptimizerState, PlateauSchedule,
                               TrainConfig, adam_step, compressed_loss, dump_config, load_config, loss,
                               parse_config_text, read_metrics, train)
from taylorse.training.synth import make_recipes, measured_snr, mix_at_snr, recipe_seed, synthesize_mixture


class TestSynthesis:
    def test_zero_db_matches_rms(self, rng):
        clean = rng.normal(size=8000)
        clean *= 0.1 / np.sqrt(np.mean(clean ** 2))
        _, noise = mix_at_snr(clean, rng.normal(size=8000) * 7, 0.0)
        assert np.sqrt(np.mean(noise ** 2)) == pytest.approx(0.1, rel=1e-12)

    def test_infinite_snr_is_clean(self, rng):
        clean = rng.normal(size=100)
        noisy, noise = mix_at_snr(clean, rng.normal(size=100), math.inf)
        np.testing.assert_array_equal(noisy, clean)
        assert not np.any(noise)

    def test_silent_clean_rejected(self, rng):
        with pytest.raises(ValueError, match="silent"):
            mix_at_snr(np.zeros(10), rng.normal(size=10), 0.0)

    def test_measured_snr_over_many_recipes(self):
        worst = 0.0
        for r in make_recipes(1000, 5, length_s=0.2):
            noisy, clean, noise = synthesize_mixture(r)
            np.testing.assert_array_equal(noisy.samples, clean.samples + noise.samples)
            worst = max(worst, abs(measured_snr(clean, noise) - r.snr_db))
        assert worst <= 0.01

    def test_recipes_are_order_independent(self):
        whole = make_recipes(6, 9)
        tail = make_recipes(3, 9, start=3)
        assert whole[3:] == tail
        assert recipe_seed(9, 0) != recipe_seed(10, 0)
        with pytest.raises(ValueError):
            recipe_seed(1, -1)

    def test_lead_in_must_leave_speech(self):
        with pytest.raises(ValueError, match="lead-in"):
            make_recipes(1, 0, length_s=0.05)

    def test_snr_range(self):
        assert all(-5.0 <= r.snr_db <= 0.0 for r in make_recipes(50, 1))


class TestLoss:
    def test_zero_for_equal_and_symmetric(self, rng):
        a = ComplexSpectrogram(rng.normal(size=(3, 5)), rng.normal(size=(3, 5)))
        b = ComplexSpectrogram(rng.normal(size=(3, 5)), rng.normal(size=(3, 5)))
        assert loss(a, a) == 0.0
        assert loss(a, b) == pytest.approx(loss(b, a), rel=1e-12)
        assert loss(a, b) > 0

    def test_hand_computed_2x2(self):
        s = ComplexSpectrogram(np.array([[4.0, 0.0], [0.0, -1.0]]), np.zeros((2, 2)))
        s_hat = ComplexSpectrogram(np.zeros((2, 2)), np.array([[0.0, 9.0], [0.0, 0.0]]))
        # compressed: s -> real [[2, 0], [0, -1]], s_hat -> imag [[0, 3], [0, 0]]
        ri = 0.5 * ((4 + 0 + 0 + 1) / 4 + (0 + 9 + 0 + 0) / 4)
        e = 1e-12
        m = lambda v: math.sqrt(v + e)  # noqa: E731
        mag = ((m(0) - m(4)) ** 2 + (m(9) - m(0)) ** 2 + (m(0) - m(0)) ** 2 + (m(0) - m(1)) ** 2) / 4
        assert loss(s_hat, s) == pytest.approx(0.5 * ri + 0.5 * mag, rel=1e-12)

    def test_tensor_loss_matches_float_loss(self, rng):
        a = ComplexSpectrogram(rng.normal(size=(3, 5)), rng.normal(size=(3, 5)))
        b = ComplexSpectrogram(rng.normal(size=(3, 5)), rng.normal(size=(3, 5)))
        with precision("float64"):
            t = compressed_loss(Tensor(compress(a, 0.5).to_ri()[None]), compress(b, 0.5).to_ri()[None])
        assert float(t.data) == pytest.approx(loss(a, b), rel=1e-12)

    def test_weights_validated(self):
        with pytest.raises(ValueError):
            LossConfig(w_ri=0.7, w_mag=0.7)


def _quadratic_store(p0):
    store = ParamStore()
    store.add("p", np.array(p0, dtype=np.float64))
    return store


def _quadratic_grad(store, a, c):
    store.zero_grad()
    p = store["p"]
    backward(ops.sum_all(ops.mul(Tensor(a), ops.square(ops.sub(p, Tensor(c))))))


class TestAdam:
    def test_first_step_is_lr_sign(self):
        with precision("float64"):
            store = _quadratic_store([1.0, -2.0, 0.5])
            store["p"].grad = np.array([3.0, -0.01, 1e-3])
            state = OptimizerState(lr=1e-2)
            adam_step(store, state)
        np.testing.assert_allclose(store["p"].data - [1.0, -2.0, 0.5], [-1e-2, 1e-2, -1e-2], atol=1e-6)

    def test_zero_gradient_no_change(self):
        with precision("float64"):
            store = _quadratic_store([1.0, 2.0])
            store["p"].grad = np.zeros(2)
            adam_step(store, OptimizerState())
        np.testing.assert_array_equal(store["p"].data, [1.0, 2.0])

    def test_nan_gradient_fails_fast(self):
        store = _quadratic_store([1.0])
        store["p"].grad = np.array([np.nan])
        with pytest.raises(NumericalError):
            adam_step(store, OptimizerState())

    def test_trajectory_matches_scalar_reimplementation(self):
        a, c, p0 = np.array([0.5, 2.0, 1.0]), np.array([1.0, -1.0, 3.0]), [0.0, 0.0, 0.0]
        lr, b1, b2, eps = 0.1, 0.9, 0.999, 1e-8
        with precision("float64"):
            store, state = _quadratic_store(p0), OptimizerState(lr=lr)
            for _ in range(10):
                _quadratic_grad(store, a, c)
                adam_step(store, state)
        ref = []
        for i in range(3):
            p, m, v = p0[i], 0.0, 0.0
            for t in range(1, 11):
                g = 2 * a[i] * (p - c[i])
                m = b1 * m + (1 - b1) * g
                v = b2 * v + (1 - b2) * g * g
                p -= lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
            ref.append(p)
        assert np.abs(store["p"].data - ref).max() <= 1e-7


class TestSchedule:
    def test_halves_after_two_bad_epochs(self):
        state, sched = OptimizerState(lr=1.0), PlateauSchedule()
        halved = [sched.step(v, state) for v in [1.0, 1.1, 1.2]]
        assert halved == [False, False, True] and state.lr == 0.5

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=30))
    def test_lr_nonincreasing(self, vals):
        state, sched = OptimizerState(lr=1.0), PlateauSchedule()
        lrs = []
        for v in vals:
            sched.step(v, state)
            lrs.append(state.lr)
        assert all(x >= y for x, y in zip(lrs, lrs[1:]))

    def test_decreasing_never_changes(self):
        state, sched = OptimizerState(lr=1.0), PlateauSchedule()
        for v in [5, 4, 3, 2, 1]:
            sched.step(v, state)
        assert state.lr == 1.0


class TestConfig:
    def test_parse_and_dump_round_trip(self):
        cfg = parse_config_text("q = 2\nshared = yes  # comment\nunet_depths = 1,0\nlr=1e-3\n")
        assert cfg.q == 2 and cfg.shared and cfg.unet_depths == (1, 0) and cfg.lr == 1e-3
        assert parse_config_text(dump_config(cfg)) == cfg

    def test_errors_name_the_problem(self, tmp_path):
        with pytest.raises(ConfigError, match="bogus"):
            parse_config_text("bogus = 1")
        with pytest.raises(ConfigError, match=":1:"):
            parse_config_text("q = two")
        with pytest.raises(ConfigError, match="nope.cfg"):
            load_config(tmp_path / "nope.cfg")

    def test_model_config_overrides(self):
        mc = TrainConfig(q=1, channels=8, seed=3).model_config()
        assert mc.channels == 8 and mc.q == 1 and mc.seed == 3


def test_short_training_run_writes_outputs(tmp_path):
    cfg = TrainConfig(q=1, epochs=2, n_mix=5, batch=2, length_s=0.3, channels=8, unet_depths=(1, 0),
                      stcm_channels=8, deriv_channels=8)
    result = train(cfg, tmp_path)
    hist = read_metrics(tmp_path / "metrics.csv")
    assert [h[0] for h in hist] == [1, 2]
    assert all(np.isfinite(h[1]) and np.isfinite(h[2]) for h in hist)
    assert (tmp_path / "model.json").is_file() and (tmp_path / "model.bin").is_file()
    assert result.history[0][3] == cfg.lr

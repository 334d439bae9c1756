"""Network construction, forward semantics, training, gradient checks."""

import numpy as np
import pytest

import oracles
from lidarcount.nn.archs import (
    AE_BOTTLENECK,
    AE_DROPOUT,
    AE_INPUT_DIM,
    AE_WIDTHS,
    CNN_INPUT_SHAPE,
    CNN_PARAM_COUNT,
    build_autoencoder,
    build_cnn2d,
    choose_threshold,
    classify_ae,
    classify_cnn,
    reconstruction_error,
)
from lidarcount.nn.model import (
    BN_EPS,
    Model,
    ModelSpec,
    batchnorm,
    conv2d,
    count_params,
    dense,
    dropout,
    flatten,
    forward,
    infer_shapes,
    init_params,
    maxpool,
    relu,
    softmax,
)
from lidarcount.nn.train import TrainConfig, TrainingDivergedError, gradient_check, train


def tiny_softmax_spec():
    return ModelSpec("tiny", (6,), (dense(8), relu(), dropout(0.1), dense(2), softmax()))


class TestArchitectures:
    def test_cnn_parameter_count(self):
        spec = build_cnn2d()
        assert count_params(spec) == 62114 == CNN_PARAM_COUNT
        assert tuple(spec.input_shape) == (18, 18, 6) == CNN_INPUT_SHAPE
        assert spec.layers[-1].kind == "softmax"
        assert infer_shapes(spec)[-1] == (2,)

    def test_autoencoder_widths(self):
        spec = build_autoencoder()
        widths = [l.units for l in spec.layers if l.kind == "dense"]
        assert widths == [104, 72, 124, 8, 76, 84, 76, 94]
        assert tuple(widths) == tuple(AE_WIDTHS)
        assert AE_BOTTLENECK == 8 and AE_INPUT_DIM == 94
        assert tuple(spec.input_shape) == (94,)
        # dropout follows every hidden dense except bottleneck and output
        drops = [l for l in spec.layers if l.kind == "dropout"]
        assert len(drops) == 6
        assert all(l.rate == AE_DROPOUT == 0.1 for l in drops)
        # linear output: the final layer is the 94-unit dense itself
        assert spec.layers[-1].kind == "dense" and spec.layers[-1].units == 94
        assert infer_shapes(spec)[-1] == (94,)

    def test_batchnorm_counts_moving_stats(self):
        spec = ModelSpec("bn", (5,), (batchnorm(),))
        assert count_params(spec) == 4 * 5

    def test_hand_counted_conv_net(self):
        spec = ModelSpec(
            "c", (6, 6, 2),
            (conv2d(3, kernel_size=3, stride=1), batchnorm(), relu(), maxpool(2),
             flatten(), dense(5)),
        )
        assert infer_shapes(spec) == [(4, 4, 3), (4, 4, 3), (4, 4, 3), (2, 2, 3), (12,), (5,)]
        # conv 3*3*2*3+3=57, bn 4*3=12, dense 12*5+5=65
        assert count_params(spec) == 57 + 12 + 65


class TestSpecValidation:
    def test_dense_needs_flat_input(self):
        with pytest.raises(ValueError):
            ModelSpec("bad", (5, 5, 2), (dense(3),))

    def test_conv_stride_must_tile(self):
        with pytest.raises(ValueError):
            ModelSpec("bad", (6, 6, 2), (conv2d(3, kernel_size=3, stride=2),))

    def test_pool_must_divide(self):
        with pytest.raises(ValueError):
            ModelSpec("bad", (5, 5, 2), (maxpool(2),))

    def test_conv_needs_3d_input(self):
        with pytest.raises(ValueError):
            ModelSpec("bad", (10,), (conv2d(3),))


class TestInitParams:
    def test_deterministic_and_shapes(self):
        spec = tiny_softmax_spec()
        a = init_params(spec, 7)
        b = init_params(spec, 7)
        c = init_params(spec, 8)
        for pa, pb in zip(a, b):
            for k in pa:
                np.testing.assert_array_equal(pa[k], pb[k])
        assert any(
            not np.array_equal(pa[k], pc[k]) for pa, pc in zip(a, c) for k in pa
        )
        assert a[0]["w"].shape == (6, 8) and a[0]["b"].shape == (8,)
        np.testing.assert_array_equal(a[0]["b"], 0.0)

    def test_finalize_freezes_arrays(self):
        spec = tiny_softmax_spec()
        mod = Model(spec, init_params(spec, 0)).finalize()
        with pytest.raises(ValueError):
            mod.params[0]["w"][0, 0] = 1.0


class TestForward:
    def test_dense_hand_computed(self):
        spec = ModelSpec("d", (2,), (dense(2),))
        params = [{"w": np.array([[1.0, 2.0], [3.0, 4.0]]), "b": np.array([0.5, -0.5])}]
        mod = Model(spec, params).finalize()
        out = forward(mod, np.array([1.0, 1.0]))
        np.testing.assert_array_equal(out, [1 + 3 + 0.5, 2 + 4 - 0.5])

    def test_relu_and_softmax(self):
        spec = ModelSpec("r", (3,), (relu(), softmax()))
        mod = Model(spec, [{}, {}]).finalize()
        out = forward(mod, np.array([-1.0, 0.0, 1.0]))
        e = np.exp(np.array([0.0, 0.0, 1.0]) - 1.0)
        np.testing.assert_allclose(out, e / e.sum(), atol=1e-15)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)

    def test_maxpool_hand_computed(self):
        spec = ModelSpec("p", (2, 2, 1), (maxpool(2),))
        mod = Model(spec, [{}]).finalize()
        x = np.array([[[1.0], [5.0]], [[3.0], [2.0]]])
        np.testing.assert_array_equal(forward(mod, x), [[[5.0]]])

    def test_conv_hand_computed(self):
        # 2x2 input, 1 channel, one 2x2 filter of ones -> sum of the patch
        spec = ModelSpec("c", (2, 2, 1), (conv2d(1, kernel_size=2, stride=1),))
        params = [{"w": np.ones((2, 2, 1, 1)), "b": np.array([1.0])}]
        mod = Model(spec, params).finalize()
        x = np.arange(4, dtype=np.float64).reshape(2, 2, 1)
        np.testing.assert_array_equal(forward(mod, x), [[[0 + 1 + 2 + 3 + 1.0]]])

    def test_batchnorm_eval_formula(self):
        spec = ModelSpec("b", (3,), (batchnorm(),))
        params = [{
            "gamma": np.array([2.0, 1.0, 0.5]),
            "beta": np.array([1.0, 0.0, -1.0]),
            "moving_mean": np.array([0.5, -0.5, 0.0]),
            "moving_var": np.array([4.0, 1.0, 0.25]),
        }]
        mod = Model(spec, params).finalize()
        x = np.array([[1.0, 0.5, 1.0]])
        want = params[0]["gamma"] * (x - params[0]["moving_mean"]) / np.sqrt(
            params[0]["moving_var"] + BN_EPS
        ) + params[0]["beta"]
        np.testing.assert_allclose(forward(mod, x), want, atol=1e-15)

    def test_dropout_inactive_in_eval(self):
        spec = tiny_softmax_spec()
        mod = Model(spec, init_params(spec, 0)).finalize()
        bare = ModelSpec("t2", (6,), tuple(l for l in spec.layers if l.kind != "dropout"))
        mod2 = Model(bare, [p for l, p in zip(spec.layers, mod.params) if l.kind != "dropout"]).finalize()
        x = np.random.default_rng(2).normal(size=(5, 6))
        np.testing.assert_array_equal(forward(mod, x), forward(mod2, x))

    def test_train_mode_dropout_needs_rng(self):
        spec = tiny_softmax_spec()
        mod = Model(spec, init_params(spec, 0)).finalize()
        x = np.random.default_rng(3).normal(size=(4, 6))
        y_eval = forward(mod, x)
        y_tr, caches = forward(mod, x, mode="train", rng=np.random.default_rng(0))
        assert not np.allclose(y_tr, y_eval)  # some units dropped
        y_none, _ = forward(mod, x, mode="train", rng=None)
        np.testing.assert_array_equal(y_none, y_eval)

    def test_single_sample_unbatched(self):
        spec = tiny_softmax_spec()
        mod = Model(spec, init_params(spec, 1)).finalize()
        x = np.random.default_rng(4).normal(size=(3, 6))
        batch = forward(mod, x)
        one = forward(mod, x[0])
        assert one.shape == (2,)
        np.testing.assert_array_equal(one, batch[0])

    def test_shape_mismatch_rejected(self):
        spec = tiny_softmax_spec()
        mod = Model(spec, init_params(spec, 1)).finalize()
        with pytest.raises(ValueError, match="input shape"):
            forward(mod, np.zeros((4, 7)))
        with pytest.raises(ValueError, match="mode"):
            forward(mod, np.zeros(6), mode="predict")


class TestGradientCheck:
    def test_dense_net(self):
        spec = tiny_softmax_spec()
        assert gradient_check(spec, seed=0) < 1e-4

    def test_conv_net(self):
        spec = ModelSpec(
            "gc", (5, 5, 2),
            (conv2d(3, kernel_size=2, stride=1), relu(), maxpool(2),
             flatten(), dense(3), softmax()),
        )
        assert gradient_check(spec, seed=1) < 1e-4

    def test_batchnorm_net(self):
        spec = ModelSpec("gb", (7,), (dense(6), batchnorm(), relu(), dense(2), softmax()))
        assert gradient_check(spec, seed=2) < 1e-4

    def test_regression_net_uses_mse(self):
        spec = ModelSpec("gr", (4,), (dense(6), relu(), dense(4)))
        assert gradient_check(spec, seed=3) < 1e-4


class TestTrain:
    def test_deterministic(self):
        spec = tiny_softmax_spec()
        rng = np.random.default_rng(0)
        x = rng.normal(size=(40, 6))
        y = np.eye(2)[(x[:, 0] > 0).astype(int)]
        cfg = TrainConfig(epochs=3, learning_rate=1e-3, seed=5, loss="softmax_cross_entropy")
        m1, h1 = train(spec, x, y, cfg)
        m2, h2 = train(spec, x, y, cfg)
        assert h1 == h2
        for p1, p2 in zip(m1.params, m2.params):
            for k in p1:
                np.testing.assert_array_equal(p1[k], p2[k])

    def test_loss_decreases_on_learnable_task(self):
        spec = ModelSpec("lin", (3,), (dense(8), relu(), dense(3)))
        rng = np.random.default_rng(1)
        x = rng.normal(size=(64, 3))
        m, hist = train(spec, x, 2.0 * x, TrainConfig(epochs=30, learning_rate=1e-2, seed=0))
        assert hist[-1] < 0.25 * hist[0]
        assert len(hist) == 30

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_divergence_detected(self):
        # squared errors on inputs this large overflow to inf immediately
        spec = ModelSpec("div", (2,), (dense(2),))
        x = np.full((16, 2), 1e200)
        with pytest.raises(TrainingDivergedError):
            train(spec, x, x, TrainConfig(epochs=5, learning_rate=1e-3))

    def test_metadata_records_loss(self):
        spec = ModelSpec("md", (2,), (dense(2),))
        x = np.random.default_rng(3).normal(size=(8, 2))
        m, _ = train(spec, x, x, TrainConfig(epochs=1))
        assert m.metadata["loss"] == "mse"

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)
        with pytest.raises(ValueError):
            TrainConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            TrainConfig(batch_size=0)
        with pytest.raises(ValueError):
            TrainConfig(loss="hinge")


class TestAutoencoderHelpers:
    @staticmethod
    def scaling_ae(scale):
        """Input-dim 94 'autoencoder' that multiplies its input by a scalar."""
        spec = ModelSpec("sae", (94,), (dense(94),))
        params = [{"w": np.eye(94) * scale, "b": np.zeros(94)}]
        return Model(spec, params).finalize()

    def test_identity_model_zero_error(self):
        mod = self.scaling_ae(1.0)
        x = np.random.default_rng(0).normal(size=(5, 94))
        np.testing.assert_array_equal(reconstruction_error(mod, x), np.zeros(5))
        assert reconstruction_error(mod, x[0]) == 0.0

    def test_error_is_row_mse(self):
        mod = self.scaling_ae(0.5)
        x = np.random.default_rng(1).normal(size=(4, 94))
        got = reconstruction_error(mod, x)
        want = np.mean((0.5 * x - x) ** 2, axis=1)
        np.testing.assert_allclose(got, want, atol=1e-12)
        assert np.isscalar(reconstruction_error(mod, x[0]))

    def test_non_reconstructing_model_rejected(self):
        spec = ModelSpec("cls", (94,), (dense(2),))
        mod = Model(spec, init_params(spec, 0)).finalize()
        with pytest.raises(ValueError, match="reconstruct"):
            reconstruction_error(mod, np.zeros((1, 94)))

    def test_choose_threshold_matches_exhaustive_scan(self):
        mod = self.scaling_ae(0.5)
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 94)) * rng.uniform(0.2, 2.0, size=(40, 1))
        labels = (reconstruction_error(mod, x) < np.median(reconstruction_error(mod, x))).astype(int)
        labels[rng.integers(0, 40, size=6)] ^= 1  # inject label noise
        result = choose_threshold(mod, x, labels)
        errors = reconstruction_error(mod, x)
        want_t, want_f1 = oracles.best_f1_threshold(errors, labels)
        assert result.threshold == want_t
        assert result.f1 == pytest.approx(want_f1, abs=1e-12)

    def test_choose_threshold_needs_both_classes(self):
        mod = self.scaling_ae(0.5)
        x = np.random.default_rng(3).normal(size=(5, 94))
        with pytest.raises(ValueError, match="both classes"):
            choose_threshold(mod, x, np.ones(5, dtype=int))

    def test_classify_ae_boundary_counts_as_person(self):
        mod = self.scaling_ae(1.0)  # error exactly 0 for every row
        x = np.random.default_rng(4).normal(size=(3, 94))
        np.testing.assert_array_equal(classify_ae(mod, 0.0, x), [1, 1, 1])
        assert classify_ae(mod, 0.0, x[0]) == 1
        # any error above the threshold -> clutter
        mod2 = self.scaling_ae(0.5)
        assert classify_ae(mod2, 0.0, x[0]) == 0


class TestClassifyCnn:
    def test_label_is_argmax_and_probs_normalized(self):
        spec = ModelSpec(
            "mini", (4, 4, 1),
            (conv2d(2, kernel_size=2, stride=1), relu(), flatten(), dense(2), softmax()),
        )
        mod = Model(spec, init_params(spec, 0)).finalize()
        x = np.random.default_rng(5).normal(size=(6, 4, 4, 1))
        labels, probs = classify_cnn(mod, x)
        assert probs.shape == (6, 2)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_array_equal(labels, probs.argmax(axis=1))
        # batched and single matmuls may differ by an ulp (BLAS reduction order)
        one_label, one_probs = classify_cnn(mod, x[0])
        assert one_label == labels[0]
        np.testing.assert_allclose(one_probs, probs[0], atol=1e-12)

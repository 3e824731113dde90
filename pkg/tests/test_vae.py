import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spectral_vae.errors import (
    DivergedLoss,
    EmptyDataset,
    GraphNotEvaluated,
    IndexOutOfRange,
    ShapeMismatch,
)
from spectral_vae.nn import make_rng
from spectral_vae.vae import (
    KL_WEIGHT,
    PatchDataset,
    TrainReport,
    VaeModel,
    VaeTrainConfig,
    decode,
    encode,
    kl_divergence,
    latent_traversal,
    reconstruct,
    train_vae,
    vae_loss,
)

from gradcheck import params_gradcheck


@pytest.fixture(scope="module")
def small_model():
    return VaeModel((8, 16), latent_dim=3, channels=(2, 3), seed=1)


def vae_gradcheck(model, x, rng, n):
    seed = 17

    def loss():
        return model.loss(x, rng=np.random.default_rng(seed), train=True)[0]

    for p in model.parameters():
        p.zero_grad()
    model.loss(x, rng=np.random.default_rng(seed), train=True)
    model.backward()
    params_gradcheck(loss, model.parameters(), rng, n=n)


class TestShapes:
    def test_reference_model(self, rng):
        model = VaeModel()
        assert model.is_reference_config
        assert model.bottleneck_shape == (64, 2, 32)
        lat = encode(model, rng.random((8, 128)))
        assert lat.mean.shape == lat.sample.shape == (13,)
        out = decode(model, lat.sample)
        assert out.shape == (8, 128)
        assert out.size == 1024 and lat.sample.size == 13

    def test_non_reference_flagged(self):
        assert not VaeModel((8, 16), latent_dim=5, channels=(2, 2)).is_reference_config
        assert VaeModel((8, 16), latent_dim=40, channels=(2, 2)).is_reference_config

    def test_long_window_model(self):
        model = VaeModel((96, 128), latent_dim=40, channels=(2, 3))
        assert decode(model, np.zeros(40)).shape == (96, 128)

    def test_bad_input_shape(self):
        with pytest.raises(ShapeMismatch):
            VaeModel((10, 128))

    def test_wrong_patch_shape(self, small_model):
        with pytest.raises(ShapeMismatch):
            encode(small_model, np.zeros((8, 15)))

    def test_wrong_latent_length(self, small_model):
        with pytest.raises(ShapeMismatch):
            decode(small_model, np.zeros(4))


class TestEncodeDecode:
    def test_eval_sample_is_mean(self, small_model, rng):
        lat = encode(small_model, rng.random((8, 16)))
        np.testing.assert_array_equal(lat.sample, lat.mean)
        assert not np.any(lat.noise)

    def test_eval_is_pure(self, small_model, rng):
        patch = rng.random((8, 16))
        r = np.random.default_rng(0)
        state = r.bit_generator.state
        a = encode(small_model, patch, rng=r)
        b = encode(small_model, patch, rng=r)
        assert r.bit_generator.state == state
        np.testing.assert_array_equal(a.mean, b.mean)

    def test_train_reparameterization(self, small_model, rng):
        patch = rng.random((8, 16))
        a = encode(small_model, patch, make_rng(3, "x"), mode="train")
        b = encode(small_model, patch, make_rng(3, "x"), mode="train")
        np.testing.assert_array_equal(a.sample, b.sample)
        np.testing.assert_allclose(a.sample, a.mean + np.exp(a.logvar / 2) * a.noise, rtol=1e-15)
        assert np.any(a.noise)

    def test_bad_mode(self, small_model):
        with pytest.raises(ValueError):
            encode(small_model, np.zeros((8, 16)), mode="sample")

    def test_decoder_nonnegative_with_exact_zeros(self, rng):
        model = VaeModel((8, 16), 3, (2, 3), seed=4)
        out = decode(model, rng.standard_normal(3) * 3)
        assert np.all(out >= 0)
        d = model.decoder.layers
        z = rng.standard_normal((1, 3))
        h = z
        for layer in d[:-1]:
            h = layer.forward(h)
        out = model.decode_batch(z)[0]
        np.testing.assert_array_equal(out == 0, h[0, 0] <= 0)

    def test_untrained_reconstruct(self, small_model, rng):
        out = reconstruct(small_model, rng.random((8, 16)))
        assert out.shape == (8, 16)
        assert np.all(out >= 0)
        batch = reconstruct(small_model, rng.random((5, 8, 16)))
        assert batch.shape == (5, 8, 16)


class TestLoss:
    def test_zero_case(self, rng):
        x = rng.random((8, 128))
        assert vae_loss(x, x, np.zeros(13), np.zeros(13)) == (0.0, 0.0, 0.0)

    def test_unit_mean_kl(self):
        mean = np.zeros(13)
        mean[0] = 1.0
        assert kl_divergence(mean, np.zeros(13)) == pytest.approx(0.5, abs=1e-15)

    def test_gaussian_kl_oracle(self, rng):
        # closed form for one dimension: log(1/s) + (s^2 + m^2)/2 - 1/2
        m, lv = rng.standard_normal(6), rng.standard_normal(6)
        s = np.exp(lv / 2)
        expected = np.sum(np.log(1 / s) + (s ** 2 + m ** 2) / 2 - 0.5)
        assert kl_divergence(m, lv) == pytest.approx(expected, rel=1e-12)

    def test_mse_is_mean(self):
        x = np.zeros((8, 128))
        y = np.zeros((8, 128))
        y[0, 0] = 2.0
        _, recon, _ = vae_loss(x, y, np.zeros(13), np.zeros(13))
        assert recon == 4.0 / 1024

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, 13, elements=st.floats(-5, 5)), arrays(np.float64, 13, elements=st.floats(-5, 5)))
    def test_kl_nonnegative(self, mean, logvar):
        assert kl_divergence(mean, logvar) >= 0

    @pytest.mark.parametrize("dim", range(4))
    @pytest.mark.parametrize("which", ["mean", "logvar"])
    def test_kl_zero_only_at_prior(self, dim, which):
        assert kl_divergence(np.zeros(4), np.zeros(4)) == 0.0
        m, lv = np.zeros(4), np.zeros(4)
        (m if which == "mean" else lv)[dim] = 1e-3
        assert kl_divergence(m, lv) > 0

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2 ** 32 - 1))
    def test_decomposition(self, seed):
        r = np.random.default_rng(seed)
        x, y = r.random((3, 8, 16)), r.random((3, 8, 16))
        m, lv = r.standard_normal((3, 4)), r.standard_normal((3, 4))
        total, recon, kl = vae_loss(x, y, m, lv)
        assert abs(total - (recon + KL_WEIGHT * kl)) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            vae_loss(np.zeros((8, 128)), np.zeros((8, 127)), np.zeros(13), np.zeros(13))


class TestGradients:
    def test_end_to_end_small(self, rng):
        model = VaeModel((8, 16), 3, (2, 3), seed=2)
        vae_gradcheck(model, rng.random((2, 8, 16)), rng, n=12)

    def test_backward_before_loss(self, small_model):
        with pytest.raises(GraphNotEvaluated):
            VaeModel((8, 16), 3, (2, 3)).backward()


class TestTraversal:
    def test_values_and_shapes(self):
        model = VaeModel(seed=0)
        values, patches = latent_traversal(model, 2)
        np.testing.assert_allclose(values, [-1, -1 / 3, 1 / 3, 1], atol=1e-15)
        assert patches.shape == (4, 8, 128)
        assert np.all(patches >= 0)

    def test_single_point(self, small_model):
        values, patches = latent_traversal(small_model, 0, n_points=1)
        assert values.tolist() == [-1.0]
        assert patches.shape == (1, 8, 16)

    def test_base_is_prior_mean(self, small_model):
        values, patches = latent_traversal(small_model, 1, n_points=3)
        np.testing.assert_array_equal(patches[1], decode(small_model, np.zeros(3)))

    @pytest.mark.parametrize("component", [-1, 3, 13])
    def test_out_of_range(self, small_model, component):
        with pytest.raises(IndexOutOfRange):
            latent_traversal(small_model, component)


class TestCheckpoint:
    def test_round_trip(self, tmp_path, rng):
        model = VaeModel((8, 16), 3, (2, 3), seed=5, norm_c=7.25)
        path = tmp_path / "v.ckpt"
        model.save(path)
        back = VaeModel.load(path)
        assert back.norm_c == 7.25
        assert back.input_shape == (8, 16) and back.channels == (2, 3) and back.latent_dim == 3
        x = rng.random((4, 8, 16))
        assert back.loss(x, train=False) == model.loss(x, train=False)
        back.save(tmp_path / "w.ckpt")
        assert (tmp_path / "w.ckpt").read_bytes() == path.read_bytes()


def toy_patches(n, rng):
    """Smooth nonnegative 8x16 patches with a few shared shapes."""
    t = np.linspace(0, 1, 16)
    bases = np.stack([np.exp(-((t - c) / 0.15) ** 2) for c in (0.2, 0.5, 0.8)])
    weights = rng.random((n, 3))
    rows = weights @ bases
    return np.repeat(rows[:, None, :], 8, axis=1) * rng.uniform(0.8, 1.0, (n, 8, 1))


class TestTraining:
    def test_zero_epochs(self, rng):
        data = PatchDataset(toy_patches(8, rng), toy_patches(4, rng))
        model, report = train_vae(data, VaeTrainConfig(epochs=0, batch_size=4, latent_dim=3,
                                                       channels=(2, 3)))
        assert report.epochs == 0 and report.best_epoch is None
        fresh = VaeModel((8, 16), 3, (2, 3), seed=0)
        for a, b in zip(model.parameters(), fresh.parameters()):
            np.testing.assert_array_equal(a.weights, b.weights)

    def test_empty(self):
        with pytest.raises(EmptyDataset):
            train_vae(PatchDataset(np.zeros((0, 8, 16)), np.zeros((0, 8, 16))))

    def test_batch_too_big(self, rng):
        with pytest.raises(ValueError):
            train_vae(PatchDataset(toy_patches(4, rng), toy_patches(4, rng)),
                      VaeTrainConfig(batch_size=8, latent_dim=3, channels=(2, 3)))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_diverged(self, rng):
        data = PatchDataset(toy_patches(8, rng) * 1e200, toy_patches(4, rng))
        with pytest.raises(DivergedLoss, match="epoch 1, batch 0"):
            train_vae(data, VaeTrainConfig(epochs=1, batch_size=4, latent_dim=3, channels=(2, 3)))

    def test_learns_and_is_deterministic(self, rng):
        data = PatchDataset(toy_patches(256, rng), toy_patches(64, rng))
        cfg = VaeTrainConfig(epochs=8, batch_size=16, lr=3e-3, latent_dim=3, channels=(4, 8), seed=3)
        model, report = train_vae(data, cfg)
        again = train_vae(data, cfg)[1]
        assert report.to_csv() == again.to_csv()
        assert report.train_loss[-1] < 0.7 * report.train_loss[0]
        assert all(k >= 0 and math.isfinite(k) for k in report.train_kl)
        for i in range(report.epochs):
            assert abs(report.train_loss[i] - (report.train_recon[i] + KL_WEIGHT * report.train_kl[i])) < 1e-9
        assert report.test_loss[report.best_epoch - 1] == min(report.test_loss)
        other = train_vae(data, VaeTrainConfig(**{**cfg.__dict__, "seed": 4}))[1]
        assert other.to_csv() != report.to_csv()

    def test_csv_header(self):
        rep = TrainReport(seed=0, train_loss=[1.0], train_recon=[0.5], train_kl=[1000.0],
                          test_loss=[2.0], test_recon=[1.0], test_kl=[2000.0])
        lines = rep.to_csv().splitlines()
        assert lines[0].startswith("epoch,train_loss")
        assert lines[1] == "1,1.0,0.5,1000.0,2.0,1.0,2000.0"

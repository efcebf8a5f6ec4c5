import numpy as np
import pytest

from posekit.autoencoder import PoseAutoencoder
from posekit.dataset import denormalize, normalize
from posekit.skeleton import POSE_DIM


@pytest.fixture(scope="module")
def quick_ae(small_dataset):
    return PoseAutoencoder(epochs=4, seed=5).fit(small_dataset)


class TestArchitecture:
    def test_encode_widths(self, quick_ae, small_dataset):
        x = normalize(small_dataset.clips[0].poses[0], small_dataset.stats)
        z = quick_ae.encode(x)
        assert x.shape == (63,)
        assert z.shape == (64,)

    def test_decoder_is_reversed_chain(self, quick_ae):
        dims = [
            (quick_ae.model_.weight_of(i).shape[1], quick_ae.model_.weight_of(i).shape[0])
            for i in range(len(quick_ae.model_.layers))
        ]
        assert dims == [
            (63, 200),
            (200, 200),
            (200, 64),
            (64, 200),
            (200, 200),
            (200, 63),
        ]

    def test_tied_weight_invariant(self, quick_ae):
        model = quick_ae.model_
        for k in range(3):
            dec = model.weight_of(3 + k)
            enc = model.weight_of(2 - k)
            np.testing.assert_array_equal(dec, enc.T)

    def test_get_params_roundtrip(self):
        ae = PoseAutoencoder(epochs=3, seed=9)
        params = ae.get_params()
        assert params["epochs"] == 3
        clone = PoseAutoencoder().set_params(**params)
        assert clone.get_params() == params


class TestEncodeDecode:
    def test_deterministic(self, quick_ae, rng):
        x = rng.normal(size=POSE_DIM).astype(np.float32)
        np.testing.assert_array_equal(quick_ae.encode(x), quick_ae.encode(x))

    def test_codes_do_not_collapse(self, quick_ae, small_dataset):
        poses = normalize(small_dataset.train_poses()[:50], small_dataset.stats)
        codes = quick_ae.transform(poses)
        diffs = np.linalg.norm(codes[1:] - codes[:-1], axis=1)
        assert np.all(diffs > 1e-6)

    def test_untrained_style_random_codes_decode_finite(self, quick_ae, rng):
        codes = rng.uniform(-3, 3, size=(1000, 64)).astype(np.float32)
        out = quick_ae.inverse_transform(codes)
        assert np.all(np.isfinite(out))

    def test_dimension_mismatch(self, quick_ae):
        with pytest.raises(ValueError):
            quick_ae.transform(np.zeros((1, 62)))
        with pytest.raises(ValueError):
            quick_ae.inverse_transform(np.zeros((1, 63)))


class TestTraining:
    def test_loss_history_finite_and_decreasing(self, quick_ae):
        losses = [h["train_loss"] for h in quick_ae.loss_history_]
        assert all(np.isfinite(losses))
        assert losses[-1] < losses[0]

    def test_reconstruction_loss_non_negative(self, quick_ae, small_dataset, rng):
        x = normalize(small_dataset.train_poses()[:20], small_dataset.stats)
        recon = quick_ae.inverse_transform(quick_ae.transform(x))
        assert float(np.mean((x - recon) ** 2)) >= 0.0

    def test_seeded_runs_identical(self, small_dataset):
        a = PoseAutoencoder(epochs=2, seed=3).fit(small_dataset)
        b = PoseAutoencoder(epochs=2, seed=3).fit(small_dataset)
        assert a.loss_history_ == b.loss_history_
        for pa, pb in zip(a.model_.parameters(), b.model_.parameters()):
            np.testing.assert_array_equal(pa, pb)

    def test_full_batch_degenerate(self, small_dataset):
        n = small_dataset.train_poses().shape[0]
        ae = PoseAutoencoder(epochs=1, batch_size=n, seed=1).fit(small_dataset)
        assert len(ae.loss_history_) == 1

    def test_untied_ablation_flag(self, small_dataset):
        ae = PoseAutoencoder(epochs=1, seed=1, tied_decoder=False).fit(small_dataset)
        assert all(layer.tie is None for layer in ae.model_.layers)


class TestDeskScale:
    def test_convergence(self, desk_autoencoder):
        losses = [h["train_loss"] for h in desk_autoencoder.loss_history_]
        assert losses[-1] < 0.2 * losses[0]

    def test_validation_within_twice_train(self, desk_autoencoder):
        last = desk_autoencoder.loss_history_[-1]
        assert last["val_loss"] < 2.0 * last["train_loss"]

    def test_denormalized_reconstruction_error(self, desk_autoencoder, desk_dataset):
        poses = desk_dataset.validation_poses()
        normed = normalize(poses, desk_dataset.stats)
        recon = denormalize(
            desk_autoencoder.inverse_transform(desk_autoencoder.transform(normed)),
            desk_dataset.stats,
        )
        per_joint = np.linalg.norm(
            (recon - poses).reshape(-1, 21, 3), axis=2
        )
        assert per_joint.mean() < 0.05  # meters


class TestPersistence:
    def test_save_load_roundtrip(self, quick_ae, tmp_path, rng):
        path = tmp_path / "ae.npw"
        quick_ae.save(str(path))
        loaded = PoseAutoencoder.load(str(path))
        x = rng.normal(size=POSE_DIM).astype(np.float32)
        np.testing.assert_allclose(loaded.encode(x), quick_ae.encode(x), atol=1e-6)
        np.testing.assert_allclose(
            loaded.decode(loaded.encode(x)), quick_ae.decode(quick_ae.encode(x)), atol=1e-6
        )

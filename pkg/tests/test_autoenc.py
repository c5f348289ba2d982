"""Autoencoder training, encoding, and decoding."""

import numpy as np
import pytest

from otmap.autoenc import (
    AutoencoderSpec,
    autoencoder_layer_specs,
    decode,
    encode,
    train_autoencoder,
)
from otmap.datasets import ImageBatch, make_glyphs
from otmap.errors import SizeMismatch, SpecError
from otmap.mappers import TrainConfig
from otmap.nn import Activation
from otmap.ot import PointSet


def tiny_images(n=64, h=6, w=6, seed=0):
    rng = np.random.default_rng(seed)
    px = rng.uniform(0.1, 0.9, size=(n, h * w)).astype(np.float32)
    return ImageBatch(pixels=px, h=h, w=w, c=1)


class TestSpecs:
    def test_layer_chain(self):
        spec = AutoencoderSpec(input_dim=784, hidden=(512, 256), latent_dim=8)
        enc, dec = autoencoder_layer_specs(spec)
        assert [s.in_dim for s in enc] == [784, 512, 256]
        assert enc[-1].out_dim == 8 and enc[-1].activation is Activation.IDENTITY
        assert [s.in_dim for s in dec] == [8, 256, 512]
        assert dec[-1].out_dim == 784 and dec[-1].activation is Activation.SIGMOID

    def test_invalid_widths(self):
        with pytest.raises(SpecError):
            AutoencoderSpec(input_dim=10, hidden=(0,), latent_dim=2)


class TestTraining:
    def test_memorizes_single_repeated_image(self):
        base = make_glyphs(1, seed=5)
        images = ImageBatch(pixels=np.tile(base.pixels[:1], (64, 1))[:, :784], h=28, w=28, c=1)
        spec = AutoencoderSpec(input_dim=784, hidden=(64,), latent_dim=4)
        cfg = TrainConfig(steps=3000, batch_k=16, lr=1e-3, seed=1)
        result = train_autoencoder(images, spec, cfg)
        assert min(result.losses) < 1e-3
        recon = decode(result.decoder, encode(result.encoder, images))
        assert float(((recon.pixels - images.pixels) ** 2).mean()) < 1e-3

    def test_identity_capable_spec_reaches_near_zero(self):
        images = tiny_images(n=128, h=3, w=4)
        spec = AutoencoderSpec(
            input_dim=12, hidden=(), latent_dim=12, output_activation=Activation.IDENTITY
        )
        cfg = TrainConfig(steps=4000, batch_k=32, lr=3e-3, seed=2)
        result = train_autoencoder(images, spec, cfg)
        assert result.losses[-1] < 1e-4

    def test_loss_drops_below_initial(self):
        images = make_glyphs(256, seed=3)
        spec = AutoencoderSpec(input_dim=784, hidden=(64,), latent_dim=8)
        finals = []
        for seed in range(3):
            cfg = TrainConfig(steps=400, batch_k=32, lr=1e-3, seed=seed)
            result = train_autoencoder(images, spec, cfg)
            finals.append(result.losses[-1] < result.losses[0])
        assert np.median(finals) == 1.0

    def test_deterministic(self):
        images = tiny_images()
        spec = AutoencoderSpec(input_dim=36, hidden=(16,), latent_dim=4)
        cfg = TrainConfig(steps=50, batch_k=16, lr=1e-3, seed=4)
        a = train_autoencoder(images, spec, cfg)
        b = train_autoencoder(images, spec, cfg)
        assert np.array_equal(a.losses, b.losses)
        for la, lb in zip(a.encoder.layers, b.encoder.layers):
            assert np.array_equal(la.weight, lb.weight)

    def test_input_dim_mismatch(self):
        with pytest.raises(SizeMismatch):
            train_autoencoder(
                tiny_images(),
                AutoencoderSpec(input_dim=64, hidden=(8,), latent_dim=2),
                TrainConfig(steps=1, batch_k=4),
            )


@pytest.fixture(scope="module")
def trained():
    images = make_glyphs(256, seed=7)
    spec = AutoencoderSpec(input_dim=784, hidden=(64,), latent_dim=6)
    cfg = TrainConfig(steps=600, batch_k=32, lr=1e-3, seed=8)
    result = train_autoencoder(images, spec, cfg)
    return images, result


class TestEncodeDecode:

    def test_encode_shape(self, trained):
        images, result = trained
        latents = encode(result.encoder, images)
        assert latents.k == images.n and latents.d == 6

    def test_identical_images_identical_latents(self, trained):
        images, result = trained
        doubled = ImageBatch(
            pixels=np.tile(images.pixels[:1], (2, 1)), h=28, w=28, c=1
        )
        latents = encode(result.encoder, doubled)
        assert np.array_equal(latents.data[0], latents.data[1])

    def test_decode_range_and_shape(self, trained):
        images, result = trained
        latents = encode(result.encoder, images)
        recon = decode(result.decoder, latents)
        assert recon.pixels.shape == images.pixels.shape
        assert recon.pixels.min() >= 0.0 and recon.pixels.max() <= 1.0
        assert (recon.h, recon.w, recon.c) == (28, 28, 1)

    def test_reconstruction_of_training_image(self, trained):
        images, result = trained
        latents = encode(result.encoder, images)
        recon = decode(result.decoder, latents)
        per_image = ((recon.pixels - images.pixels) ** 2).mean(axis=1)
        assert per_image[0] <= per_image.mean() * 3

    def test_decoded_interpolation_is_valid(self, trained):
        images, result = trained
        latents = encode(result.encoder, images).data
        line = np.linspace(latents[0], latents[1], 7)
        frames = decode(result.decoder, PointSet(line))
        assert np.isfinite(frames.pixels).all()
        assert frames.pixels.min() >= 0.0 and frames.pixels.max() <= 1.0

    def test_latent_dim_mismatch(self, trained):
        _, result = trained
        with pytest.raises(SizeMismatch):
            decode(result.decoder, PointSet(np.zeros((2, 3))))

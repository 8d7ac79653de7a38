"""Encoder/decoder contracts: tap arithmetic, oracles, freezing, errors."""

import numpy as np
import pytest

from aesust.autodiff import Tensor, tensor_sum
from aesust.backbone import Decoder, Encoder, TAP_NAMES, _ENCODER_PLAN
from aesust.errors import NumericError, ShapeError
from aesust.gradcheck import gradient_check


def _loop_encoder_taps(encoder: Encoder, image: np.ndarray) -> dict[str, np.ndarray]:
    """Naive per-pixel forward: direct convolution loops, explicit pooling."""
    taps = {}
    x = image
    tap_after = {"conv1_1": "relu1_1", "conv2_1": "relu2_1", "conv3_1": "relu3_1",
                 "conv4_1": "relu4_1", "conv5_1": "relu5_1"}
    for item in _ENCODER_PLAN:
        if item is None:
            b, c, h, w = x.shape
            pooled = np.zeros((b, c, h // 2, w // 2), dtype=x.dtype)
            for i in range(h // 2):
                for j in range(w // 2):
                    pooled[:, :, i, j] = x[:, :, 2 * i : 2 * i + 2,
                                           2 * j : 2 * j + 2].max(axis=(2, 3))
            x = pooled
            continue
        name = item[0]
        conv = encoder.convs[name]
        w_arr, b_arr = conv.weight.data, conv.bias.data
        xp = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
        out = np.zeros((x.shape[0], w_arr.shape[0], x.shape[2], x.shape[3]), dtype=x.dtype)
        for o in range(w_arr.shape[0]):
            for i in range(x.shape[2]):
                for j in range(x.shape[3]):
                    patch = xp[:, :, i : i + 3, j : j + 3]
                    out[:, o, i, j] = (patch * w_arr[o]).sum(axis=(1, 2, 3)) + b_arr[o]
        x = np.maximum(out, 0.0)
        if name in tap_after:
            taps[tap_after[name]] = x.copy()
    return taps


class TestEncoder:
    def test_full_width_tap_shapes(self):
        enc = Encoder(1.0, rng=np.random.default_rng(0))
        taps = enc.encode(Tensor(np.zeros((1, 3, 256, 256), dtype=np.float32)))
        assert taps["relu4_1"].data.shape == (1, 512, 32, 32)
        assert taps["relu5_1"].data.shape == (1, 512, 16, 16)
        assert [taps[t].data.shape[1] for t in TAP_NAMES] == [64, 128, 256, 512, 512]

    def test_desk_width_stride_arithmetic(self):
        enc = Encoder(0.125, rng=np.random.default_rng(0))
        taps = enc.encode(Tensor(np.zeros((2, 3, 96, 64), dtype=np.float32)))
        for k, tap in enumerate(TAP_NAMES):
            assert taps[tap].data.shape[2:] == (96 // 2**k, 64 // 2**k)

    def test_constant_input_gives_uniform_interior(self):
        """Away from the zero-padding halo, convolution of a constant is constant."""
        enc = Encoder(0.125, rng=np.random.default_rng(3))
        taps = enc.encode(Tensor(np.full((1, 3, 192, 192), 0.43, dtype=np.float32)))
        margins = {"relu1_1": 1, "relu2_1": 2, "relu3_1": 3, "relu4_1": 4, "relu5_1": 5}
        for tap, margin in margins.items():
            inner = taps[tap].data[:, :, margin:-margin, margin:-margin]
            assert inner.shape[2] > 0 and inner.shape[3] > 0
            spread = inner.max(axis=(2, 3)) - inner.min(axis=(2, 3))
            assert spread.max() < 1e-4, f"{tap} interior varies by {spread.max()}"

    def test_matches_direct_loop_oracle(self):
        """Seeded weights, fixed 3x32x32 image: taps equal the loop forward."""
        enc = Encoder(0.125, rng=np.random.default_rng(9))
        img = np.random.default_rng(10).random((1, 3, 32, 32), dtype=np.float32)
        got = enc.encode(Tensor(img))
        want = _loop_encoder_taps(enc, img.astype(np.float64))
        for tap in TAP_NAMES:
            err = np.abs(got[tap].data - want[tap]).max()
            assert err < 1e-5, f"{tap}: {err}"

    def test_rejects_bad_inputs(self):
        enc = Encoder(0.125, rng=np.random.default_rng(0))
        with pytest.raises(ShapeError):
            enc.encode(Tensor(np.zeros((1, 3, 100, 96), dtype=np.float32)))
        bad = np.zeros((1, 3, 32, 32), dtype=np.float32)
        bad[0, 0, 0, 0] = np.nan
        with pytest.raises(NumericError):
            enc.encode(Tensor(bad))

    def test_deterministic_and_frozen(self):
        enc = Encoder(0.125, rng=np.random.default_rng(1))
        img = Tensor(np.random.default_rng(2).random((1, 3, 32, 32), dtype=np.float32))
        first = enc.encode(img)
        second = enc.encode(img)
        for tap in TAP_NAMES:
            np.testing.assert_array_equal(first[tap].data, second[tap].data)
        assert all(not p.requires_grad for p in enc.parameters().values())


class TestEncoderWeights:
    def _entries(self, enc):
        return {name: p.data.copy() for name, p in enc.parameters().items()}

    def test_archive_roundtrip_reproduces_taps(self):
        src = Encoder(0.125, rng=np.random.default_rng(4))
        dst = Encoder(0.125, rng=np.random.default_rng(99))
        dst.load_weights(self._entries(src))
        img = Tensor(np.random.default_rng(5).random((1, 3, 32, 32), dtype=np.float32))
        a, b = src.encode(img), dst.encode(img)
        for tap in TAP_NAMES:
            np.testing.assert_array_equal(a[tap].data, b[tap].data)

    def test_missing_key_names_it(self):
        enc = Encoder(0.125, rng=np.random.default_rng(4))
        entries = self._entries(enc)
        del entries["encoder.conv2_1.bias"]
        with pytest.raises(ShapeError, match="encoder.conv2_1.bias"):
            Encoder(0.125, rng=np.random.default_rng(0)).load_weights(entries)

    def test_transposed_weight_rejected(self):
        enc = Encoder(0.125, rng=np.random.default_rng(4))
        entries = self._entries(enc)
        entries["encoder.conv2_1.weight"] = entries["encoder.conv2_1.weight"].transpose(1, 0, 2, 3)
        with pytest.raises(ShapeError, match="shape mismatch"):
            Encoder(0.125, rng=np.random.default_rng(0)).load_weights(entries)

    def test_dtype_mismatch_rejected(self):
        enc = Encoder(0.125, rng=np.random.default_rng(4))
        entries = self._entries(enc)
        entries["encoder.conv1_1.weight"] = entries["encoder.conv1_1.weight"].astype(np.float64)
        with pytest.raises(ShapeError, match="dtype"):
            Encoder(0.125, rng=np.random.default_rng(0)).load_weights(entries)


class TestDecoder:
    def test_full_width_shape(self):
        dec = Decoder(1.0, rng=np.random.default_rng(0))
        out = dec.decode(Tensor(np.zeros((1, 512, 32, 32), dtype=np.float32)))
        assert out.data.shape == (1, 3, 256, 256)

    def test_desk_width_shape_and_range(self):
        dec = Decoder(0.125, rng=np.random.default_rng(0))
        out = dec.decode(Tensor(np.random.default_rng(1).standard_normal((2, 64, 4, 6)).astype(np.float32)))
        assert out.data.shape == (2, 3, 32, 48)
        assert np.isfinite(out.data).all()
        assert out.data.min() >= 0.0 and out.data.max() <= 1.0

    def test_wrong_channel_count_rejected(self):
        dec = Decoder(0.125, rng=np.random.default_rng(0))
        with pytest.raises(ShapeError):
            dec.decode(Tensor(np.zeros((1, 32, 4, 4), dtype=np.float32)))

    def test_zero_feature_zero_final_bias_gives_constant_image(self):
        """Reflection padding keeps a constant map constant at every layer."""
        dec = Decoder(0.125, rng=np.random.default_rng(2))
        dec.convs["conv9"].bias.data[...] = 0.0
        out = dec.decode(Tensor(np.zeros((1, 64, 4, 4), dtype=np.float32))).data
        for ch in range(3):
            plane = out[0, ch]
            assert np.all(plane == plane[0, 0])

    def test_all_parameters_trainable(self):
        dec = Decoder(0.125, rng=np.random.default_rng(0))
        assert all(p.requires_grad for p in dec.parameters().values())

    def test_gradient_check_desk_instance(self):
        """8-channel 4x4 decoder: analytic grads vs central differences."""
        rng = np.random.default_rng(4)
        dec = Decoder(1 / 64, rng=rng, dtype=np.float64)
        assert dec.in_channels == 8
        for name, p in dec.parameters().items():
            if name.endswith("bias"):
                p.data[...] = rng.standard_normal(p.data.shape) * 0.2
        dec.convs["conv9"].bias.data[...] += 0.5
        feat = Tensor(rng.standard_normal((1, 8, 4, 4)), requires_grad=True)
        tensors = dict(dec.parameters())
        tensors["feature"] = feat
        res = gradient_check(lambda: tensor_sum(dec.decode(feat)), tensors)
        assert res.max_error < 1e-3, res.worst()

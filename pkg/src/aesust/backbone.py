"""Fixed multi-tap encoder and trainable mirrored decoder.

The encoder follows the classic 19-layer recognition stack up to its fifth
stage: 3x3 stride-1 convolutions with zero padding, ReLU after each, and
2x2 max pooling between stages. Features are tapped after the first ReLU
of every stage (``relu1_1`` ... ``relu5_1``), so tap ``relu{k}_1`` lives on
an H/2^(k-1) grid. A width multiplier scales every channel count so the
same layout runs at desk scale.

The decoder mirrors the encoder from the ``relu4_1`` level back to RGB,
with pooling replaced by nearest-neighbor 2x upsampling and reflection
padding instead of zero padding. Its output is clamped to [0, 1].
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, as_tensor, clip, max_pool2x2, relu, upsample_nearest
from .errors import NumericError, ShapeError
from .nn import Conv2d, orthogonal_matrix

TAP_NAMES = ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")

# (name, in_channels, out_channels) at reference width; None marks a 2x2 pool.
_ENCODER_PLAN = (
    ("conv1_1", 3, 64),
    ("conv1_2", 64, 64),
    None,
    ("conv2_1", 64, 128),
    ("conv2_2", 128, 128),
    None,
    ("conv3_1", 128, 256),
    ("conv3_2", 256, 256),
    ("conv3_3", 256, 256),
    ("conv3_4", 256, 256),
    None,
    ("conv4_1", 256, 512),
    ("conv4_2", 512, 512),
    ("conv4_3", 512, 512),
    ("conv4_4", 512, 512),
    None,
    ("conv5_1", 512, 512),
)

_TAP_AFTER = {"conv1_1": "relu1_1", "conv2_1": "relu2_1", "conv3_1": "relu3_1",
              "conv4_1": "relu4_1", "conv5_1": "relu5_1"}

# Decoder plan from the relu4_1 level back to RGB; None marks 2x upsampling.
_DECODER_PLAN = (
    ("conv1", 512, 256),
    None,
    ("conv2", 256, 256),
    ("conv3", 256, 256),
    ("conv4", 256, 256),
    ("conv5", 256, 128),
    None,
    ("conv6", 128, 128),
    ("conv7", 128, 64),
    None,
    ("conv8", 64, 64),
    ("conv9", 64, 3),
)


def scaled_width(reference: int, multiplier: float) -> int:
    return max(1, round(reference * multiplier))


def _check_image(x: np.ndarray):
    if x.ndim != 4 or x.shape[1] != 3:
        raise ShapeError(f"expected image batch (B, 3, H, W), got {x.shape}")
    if x.shape[2] % 16 or x.shape[3] % 16:
        raise ShapeError(f"image H and W must be multiples of 16, got {x.shape[2:]}")
    if not np.isfinite(x).all():
        raise NumericError("image contains non-finite values")


class Encoder:
    """Frozen feature-pyramid encoder.

    Weights come either from a tensor archive (``weights=``) or from seeded
    random orthogonal initialization; they are never trainable.
    """

    def __init__(self, width_multiplier: float = 1.0, *,
                 rng: np.random.Generator | None = None,
                 weights: dict[str, np.ndarray] | None = None,
                 dtype=np.float32):
        self.width_multiplier = width_multiplier
        self.dtype = np.dtype(dtype)
        self.convs: dict[str, Conv2d] = {}
        init_rng = rng if rng is not None else np.random.default_rng(0)
        for item in _ENCODER_PLAN:
            if item is None:
                continue
            name, cin, cout = item
            cin_s = 3 if cin == 3 else scaled_width(cin, width_multiplier)
            cout_s = scaled_width(cout, width_multiplier)
            conv = Conv2d(cin_s, cout_s, 3, padding=1, pad_mode="zero",
                          rng=init_rng, dtype=dtype, trainable=False)
            if weights is None:
                fan_in = cin_s * 9
                w = orthogonal_matrix(init_rng, cout_s, fan_in) * np.sqrt(2.0)
                conv.weight.data[...] = w.reshape(cout_s, cin_s, 3, 3).astype(dtype)
            self.convs[name] = conv
        if weights is not None:
            self.load_weights(weights)
        self.tap_channels = {
            tap: self.convs[conv].out_channels for conv, tap in _TAP_AFTER.items()
        }

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, conv in self.convs.items():
            out[f"encoder.{name}.weight"] = conv.weight
            out[f"encoder.{name}.bias"] = conv.bias
        return out

    def load_weights(self, entries: dict[str, np.ndarray]):
        """Install weights from archive entries; strict names/shapes/dtypes."""
        for name, param in self.parameters().items():
            if name not in entries:
                raise ShapeError(f"archive is missing encoder entry {name!r}")
            value = entries[name]
            if tuple(value.shape) != tuple(param.data.shape):
                raise ShapeError(
                    f"shape mismatch for {name!r}: archive {value.shape}, "
                    f"encoder expects {param.data.shape}"
                )
            if np.dtype(value.dtype) != self.dtype:
                raise ShapeError(
                    f"dtype mismatch for {name!r}: archive {value.dtype}, "
                    f"encoder expects {self.dtype}"
                )
            param.data = value.copy()
            param.requires_grad = False

    def encode(self, image) -> dict[str, Tensor]:
        """Run the stack and return all five taps."""
        x = as_tensor(image)
        _check_image(x.data)
        taps: dict[str, Tensor] = {}
        h = x
        for item in _ENCODER_PLAN:
            if item is None:
                h = max_pool2x2(h)
                continue
            name = item[0]
            h = relu(self.convs[name](h))
            tap = _TAP_AFTER.get(name)
            if tap:
                taps[tap] = h
        return taps


class Decoder:
    """Trainable decoder from the relu4_1 feature level back to an image."""

    def __init__(self, width_multiplier: float = 1.0, *,
                 rng: np.random.Generator, dtype=np.float32):
        self.width_multiplier = width_multiplier
        self.convs: dict[str, Conv2d] = {}
        last_name = _DECODER_PLAN[-1][0]
        for item in _DECODER_PLAN:
            if item is None:
                continue
            name, cin, cout = item
            cin_s = scaled_width(cin, width_multiplier)
            cout_s = 3 if cout == 3 else scaled_width(cout, width_multiplier)
            self.convs[name] = Conv2d(cin_s, cout_s, 3, padding=1, pad_mode="reflect",
                                      rng=rng, dtype=dtype)
        # Start the output mid-gray so the clamp is inactive at initialization.
        self.convs[last_name].bias.data[...] = 0.5
        self.in_channels = self.convs["conv1"].in_channels

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name, conv in self.convs.items():
            out[f"decoder.{name}.weight"] = conv.weight
            out[f"decoder.{name}.bias"] = conv.bias
        return out

    def decode(self, feature) -> Tensor:
        """Feature (B, C, h, w) at the relu4_1 level -> image (B, 3, 8h, 8w)."""
        f = as_tensor(feature)
        if f.data.ndim != 4 or f.data.shape[1] != self.in_channels:
            raise ShapeError(
                f"decoder expects (B, {self.in_channels}, h, w), got {f.data.shape}"
            )
        h = f
        last_name = _DECODER_PLAN[-1][0]
        for item in _DECODER_PLAN:
            if item is None:
                h = upsample_nearest(h, 2)
                continue
            name = item[0]
            h = self.convs[name](h)
            if name != last_name:
                h = relu(h)
        return clip(h, 0.0, 1.0)

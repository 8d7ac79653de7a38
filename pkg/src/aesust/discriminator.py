"""Three-scale patch discriminator doubling as aesthetic feature extractor.

Each scale runs an identical (independently weighted) encoder: a 4x4
stride-2 convolution to the base width with LeakyReLU(0.2), then three
more 4x4 stride-2 convolutions with parameter-free instance normalization
and LeakyReLU(0.2). A 3x3 stride-1 convolution maps each encoding to a
single-channel patch-logit map. The input pyramid is built by repeated
3x3 stride-2 average pooling (padding 1, zeros included in the mean).

The aesthetic feature is the sum of the three encodings after nearest
upsampling of the coarser scales back to the finest encoding grid.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, as_tensor, avg_pool2d, leaky_relu, resize_nearest
from .backbone import scaled_width
from .errors import ShapeError
from .nn import Conv2d, spatial_norm

__all__ = ["ScaleEncoder", "AestheticDiscriminator"]

LEAKY_SLOPE = 0.2
_WIDTHS = (64, 128, 256, 512)


class ScaleEncoder:
    """Encoder + patch classifier for one pyramid scale."""

    def __init__(self, width_multiplier: float = 1.0, *,
                 rng: np.random.Generator, dtype=np.float32):
        widths = [scaled_width(w, width_multiplier) for w in _WIDTHS]
        chain = [3] + widths
        self.convs = [
            Conv2d(chain[i], chain[i + 1], 4, stride=2, padding=1, rng=rng, dtype=dtype)
            for i in range(4)
        ]
        self.classifier = Conv2d(widths[-1], 1, 3, stride=1, padding=1, rng=rng, dtype=dtype)
        self.out_channels = widths[-1]

    def encode(self, image) -> Tensor:
        """(B,3,H,W) -> (B, out_channels, H/16, W/16)."""
        h = leaky_relu(self.convs[0](image), LEAKY_SLOPE)
        for conv in self.convs[1:]:
            h = leaky_relu(spatial_norm(conv(h)), LEAKY_SLOPE)
        return h

    def classify(self, encoding) -> Tensor:
        return self.classifier(encoding)

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for i, conv in enumerate(self.convs, start=1):
            out[f"conv{i}.weight"] = conv.weight
            out[f"conv{i}.bias"] = conv.bias
        return out


class AestheticDiscriminator:
    def __init__(self, width_multiplier: float = 1.0, *,
                 rng: np.random.Generator, dtype=np.float32):
        self.width_multiplier = width_multiplier
        self.encoders = [ScaleEncoder(width_multiplier, rng=rng, dtype=dtype)
                         for _ in range(3)]
        self.out_channels = self.encoders[0].out_channels

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for k, enc in enumerate(self.encoders, start=1):
            for name, p in enc.parameters().items():
                out[f"disc.E{k}.{name}"] = p
            out[f"disc.C{k}.weight"] = enc.classifier.weight
            out[f"disc.C{k}.bias"] = enc.classifier.bias
        return out

    @staticmethod
    def _check_input(x: np.ndarray):
        if x.ndim != 4 or x.shape[1] != 3:
            raise ShapeError(f"expected image batch (B,3,H,W), got {x.shape}")
        if x.shape[2] % 16 or x.shape[3] % 16:
            raise ShapeError(f"H and W must be multiples of 16, got {x.shape[2:]}")
        if x.shape[2] < 64 or x.shape[3] < 64:
            raise ShapeError(
                f"3-scale pyramid needs H,W >= 64, got {x.shape[2:]}"
            )

    def build_pyramid(self, image) -> list[Tensor]:
        """Full, half, and quarter resolution by repeated average pooling."""
        x = as_tensor(image)
        self._check_input(x.data)
        half = avg_pool2d(x, 3, 2, 1)
        quarter = avg_pool2d(half, 3, 2, 1)
        return [x, half, quarter]

    def discriminate(self, image) -> list[Tensor]:
        """Patch logit maps, one per scale, finest first."""
        pyramid = self.build_pyramid(image)
        return [enc.classify(enc.encode(level))
                for enc, level in zip(self.encoders, pyramid)]

    def aesthetic_features(self, image) -> Tensor:
        """Sum of the per-scale encodings on the finest encoding grid.

        Coarse encodings are nearest-upsampled onto E_1's grid. For inputs
        whose edges are multiples of 64 the grids divide evenly and this is
        exactly the 2x / 4x nearest upsampling; for ragged multiple-of-16
        sizes the resize keeps the sum well-defined.
        """
        pyramid = self.build_pyramid(image)
        e1 = self.encoders[0].encode(pyramid[0])
        e2 = self.encoders[1].encode(pyramid[1])
        e3 = self.encoders[2].encode(pyramid[2])
        h, w = e1.data.shape[2:]
        return e1 + resize_nearest(e2, h, w) + resize_nearest(e3, h, w)

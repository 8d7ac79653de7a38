"""Bundle of encoder, attention, decoder, and critic with checkpoint I/O.

A checkpoint archive stores every model tensor by name plus ``meta.*``
scalars (stage, width multiplier, step). Optimizer state, when saved,
lives under ``optim.*`` in the same archive.
"""

from __future__ import annotations

import numpy as np

from . import persist
from .aessa import LEVELS, TwoLevelAesSA
from .autodiff import Tensor, resize_nearest
from .backbone import Decoder, Encoder
from .discriminator import AestheticDiscriminator
from .errors import ShapeError

__all__ = ["StyleTransferModels"]


class StyleTransferModels:
    def __init__(self, width_multiplier: float = 1.0, *, seed: int = 0,
                 stage: int = 1, dtype=np.float32,
                 encoder_weights: dict[str, np.ndarray] | None = None):
        if stage not in (1, 2):
            raise ValueError(f"stage must be 1 or 2, got {stage}")
        self.width_multiplier = width_multiplier
        self.stage = stage
        self.dtype = np.dtype(dtype)
        rng = np.random.default_rng(seed)
        self.encoder = Encoder(width_multiplier, rng=rng, dtype=dtype,
                               weights=encoder_weights)
        self.decoder = Decoder(width_multiplier, rng=rng, dtype=dtype)
        self.discriminator = AestheticDiscriminator(width_multiplier, rng=rng, dtype=dtype)
        channels = {level: self.encoder.tap_channels[level] for level in LEVELS}
        # Both feature levels and the critic sit at the same reference width
        # (512 x multiplier), so the aesthetic input needs no channel change
        # between the two training stages.
        assert all(c == self.discriminator.out_channels for c in channels.values())
        self.aessa = TwoLevelAesSA(channels, self.discriminator.out_channels,
                                   rng=rng, dtype=dtype)

    # -- parameter maps ----------------------------------------------------

    def generator_parameters(self) -> dict[str, Tensor]:
        out = dict(self.aessa.parameters())
        out.update(self.decoder.parameters())
        return out

    def discriminator_parameters(self) -> dict[str, Tensor]:
        return self.discriminator.parameters()

    def all_parameters(self) -> dict[str, Tensor]:
        out = dict(self.encoder.parameters())
        out.update(self.generator_parameters())
        out.update(self.discriminator_parameters())
        return out

    def set_trainable(self, trainable: bool):
        """Toggle gradients on generator and critic (encoder stays frozen)."""
        for p in self.generator_parameters().values():
            p.requires_grad = trainable
        for p in self.discriminator_parameters().values():
            p.requires_grad = trainable

    # -- forward -------------------------------------------------------------

    def aesthetic_by_level(self, style_image, taps_style=None) -> dict[str, Tensor]:
        """Aesthetic input per level: style taps (stage 1) or critic features."""
        if self.stage == 1:
            taps = taps_style if taps_style is not None else self.encoder.encode(style_image)
            return {level: taps[level] for level in LEVELS}
        shape = style_image.data.shape if isinstance(style_image, Tensor) else np.asarray(style_image).shape
        features = self.discriminator.aesthetic_features(style_image)
        return {
            level: resize_nearest(features, shape[2] // factor, shape[3] // factor)
            for level, factor in (("relu4_1", 8), ("relu5_1", 16))
        }

    def fused_feature(self, content_image, style_image, *,
                      taps_content=None, taps_style=None) -> Tensor:
        """Both attention levels plus fusion; the tensor fed to the decoder."""
        taps_c = taps_content if taps_content is not None else self.encoder.encode(content_image)
        taps_s = taps_style if taps_style is not None else self.encoder.encode(style_image)
        aesthetic = self.aesthetic_by_level(style_image, taps_style=taps_s)
        return self.aessa.fused_output(taps_c, taps_s, aesthetic)

    def generator_forward(self, content_image, style_image) -> Tensor:
        """Stylized image: decode(fuse(AesSA at both levels))."""
        return self.decoder.decode(self.fused_feature(content_image, style_image))

    # -- persistence ----------------------------------------------------------

    def archive_entries(self, step: int = 0) -> dict[str, np.ndarray]:
        entries = {name: p.data for name, p in self.all_parameters().items()}
        entries["meta.stage"] = np.array([float(self.stage)], dtype=np.float64)
        entries["meta.width_multiplier"] = np.array([self.width_multiplier], dtype=np.float64)
        entries["meta.step"] = np.array([float(step)], dtype=np.float64)
        return entries

    def save(self, path: str, step: int = 0,
             extra_entries: dict[str, np.ndarray] | None = None):
        entries = self.archive_entries(step)
        if extra_entries:
            entries.update(extra_entries)
        persist.save_archive_file(entries, path)

    def load_parameters(self, entries: dict[str, np.ndarray]):
        """Strict by-name load of every model tensor."""
        for name, param in self.all_parameters().items():
            if name not in entries:
                raise ShapeError(f"checkpoint is missing tensor {name!r}")
            value = entries[name]
            if tuple(value.shape) != tuple(param.data.shape):
                raise ShapeError(
                    f"shape mismatch for {name!r}: checkpoint {value.shape}, "
                    f"model expects {param.data.shape}"
                )
            param.data = value.astype(self.dtype, copy=True)

    @classmethod
    def from_entries(cls, entries: dict[str, np.ndarray], *,
                     stage: int | None = None, trainable: bool = True) -> "StyleTransferModels":
        if "meta.width_multiplier" not in entries:
            raise ShapeError("checkpoint has no meta.width_multiplier entry")
        multiplier = float(entries["meta.width_multiplier"][0])
        archived_stage = int(entries.get("meta.stage", np.array([1.0]))[0])
        models = cls(multiplier, stage=stage if stage is not None else archived_stage)
        models.load_parameters(entries)
        models.set_trainable(trainable)
        return models

    @classmethod
    def load(cls, path: str, *, stage: int | None = None,
             trainable: bool = False) -> "StyleTransferModels":
        return cls.from_entries(persist.load_archive_file(path),
                                stage=stage, trainable=trainable)

    @staticmethod
    def archived_step(entries: dict[str, np.ndarray]) -> int:
        return int(entries.get("meta.step", np.array([0.0]))[0])

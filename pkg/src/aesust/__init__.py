"""Aesthetic-enhanced universal style transfer.

A numpy implementation of an attention-based style transfer generator
(frozen multi-tap encoder, two-level aesthetic style attention, mirrored
decoder) trained adversarially against a three-scale aesthetic critic in
two stages, with runtime controls for stylization strength, style
interpolation, color preservation, and per-region styles.
"""

from .aessa import (
    AesSAParams,
    TwoLevelAesSA,
    aessa_forward,
    aesthetic_attention,
    aesthetic_enhance,
    channel_norm,
    devectorize,
    multi_level_fuse,
    style_attention,
    style_integrate,
    vectorize,
)
from .autodiff import Tensor
from .backbone import Decoder, Encoder, TAP_NAMES
from .controls import (
    RegionMaskSet,
    StyleBlend,
    color_preserve,
    interpolate_styles,
    spatial_stylize,
    stylize,
)
from .discriminator import AestheticDiscriminator
from .losses import (
    LossReport,
    LossWeights,
    adv_loss_discriminator,
    adv_loss_generator,
    ar1_loss,
    ar2_loss,
    content_loss,
    identity_loss,
    stage1_generator_objective,
    stage2_generator_objective,
    style_loss,
)
from .models import StyleTransferModels
from .persist import (
    decode_image,
    encode_image,
    load_archive,
    load_archive_file,
    save_archive,
    save_archive_file,
)
from .trainer import Batch, TrainConfig, generator_forward, prepare_batch, train, train_step

__version__ = "0.1.0"

__all__ = [
    "AesSAParams",
    "AestheticDiscriminator",
    "Batch",
    "Decoder",
    "Encoder",
    "LossReport",
    "LossWeights",
    "RegionMaskSet",
    "StyleBlend",
    "StyleTransferModels",
    "TAP_NAMES",
    "Tensor",
    "TrainConfig",
    "TwoLevelAesSA",
    "adv_loss_discriminator",
    "adv_loss_generator",
    "aessa_forward",
    "aesthetic_attention",
    "aesthetic_enhance",
    "ar1_loss",
    "ar2_loss",
    "channel_norm",
    "color_preserve",
    "content_loss",
    "decode_image",
    "devectorize",
    "encode_image",
    "generator_forward",
    "identity_loss",
    "interpolate_styles",
    "load_archive",
    "load_archive_file",
    "multi_level_fuse",
    "prepare_batch",
    "save_archive",
    "save_archive_file",
    "spatial_stylize",
    "stage1_generator_objective",
    "stage2_generator_objective",
    "style_attention",
    "style_integrate",
    "style_loss",
    "stylize",
    "train",
    "train_step",
    "vectorize",
]

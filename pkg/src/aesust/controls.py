"""Runtime stylization controls; no retraining involved.

All controls operate on the fused pre-decoder feature, so blends are exact
affine combinations at the feature level, and every control with neutral
parameters reproduces the plain generator output byte for byte. The CLI
and the HTTP service both funnel through :func:`render_request`, which
composes the controls in a fixed order: optional color alignment of each
style, then region masks or weight interpolation, then the strength blend
against the self-reconstruction feature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, resize_nearest
from .errors import ShapeError
from .models import StyleTransferModels

__all__ = ["StyleBlend", "RegionMaskSet", "stylize", "interpolate_styles",
           "color_preserve", "spatial_stylize", "render_request", "crop_to_grid"]

_WEIGHT_TOL = 1e-6
_EPS = 1e-8


@dataclass
class StyleBlend:
    """Style images with simplex interpolation weights."""

    styles: list
    weights: list

    def __post_init__(self):
        if len(self.styles) < 1:
            raise ValueError("need at least one style")
        if len(self.styles) != len(self.weights):
            raise ValueError(
                f"{len(self.styles)} styles but {len(self.weights)} weights"
            )
        if any(w < 0 for w in self.weights):
            raise ValueError(f"weights must be nonnegative, got {self.weights}")
        if abs(sum(self.weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got sum {sum(self.weights)}")


@dataclass
class RegionMaskSet:
    """Binary masks at content resolution, one per style.

    Masks must be pairwise disjoint and jointly cover the grid.
    """

    masks: list

    def __post_init__(self):
        arrays = [np.asarray(m) for m in self.masks]
        if not arrays:
            raise ValueError("need at least one mask")
        shape = arrays[0].shape
        for m in arrays:
            if m.shape != shape:
                raise ShapeError(f"mask shapes differ: {m.shape} vs {shape}")
            if not np.all(np.isin(np.unique(m), (0, 1))):
                raise ValueError("masks must be binary (0/1)")
        coverage = np.stack(arrays).astype(np.float64).sum(axis=0)
        if np.any(coverage > 1):
            raise ValueError("masks overlap")
        if np.any(coverage < 1):
            raise ValueError("masks do not cover the full grid")
        self.masks = [a.astype(np.float32) for a in arrays]


def _fused(models: StyleTransferModels, content_image, style_image) -> Tensor:
    return models.fused_feature(content_image, style_image)


def _blend_feature(content_image, blend: StyleBlend,
                   models: StyleTransferModels) -> Tensor:
    combined = None
    for style, weight in zip(blend.styles, blend.weights):
        if weight == 0.0:
            continue
        feature = _fused(models, content_image, style)
        if weight == 1.0:
            return feature
        term = weight * feature
        combined = term if combined is None else combined + term
    return combined


def _masked_feature(content_image, styles: list, masks: RegionMaskSet,
                    models: StyleTransferModels) -> Tensor:
    if len(styles) != len(masks.masks):
        raise ValueError(f"{len(styles)} styles but {len(masks.masks)} masks")
    content = np.asarray(content_image.data if isinstance(content_image, Tensor)
                         else content_image)
    if masks.masks[0].shape != content.shape[2:]:
        raise ShapeError(
            f"masks are {masks.masks[0].shape}, content grid is {content.shape[2:]}"
        )
    combined = None
    for style, mask in zip(styles, masks.masks):
        feature = _fused(models, content_image, style)
        h, w = feature.data.shape[2:]
        mask_small = resize_nearest(
            Tensor(mask[None, None, :, :].astype(feature.data.dtype)), h, w
        )
        term = feature * mask_small
        combined = term if combined is None else combined + term
    return combined


def _alpha_blend(feature: Tensor, content_image, alpha: float,
                 models: StyleTransferModels) -> Tensor:
    if alpha == 1.0:
        return feature
    reconstruction = _fused(models, content_image, content_image)
    if alpha == 0.0:
        return reconstruction
    return alpha * feature + (1.0 - alpha) * reconstruction


def stylize(content_image, style_image, alpha: float,
            models: StyleTransferModels) -> Tensor:
    """Blend between stylization (alpha=1) and self-reconstruction (alpha=0)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if alpha == 0.0:
        feature = _fused(models, content_image, content_image)
    else:
        feature = _alpha_blend(_fused(models, content_image, style_image),
                               content_image, alpha, models)
    return models.decoder.decode(feature)


def interpolate_styles(content_image, blend: StyleBlend,
                       models: StyleTransferModels) -> Tensor:
    """Decode the weight-blended fused features of several styles."""
    return models.decoder.decode(_blend_feature(content_image, blend, models))


def color_preserve(style_image, content_image, eps: float = _EPS) -> np.ndarray:
    """Shift the style image's per-channel mean/std onto the content's.

    Returns the color-aligned style image (clamped to [0, 1]); feed it to
    the stylizer as the style input.
    """
    style = np.asarray(style_image.data if isinstance(style_image, Tensor)
                       else style_image, dtype=np.float64)
    content = np.asarray(content_image.data if isinstance(content_image, Tensor)
                         else content_image, dtype=np.float64)
    if style.ndim != 4 or content.ndim != 4 or style.shape[1] != 3 or content.shape[1] != 3:
        raise ShapeError("color_preserve expects (B,3,H,W) images")
    mu_s = style.mean(axis=(2, 3), keepdims=True)
    sd_s = style.std(axis=(2, 3), keepdims=True)
    mu_c = content.mean(axis=(2, 3), keepdims=True)
    sd_c = content.std(axis=(2, 3), keepdims=True)
    aligned = (style - mu_s) * (sd_c / (sd_s + eps)) + mu_c
    return np.clip(aligned, 0.0, 1.0).astype(np.float32)


def spatial_stylize(content_image, styles: list, masks: RegionMaskSet,
                    models: StyleTransferModels) -> Tensor:
    """Compose per-style fused features under nearest-downsampled masks."""
    return models.decoder.decode(
        _masked_feature(content_image, styles, masks, models)
    )


def crop_to_grid(image: np.ndarray) -> np.ndarray:
    """Top-left crop of H and W down to multiples of 16."""
    arr = np.asarray(image)
    h = arr.shape[-2] - arr.shape[-2] % 16
    w = arr.shape[-1] - arr.shape[-1] % 16
    if h == 0 or w == 0:
        raise ShapeError(f"image {arr.shape[-2:]} is smaller than the 16px grid")
    return arr[..., :h, :w]


def render_request(content_image, styles: list, models: StyleTransferModels, *,
                   weights: list | None = None, alpha: float = 1.0,
                   preserve_color: bool = False,
                   masks: list | None = None) -> Tensor:
    """One entry point for every control combination (CLI and service)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if len(styles) < 1:
        raise ValueError("need at least one style")
    if preserve_color:
        styles = [Tensor(color_preserve(s, content_image)) for s in styles]
    if masks is not None:
        mask_set = masks if isinstance(masks, RegionMaskSet) else RegionMaskSet(masks)
        feature = _masked_feature(content_image, styles, mask_set, models)
    elif len(styles) == 1:
        if weights is not None and abs(sum(weights) - 1.0) > _WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1, got sum {sum(weights)}")
        feature = _fused(models, content_image, styles[0])
    else:
        if weights is None:
            raise ValueError("multiple styles need interpolation weights")
        blend = StyleBlend(styles, weights)
        feature = _blend_feature(content_image, blend, models)
    return models.decoder.decode(_alpha_blend(feature, content_image, alpha, models))

"""Aesthetic-aware style attention.

Two steps, each a residual attention block built from learnable 1x1
convolutions:

1. Global enhancement: a channel-to-channel attention between the
   aesthetic feature and the style feature re-mixes style channels, and
   the result is added back onto the style feature.
2. Local integration: a position-to-position attention between the
   (channel-normalized) content feature and enhanced style feature pulls
   style values onto content positions, added back onto the content
   feature.

Attention rows are softmax distributions: each aesthetic channel attends
over style channels, each content position over style positions. Queries
and keys of step 2 use channel-normalized features; values do not. Step 1
uses raw (un-normalized) features throughout.

One parameter set exists per feature level (relu4_1 and relu5_1); the two
levels are fused on the relu4_1 grid by a 3x3 convolution applied to the
sum of the relu4_1 output and the 2x-upsampled relu5_1 output.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Tensor, as_tensor, matmul, softmax, transpose, upsample_nearest
from .errors import ShapeError
from .nn import Conv2d, spatial_norm

__all__ = [
    "AesSAParams",
    "TwoLevelAesSA",
    "channel_norm",
    "vectorize",
    "devectorize",
    "aesthetic_attention",
    "aesthetic_enhance",
    "style_attention",
    "style_integrate",
    "aessa_forward",
    "multi_level_fuse",
]

LEVELS = ("relu4_1", "relu5_1")

# Row-chunk the position attention above this score-matrix size, but only
# when no gradient is required (inference path).
_CHUNK_ELEMENTS = 1 << 22


def channel_norm(feature, eps: float = 1e-5) -> Tensor:
    """Zero-mean unit-std per channel over spatial positions."""
    f = as_tensor(feature)
    if f.data.ndim == 3:
        return spatial_norm(f.reshape((1,) + f.data.shape), eps).reshape(f.data.shape)
    if f.data.ndim != 4:
        raise ShapeError(f"expected (B,C,H,W) or (C,H,W), got {f.data.shape}")
    return spatial_norm(f, eps)


def vectorize(feature) -> Tensor:
    """Flatten spatial dims row-major: (..., C, H, W) -> (..., C, H*W)."""
    f = as_tensor(feature)
    if f.data.ndim not in (3, 4):
        raise ShapeError(f"expected (B,C,H,W) or (C,H,W), got {f.data.shape}")
    lead = f.data.shape[:-2]
    return f.reshape(lead + (f.data.shape[-2] * f.data.shape[-1],))


def devectorize(matrix, h: int, w: int) -> Tensor:
    """Inverse of :func:`vectorize`; errors when h*w disagrees."""
    m = as_tensor(matrix)
    if m.data.shape[-1] != h * w:
        raise ShapeError(
            f"cannot reshape {m.data.shape[-1]} positions to {h}x{w}={h * w}"
        )
    return m.reshape(m.data.shape[:-1] + (h, w))


class AesSAParams:
    """Learnable convolutions of one attention level.

    Eight 1x1 convolutions (aesthetic/style/content/key/value transforms
    plus the two residual output projections) and the 3x3 fusion
    convolution used when this level hosts the multi-level merge.
    """

    _ONE_BY_ONE = ("f_a", "f_s1", "f_s2", "f_out1", "f_c", "f_sa1", "f_sa2", "f_out2")

    def __init__(self, channels: int, aesthetic_channels: int | None = None, *,
                 rng: np.random.Generator, dtype=np.float32):
        self.channels = channels
        self.aesthetic_channels = aesthetic_channels or channels
        for name in self._ONE_BY_ONE:
            cin = self.aesthetic_channels if name == "f_a" else channels
            setattr(self, name, Conv2d(cin, channels, 1, rng=rng, dtype=dtype))
        self.fuse = Conv2d(channels, channels, 3, padding=1, pad_mode="reflect",
                           rng=rng, dtype=dtype)

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for name in self._ONE_BY_ONE + ("fuse",):
            conv: Conv2d = getattr(self, name)
            out[f"{name}.weight"] = conv.weight
            out[f"{name}.bias"] = conv.bias
        return out

    def parameter_count(self) -> int:
        return sum(p.data.size for p in self.parameters().values())


def _check_enhance_inputs(f_s: Tensor, f_a: Tensor, params: AesSAParams):
    if f_s.data.ndim != 4 or f_a.data.ndim != 4:
        raise ShapeError("aesthetic_enhance expects batched (B,C,H,W) features")
    if f_s.data.shape[2:] != f_a.data.shape[2:] or f_s.data.shape[0] != f_a.data.shape[0]:
        raise ShapeError(
            f"style {f_s.data.shape} and aesthetic {f_a.data.shape} grids differ"
        )
    if f_a.data.shape[1] != params.aesthetic_channels:
        raise ShapeError(
            f"aesthetic feature has {f_a.data.shape[1]} channels, "
            f"params expect {params.aesthetic_channels}"
        )


def aesthetic_attention(style_feature, aesthetic_feature, params: AesSAParams) -> Tensor:
    """Channel-to-channel attention matrix (B, C, C); rows are distributions."""
    f_s = as_tensor(style_feature)
    f_a = as_tensor(aesthetic_feature)
    _check_enhance_inputs(f_s, f_a, params)
    a_hat = vectorize(params.f_a(f_a))
    s1_hat = vectorize(params.f_s1(f_s))
    return softmax(matmul(a_hat, transpose(s1_hat, (0, 2, 1))), axis=-1)


def aesthetic_enhance(style_feature, aesthetic_feature, params: AesSAParams) -> Tensor:
    """Globally re-mix style channels under aesthetic channel attention."""
    f_s = as_tensor(style_feature)
    f_a = as_tensor(aesthetic_feature)
    _check_enhance_inputs(f_s, f_a, params)
    h, w = f_s.data.shape[2:]
    attn = aesthetic_attention(f_s, f_a, params)       # (B,C,C)
    s2_hat = vectorize(params.f_s2(f_s))
    mixed = devectorize(matmul(attn, s2_hat), h, w)
    return params.f_out1(mixed) + f_s


def _chunked_position_attention(queries: np.ndarray, keys: np.ndarray,
                                values: np.ndarray) -> np.ndarray:
    """Row-blocked softmax attention; never materializes the full matrix."""
    b, nc, _ = queries.shape
    c = values.shape[1]
    ns = keys.shape[2]
    rows = max(1, _CHUNK_ELEMENTS // ns)
    out = np.empty((b, c, nc), dtype=values.dtype)
    for bi in range(b):
        for i0 in range(0, nc, rows):
            block = queries[bi, i0 : i0 + rows] @ keys[bi]
            block -= block.max(axis=1, keepdims=True)
            np.exp(block, out=block)
            block /= block.sum(axis=1, keepdims=True)
            out[bi, :, i0 : i0 + rows] = values[bi] @ block.T
    return out


def _check_integrate_inputs(f_c: Tensor, f_sa: Tensor):
    if f_c.data.ndim != 4 or f_sa.data.ndim != 4:
        raise ShapeError("style_integrate expects batched (B,C,H,W) features")
    if f_c.data.shape[1] != f_sa.data.shape[1]:
        raise ShapeError(
            f"channel mismatch: content {f_c.data.shape[1]} vs style {f_sa.data.shape[1]}"
        )


def style_attention(content_feature, enhanced_style, params: AesSAParams) -> Tensor:
    """Position-to-position attention matrix (B, HcWc, HsWs); rows are distributions."""
    f_c = as_tensor(content_feature)
    f_sa = as_tensor(enhanced_style)
    _check_integrate_inputs(f_c, f_sa)
    queries = vectorize(params.f_c(channel_norm(f_c)))
    keys = vectorize(params.f_sa1(channel_norm(f_sa)))
    return softmax(matmul(transpose(queries, (0, 2, 1)), keys), axis=-1)


def style_integrate(content_feature, enhanced_style, params: AesSAParams) -> Tensor:
    """Pull enhanced style values onto content positions by attention."""
    f_c = as_tensor(content_feature)
    f_sa = as_tensor(enhanced_style)
    _check_integrate_inputs(f_c, f_sa)
    hc, wc = f_c.data.shape[2:]
    queries = vectorize(params.f_c(channel_norm(f_c)))       # (B,C,Nc)
    keys = vectorize(params.f_sa1(channel_norm(f_sa)))       # (B,C,Ns)
    values = vectorize(params.f_sa2(f_sa))                   # (B,C,Ns)
    nc = queries.data.shape[2]
    ns = keys.data.shape[2]
    needs_grad = any(t.requires_grad for t in (queries, keys, values, f_c))
    if not needs_grad and nc * ns > _CHUNK_ELEMENTS:
        pulled = Tensor(
            _chunked_position_attention(
                queries.data.transpose(0, 2, 1), keys.data, values.data
            )
        )
    else:
        scores = matmul(transpose(queries, (0, 2, 1)), keys)  # (B,Nc,Ns)
        attn = softmax(scores, axis=-1)
        pulled = matmul(values, transpose(attn, (0, 2, 1)))   # (B,C,Nc)
    mixed = devectorize(pulled, hc, wc)
    return params.f_out2(mixed) + f_c


def aessa_forward(content_feature, style_feature, aesthetic_feature,
                  params: AesSAParams) -> Tensor:
    """Global enhancement followed by local integration."""
    enhanced = aesthetic_enhance(style_feature, aesthetic_feature, params)
    return style_integrate(content_feature, enhanced, params)


def multi_level_fuse(out_r41, out_r51, params: AesSAParams) -> Tensor:
    """Merge the relu5_1 output onto the relu4_1 grid.

    ``params`` is the relu4_1-level parameter set; its fusion convolution
    is the one applied.
    """
    a = as_tensor(out_r41)
    b = as_tensor(out_r51)
    if a.data.shape[1] != b.data.shape[1]:
        raise ShapeError(
            f"channel mismatch between levels: {a.data.shape[1]} vs {b.data.shape[1]}"
        )
    if (a.data.shape[2] != 2 * b.data.shape[2]) or (a.data.shape[3] != 2 * b.data.shape[3]):
        raise ShapeError(
            f"relu5_1 grid {b.data.shape[2:]} must be half of relu4_1 grid {a.data.shape[2:]}"
        )
    return params.fuse(a + upsample_nearest(b, 2))


class TwoLevelAesSA:
    """Attention parameters for both feature levels plus the fusion step."""

    def __init__(self, channels_by_level: dict[str, int],
                 aesthetic_channels: int | None = None, *,
                 rng: np.random.Generator, dtype=np.float32):
        self.levels = {
            level: AesSAParams(channels_by_level[level], aesthetic_channels,
                               rng=rng, dtype=dtype)
            for level in LEVELS
        }

    def parameters(self) -> dict[str, Tensor]:
        out: dict[str, Tensor] = {}
        for level in LEVELS:
            for name, p in self.levels[level].parameters().items():
                out[f"aessa.{level}.{name}"] = p
        return out

    def fused_output(self, taps_content, taps_style, aesthetic_by_level) -> Tensor:
        """Run both levels and fuse onto the relu4_1 grid."""
        outputs = {
            level: aessa_forward(
                taps_content[level], taps_style[level],
                aesthetic_by_level[level], self.levels[level],
            )
            for level in LEVELS
        }
        return multi_level_fuse(outputs["relu4_1"], outputs["relu5_1"],
                                self.levels["relu4_1"])

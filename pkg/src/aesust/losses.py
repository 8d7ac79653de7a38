"""Training objectives for both stages.

Norm convention: ``||.||_2`` is the square root of the sum of squared
elements over the whole tensor (not a per-element mean). Channel means and
standard deviations are taken over spatial positions, per sample and
channel; standard deviations use a 1e-5 variance floor.

Adversarial losses apply the sigmoid internally, clamp probabilities to
[1e-7, 1 - 1e-7], average over patch positions within each scale, and then
average over scales. The generator minimizes the non-saturating form
``-log sigma(fake)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .aessa import channel_norm
from .autodiff import Tensor, as_tensor, clip, log, mean, sigmoid, sqrt, tensor_sum

__all__ = [
    "LossWeights",
    "LossReport",
    "l2_norm",
    "content_loss",
    "style_loss",
    "identity_loss",
    "adv_loss_discriminator",
    "adv_loss_generator",
    "ar1_loss",
    "ar2_loss",
    "stage1_generator_objective",
    "stage2_generator_objective",
    "STAGE1_TERMS",
    "STAGE2_TERMS",
]

CONTENT_LAYERS = ("relu4_1", "relu5_1")
STYLE_LAYERS = ("relu1_1", "relu2_1", "relu3_1", "relu4_1", "relu5_1")

STAGE1_TERMS = ("adv", "content", "style", "identity")
STAGE2_TERMS = ("adv", "content", "style", "ar1", "ar2")

_PROB_FLOOR = 1e-7
_STD_EPS = 1e-5


@dataclass
class LossWeights:
    """Trade-off weights; lambda1-4 drive stage I, lambda5-9 stage II."""

    lambda1: float = 5.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    lambda4: float = 50.0
    lambda5: float = 5.0
    lambda6: float = 1.0
    lambda7: float = 1.0
    lambda8: float = 0.5
    lambda9: float = 500.0


@dataclass
class LossReport:
    """Per-step named loss terms and their weighted total.

    ``terms`` holds exactly the active stage's objective terms; ``extra``
    carries diagnostics (critic loss, reconstruction error) that do not
    enter the weighted total.
    """

    step: int
    stage: int
    terms: dict[str, float] = field(default_factory=dict)
    total: float = 0.0
    extra: dict[str, float] = field(default_factory=dict)

    def lines(self) -> list[str]:
        rows = [f"{self.step}\t{name}\t{value:.10g}" for name, value in self.terms.items()]
        rows.append(f"{self.step}\ttotal\t{self.total:.10g}")
        return rows


def l2_norm(t) -> Tensor:
    t = as_tensor(t)
    return sqrt(tensor_sum(t * t))


def _channel_stats(f) -> tuple[Tensor, Tensor]:
    """Per-(sample, channel) spatial mean and std."""
    f = as_tensor(f)
    m = mean(f, axis=(2, 3))
    centered = f - mean(f, axis=(2, 3), keepdims=True)
    var = mean(centered * centered, axis=(2, 3))
    return m, sqrt(var + _STD_EPS)


def _check_same_shape(a: Tensor, b: Tensor, what: str):
    if a.data.shape != b.data.shape:
        from .errors import ShapeError

        raise ShapeError(f"{what}: shape {a.data.shape} vs {b.data.shape}")


def content_loss(pyramid_result: dict, pyramid_content: dict) -> Tensor:
    """Normalized-feature distance on the two deepest taps."""
    total = 0.0
    for layer in CONTENT_LAYERS:
        a, b = as_tensor(pyramid_result[layer]), as_tensor(pyramid_content[layer])
        _check_same_shape(a, b, f"content_loss at {layer}")
        total = total + l2_norm(channel_norm(a) - channel_norm(b))
    return total


def style_loss(pyramid_result: dict, pyramid_style: dict) -> Tensor:
    """Channel mean/std matching across all five taps."""
    total = 0.0
    for layer in STYLE_LAYERS:
        a, b = as_tensor(pyramid_result[layer]), as_tensor(pyramid_style[layer])
        _check_same_shape(a, b, f"style_loss at {layer}")
        mu_a, sd_a = _channel_stats(a)
        mu_b, sd_b = _channel_stats(b)
        total = total + l2_norm(mu_a - mu_b) + l2_norm(sd_a - sd_b)
    return total


def identity_loss(recon_content, content, recon_style, style) -> Tensor:
    a, b = as_tensor(recon_content), as_tensor(content)
    c, d = as_tensor(recon_style), as_tensor(style)
    _check_same_shape(a, b, "identity_loss content pair")
    _check_same_shape(c, d, "identity_loss style pair")
    return l2_norm(a - b) + l2_norm(c - d)


def _clamped_prob(logits) -> Tensor:
    return clip(sigmoid(as_tensor(logits)), _PROB_FLOOR, 1.0 - _PROB_FLOOR)


def adv_loss_discriminator(real_logits: list, fake_logits: list) -> Tensor:
    """Critic loss: patch-mean of -log p(real) - log(1 - p(fake)), scale-averaged."""
    total = 0.0
    for real, fake in zip(real_logits, fake_logits):
        p_real = _clamped_prob(real)
        p_fake = _clamped_prob(fake)
        total = total + mean(-log(p_real)) + mean(-log(1.0 - p_fake))
    return total * (1.0 / len(real_logits))


def adv_loss_generator(fake_logits: list) -> Tensor:
    """Non-saturating generator loss: patch-mean of -log p(fake), scale-averaged."""
    total = 0.0
    for fake in fake_logits:
        total = total + mean(-log(_clamped_prob(fake)))
    return total * (1.0 / len(fake_logits))


def ar1_loss(stylized, restylized) -> Tensor:
    """Distance between the stylized image and its self-restylization."""
    a, b = as_tensor(stylized), as_tensor(restylized)
    _check_same_shape(a, b, "ar1_loss")
    return l2_norm(a - b)


def ar2_loss(features_style, features_result) -> Tensor:
    """Channel mean/std matching between two aesthetic feature maps."""
    a, b = as_tensor(features_style), as_tensor(features_result)
    _check_same_shape(a, b, "ar2_loss")
    mu_a, sd_a = _channel_stats(a)
    mu_b, sd_b = _channel_stats(b)
    return l2_norm(mu_a - mu_b) + l2_norm(sd_a - sd_b)


def _weighted(terms: dict, spec: list[tuple[str, float]], stage: int):
    missing = [name for name, _ in spec if name not in terms]
    if missing:
        raise ValueError(f"stage {stage} objective missing terms: {missing}")
    total = 0.0
    for name, weight in spec:
        total = total + weight * terms[name]
    return total


def stage1_generator_objective(terms: dict, w: LossWeights):
    """lambda1*adv + lambda2*content + lambda3*style + lambda4*identity."""
    spec = [("adv", w.lambda1), ("content", w.lambda2),
            ("style", w.lambda3), ("identity", w.lambda4)]
    return _weighted(terms, spec, stage=1)


def stage2_generator_objective(terms: dict, w: LossWeights):
    """lambda5*adv + lambda6*content + lambda7*style + lambda8*ar1 + lambda9*ar2."""
    spec = [("adv", w.lambda5), ("content", w.lambda6),
            ("style", w.lambda7), ("ar1", w.lambda8), ("ar2", w.lambda9)]
    return _weighted(terms, spec, stage=2)

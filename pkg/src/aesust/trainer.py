"""Two-stage training driver.

Stage I pre-trains the generator with the style taps standing in for the
aesthetic feature, plus the identity loss. Stage II fine-tunes from a
stage-I checkpoint with critic-extracted aesthetic features and the two
aesthetic regularizations. Every iteration runs one critic update (real =
style batch, fake = detached generator output) followed by one generator
update with the critic frozen.

Batches are deterministic: step ``k`` draws from a fresh generator seeded
with ``(seed, k)``, so interrupted runs resume on the exact sample stream.
"""

from __future__ import annotations

import dataclasses
import logging
import math
import os
import typing
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import persist
from .autodiff import Tensor
from .errors import ConfigError, NumericError
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
from .nn import Adam

log = logging.getLogger(__name__)

__all__ = ["TrainConfig", "Batch", "TrainState", "prepare_batch",
           "generator_forward", "train_step", "train"]

_IMAGE_EXTENSIONS = {".png", ".jpg", ".jpeg"}


@dataclass
class TrainConfig:
    stage: int = 1
    lr: float = 0.0001
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 4
    iterations: int = 80000
    resize: int = 512
    crop: int = 256
    seed: int = 0
    width_multiplier: float = 1.0
    adv: bool = True
    ar1: bool = True
    ar2: bool = True
    identity: bool = True
    lambda1: float = 5.0
    lambda2: float = 1.0
    lambda3: float = 1.0
    lambda4: float = 50.0
    lambda5: float = 5.0
    lambda6: float = 1.0
    lambda7: float = 1.0
    lambda8: float = 0.5
    lambda9: float = 500.0
    save_optimizer: bool = True
    checkpoint_every: int = 1000

    def __post_init__(self):
        if self.stage not in (1, 2):
            raise ConfigError(f"stage must be 1 or 2, got {self.stage}")
        if self.crop > self.resize:
            raise ConfigError(f"crop {self.crop} exceeds resize {self.resize}")
        if self.crop % 16 or self.crop < 64:
            raise ConfigError(f"crop must be a multiple of 16 and >= 64, got {self.crop}")

    def weights(self) -> LossWeights:
        return LossWeights(self.lambda1, self.lambda2, self.lambda3, self.lambda4,
                           self.lambda5, self.lambda6, self.lambda7, self.lambda8,
                           self.lambda9)

    @classmethod
    def from_mapping(cls, values: dict[str, str]) -> "TrainConfig":
        hints = typing.get_type_hints(cls)
        names = {f.name for f in dataclasses.fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            kind = hints[key]
            try:
                if kind is bool:
                    lowered = raw.lower()
                    if lowered in ("true", "1", "yes"):
                        kwargs[key] = True
                    elif lowered in ("false", "0", "no"):
                        kwargs[key] = False
                    else:
                        raise ValueError(f"not a boolean: {raw!r}")
                elif kind is int:
                    kwargs[key] = int(raw)
                else:
                    kwargs[key] = float(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key!r}: {exc}") from exc
        return cls(**kwargs)

    @classmethod
    def from_file(cls, path: str) -> "TrainConfig":
        return cls.from_mapping(persist.read_config_file(path))


@dataclass
class Batch:
    content: np.ndarray  # (B, 3, crop, crop) float32 in [0, 1]
    style: np.ndarray


def _list_images(directory: str) -> list[str]:
    files = sorted(
        os.path.join(directory, f)
        for f in os.listdir(directory)
        if os.path.splitext(f)[1].lower() in _IMAGE_EXTENSIONS
    )
    if not files:
        raise FileNotFoundError(f"no images found in {directory}")
    return files


def _load_resized(path: str, smaller_edge: int, crop: int) -> np.ndarray:
    """Decode, rescale the smaller edge, guarantee both edges >= crop."""
    with Image.open(path) as img:
        rgb = img.convert("RGB")
        w, h = rgb.size
        scale = smaller_edge / min(w, h)
        new_w, new_h = max(1, round(w * scale)), max(1, round(h * scale))
        if min(new_w, new_h) < crop:
            bump = crop / min(new_w, new_h)
            new_w, new_h = math.ceil(new_w * bump), math.ceil(new_h * bump)
        resized = rgb.resize((new_w, new_h), Image.BILINEAR)
        return np.asarray(resized, dtype=np.float32).transpose(2, 0, 1) / 255.0


def _sample_crops(files: list[str], count: int, cfg: TrainConfig,
                  rng: np.random.Generator) -> np.ndarray:
    out = np.empty((count, 3, cfg.crop, cfg.crop), dtype=np.float32)
    bad: set[str] = set()
    for i in range(count):
        while True:
            usable = [f for f in files if f not in bad]
            if not usable:
                raise FileNotFoundError(f"no decodable images among {len(files)} files")
            path = usable[int(rng.integers(0, len(usable)))]
            try:
                arr = _load_resized(path, cfg.resize, cfg.crop)
                break
            except (UnidentifiedImageError, OSError) as exc:
                log.warning("skipping undecodable image %s: %s", path, exc)
                bad.add(path)
        top = int(rng.integers(0, arr.shape[1] - cfg.crop + 1))
        left = int(rng.integers(0, arr.shape[2] - cfg.crop + 1))
        out[i] = arr[:, top : top + cfg.crop, left : left + cfg.crop]
    return out


def prepare_batch(content_dir: str, style_dir: str, cfg: TrainConfig,
                  rng: np.random.Generator) -> Batch:
    """Aspect-preserving resize of the smaller edge, then random crops."""
    content_files = _list_images(content_dir)
    style_files = _list_images(style_dir)
    return Batch(
        content=_sample_crops(content_files, cfg.batch_size, cfg, rng),
        style=_sample_crops(style_files, cfg.batch_size, cfg, rng),
    )


def generator_forward(models: StyleTransferModels, content_image, style_image) -> Tensor:
    return models.generator_forward(content_image, style_image)


@dataclass
class TrainState:
    models: StyleTransferModels
    opt_g: Adam
    opt_d: Adam
    step: int = 0


def _require_finite(name: str, value: float):
    if not math.isfinite(value):
        raise NumericError(f"loss term {name!r} became non-finite ({value})")


def _zero_value(models: StyleTransferModels) -> Tensor:
    return Tensor(np.zeros((), dtype=models.dtype))


def train_step(batch: Batch, cfg: TrainConfig, state: TrainState) -> LossReport:
    """One critic update then one generator update."""
    models = state.models
    content = Tensor(batch.content)
    style = Tensor(batch.style)
    extra: dict[str, float] = {}

    if cfg.adv:
        fake = models.generator_forward(content, style).detach()
        d_loss = adv_loss_discriminator(
            models.discriminator.discriminate(style),
            models.discriminator.discriminate(fake),
        )
        _require_finite("disc_adv", float(d_loss.data))
        d_loss.backward()
        state.opt_d.step()
        state.opt_d.zero_grad()
        extra["disc_adv"] = float(d_loss.data)

    taps_c = models.encoder.encode(content)
    taps_s = models.encoder.encode(style)
    stylized = models.decoder.decode(
        models.fused_feature(content, style, taps_content=taps_c, taps_style=taps_s)
    )
    taps_cs = models.encoder.encode(stylized)

    terms: dict[str, Tensor] = {
        "content": content_loss(taps_cs, taps_c),
        "style": style_loss(taps_cs, taps_s),
    }
    if cfg.adv:
        terms["adv"] = adv_loss_generator(models.discriminator.discriminate(stylized))
    else:
        terms["adv"] = _zero_value(models)

    if cfg.stage == 1:
        if cfg.identity:
            recon_c = models.decoder.decode(
                models.fused_feature(content, content, taps_content=taps_c, taps_style=taps_c)
            )
            recon_s = models.decoder.decode(
                models.fused_feature(style, style, taps_content=taps_s, taps_style=taps_s)
            )
            terms["identity"] = identity_loss(recon_c, content, recon_s, style)
            extra["identity_mse"] = float(np.mean((recon_c.data - batch.content) ** 2))
        else:
            terms["identity"] = _zero_value(models)
        total = stage1_generator_objective(terms, cfg.weights())
    else:
        if cfg.ar1:
            restylized = models.generator_forward(stylized, stylized)
            terms["ar1"] = ar1_loss(stylized, restylized)
        else:
            terms["ar1"] = _zero_value(models)
        if cfg.ar2:
            terms["ar2"] = ar2_loss(
                models.discriminator.aesthetic_features(style),
                models.discriminator.aesthetic_features(stylized),
            )
        else:
            terms["ar2"] = _zero_value(models)
        total = stage2_generator_objective(terms, cfg.weights())

    for name, term in terms.items():
        _require_finite(name, float(term.data))
    _require_finite("total", float(total.data))

    total.backward()
    state.opt_g.step()
    state.opt_g.zero_grad()
    # Critic gradients from the generator objective are byproducts; the
    # critic itself is updated only in the adversarial step above.
    for p in models.discriminator_parameters().values():
        p.grad = None

    report = LossReport(
        step=state.step,
        stage=cfg.stage,
        terms={name: float(t.data) for name, t in terms.items()},
        total=float(total.data),
    )
    report.extra = extra
    return report


def _optimizer_entries(state: TrainState) -> dict[str, np.ndarray]:
    entries = state.opt_g.state_entries("optim.g")
    entries.update(state.opt_d.state_entries("optim.d"))
    return entries


def _init_state(cfg: TrainConfig, resume: str | None) -> TrainState:
    if resume is None:
        if cfg.stage == 2:
            raise ConfigError("stage 2 requires a stage-1 checkpoint to resume from")
        models = StyleTransferModels(cfg.width_multiplier, seed=cfg.seed, stage=1)
        start = 0
        entries = None
    else:
        entries = persist.load_archive_file(resume)
        archived_stage = int(entries["meta.stage"][0])
        if cfg.stage == 1 and archived_stage != 1:
            raise ConfigError("cannot resume a stage-1 run from a stage-2 checkpoint")
        models = StyleTransferModels.from_entries(entries, stage=cfg.stage)
        start = StyleTransferModels.archived_step(entries) if archived_stage == cfg.stage else 0
    opt_g = Adam(models.generator_parameters(), cfg.lr, cfg.beta1, cfg.beta2)
    opt_d = Adam(models.discriminator_parameters(), cfg.lr, cfg.beta1, cfg.beta2)
    state = TrainState(models=models, opt_g=opt_g, opt_d=opt_d, step=start)
    if (entries is not None and cfg.save_optimizer and start > 0
            and "optim.g.step" in entries):
        opt_g.load_state_entries("optim.g", entries)
        opt_d.load_state_entries("optim.d", entries)
    return state


def train(cfg: TrainConfig, content_dir: str, style_dir: str, out_path: str,
          resume: str | None = None, metrics_path: str | None = None,
          on_report=None) -> TrainState:
    """Run ``cfg.iterations`` steps, checkpointing periodically and at the end."""
    state = _init_state(cfg, resume)
    metrics = open(metrics_path, "a", encoding="utf-8") if metrics_path else None
    try:
        while state.step < cfg.iterations:
            state.step += 1
            rng = np.random.default_rng([cfg.seed, state.step])
            batch = prepare_batch(content_dir, style_dir, cfg, rng)
            report = train_step(batch, cfg, state)
            if metrics:
                for line in report.lines():
                    metrics.write(line + "\n")
                for name, value in report.extra.items():
                    metrics.write(f"{report.step}\t{name}\t{value:.10g}\n")
                metrics.flush()
            if on_report is not None:
                on_report(report)
            if state.step % cfg.checkpoint_every == 0 or state.step == cfg.iterations:
                extras = _optimizer_entries(state) if cfg.save_optimizer else None
                state.models.save(out_path, step=state.step, extra_entries=extras)
    finally:
        if metrics:
            metrics.close()
    return state

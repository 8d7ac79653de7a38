"""Shared fixtures: desk-scale models and a synthetic image corpus."""

from __future__ import annotations

import numpy as np
import pytest
from PIL import Image

from aesust.models import StyleTransferModels


def synth_image(seed: int, size: tuple[int, int] = (96, 80)) -> np.ndarray:
    """Deterministic multi-band test pattern, (3, H, W) float32 in [0, 1]."""
    rng = np.random.default_rng(seed)
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.stack([
        0.5 + 0.4 * np.sin(2 * np.pi * (xx / w * rng.uniform(1, 3) + rng.random())),
        0.5 + 0.4 * np.cos(2 * np.pi * (yy / h * rng.uniform(1, 3) + rng.random())),
        0.5 + 0.3 * np.sin(2 * np.pi * ((xx + yy) / (h + w) * rng.uniform(1, 4))),
    ])
    img += rng.normal(0.0, 0.05, img.shape)
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def write_corpus(root, n: int = 8, size=(96, 80), seed0: int = 0) -> str:
    root.mkdir(parents=True, exist_ok=True)
    for i in range(n):
        arr = (synth_image(seed0 + i, size) * 255).astype(np.uint8).transpose(1, 2, 0)
        Image.fromarray(arr).save(root / f"img{i}.png")
    return str(root)


@pytest.fixture(scope="session")
def corpus_dirs(tmp_path_factory):
    base = tmp_path_factory.mktemp("corpus")
    content = write_corpus(base / "content", seed0=100)
    style = write_corpus(base / "style", size=(120, 96), seed0=200)
    return content, style


@pytest.fixture(scope="session")
def desk_models() -> StyleTransferModels:
    """Untrained 1/8-width bundle for structural and control tests."""
    models = StyleTransferModels(0.125, seed=42, stage=1)
    models.set_trainable(False)
    return models


@pytest.fixture()
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)

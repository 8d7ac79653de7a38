"""Prepare an integration fixture for the playground tests.

Synthesizes a small corpus, trains a 2-iteration desk checkpoint through
the CLI, and renders the reference stylizations at alpha 0 and 1 with the
CLI. Usage: python prepare_fixture.py OUTPUT_DIR
"""

import pathlib
import sys

import numpy as np
from PIL import Image

from aesust.cli import main


def synthesize(path: pathlib.Path, seed: int, size=(96, 80)):
    rng = np.random.default_rng(seed)
    h, w = size
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.stack([
        0.5 + 0.4 * np.sin(2 * np.pi * (xx / w * rng.uniform(1, 3) + rng.random())),
        0.5 + 0.4 * np.cos(2 * np.pi * (yy / h * rng.uniform(1, 3) + rng.random())),
        0.5 + 0.3 * np.sin(2 * np.pi * ((xx + yy) / (h + w) * rng.uniform(1, 4))),
    ]) + rng.normal(0, 0.05, (3, h, w))
    arr = (np.clip(img, 0, 1) * 255).astype(np.uint8).transpose(1, 2, 0)
    Image.fromarray(arr).save(path)


def run(out_dir: str):
    root = pathlib.Path(out_dir)
    content_dir = root / "content"
    style_dir = root / "style"
    content_dir.mkdir(parents=True, exist_ok=True)
    style_dir.mkdir(parents=True, exist_ok=True)
    for i in range(4):
        synthesize(content_dir / f"c{i}.png", 300 + i)
        synthesize(style_dir / f"s{i}.png", 400 + i)

    config = root / "train.cfg"
    config.write_text(
        "width_multiplier = 0.125\ncrop = 64\nresize = 72\n"
        "batch_size = 2\niterations = 2\nseed = 5\ncheckpoint_every = 2\n"
    )
    checkpoint = root / "checkpoint.aesu"
    assert main(["train", "--stage", "1", "--config", str(config),
                 "--content-dir", str(content_dir), "--style-dir", str(style_dir),
                 "--out", str(checkpoint), "--quiet"]) == 0

    for alpha in ("0.0", "1.0"):
        assert main(["stylize", "--checkpoint", str(checkpoint),
                     "--content", str(content_dir / "c0.png"),
                     "--style", str(style_dir / "s0.png"),
                     "--alpha", alpha,
                     "--out", str(root / f"cli_alpha_{alpha}.png")]) == 0
    print("fixture ready")


if __name__ == "__main__":
    run(sys.argv[1])

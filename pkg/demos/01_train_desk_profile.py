"""Train both stages at desk scale on a synthesized corpus.

Walks the full two-stage recipe end to end in a few minutes on a CPU:

1. synthesize a small corpus of "photos" and "paintings",
2. stage I: pre-train attention + decoder with the style taps standing in
   for the aesthetic feature, identity loss active,
3. stage II: fine-tune from the stage-I checkpoint with critic-extracted
   aesthetic features and both aesthetic regularizations.

Outputs land in ./demo_out/: two checkpoints, metrics logs, and a loss
curve plot if matplotlib is importable.
"""

import pathlib

import numpy as np
from PIL import Image

from aesust.trainer import TrainConfig, train

OUT = pathlib.Path(__file__).resolve().parent / "demo_out"


def synthesize(path: pathlib.Path, seed: int, size=(96, 80)):
    """Banded sinusoid pattern with noise; stands in for a real photo."""
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


def main():
    content_dir = OUT / "content"
    style_dir = OUT / "style"
    content_dir.mkdir(parents=True, exist_ok=True)
    style_dir.mkdir(parents=True, exist_ok=True)
    for i in range(8):
        synthesize(content_dir / f"photo{i}.png", 100 + i)
        synthesize(style_dir / f"painting{i}.png", 200 + i, size=(120, 96))
    print(f"corpus: 8 content + 8 style images under {OUT}")

    cfg = dict(batch_size=2, iterations=500, resize=72, crop=64,
               width_multiplier=0.125, seed=7, checkpoint_every=250)

    totals1 = []
    print("stage I: pre-training (style taps as aesthetic input, identity loss on)")
    train(TrainConfig(stage=1, **cfg), str(content_dir), str(style_dir),
          str(OUT / "stage1.aesu"), metrics_path=str(OUT / "stage1.metrics.log"),
          on_report=lambda r: totals1.append(r.total) or (
              r.step % 100 == 0 and print(f"  step {r.step}: total {r.total:.1f}")))

    totals2 = []
    print("stage II: fine-tuning (critic features as aesthetic input, AR losses on)")
    train(TrainConfig(stage=2, **cfg), str(content_dir), str(style_dir),
          str(OUT / "stage2.aesu"), resume=str(OUT / "stage1.aesu"),
          metrics_path=str(OUT / "stage2.metrics.log"),
          on_report=lambda r: totals2.append(r.total) or (
              r.step % 100 == 0 and print(f"  step {r.step}: total {r.total:.1f}")))

    print(f"stage I objective: {totals1[0]:.1f} -> {np.mean(totals1[-20:]):.1f}")
    print(f"stage II objective: {totals2[0]:.1f} -> {np.mean(totals2[-20:]):.1f}")
    print(f"checkpoints: {OUT/'stage1.aesu'} and {OUT/'stage2.aesu'}")

    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
        for ax, totals, title in ((axes[0], totals1, "stage I"),
                                  (axes[1], totals2, "stage II")):
            ax.plot(totals, lw=0.7)
            ax.set_title(f"{title} weighted objective")
            ax.set_xlabel("step")
        fig.tight_layout()
        fig.savefig(OUT / "loss_curves.png", dpi=120)
        print(f"loss curves: {OUT/'loss_curves.png'}")
    except ImportError:
        print("matplotlib not installed; skipping the loss-curve plot")


if __name__ == "__main__":
    main()

"""Command-line entry points: train, stylize, selfcheck, serve."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import persist
from .autodiff import Tensor
from .controls import crop_to_grid, render_request
from .errors import ArchiveError, ConfigError, ImageFormatError, NumericError, ShapeError
from .models import StyleTransferModels
from .trainer import TrainConfig, train

_USER_ERRORS = (ArchiveError, ConfigError, ImageFormatError, NumericError,
                ShapeError, ValueError, FileNotFoundError)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aesust",
                                     description="aesthetic-enhanced universal style transfer")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training stage")
    p_train.add_argument("--stage", type=int, choices=(1, 2), required=True)
    p_train.add_argument("--config", required=True, help="key = value config file")
    p_train.add_argument("--content-dir", required=True)
    p_train.add_argument("--style-dir", required=True)
    p_train.add_argument("--out", required=True, help="checkpoint archive path")
    p_train.add_argument("--resume", help="checkpoint to continue from "
                                          "(required for stage 2)")
    p_train.add_argument("--metrics", help="metrics log path (default: <out>.metrics.log)")
    p_train.add_argument("--quiet", action="store_true")

    p_sty = sub.add_parser("stylize", help="stylize one content image")
    p_sty.add_argument("--checkpoint", required=True)
    p_sty.add_argument("--content", required=True)
    p_sty.add_argument("--style", action="append", required=True,
                       help="style image; repeat for interpolation or masks (max 4)")
    p_sty.add_argument("--alpha", type=float, default=1.0)
    p_sty.add_argument("--weights", help="comma-separated interpolation weights")
    p_sty.add_argument("--preserve-color", action="store_true")
    p_sty.add_argument("--mask", action="append",
                       help="grayscale PNG mask (>=128 selects); repeat, one per style")
    p_sty.add_argument("--out", required=True, help="output PNG path")

    p_check = sub.add_parser("selfcheck", help="run the invariant and gradient suites")
    p_check.add_argument("--only", action="append", help="run only the named checks")

    p_serve = sub.add_parser("serve", help="HTTP stylization service")
    p_serve.add_argument("--checkpoint", required=True)
    p_serve.add_argument("--port", type=int, required=True)
    p_serve.add_argument("--max-edge", type=int, default=1024)
    return parser


def _load_image(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        return persist.decode_image(fh.read())


def _load_mask(path: str, shape: tuple[int, int]) -> np.ndarray:
    arr = _load_image(path)[0]  # (3, H, W)
    gray = arr.mean(axis=0)
    gray = crop_to_grid(gray[None])[0]
    if gray.shape != shape:
        raise ShapeError(f"mask {path} is {gray.shape}, content grid is {shape}")
    return (gray >= 128.0 / 255.0).astype(np.float32)


def cmd_train(args) -> int:
    if args.stage == 2 and not args.resume:
        print("error: --stage 2 requires --resume with a stage-1 checkpoint",
              file=sys.stderr)
        return 2
    cfg = TrainConfig.from_mapping(
        {**persist.read_config_file(args.config), "stage": str(args.stage)}
    )
    metrics = args.metrics or f"{args.out}.metrics.log"

    def report(r):
        if not args.quiet and (r.step % 50 == 0 or r.step == 1):
            print(f"step {r.step}/{cfg.iterations} total {r.total:.4g}")

    train(cfg, args.content_dir, args.style_dir, args.out,
          resume=args.resume, metrics_path=metrics, on_report=report)
    if not args.quiet:
        print(f"checkpoint written to {args.out}")
    return 0


def cmd_stylize(args) -> int:
    if len(args.style) > 4:
        raise ValueError(f"at most 4 styles, got {len(args.style)}")
    models = StyleTransferModels.load(args.checkpoint)
    content = Tensor(crop_to_grid(_load_image(args.content)))
    styles = [Tensor(crop_to_grid(_load_image(p))) for p in args.style]
    weights = None
    if args.weights:
        weights = [float(w) for w in args.weights.split(",")]
    masks = None
    if args.mask:
        grid = content.data.shape[2:]
        masks = [_load_mask(p, grid) for p in args.mask]
    out = render_request(content, styles, models, weights=weights,
                         alpha=args.alpha, preserve_color=args.preserve_color,
                         masks=masks)
    with open(args.out, "wb") as fh:
        fh.write(persist.encode_image(out.data))
    print(f"wrote {args.out}")
    return 0


def cmd_selfcheck(args) -> int:
    from .selfcheck import CHECKS, run_selfcheck

    names = None
    if args.only:
        unknown = [n for n in args.only if n not in CHECKS]
        if unknown:
            print(f"error: unknown checks {unknown}; available: {sorted(CHECKS)}",
                  file=sys.stderr)
            return 2
        names = args.only
    results = run_selfcheck(names)
    width = max(len(name) for name, _, _ in results)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL':4s}  {name:{width}s}  {detail}")
    failed = sum(1 for _, ok, _ in results if not ok)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 0 if failed == 0 else 1


def cmd_serve(args) -> int:
    from .service import create_server

    server = create_server(args.checkpoint, port=args.port, max_edge=args.max_edge)
    host, port = server.server_address[:2]
    print(f"serving on http://{host}:{port} (checkpoint {args.checkpoint})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"train": cmd_train, "stylize": cmd_stylize,
               "selfcheck": cmd_selfcheck, "serve": cmd_serve}[args.command]
    try:
        return handler(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

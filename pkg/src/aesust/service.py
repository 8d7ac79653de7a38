"""HTTP stylization service.

Endpoints:

    POST /api/stylize   multipart/form-data -> PNG bytes
                        fields: content (file), style (file, 1-4 repeats),
                        alpha, weights ("w1,w2,..."), color_preserve,
                        mask (file, repeats, one per style)
    GET  /api/health    {"status": "ok", "checkpoint": ..., "widths": ...}
    GET  /api/limits    {"max_edge": ..., "max_styles": ..., "max_bytes": ...}

Validation failures return 400 with a JSON {"error": ...} body; oversized
requests return 413. The checkpoint is loaded once and never mutated, so
requests run concurrently under a bounded worker semaphore
(``AESUST_THREADS``, default 4).
"""

from __future__ import annotations

import email.parser
import email.policy
import json
import os
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from . import persist
from .autodiff import Tensor
from .controls import crop_to_grid, render_request
from .errors import ArchiveError, ImageFormatError, NumericError, ShapeError
from .models import StyleTransferModels

__all__ = ["create_server", "MAX_STYLES"]

MAX_STYLES = 4
DEFAULT_MAX_EDGE = 1024
DEFAULT_MAX_BYTES = 32 * 1024 * 1024

_REQUEST_ERRORS = (ArchiveError, ImageFormatError, NumericError, ShapeError, ValueError)


def _parse_multipart(content_type: str, body: bytes) -> dict[str, list]:
    """Form fields as str, file parts as bytes, keyed by field name."""
    if "multipart/form-data" not in content_type:
        raise ValueError(f"expected multipart/form-data, got {content_type!r}")
    head = f"Content-Type: {content_type}\r\nMIME-Version: 1.0\r\n\r\n".encode()
    message = email.parser.BytesParser(policy=email.policy.HTTP).parsebytes(head + body)
    if not message.is_multipart():
        raise ValueError("malformed multipart body")
    fields: dict[str, list] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition")
        if name is None:
            raise ValueError("multipart part without a field name")
        payload = part.get_payload(decode=True)
        if payload is None:
            payload = b""
        filename = part.get_param("filename", header="content-disposition")
        fields.setdefault(name, []).append(
            payload if filename is not None else payload.decode("utf-8")
        )
    return fields


def _parse_bool(raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


class _Service:
    """Shared immutable state plus the per-request pipeline."""

    def __init__(self, checkpoint_path: str, max_edge: int):
        self.checkpoint_path = checkpoint_path
        self.models = StyleTransferModels.load(checkpoint_path)
        self.max_edge = max_edge
        self.max_bytes = DEFAULT_MAX_BYTES
        workers = int(os.environ.get("AESUST_THREADS", "4"))
        self.worker_slots = threading.Semaphore(max(1, workers))

    def health(self) -> dict:
        return {
            "status": "ok",
            "checkpoint": os.path.basename(self.checkpoint_path),
            "widths": {
                "multiplier": self.models.width_multiplier,
                "taps": self.models.encoder.tap_channels,
            },
        }

    def limits(self) -> dict:
        return {"max_edge": self.max_edge, "max_styles": MAX_STYLES,
                "max_bytes": self.max_bytes}

    def _decode_checked(self, blob: bytes, what: str) -> np.ndarray:
        image = persist.decode_image(blob)
        if max(image.shape[2], image.shape[3]) > self.max_edge:
            raise ValueError(
                f"{what} edge {max(image.shape[2:])} exceeds limit {self.max_edge}"
            )
        return crop_to_grid(image)

    def stylize(self, fields: dict[str, list]) -> bytes:
        if "content" not in fields:
            raise ValueError("missing 'content' image")
        if "style" not in fields:
            raise ValueError("missing 'style' image(s)")
        styles_raw = fields["style"]
        if len(styles_raw) > MAX_STYLES:
            raise ValueError(f"at most {MAX_STYLES} styles, got {len(styles_raw)}")
        content = Tensor(self._decode_checked(fields["content"][0], "content"))
        styles = [Tensor(self._decode_checked(blob, f"style {i}"))
                  for i, blob in enumerate(styles_raw)]
        alpha = float(fields.get("alpha", ["1.0"])[0])
        raw_preserve = fields.get("color_preserve", fields.get("preserve_color", ["false"]))
        preserve = _parse_bool(raw_preserve[0])
        weights = None
        if "weights" in fields:
            weights = [float(w) for w in fields["weights"][0].split(",")]
        masks = None
        if "mask" in fields:
            grid = content.data.shape[2:]
            masks = []
            for blob in fields["mask"]:
                gray = self._decode_checked(blob, "mask")[0].mean(axis=0)
                if gray.shape != grid:
                    raise ShapeError(f"mask is {gray.shape}, content grid is {grid}")
                masks.append((gray >= 128.0 / 255.0).astype(np.float32))
        with self.worker_slots:
            out = render_request(content, styles, self.models, weights=weights,
                                 alpha=alpha, preserve_color=preserve, masks=masks)
        return persist.encode_image(out.data)


class _Handler(BaseHTTPRequestHandler):
    server_version = "aesust"
    protocol_version = "HTTP/1.1"

    @property
    def service(self) -> _Service:
        return self.server.service  # type: ignore[attr-defined]

    def log_message(self, fmt, *args):
        pass

    def _send_json(self, status: int, payload: dict):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/api/health":
            self._send_json(200, self.service.health())
        elif self.path == "/api/limits":
            self._send_json(200, self.service.limits())
        else:
            self._send_json(404, {"error": f"no such endpoint {self.path}"})

    def do_POST(self):
        if self.path != "/api/stylize":
            self._send_json(404, {"error": f"no such endpoint {self.path}"})
            return
        length = int(self.headers.get("Content-Length", "0"))
        if length > self.service.max_bytes:
            self._send_json(413, {"error": f"request of {length} bytes exceeds "
                                           f"limit {self.service.max_bytes}"})
            return
        body = self.rfile.read(length)
        try:
            fields = _parse_multipart(self.headers.get("Content-Type", ""), body)
            png = self.service.stylize(fields)
        except _REQUEST_ERRORS as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self.send_response(200)
        self.send_header("Content-Type", "image/png")
        self.send_header("Content-Length", str(len(png)))
        self.end_headers()
        self.wfile.write(png)


def create_server(checkpoint_path: str, port: int = 0,
                  max_edge: int = DEFAULT_MAX_EDGE) -> ThreadingHTTPServer:
    """Build the HTTP server (not yet serving); ``port=0`` picks a free port."""
    server = ThreadingHTTPServer(("127.0.0.1", port), _Handler)
    server.service = _Service(checkpoint_path, max_edge)  # type: ignore[attr-defined]
    return server

"""Bit-exact named-tensor archives, image codecs, and config-file parsing.

Archive layout (all integers little-endian):

    magic   5 bytes  b"AESU1"
    count   u32
    entry:  name_len u16, name UTF-8, dtype u8 (0=f32, 1=f64), rank u8,
            dims u64 each, then the raw row-major payload.

Entries round-trip bit-exactly; names must be unique.
"""

from __future__ import annotations

import io
import os
import struct

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ArchiveError, ConfigError, ImageFormatError

MAGIC = b"AESU1"

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_DTYPE_TO_CODE = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


def save_archive(entries: dict[str, np.ndarray]) -> bytes:
    """Serialize named float tensors; inverse of :func:`load_archive`."""
    out = io.BytesIO()
    out.write(MAGIC)
    out.write(struct.pack("<I", len(entries)))
    seen: set[str] = set()
    for name, array in entries.items():
        if name in seen:
            raise ArchiveError(f"duplicate entry name {name!r}")
        seen.add(name)
        arr = np.asarray(array)
        if arr.dtype not in _DTYPE_TO_CODE:
            raise ArchiveError(f"entry {name!r} has unsupported dtype {arr.dtype}")
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise ArchiveError(f"entry name too long ({len(encoded)} bytes)")
        out.write(struct.pack("<H", len(encoded)))
        out.write(encoded)
        out.write(struct.pack("<BB", _DTYPE_TO_CODE[arr.dtype], arr.ndim))
        out.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        out.write(np.ascontiguousarray(arr, dtype=arr.dtype.newbyteorder("<")).tobytes())
    return out.getvalue()


def load_archive(blob: bytes) -> dict[str, np.ndarray]:
    """Parse archive bytes back into named tensors (bit-exact)."""
    view = memoryview(blob)
    if len(view) < 9 or bytes(view[:5]) != MAGIC:
        raise ArchiveError("bad magic: not a tensor archive")
    (count,) = struct.unpack("<I", view[5:9])
    offset = 9
    entries: dict[str, np.ndarray] = {}

    def need(n: int, what: str):
        if offset + n > len(view):
            raise ArchiveError(f"truncated archive: {what} at offset {offset}")

    for _ in range(count):
        need(2, "name length")
        (name_len,) = struct.unpack_from("<H", view, offset)
        offset += 2
        need(name_len, "name")
        name = bytes(view[offset : offset + name_len]).decode("utf-8")
        offset += name_len
        need(2, "dtype/rank")
        code, rank = struct.unpack_from("<BB", view, offset)
        offset += 2
        if code not in _DTYPE_CODES:
            raise ArchiveError(f"unknown dtype code {code} for entry {name!r}")
        need(8 * rank, "dims")
        dims = struct.unpack_from(f"<{rank}Q", view, offset)
        offset += 8 * rank
        dtype = _DTYPE_CODES[code]
        nbytes = int(np.prod(dims, dtype=np.int64)) * dtype.itemsize if rank else dtype.itemsize
        if rank == 0:
            dims = ()
            nbytes = dtype.itemsize
        need(nbytes, f"payload of {name!r}")
        data = np.frombuffer(view[offset : offset + nbytes], dtype=dtype).reshape(dims)
        offset += nbytes
        if name in entries:
            raise ArchiveError(f"duplicate entry name {name!r}")
        entries[name] = data.astype(dtype.newbyteorder("="), copy=True)
    if offset != len(view):
        raise ArchiveError(f"{len(view) - offset} trailing bytes after last entry")
    return entries


def save_archive_file(entries: dict[str, np.ndarray], path: str):
    """Atomic archive write: temp file in the same directory, then rename."""
    blob = save_archive(entries)
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "wb") as fh:
        fh.write(blob)
    os.replace(tmp, path)


def load_archive_file(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        return load_archive(fh.read())


# -- image codecs ------------------------------------------------------------

_PNG_SIG = b"\x89PNG\r\n\x1a\n"
_JPEG_SIG = b"\xff\xd8"


def decode_image(blob: bytes) -> np.ndarray:
    """PNG/JPEG bytes -> float32 image tensor (1, 3, H, W) in [0, 1]."""
    if not (blob.startswith(_PNG_SIG) or blob.startswith(_JPEG_SIG)):
        raise ImageFormatError("unrecognized image signature at offset 0")
    bio = io.BytesIO(blob)
    try:
        with Image.open(bio) as img:
            rgb = img.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float32) / 255.0
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(
            f"corrupt image stream near offset {bio.tell()}: {exc}"
        ) from exc
    return arr.transpose(2, 0, 1)[None, :, :, :]


def encode_image(image: np.ndarray) -> bytes:
    """Image tensor (1|0 batch dims, 3, H, W) in [0, 1] -> PNG bytes."""
    arr = np.asarray(image)
    if arr.ndim == 4:
        if arr.shape[0] != 1:
            raise ImageFormatError(f"expected a single image, got batch {arr.shape[0]}")
        arr = arr[0]
    if arr.ndim != 3 or arr.shape[0] != 3:
        raise ImageFormatError(f"expected (3, H, W) image, got shape {arr.shape}")
    quantized = np.clip(np.rint(arr * 255.0), 0, 255).astype(np.uint8)
    img = Image.fromarray(quantized.transpose(1, 2, 0), mode="RGB")
    out = io.BytesIO()
    img.save(out, format="PNG")
    return out.getvalue()


# -- config files -------------------------------------------------------------


def parse_config_text(text: str) -> dict[str, str]:
    """Line-oriented ``key = value`` with ``#`` comments."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_config_file(path: str) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())

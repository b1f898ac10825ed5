"""Binary portable any-map I/O (P5 grayscale, P6 color), 8 bit only."""
from __future__ import annotations

import numpy as np


class PNMError(ValueError):
    pass


def _tokens(data: bytes, count: int):
    """First ``count`` header tokens and the offset of the raster."""
    out = []
    i, n = 0, len(data)
    while len(out) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i >= n:
            raise PNMError("truncated header")
        if data[i:i + 1] == b"#":
            while i < n and data[i:i + 1] not in (b"\n", b"\r"):
                i += 1
            continue
        j = i
        while j < n and not data[j:j + 1].isspace() and data[j:j + 1] != b"#":
            j += 1
        out.append(data[i:j])
        i = j
    # exactly one whitespace byte separates the header from the raster
    if i >= n or not data[i:i + 1].isspace():
        raise PNMError("missing whitespace after header")
    return out, i + 1


def read_image(path) -> np.ndarray:
    """(H, W) uint8 for P5, (H, W, 3) uint8 for P6."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks, offset = _tokens(data, 4)
    magic = toks[0]
    if magic not in (b"P5", b"P6"):
        raise PNMError(f"unsupported magic number {magic!r}")
    try:
        w, h, maxval = (int(t) for t in toks[1:])
    except ValueError as exc:
        raise PNMError("malformed header") from exc
    if w <= 0 or h <= 0:
        raise PNMError("image dimensions must be positive")
    if maxval != 255:
        raise PNMError(f"only maxval 255 is supported, got {maxval}")
    ch = 3 if magic == b"P6" else 1
    size = w * h * ch
    raster = data[offset:offset + size]
    if len(raster) != size:
        raise PNMError("truncated raster")
    arr = np.frombuffer(raster, dtype=np.uint8).reshape((h, w, ch) if ch == 3 else (h, w))
    return arr.copy()


def to_uint8(image) -> np.ndarray:
    """Round half up and clip to 0..255."""
    a = np.asarray(image)
    if a.dtype == np.uint8:
        return a
    if a.dtype == bool:
        return a.astype(np.uint8) * 255
    return np.clip(np.floor(np.asarray(a, dtype=float) + 0.5), 0, 255).astype(np.uint8)


def write_image(image, path, comment: str | None = None) -> None:
    a = to_uint8(image)
    if a.ndim == 2:
        magic = b"P5"
    elif a.ndim == 3 and a.shape[2] == 3:
        magic = b"P6"
    else:
        raise PNMError("expected a (H, W) or (H, W, 3) raster")
    h, w = a.shape[:2]
    head = magic + b"\n"
    if comment:
        head += b"".join(b"# " + line.encode() + b"\n" for line in comment.splitlines())
    head += f"{w} {h}\n255\n".encode()
    with open(path, "wb") as fh:
        fh.write(head + np.ascontiguousarray(a).tobytes())


def read_mask(path) -> np.ndarray:
    """Binary mask from a grayscale image: nonzero means set."""
    img = read_image(path)
    if img.ndim != 2:
        raise PNMError("mask must be a grayscale image")
    return img != 0


def read_seeds(path) -> np.ndarray:
    """Seed labels 0 (none), 1 (background), 2 (foreground) from a grayscale image."""
    img = read_image(path)
    if img.ndim != 2:
        raise PNMError("seed image must be grayscale")
    if not np.isin(img, (0, 1, 2)).all():
        raise PNMError("seed image values must be 0, 1 or 2")
    return img.astype(np.int8)

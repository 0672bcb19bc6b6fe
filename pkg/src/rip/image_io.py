"""8-bit grayscale image I/O: PGM (P5) reading/writing, PNG decoding,
and BT.601 luminance conversion.

Decoded planes are float64 arrays holding integer values in [0, 255].
Write-out quantizes round-half-up and clamps.
"""

from __future__ import annotations

import numpy as np

BT601_WEIGHTS = (0.299, 0.587, 0.114)


class ImageFormatError(ValueError):
    """Raised for unsupported or malformed image files."""


def quantize(plane: np.ndarray) -> np.ndarray:
    """Real-valued plane to uint8: round half up, clamp to [0, 255]."""
    return np.clip(np.floor(np.asarray(plane, dtype=np.float64) + 0.5), 0, 255).astype(
        np.uint8
    )


def rgb_to_luminance(rgb: np.ndarray) -> np.ndarray:
    """BT.601 luma of an (H, W, 3) array, rounded half up to integers."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) array, got shape {rgb.shape}")
    y = rgb[..., 0] * BT601_WEIGHTS[0] + rgb[..., 1] * BT601_WEIGHTS[1]
    y += rgb[..., 2] * BT601_WEIGHTS[2]
    return np.clip(np.floor(y + 0.5), 0, 255)


def write_pgm(path, plane: np.ndarray) -> None:
    """Write a plane as binary 8-bit PGM (P5)."""
    pixels = quantize(plane)
    if pixels.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {pixels.shape}")
    h, w = pixels.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        f.write(pixels.tobytes())


def _read_pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """First ``count`` whitespace-separated integer tokens after the magic,
    skipping '#' comments; returns (tokens, offset past final whitespace)."""
    tokens: list[int] = []
    i = 2  # past "P5"
    while len(tokens) < count:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i : i + 1].isspace():
            i += 1
        if start == i:
            raise ImageFormatError("malformed PGM header")
        try:
            tokens.append(int(data[start:i]))
        except ValueError as exc:
            raise ImageFormatError(f"malformed PGM header token {data[start:i]!r}") from exc
    if i >= len(data):
        raise ImageFormatError("truncated PGM file: no pixel data")
    return tokens, i + 1  # single whitespace byte after maxval


def read_pgm(path) -> np.ndarray:
    """Decode a binary PGM (P5) with maxval <= 255 to a float64 plane."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:2] != b"P5":
        raise ImageFormatError(f"not a binary PGM (P5): magic {data[:2]!r}")
    (w, h, maxval), offset = _read_pgm_tokens(data, 3)
    if w < 1 or h < 1:
        raise ImageFormatError(f"bad PGM dimensions {w}x{h}")
    if not 0 < maxval <= 255:
        raise ImageFormatError(f"unsupported PGM maxval {maxval}; only 8-bit supported")
    need = w * h
    pixels = data[offset : offset + need]
    if len(pixels) < need:
        raise ImageFormatError(
            f"truncated PGM file: {len(pixels)} of {need} pixel bytes"
        )
    return np.frombuffer(pixels, dtype=np.uint8).reshape(h, w).astype(np.float64)


def _decode_png(path) -> np.ndarray:
    from PIL import Image, UnidentifiedImageError

    try:
        with Image.open(path) as img:
            img.load()
            mode = img.mode
            if mode == "P":
                img = img.convert("RGB")
                mode = "RGB"
            if mode == "L":
                return np.asarray(img, dtype=np.float64)
            if mode == "RGB":
                return rgb_to_luminance(np.asarray(img))
            raise ImageFormatError(
                f"unsupported PNG mode {mode!r}; need 8-bit grayscale or RGB"
            )
    except UnidentifiedImageError as exc:
        raise ImageFormatError(f"malformed PNG file: {exc}") from exc
    except OSError as exc:
        raise ImageFormatError(f"cannot decode PNG: {exc}") from exc


def decode_to_luminance(path) -> np.ndarray:
    """Decode a PGM (P5) or PNG file to a float64 luminance plane.

    Grayscale inputs pass through; RGB converts via BT.601 luma, rounded
    half up.  The format is sniffed from the file's magic bytes.
    """
    with open(path, "rb") as f:
        magic = f.read(8)
    if magic[:2] == b"P5":
        return read_pgm(path)
    if magic[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(path)
    raise ImageFormatError(
        f"unsupported image format (magic {magic[:4]!r}); need PGM (P5) or PNG"
    )

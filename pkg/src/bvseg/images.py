"""Grayscale image I/O, synthetic phantoms, noise, and quality metrics.

Images are scalar fields in [0, 1] with pixel size ``h = 1 / width`` (the
domain width is fixed to one).  PGM P2/P5 (8- and 16-bit) is parsed and
written natively; PNG goes through Pillow.  Multi-channel inputs are
rejected rather than silently converted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .fields import grad, norm1, pointwise_norm
from .gamma1d import Signal1D

__all__ = [
    "ImageRecord",
    "ImageFormatError",
    "load_gray",
    "save_gray",
    "add_gaussian_noise",
    "synth_disk",
    "synth_step_1d",
    "Metrics",
    "metrics",
    "METRICS_CSV_HEADER",
]

METRICS_CSV_HEADER = "psnr_in,psnr_out,intermediate_fraction,tv_v"

_GRAY_PNG_MODES = {"L": 255.0, "I": 65535.0, "I;16": 65535.0, "I;16B": 65535.0, "I;16L": 65535.0}


class ImageFormatError(ValueError):
    """Unreadable or unsupported image content."""


@dataclass(frozen=True)
class ImageRecord:
    """A [0, 1] scalar field plus provenance and pixel size."""

    field: np.ndarray
    source: str
    h: float

    def __post_init__(self):
        f = np.asarray(self.field, dtype=np.float64)
        object.__setattr__(self, "field", f)
        if f.ndim != 2:
            raise ValueError(f"image field must be 2-D, got shape {f.shape}")
        if np.any(f < 0.0) or np.any(f > 1.0) or not np.all(np.isfinite(f)):
            raise ValueError("image samples must lie in [0, 1]")
        if not self.h > 0.0:
            raise ValueError(f"h must be positive, got {self.h}")


def _parse_pgm(raw: bytes, path: str) -> np.ndarray:
    """Parse P2 (ASCII) or P5 (binary) PGM bytes into a float field in [0, 1]."""
    magic = raw[:2]

    def tokens():
        # header tokens with '#' comments stripped; yields (token, end_offset)
        i = 2
        while i < len(raw):
            c = raw[i : i + 1]
            if c == b"#":
                while i < len(raw) and raw[i : i + 1] not in (b"\n", b"\r"):
                    i += 1
            elif c.isspace():
                i += 1
            else:
                j = i
                while j < len(raw) and not raw[j : j + 1].isspace() and raw[j : j + 1] != b"#":
                    j += 1
                yield raw[i:j], j
                i = j

    gen = tokens()
    try:
        (w_tok, _), (h_tok, _), (max_tok, end) = next(gen), next(gen), next(gen)
        width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    except (StopIteration, ValueError) as exc:
        raise ImageFormatError(f"malformed PGM header in {path}") from exc
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ImageFormatError(f"invalid PGM dimensions or maxval in {path}")

    count = width * height
    if magic == b"P2":
        try:
            data = np.array(raw[end:].decode("ascii").split(), dtype=np.float64)
        except (UnicodeDecodeError, ValueError) as exc:
            raise ImageFormatError(f"malformed P2 sample data in {path}") from exc
        if data.size != count:
            raise ImageFormatError(f"P2 sample count mismatch in {path}")
    else:
        body = raw[end + 1 :]  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        if len(body) < count * dtype.itemsize:
            raise ImageFormatError(f"truncated P5 sample data in {path}")
        data = np.frombuffer(body[: count * dtype.itemsize], dtype=dtype).astype(np.float64)
    if np.any(data < 0) or np.any(data > maxval):
        raise ImageFormatError(f"PGM samples exceed maxval in {path}")
    return (data / maxval).reshape(height, width)


def load_gray(path) -> ImageRecord:
    """Load an 8/16-bit grayscale PGM (P2/P5) or grayscale PNG, rescaled to [0, 1]."""
    path = str(path)
    with open(path, "rb") as fh:
        raw = fh.read()

    if raw[:2] in (b"P2", b"P5"):
        field = _parse_pgm(raw, path)
    elif raw[:8] == b"\x89PNG\r\n\x1a\n":
        with Image.open(path) as img:
            if img.mode not in _GRAY_PNG_MODES:
                raise ImageFormatError(f"unsupported: multi-channel image {path} (mode {img.mode})")
            scale = _GRAY_PNG_MODES[img.mode]
            field = np.asarray(img, dtype=np.float64) / scale
    elif raw[:1] == b"P":
        raise ImageFormatError(f"unsupported: multi-channel or non-grayscale PNM {path}")
    else:
        raise ImageFormatError(f"unrecognized image format in {path}")

    field = np.clip(field, 0.0, 1.0)
    return ImageRecord(field=field, source=path, h=1.0 / field.shape[1])


def save_gray(field, path, fmt: str | None = None) -> None:
    """Write an 8-bit PGM or PNG; samples must already lie in [0, 1]."""
    field = np.asarray(field, dtype=np.float64)
    if field.ndim != 2:
        raise ValueError(f"image field must be 2-D, got shape {field.shape}")
    if np.any(field < 0.0) or np.any(field > 1.0) or not np.all(np.isfinite(field)):
        raise ValueError("refusing to write samples outside [0, 1]")
    path = str(path)
    if fmt is None:
        fmt = "png" if path.lower().endswith(".png") else "pgm"
    data = np.rint(field * 255.0).astype(np.uint8)
    if fmt == "pgm":
        header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
        with open(path, "wb") as fh:
            fh.write(header + data.tobytes())
    elif fmt == "png":
        Image.fromarray(data, mode="L").save(path, format="PNG")
    else:
        raise ValueError(f"unknown output format {fmt!r}")


def add_gaussian_noise(img: ImageRecord, sigma: float, seed: int) -> ImageRecord:
    """Add i.i.d. N(0, sigma^2) noise, then clip back to [0, 1].

    Deterministic per (image, sigma, seed): Box-Muller applied to a Philox
    counter-based stream, so repeated calls are bitwise identical.
    """
    if sigma < 0.0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    if sigma == 0.0:
        return ImageRecord(field=img.field.copy(), source=img.source, h=img.h)
    gen = np.random.Generator(np.random.Philox(int(seed)))
    n = img.field.size
    u1 = gen.random(n)
    u2 = gen.random(n)
    z = np.sqrt(-2.0 * np.log1p(-u1)) * np.cos(2.0 * np.pi * u2)
    noisy = np.clip(img.field + sigma * z.reshape(img.field.shape), 0.0, 1.0)
    return ImageRecord(
        field=noisy, source=f"{img.source}+noise(sigma={sigma},seed={seed})", h=img.h
    )


def synth_disk(n: int, radius_frac: float, inside: float, outside: float) -> ImageRecord:
    """Piecewise-constant disk phantom on an n x n grid, unit domain width."""
    if n < 1:
        raise ValueError("n must be positive")
    if not 0.0 < radius_frac < 0.5:
        raise ValueError(f"radius_frac must lie in (0, 0.5), got {radius_frac}")
    for name, val in (("inside", inside), ("outside", outside)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} value must lie in [0, 1], got {val}")
    h = 1.0 / n
    centers = (np.arange(n) + 0.5) * h
    yy, xx = np.meshgrid(centers, centers, indexing="ij")
    mask = (xx - 0.5) ** 2 + (yy - 0.5) ** 2 <= radius_frac**2
    field = np.where(mask, float(inside), float(outside))
    return ImageRecord(
        field=field,
        source=f"synthetic:disk(n={n},r={radius_frac},in={inside},out={outside})",
        h=h,
    )


def synth_step_1d(n: int, position: float = 0.5) -> Signal1D:
    """Unit step signal: 0 left of ``position``, 1 from it onward."""
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0.0 < position < 1.0:
        raise ValueError(f"position must lie in (0, 1), got {position}")
    h = 1.0 / n
    centers = (np.arange(n) + 0.5) * h
    samples = (centers >= position).astype(np.float64)
    return Signal1D(samples=samples, h=h, true_jumps=(position,))


@dataclass
class Metrics:
    psnr_in: float
    psnr_out: float
    intermediate_fraction: float
    tv_v: float

    def to_csv(self) -> str:
        return ",".join(str(x) for x in (self.psnr_in, self.psnr_out,
                                         self.intermediate_fraction, self.tv_v))


def _psnr(x: np.ndarray, ref: np.ndarray) -> float:
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def metrics(u, v, g_clean, g_noisy, band: float = 0.05) -> Metrics:
    """Reconstruction quality and phase-field sharpness summary.

    ``intermediate_fraction`` counts samples with ``band < v < 1 - band``;
    ``tv_v`` is the pointwise-L1 total variation of ``v`` at unit spacing.
    """
    if not 0.0 < band < 0.5:
        raise ValueError(f"band must lie in (0, 0.5), got {band}")
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    g_clean = np.asarray(g_clean, dtype=np.float64)
    g_noisy = np.asarray(g_noisy, dtype=np.float64)
    inter = float(np.mean((v > band) & (v < 1.0 - band)))
    return Metrics(
        psnr_in=_psnr(g_noisy, g_clean),
        psnr_out=_psnr(u, g_clean),
        intermediate_fraction=inter,
        tv_v=norm1(pointwise_norm(grad(v, 1.0))),
    )

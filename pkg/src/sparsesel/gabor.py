"""Gabor filter bank, magnitude responses and image/feature file formats.

The bank has 8 orientations and 4 scales (nu = -1..2) with
``sigma = 2 pi``, ``k_max = pi / 2`` and ``f = sqrt(2)``. Kernels are
truncated to six Gaussian spans; features are response magnitudes sampled
on a 4x4 lattice, ordered (scale, orientation, row, col).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.signal import fftconvolve

SCALES = (-1, 0, 1, 2)
ORIENTATIONS = tuple(range(8))
IMAGE_SHAPE = (64, 64)
DEFAULT_DOWNSAMPLE = 16

GFV_MAGIC = b"GFV1"
GFV_HEADER = struct.Struct("<4sIII")  # magic, length, downsample, reserved


@dataclass(frozen=True)
class GaborKernelSpec:
    mu: int
    nu: int
    sigma: float = 2 * math.pi
    kmax: float = math.pi / 2
    f: float = math.sqrt(2)

    def __post_init__(self):
        if not 0 <= self.mu <= 7:
            raise ValueError(f"orientation index must be in 0..7, got {self.mu}")

    @property
    def k(self) -> float:
        return self.kmax / self.f ** self.nu

    @property
    def phi(self) -> float:
        return math.pi * self.mu / 8

    @property
    def wave_vector(self) -> tuple[float, float]:
        return self.k * math.cos(self.phi), self.k * math.sin(self.phi)

    @property
    def width(self) -> int:
        """Smallest odd integer >= 6 sigma / k + 1."""
        w = math.ceil(6 * self.sigma / self.k + 1 - 1e-9)
        return w if w % 2 else w + 1


def make_kernel(spec: GaborKernelSpec) -> np.ndarray:
    """Sample the complex Gabor kernel on a centred ``width x width`` grid.

    Array index ``[row, col]`` holds offset ``z = (col - h, row - h)``.
    """
    h = spec.width // 2
    zy, zx = np.mgrid[-h:h + 1, -h:h + 1].astype(np.float64)
    kx, ky = spec.wave_vector
    k2 = spec.k ** 2
    s2 = spec.sigma ** 2
    envelope = (k2 / s2) * np.exp(-k2 * (zx ** 2 + zy ** 2) / (2 * s2))
    return envelope * (np.exp(1j * (kx * zx + ky * zy)) - math.exp(-s2 / 2))


@dataclass(frozen=True)
class GaborBank:
    specs: tuple
    kernels: tuple

    def __len__(self):
        return len(self.kernels)


def build_bank(scales=SCALES, orientations=ORIENTATIONS, **params) -> GaborBank:
    specs = tuple(GaborKernelSpec(mu, nu, **params) for nu in scales for mu in orientations)
    return GaborBank(specs, tuple(make_kernel(s) for s in specs))


def convolve_magnitude(image, kernel) -> np.ndarray:
    """``|image * kernel|`` with zero padding, same size as ``image``."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.size == 0:
        raise ValueError("image must be a non-empty 2-D array")
    out = fftconvolve(image, kernel, mode="full")
    kh, kw = kernel.shape
    r0, c0 = kh // 2, kw // 2
    return np.abs(out[r0:r0 + image.shape[0], c0:c0 + image.shape[1]])


def lattice_stride(downsample: int) -> int:
    s = math.isqrt(downsample)
    if s * s != downsample or s < 1:
        raise ValueError(f"downsample factor must be a perfect square, got {downsample}")
    return s


@dataclass(frozen=True)
class GaborFeatureVector:
    values: np.ndarray
    downsample: int = DEFAULT_DOWNSAMPLE
    grid: tuple = (16, 16)
    n_kernels: int = 32
    layout: str = field(default="scale,orientation,row,col")

    def __len__(self):
        return self.values.size

    def location(self, index: int) -> tuple[int, int, int, int]:
        """(nu, mu, pixel row, pixel col) of a feature index."""
        return feature_location(index, self.grid, lattice_stride(self.downsample))


def feature_location(index: int, grid=(16, 16), stride: int = 4,
                     scales=SCALES, n_orient: int = len(ORIENTATIONS)):
    per_kernel = grid[0] * grid[1]
    kernel, pos = divmod(int(index), per_kernel)
    si, mu = divmod(kernel, n_orient)
    row, col = divmod(pos, grid[1])
    return scales[si], mu, row * stride, col * stride


def gabor_magnitudes(image, bank: GaborBank, downsample: int = DEFAULT_DOWNSAMPLE) -> np.ndarray:
    """Lattice-sampled magnitude responses, shape ``(kernels, rows, cols)``."""
    s = lattice_stride(downsample)
    return np.stack([convolve_magnitude(image, k)[::s, ::s] for k in bank.kernels])


def extract_features(image, bank: GaborBank, downsample: int = DEFAULT_DOWNSAMPLE) -> GaborFeatureVector:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != IMAGE_SHAPE:
        raise ValueError(f"expected a {IMAGE_SHAPE[0]}x{IMAGE_SHAPE[1]} image, got {image.shape}")
    resp = gabor_magnitudes(image, bank, downsample)
    return GaborFeatureVector(resp.reshape(-1), downsample, resp.shape[1:], len(bank))


def full_feature_count(shape=IMAGE_SHAPE, n_kernels: int = 32) -> int:
    return n_kernels * shape[0] * shape[1]


def downsampled_feature_count(shape=IMAGE_SHAPE, downsample: int = DEFAULT_DOWNSAMPLE,
                              n_kernels: int = 32) -> int:
    s = lattice_stride(downsample)
    return n_kernels * (-(-shape[0] // s)) * (-(-shape[1] // s))


# --- PGM (P5) --------------------------------------------------------------

def _pgm_tokens(data: bytes):
    """Header tokens and the offset of the first pixel byte."""
    pos = 0
    tokens = []
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos + 1


def decode_pgm(data: bytes) -> np.ndarray:
    """Decode an 8-bit binary PGM into floats in [0, 1] (division by 255)."""
    if data[:2] != b"P5":
        raise ValueError("not a binary PGM (P5) image")
    tokens, offset = _pgm_tokens(data)
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ValueError("malformed PGM header") from exc
    if not 0 < maxval <= 255:
        raise ValueError(f"only 8-bit PGM is supported (maxval {maxval})")
    if len(data) - offset < width * height:
        raise ValueError("PGM pixel data is truncated")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=offset)
    return pixels.reshape(height, width).astype(np.float64) / 255.0


def read_pgm(path) -> np.ndarray:
    path = Path(path)
    try:
        return decode_pgm(path.read_bytes())
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from exc


def encode_pgm(image) -> bytes:
    image = np.asarray(image)
    if image.dtype != np.uint8:
        image = np.clip(np.rint(np.asarray(image, dtype=np.float64) * 255.0), 0, 255).astype(np.uint8)
    h, w = image.shape
    return b"P5\n%d %d\n255\n" % (w, h) + image.tobytes()


def write_pgm(path, image) -> None:
    Path(path).write_bytes(encode_pgm(image))


# --- GFV1 feature records ---------------------------------------------------

def encode_gfv(fv: GaborFeatureVector) -> bytes:
    values = np.ascontiguousarray(fv.values, dtype="<f8")
    return GFV_HEADER.pack(GFV_MAGIC, values.size, fv.downsample, 0) + values.tobytes()


def decode_gfv(data: bytes, offset: int = 0) -> tuple[GaborFeatureVector, int]:
    """Decode one record at ``offset``; returns the vector and the next offset."""
    if len(data) - offset < GFV_HEADER.size:
        raise ValueError("truncated GFV1 header")
    magic, length, downsample, _ = GFV_HEADER.unpack_from(data, offset)
    if magic != GFV_MAGIC:
        raise ValueError(f"bad magic {magic!r}, expected {GFV_MAGIC!r}")
    start = offset + GFV_HEADER.size
    end = start + 8 * length
    if end > len(data):
        raise ValueError("truncated GFV1 payload")
    values = np.frombuffer(data[start:end], dtype="<f8").astype(np.float64)
    lattice_stride(downsample)
    grid, n_kernels = (1, length), 1
    if length and length % 32 == 0:
        side = math.isqrt(length // 32)
        if side * side == length // 32:
            grid, n_kernels = (side, side), 32
    return GaborFeatureVector(values, downsample, grid, n_kernels), end

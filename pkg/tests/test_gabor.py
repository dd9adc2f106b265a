import cmath
import math
import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparsesel import gabor
from sparsesel.gabor import (GaborFeatureVector, GaborKernelSpec, build_bank, convolve_magnitude,
                             decode_gfv, decode_pgm, encode_gfv, encode_pgm, extract_features,
                             make_kernel, read_pgm)


@pytest.fixture(scope="module")
def bank():
    return build_bank()


def kernel_entry(spec, zx, zy):
    """Scalar evaluation of the Gabor formula at offset (zx, zy)."""
    kx = spec.k * math.cos(math.pi * spec.mu / 8)
    ky = spec.k * math.sin(math.pi * spec.mu / 8)
    k2 = kx * kx + ky * ky
    s2 = spec.sigma ** 2
    env = k2 / s2 * math.exp(-k2 * (zx * zx + zy * zy) / (2 * s2))
    return env * (cmath.exp(1j * (kx * zx + ky * zy)) - math.exp(-s2 / 2))


def direct_convolution(image, kernel):
    """Zero-padded 'same' convolution by explicit summation."""
    H, W = image.shape
    kh, kw = kernel.shape
    out = np.zeros((H, W), dtype=complex)
    for r in range(H):
        for c in range(W):
            acc = 0j
            for u in range(kh):
                rr = r + kh // 2 - u
                if not 0 <= rr < H:
                    continue
                for v in range(kw):
                    cc = c + kw // 2 - v
                    if 0 <= cc < W:
                        acc += kernel[u, v] * image[rr, cc]
            out[r, c] = acc
    return np.abs(out)


# --- kernels --------------------------------------------------------------------

def test_widths_by_scale():
    assert [GaborKernelSpec(0, nu).width for nu in (-1, 0, 1, 2)] == [19, 25, 35, 49]


def test_scale_zero_wave_number():
    spec = GaborKernelSpec(3, 0)
    assert spec.width == 25 and spec.k == math.pi / 2


def test_scale_two_wave_number():
    spec = GaborKernelSpec(0, 2)
    assert spec.width == 49 and math.isclose(spec.k, math.pi / 4, rel_tol=1e-15)


def test_orientation_angles():
    assert [GaborKernelSpec(mu, 0).phi for mu in range(8)] == [math.pi * mu / 8 for mu in range(8)]
    with pytest.raises(ValueError):
        GaborKernelSpec(8, 0)


def test_center_value_real_positive():
    for nu in gabor.SCALES:
        spec = GaborKernelSpec(5, nu)
        K = make_kernel(spec)
        h = spec.width // 2
        expected = spec.k ** 2 / spec.sigma ** 2 * (1 - math.exp(-spec.sigma ** 2 / 2))
        assert K[h, h].imag == 0 and K[h, h].real > 0
        assert math.isclose(K[h, h].real, expected, rel_tol=1e-12)


@pytest.mark.parametrize("mu,nu", [(0, -1), (3, 0), (6, 1), (7, 2)])
def test_kernel_matches_scalar_formula(mu, nu):
    spec = GaborKernelSpec(mu, nu)
    K = make_kernel(spec)
    h = spec.width // 2
    for zx, zy in [(0, 0), (1, 0), (0, 1), (-3, 2), (h, -h), (5, 7)]:
        assert abs(K[zy + h, zx + h] - kernel_entry(spec, zx, zy)) < 1e-15


def test_bank_layout(bank):
    assert len(bank) == 32
    assert [(s.nu, s.mu) for s in bank.specs[:9]] == [(-1, m) for m in range(8)] + [(0, 0)]


def test_all_kernels_dc_free(bank):
    for K in bank.kernels:
        assert abs(K.sum()) < 1e-3 * np.abs(K).sum()


# --- convolution ----------------------------------------------------------------

def test_convolution_matches_direct_sum(bank):
    rng = np.random.default_rng(5)
    img = rng.uniform(size=(11, 9))
    for K in (bank.kernels[0], bank.kernels[13]):
        assert np.allclose(convolve_magnitude(img, K), direct_convolution(img, K), atol=1e-12)


@given(st.integers(0, 2**31), st.integers(1, 8), st.integers(1, 8))
def test_convolution_matches_direct_sum_property(seed, h, w):
    rng = np.random.default_rng(seed)
    img = rng.uniform(size=(h, w))
    K = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    assert np.allclose(convolve_magnitude(img, K), direct_convolution(img, K), atol=1e-10)


def test_zero_image_zero_response(bank):
    assert not convolve_magnitude(np.zeros((20, 20)), bank.kernels[7]).any()


def test_empty_image_rejected(bank):
    with pytest.raises(ValueError):
        convolve_magnitude(np.zeros((0, 5)), bank.kernels[0])


def test_constant_image_near_zero_where_kernel_fits(bank):
    c = 0.8
    img = np.full((110, 110), c)
    for K in bank.kernels:
        h = K.shape[0] // 2
        out = convolve_magnitude(img, K)
        interior = out[h:-h, h:-h]
        assert interior.size and interior.max() < 1e-3 * c * np.abs(K).sum()


def test_impulse_response_is_flipped_kernel_magnitude(bank):
    for K in bank.kernels:
        w = K.shape[0]
        img = np.zeros((w + 10, w + 10))
        r0 = c0 = 5 + w // 2
        img[r0, c0] = 1.0
        out = convolve_magnitude(img, K)
        patch = out[r0 - w // 2:r0 + w // 2 + 1, c0 - w // 2:c0 + w // 2 + 1]
        assert np.allclose(patch, np.abs(K)[::-1, ::-1], atol=1e-12)


def test_quarter_turn_of_orientation_rotates_response(bank):
    K0 = make_kernel(GaborKernelSpec(0, 0))
    K4 = make_kernel(GaborKernelSpec(4, 0))
    img = np.zeros((45, 45))
    img[22, 22] = 1.0
    r0, r4 = convolve_magnitude(img, K0), convolve_magnitude(img, K4)
    assert np.allclose(np.rot90(r0), r4, atol=1e-12)


def test_constant_offset_invariance_interior(bank):
    rng = np.random.default_rng(9)
    yy, xx = np.mgrid[0:120, 0:120]
    img = 0.5 + 0.3 * np.cos(0.7 * xx + 0.4 * yy) + 0.05 * rng.standard_normal((120, 120))
    for K in bank.kernels[::5]:
        h = K.shape[0] // 2
        a = convolve_magnitude(img, K)[h:-h, h:-h]
        b = convolve_magnitude(img + 0.2, K)[h:-h, h:-h]
        assert np.abs(a - b).max() <= 1e-2 * a.max()


# --- features -------------------------------------------------------------------

def test_feature_counts():
    assert gabor.full_feature_count() == 4 * 8 * 64 * 64 == 131_072
    assert gabor.downsampled_feature_count() == 8192


def test_extract_length_and_zero_image(bank):
    fv = extract_features(np.zeros((64, 64)), bank)
    assert len(fv) == 8192 and not fv.values.any()


def test_extract_rejects_wrong_size(bank):
    with pytest.raises(ValueError, match="64x64"):
        extract_features(np.zeros((32, 64)), bank)


def test_feature_order_and_locations(bank):
    rng = np.random.default_rng(2)
    img = rng.uniform(size=(64, 64))
    fv = extract_features(img, bank)
    assert np.all(fv.values >= 0)
    for idx in (0, 255, 256, 4000, 8191):
        nu, mu, r, c = fv.location(idx)
        K = make_kernel(GaborKernelSpec(mu, nu))
        assert math.isclose(fv.values[idx], convolve_magnitude(img, K)[r, c], rel_tol=1e-12)
    assert fv.location(8191) == (2, 7, 60, 60)
    assert fv.location(257) == (-1, 1, 0, 4)


def test_lattice_stride_requires_square():
    assert gabor.lattice_stride(16) == 4
    with pytest.raises(ValueError):
        gabor.lattice_stride(8)


# --- PGM ------------------------------------------------------------------------

def test_pgm_round_trip():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4) * 20
    out = decode_pgm(encode_pgm(img))
    assert out.shape == (3, 4)
    assert np.array_equal(out, img / 255.0)


def test_pgm_header_comments():
    data = b"P5\n# made by hand\n2 1 # width height\n255\n\x00\xff"
    assert decode_pgm(data).tolist() == [[0.0, 1.0]]


@pytest.mark.parametrize("data,msg", [
    (b"P2\n2 1\n255\n0 255", "P5"),
    (b"P5\n2 1\n65535\n\x00\x00\x00\x00", "8-bit"),
    (b"P5\n4 4\n255\n\x00", "truncated"),
    (b"P5\n4", "header"),
])
def test_pgm_rejections(data, msg):
    with pytest.raises(ValueError, match=msg):
        decode_pgm(data)


def test_read_pgm_names_file(tmp_path):
    p = tmp_path / "broken.pgm"
    p.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    with pytest.raises(ValueError, match="broken.pgm"):
        read_pgm(p)


# --- GFV1 -----------------------------------------------------------------------

def test_gfv_header_layout():
    fv = GaborFeatureVector(np.array([1.5, -0.0, 2.0]), 16, (1, 3), 1)
    data = encode_gfv(fv)
    assert data[:4] == b"GFV1"
    assert struct.unpack("<II", data[4:12]) == (3, 16)
    assert len(data) == 16 + 24
    assert struct.unpack("<3d", data[16:]) == (1.5, -0.0, 2.0)


def test_gfv_round_trip_concatenated(bank):
    rng = np.random.default_rng(4)
    a = extract_features(rng.uniform(size=(64, 64)), bank)
    b = GaborFeatureVector(rng.uniform(size=5), 4, (1, 5), 1)
    blob = encode_gfv(a) + encode_gfv(b)
    a2, off = decode_gfv(blob)
    b2, end = decode_gfv(blob, off)
    assert end == len(blob)
    assert np.array_equal(a2.values, a.values) and a2.grid == (16, 16) and a2.n_kernels == 32
    assert np.array_equal(b2.values, b.values) and b2.downsample == 4


def test_gfv_rejects_bad_input():
    with pytest.raises(ValueError, match="magic"):
        decode_gfv(b"GFV2" + bytes(12))
    with pytest.raises(ValueError, match="truncated"):
        decode_gfv(struct.pack("<4sIII", b"GFV1", 4, 16, 0) + bytes(8))

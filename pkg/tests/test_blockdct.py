import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dctframe.blockdct import (
    BASE_LUMA,
    CodecConfig,
    decode_planes,
    dequantize,
    dct2_forward,
    dct2_inverse,
    encode_planes,
    quant_matrix_for,
    quantize,
    zigzag_index,
    zigzag_inverse,
    zigzag_positions,
)
from dctframe.colorspace import rgb_to_yuv

from conftest import encode_rgb


def dct2_oracle(block):
    """Naive four-nested-loop DCT-II with -128 level shift."""
    B = block.shape[0]
    out = np.zeros((B, B))
    for u in range(B):
        for v in range(B):
            s = 0.0
            for x in range(B):
                for y in range(B):
                    s += (block[x, y] - 128.0) * math.cos(
                        (2 * x + 1) * u * math.pi / (2 * B)
                    ) * math.cos((2 * y + 1) * v * math.pi / (2 * B))
            au = math.sqrt(1.0 / B) if u == 0 else math.sqrt(2.0 / B)
            av = math.sqrt(1.0 / B) if v == 0 else math.sqrt(2.0 / B)
            out[u, v] = au * av * s
    return out


def zigzag_oracle(B):
    """Walk the zigzag explicitly: start at DC, alternate diagonal sweeps."""
    order = []
    r = c = 0
    up = True
    for _ in range(B * B):
        order.append((r, c))
        if up:
            if c == B - 1:
                r += 1
                up = False
            elif r == 0:
                c += 1
                up = False
            else:
                r -= 1
                c += 1
        else:
            if r == B - 1:
                c += 1
                up = True
            elif c == 0:
                r += 1
                up = True
            else:
                r += 1
                c -= 1
    return order


def test_constant_block_has_only_dc():
    coeffs = dct2_forward(np.full((4, 4), 100.0))
    assert coeffs[0, 0] == pytest.approx(-112.0, abs=1e-9)
    assert np.allclose(coeffs.ravel()[1:], 0.0, atol=1e-9)


def test_gray_block_is_all_zero():
    assert np.allclose(dct2_forward(np.full((8, 8), 128.0)), 0.0, atol=1e-12)


@pytest.mark.parametrize("B", [4, 8])
def test_forward_matches_bruteforce_oracle(B):
    rng = np.random.default_rng(0)
    for _ in range(20):
        block = rng.uniform(0, 255, (B, B))
        assert np.allclose(dct2_forward(block), dct2_oracle(block), atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (8, 8), elements=st.floats(0, 255)))
def test_inverse_roundtrip_and_parseval(block):
    coeffs = dct2_forward(block)
    assert np.allclose(dct2_inverse(coeffs), block, atol=1e-9)
    assert np.linalg.norm(coeffs) == pytest.approx(
        np.linalg.norm(block - 128.0), abs=1e-9
    )


def test_inverse_of_zero_is_gray():
    assert np.allclose(dct2_inverse(np.zeros((4, 4))), 128.0)


def test_wrong_block_size_rejected():
    with pytest.raises(ValueError):
        dct2_forward(np.zeros((4, 8)))
    with pytest.raises(ValueError):
        dct2_inverse(np.zeros((3,)))


def test_quality_50_is_annex_k_base():
    qm = quant_matrix_for(50, 8, "luma")
    assert np.array_equal(qm, BASE_LUMA)
    assert qm[0, 0] == 16


def test_quality_100_is_all_ones():
    for kind in ("luma", "chroma"):
        for B in (4, 8):
            assert np.all(quant_matrix_for(100, B, kind) == 1)


def test_quality_monotone_entrywise():
    q95 = quant_matrix_for(95, 8, "luma")
    q85 = quant_matrix_for(85, 8, "luma")
    assert np.all(q95 <= q85)


def test_b4_table_samples_even_indices():
    q8 = quant_matrix_for(75, 8, "chroma")
    q4 = quant_matrix_for(75, 4, "chroma")
    assert np.array_equal(q4, q8[np.ix_([0, 2, 4, 6], [0, 2, 4, 6])])


def test_quality_out_of_range():
    with pytest.raises(ValueError):
        quant_matrix_for(0, 8, "luma")
    with pytest.raises(ValueError):
        quant_matrix_for(101, 8, "luma")


def test_quantize_half_away_from_zero_boundary():
    qm = np.full((1, 1), 16)
    assert quantize(np.array([[40.0]]), qm)[0, 0] == 3
    assert quantize(np.array([[-40.0]]), qm)[0, 0] == -3
    back = dequantize(np.array([[3]]), qm)
    assert abs(40.0 - back[0, 0]) <= 8.0


def test_quantize_zero():
    qm = np.full((2, 2), 7)
    q = quantize(np.zeros((2, 2)), qm)
    assert np.all(q == 0)
    assert np.all(dequantize(q, qm) == 0)


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, (8, 8), elements=st.floats(-2000, 2000)), st.integers(1, 100))
def test_quantization_error_bounded_by_half_step(coeffs, quality):
    qm = quant_matrix_for(quality, 8, "luma")
    err = np.abs(coeffs - dequantize(quantize(coeffs, qm), qm))
    assert np.all(err <= qm / 2.0 + 1e-9)


def test_zigzag_b4_full_order():
    expected = [
        (0, 0), (0, 1), (1, 0), (2, 0), (1, 1), (0, 2), (0, 3), (1, 2),
        (2, 1), (3, 0), (3, 1), (2, 2), (1, 3), (2, 3), (3, 2), (3, 3),
    ]
    assert list(zigzag_positions(4)) == expected
    assert list(zigzag_positions(4)) == zigzag_oracle(4)


def test_zigzag_b8_matches_walking_oracle():
    assert list(zigzag_positions(8)) == zigzag_oracle(8)


@pytest.mark.parametrize("B", [4, 8])
def test_zigzag_bijection(B):
    for r in range(B):
        for c in range(B):
            assert zigzag_inverse(zigzag_index(r, c, B), B) == (r, c)
    assert zigzag_index(0, 0, B) == 0


def test_zigzag_out_of_range():
    with pytest.raises(ValueError):
        zigzag_index(4, 0, 4)
    with pytest.raises(ValueError):
        zigzag_inverse(16, 4)


def test_constant_gray_image_encodes_to_zero():
    img = np.full((32, 32, 3), 128, dtype=np.uint8)
    for quality in (10, 50, 100):
        qp = encode_rgb(img, CodecConfig(4, quality, False))
        assert all(np.all(p == 0) for p in qp.planes())


def test_encode_is_deterministic():
    rng = np.random.default_rng(3)
    img = rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)
    config = CodecConfig(4, 80, True)
    a = encode_rgb(img, config)
    b = encode_rgb(img, config)
    assert a == b


def test_dimension_not_divisible_rejected():
    planes = rgb_to_yuv(np.zeros((30, 32, 3), dtype=np.uint8))
    with pytest.raises(ValueError):
        encode_planes(planes, CodecConfig(4, 50, False))


def test_decoded_block_error_within_step_norm_bound():
    # Orthonormality: pixel-domain L2 error per block (pre-rounding) is
    # bounded by half the L2 norm of the step matrix.
    rng = np.random.default_rng(11)
    config = CodecConfig(8, 30, False)
    qm = quant_matrix_for(30, 8, "luma")
    bound = np.linalg.norm(qm.astype(float)) / 2.0
    img = rng.integers(0, 256, (64, 64, 3)).astype(np.uint8)
    planes = rgb_to_yuv(img)
    qp = encode_planes(planes, config)
    decoded = decode_planes(qp)
    for br in range(8):
        for bc in range(8):
            orig = planes.y[br * 8 : br * 8 + 8, bc * 8 : bc * 8 + 8].astype(float)
            rec = decoded.y[br * 8 : br * 8 + 8, bc * 8 : bc * 8 + 8].astype(float)
            # +- 0.5/pixel slack for the final integer rounding
            assert np.linalg.norm(rec - orig) <= bound + 4.0

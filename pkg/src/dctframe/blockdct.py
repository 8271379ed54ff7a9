"""Orthonormal block DCT, JPEG-style quantization tables, zigzag order.

The quantized domain is exact integers; all lossless round-trip claims
downstream are stated there.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .colorspace import YuvPlanes

# JPEG Annex-K base tables (quality 50).
BASE_LUMA = np.array(
    [
        [16, 11, 10, 16, 24, 40, 51, 61],
        [12, 12, 14, 19, 26, 58, 60, 55],
        [14, 13, 16, 24, 40, 57, 69, 56],
        [14, 17, 22, 29, 51, 87, 80, 62],
        [18, 22, 37, 56, 68, 109, 103, 77],
        [24, 35, 55, 64, 81, 104, 113, 92],
        [49, 64, 78, 87, 103, 121, 120, 101],
        [72, 92, 95, 98, 112, 100, 103, 99],
    ],
    dtype=np.int64,
)

BASE_CHROMA = np.array(
    [
        [17, 18, 24, 47, 99, 99, 99, 99],
        [18, 21, 26, 66, 99, 99, 99, 99],
        [24, 26, 56, 99, 99, 99, 99, 99],
        [47, 66, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
        [99, 99, 99, 99, 99, 99, 99, 99],
    ],
    dtype=np.int64,
)

LEVEL_SHIFT = 128.0


@dataclass(frozen=True)
class CodecConfig:
    block_size: int = 4
    quality: int = 95
    chroma_downsampled: bool = False

    def __post_init__(self):
        if self.block_size not in (4, 8):
            raise ValueError(f"block size must be 4 or 8, got {self.block_size}")
        if not 1 <= self.quality <= 100:
            raise ValueError(f"quality must be in 1..100, got {self.quality}")


@dataclass(frozen=True)
class QuantizedPlanes:
    """Per-plane grids of quantized coefficient blocks.

    Each plane array has shape (grid_h, grid_w, B, B), dtype int64.
    """

    config: CodecConfig
    height: int
    width: int
    y: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def planes(self):
        return (self.y, self.u, self.v)

    def __eq__(self, other):
        if not isinstance(other, QuantizedPlanes):
            return NotImplemented
        return (
            self.config == other.config
            and self.height == other.height
            and self.width == other.width
            and all(np.array_equal(a, b) for a, b in zip(self.planes(), other.planes()))
        )


@lru_cache(maxsize=None)
def _dct_matrix(B):
    k = np.arange(B)[:, None]
    n = np.arange(B)[None, :]
    D = np.sqrt(2.0 / B) * np.cos(np.pi * (2 * n + 1) * k / (2 * B))
    D[0] *= np.sqrt(0.5)
    return D


def dct2_forward(block: np.ndarray) -> np.ndarray:
    """2-D orthonormal DCT-II of a B x B block, level-shifted by -128."""
    block = np.asarray(block, dtype=np.float64)
    if block.ndim != 2 or block.shape[0] != block.shape[1]:
        raise ValueError(f"expected square block, got shape {block.shape}")
    D = _dct_matrix(block.shape[0])
    return D @ (block - LEVEL_SHIFT) @ D.T


def dct2_inverse(coeffs: np.ndarray) -> np.ndarray:
    """Inverse of dct2_forward; restores the +128 level shift."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.ndim != 2 or coeffs.shape[0] != coeffs.shape[1]:
        raise ValueError(f"expected square block, got shape {coeffs.shape}")
    D = _dct_matrix(coeffs.shape[0])
    return D.T @ coeffs @ D + LEVEL_SHIFT


@lru_cache(maxsize=None)
def quant_matrix_for(quality: int, block_size: int, plane_kind: str) -> np.ndarray:
    """Quality-scaled quantization matrix.

    plane_kind is 'luma' or 'chroma'. Follows the common JPEG scaling:
    S = 5000/q below 50, 200 - 2q at or above, entries floor-scaled and
    clamped to [1, 255]. The 4x4 table samples the scaled 8x8 table at
    even row/column indices.
    """
    if not 1 <= quality <= 100:
        raise ValueError(f"quality must be in 1..100, got {quality}")
    if plane_kind == "luma":
        base = BASE_LUMA
    elif plane_kind == "chroma":
        base = BASE_CHROMA
    else:
        raise ValueError(f"unknown plane kind {plane_kind!r}")
    scale = 5000 // quality if quality < 50 else 200 - 2 * quality
    table = np.clip((base * scale + 50) // 100, 1, 255)
    if block_size == 4:
        table = table[np.ix_([0, 2, 4, 6], [0, 2, 4, 6])]
    elif block_size != 8:
        raise ValueError(f"block size must be 4 or 8, got {block_size}")
    table = table.astype(np.int64)
    table.setflags(write=False)
    return table


def quantize(coeffs: np.ndarray, qm: np.ndarray) -> np.ndarray:
    """q = round(c / step), half away from zero. Works on batched blocks."""
    coeffs = np.asarray(coeffs, dtype=np.float64)
    if coeffs.shape[-2:] != qm.shape:
        raise ValueError(f"shape mismatch: {coeffs.shape} vs {qm.shape}")
    ratio = coeffs / qm
    return (np.sign(ratio) * np.floor(np.abs(ratio) + 0.5)).astype(np.int64)


def dequantize(qblock: np.ndarray, qm: np.ndarray) -> np.ndarray:
    if np.asarray(qblock).shape[-2:] != qm.shape:
        raise ValueError(f"shape mismatch: {np.asarray(qblock).shape} vs {qm.shape}")
    return np.asarray(qblock, dtype=np.float64) * qm


@lru_cache(maxsize=None)
def zigzag_positions(B: int) -> tuple:
    """(row, col) pairs in zigzag order; index 0 is DC."""
    cells = [(r, c) for r in range(B) for c in range(B)]
    # Within an anti-diagonal, even sums walk up-right, odd sums down-left.
    cells.sort(key=lambda rc: (rc[0] + rc[1], rc[0] if (rc[0] + rc[1]) % 2 else -rc[0]))
    return tuple(cells)


def zigzag_index(row: int, col: int, B: int) -> int:
    if not (0 <= row < B and 0 <= col < B):
        raise ValueError(f"({row}, {col}) out of range for block size {B}")
    return zigzag_positions(B).index((row, col))


def zigzag_inverse(k: int, B: int) -> tuple:
    if not 0 <= k < B * B:
        raise ValueError(f"zigzag index {k} out of range for block size {B}")
    return zigzag_positions(B)[k]


def _split_blocks(plane, B):
    h, w = plane.shape
    return plane.reshape(h // B, B, w // B, B).transpose(0, 2, 1, 3)


def _join_blocks(blocks):
    gh, gw, B, _ = blocks.shape
    return blocks.transpose(0, 2, 1, 3).reshape(gh * B, gw * B)


def _encode_plane(plane, qm, B):
    D = _dct_matrix(B)
    blocks = _split_blocks(plane.astype(np.float64), B) - LEVEL_SHIFT
    coeffs = np.einsum("ij,ghjk,lk->ghil", D, blocks, D)
    return quantize(coeffs, qm)


def _decode_plane(qblocks, qm, B):
    D = _dct_matrix(B)
    coeffs = dequantize(qblocks, qm)
    blocks = np.einsum("ji,ghjk,kl->ghil", D, coeffs, D) + LEVEL_SHIFT
    return np.clip(np.rint(_join_blocks(blocks)), 0, 255).astype(np.uint8)


def encode_planes(planes: YuvPlanes, config: CodecConfig) -> QuantizedPlanes:
    """Block-DCT and quantize all three planes."""
    B = config.block_size
    if planes.chroma_downsampled != config.chroma_downsampled:
        raise ValueError("plane downsampling flag does not match config")
    for p in (planes.y, planes.u, planes.v):
        if p.shape[0] % B or p.shape[1] % B:
            raise ValueError(f"plane shape {p.shape} not divisible by block size {B}")
    luma_qm = quant_matrix_for(config.quality, B, "luma")
    chroma_qm = quant_matrix_for(config.quality, B, "chroma")
    return QuantizedPlanes(
        config=config,
        height=planes.height,
        width=planes.width,
        y=_encode_plane(planes.y, luma_qm, B),
        u=_encode_plane(planes.u, chroma_qm, B),
        v=_encode_plane(planes.v, chroma_qm, B),
    )


def decode_planes(qp: QuantizedPlanes) -> YuvPlanes:
    """Dequantize and inverse-DCT back to 8-bit planes."""
    B = qp.config.block_size
    luma_qm = quant_matrix_for(qp.config.quality, B, "luma")
    chroma_qm = quant_matrix_for(qp.config.quality, B, "chroma")
    return YuvPlanes(
        y=_decode_plane(qp.y, luma_qm, B),
        u=_decode_plane(qp.u, chroma_qm, B),
        v=_decode_plane(qp.v, chroma_qm, B),
        chroma_downsampled=qp.config.chroma_downsampled,
    )

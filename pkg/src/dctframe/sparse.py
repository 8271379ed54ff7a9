"""Sparse (channel, position, value) token sequences over quantized planes.

Channels interleave plane and intra-block frequency: c = 3k + plane,
with plane Y=0, U=1, V=2 and k the zigzag frequency index. Channel 3B^2
is the end-of-sequence symbol. Positions are raster indices into the
channel's own block grid; chroma keeps its own (possibly smaller)
position space under downsampling.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .blockdct import CodecConfig, QuantizedPlanes, zigzag_positions

VALUE_MAX = 1023
VALUE_MIN = -1023


class SparseElement(NamedTuple):
    channel: int
    position: int
    value: int


def n_channels(block_size: int) -> int:
    """Number of non-EOS channels: 3 * B^2."""
    return 3 * block_size * block_size


def eos_channel(block_size: int) -> int:
    return n_channels(block_size)


def eos_element(block_size: int) -> SparseElement:
    return SparseElement(eos_channel(block_size), 0, 0)


def channel_of(plane: int, zigzag_k: int, block_size: int) -> int:
    """Interleaved channel index for plane (0=Y, 1=U, 2=V) and frequency k."""
    if not 0 <= plane < 3:
        raise ValueError(f"plane must be 0, 1 or 2, got {plane}")
    if not 0 <= zigzag_k < block_size * block_size:
        raise ValueError(f"zigzag index {zigzag_k} out of range")
    return 3 * zigzag_k + plane


def plane_of(channel: int) -> int:
    return channel % 3


def grid_shape(height, width, config, plane):
    """Block-grid shape (rows, cols) of a plane's position space."""
    B = config.block_size
    h, w = height, width
    if plane != 0 and config.chroma_downsampled:
        h, w = -(-h // 2), -(-w // 2)
    return h // B, w // B


def channel_grid_sizes(height, width, config):
    """Position-space size for every non-EOS channel, in channel order."""
    luma = int(np.prod(grid_shape(height, width, config, 0)))
    chroma = int(np.prod(grid_shape(height, width, config, 1)))
    sizes = []
    for k in range(config.block_size**2):
        sizes.extend([luma, chroma, chroma])
    return tuple(sizes)


@dataclass(frozen=True)
class SparseSequence:
    config: CodecConfig
    height: int
    width: int
    residual: bool
    elements: tuple
    saturated: int = 0

    def __post_init__(self):
        eos = eos_channel(self.config.block_size)
        elems = tuple(SparseElement(*e) for e in self.elements)
        object.__setattr__(self, "elements", elems)
        if not elems or elems[-1] != SparseElement(eos, 0, 0):
            raise ValueError("sequence must end with exactly one EOS element")
        sizes = channel_grid_sizes(self.height, self.width, self.config)
        prev = (-1, -1)
        for i, (c, p, v) in enumerate(elems[:-1]):
            if c >= eos:
                raise ValueError(f"element {i}: EOS before end of sequence")
            if (c, p) <= prev:
                raise ValueError(f"element {i}: ordering violation at (c={c}, p={p})")
            if not 0 <= p < sizes[c]:
                raise ValueError(f"element {i}: position {p} out of range for channel {c}")
            if v == 0 or not VALUE_MIN <= v <= VALUE_MAX:
                raise ValueError(f"element {i}: value {v} out of range")
            prev = (c, p)

    def __len__(self):
        return len(self.elements)


@dataclass
class DctImage:
    """Dense (grid_h, grid_w, 3B^2) coefficient array with occupancy mask.

    Downsampled chroma channels occupy only the top-left sub-grid.
    """

    values: np.ndarray
    occupancy: np.ndarray

    @classmethod
    def empty(cls, height, width, config):
        gh, gw = grid_shape(height, width, config, 0)
        C = n_channels(config.block_size)
        return cls(
            values=np.zeros((gh, gw, C), dtype=np.int64),
            occupancy=np.zeros((gh, gw, C), dtype=np.uint8),
        )


def _plane_zigzag_view(plane_blocks, B):
    """(gh, gw, B, B) block array -> (gh, gw, B^2) in zigzag channel order."""
    rows, cols = zip(*zigzag_positions(B))
    return plane_blocks[:, :, list(rows), list(cols)]


def _clamped(values):
    clamped = np.clip(values, VALUE_MIN, VALUE_MAX)
    return clamped, int(np.count_nonzero(clamped != values))


def _collect_elements(arrays):
    """Sorted (c, p, v) triples from per-plane zigzag arrays."""
    chans, poss, vals = [], [], []
    for plane, zz in enumerate(arrays):
        gh, gw, _ = zz.shape
        r, c_col, k = np.nonzero(zz)
        chans.append(3 * k + plane)
        poss.append(r * gw + c_col)
        vals.append(zz[r, c_col, k])
    chans = np.concatenate(chans)
    poss = np.concatenate(poss)
    vals = np.concatenate(vals)
    order = np.lexsort((poss, chans))
    return chans[order], poss[order], vals[order]


def to_sparse(qp: QuantizedPlanes) -> SparseSequence:
    """Every nonzero coefficient as an ordered (c, p, v) element, plus EOS."""
    B = qp.config.block_size
    arrays = [_plane_zigzag_view(p, B) for p in qp.planes()]
    saturated = 0
    clamped = []
    for a in arrays:
        ca, n = _clamped(a)
        clamped.append(ca)
        saturated += n
    chans, poss, vals = _collect_elements(clamped)
    elements = [SparseElement(int(c), int(p), int(v)) for c, p, v in zip(chans, poss, vals)]
    elements.append(eos_element(B))
    return SparseSequence(
        config=qp.config,
        height=qp.height,
        width=qp.width,
        residual=False,
        elements=tuple(elements),
        saturated=saturated,
    )


def residual_encode(current: QuantizedPlanes, previous: QuantizedPlanes) -> SparseSequence:
    """Quantized-domain coefficient differences against the previous frame."""
    if current.config != previous.config:
        raise ValueError("config mismatch between frames")
    if (current.height, current.width) != (previous.height, previous.width):
        raise ValueError("dimension mismatch between frames")
    B = current.config.block_size
    saturated = 0
    arrays = []
    for cur, prev in zip(current.planes(), previous.planes()):
        diff = _plane_zigzag_view(cur, B).astype(np.int64) - _plane_zigzag_view(prev, B)
        clamped, n = _clamped(diff)
        saturated += n
        arrays.append(clamped)
    chans, poss, vals = _collect_elements(arrays)
    elements = [SparseElement(int(c), int(p), int(v)) for c, p, v in zip(chans, poss, vals)]
    elements.append(eos_element(B))
    return SparseSequence(
        config=current.config,
        height=current.height,
        width=current.width,
        residual=True,
        elements=tuple(elements),
        saturated=saturated,
    )


def from_sparse(
    seq: SparseSequence, previous: Optional[QuantizedPlanes] = None
) -> QuantizedPlanes:
    """Scatter a sequence back into quantized planes.

    Residual sequences require the previous frame's planes; absolute
    sequences ignore them.
    """
    config = seq.config
    B = config.block_size
    if seq.residual:
        if previous is None:
            raise ValueError("residual sequence requires the previous frame")
        if previous.config != config or (previous.height, previous.width) != (
            seq.height,
            seq.width,
        ):
            raise ValueError("previous frame does not match sequence config")
        planes = [p.astype(np.int64).copy() for p in previous.planes()]
    else:
        planes = []
        for plane in range(3):
            gh, gw = grid_shape(seq.height, seq.width, config, plane)
            planes.append(np.zeros((gh, gw, B, B), dtype=np.int64))
    zz = zigzag_positions(B)
    for c, p, v in seq.elements[:-1]:
        plane = plane_of(c)
        k = c // 3
        gh, gw = planes[plane].shape[:2]
        row, col = zz[k]
        if seq.residual:
            planes[plane][p // gw, p % gw, row, col] += v
        else:
            planes[plane][p // gw, p % gw, row, col] = v
    return QuantizedPlanes(
        config=config,
        height=seq.height,
        width=seq.width,
        y=planes[0],
        u=planes[1],
        v=planes[2],
    )


def scatter_partial(prefix, height, width, config) -> DctImage:
    """Dense partial coefficient image from an ordered element prefix."""
    img = DctImage.empty(height, width, config)
    eos = eos_channel(config.block_size)
    sizes = channel_grid_sizes(height, width, config)
    prev = (-1, -1)
    for i, (c, p, v) in enumerate(prefix):
        if c >= eos:
            raise ValueError(f"prefix element {i} is EOS")
        if (c, p) <= prev:
            raise ValueError(f"prefix element {i}: unordered or duplicate slot")
        if not 0 <= p < sizes[c]:
            raise ValueError(f"prefix element {i}: position {p} out of range")
        prev = (c, p)
        plane = plane_of(c)
        _, gw = grid_shape(height, width, config, plane)
        img.values[p // gw, p % gw, c] = v
        img.occupancy[p // gw, p % gw, c] = 1
    return img

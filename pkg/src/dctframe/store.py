"""Bit-exact serialization of sparse sequences plus dataset ingestion.

Sequence file layout (all little-endian):

    magic   "DCTS" (4 bytes)
    version u8 (currently 1)
    header  height u16, width u16, block u8, quality u8,
            flags u8 (bit0 chroma-downsampled, bit1 residual),
            reserved u8, element count u32
    payload per element: channel uvarint, position uvarint,
            value zigzag-signed varint

The layout is normative and versioned; decode errors never leave a
partially written file behind.
"""

import json
import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from .blockdct import CodecConfig, encode_planes
from .colorspace import rgb_to_yuv
from .sparse import SparseSequence, residual_encode, to_sparse

MAGIC = b"DCTS"
VERSION = 1
_HEADER = struct.Struct("<HHBBBBI")

FLAG_CHROMA = 0x01
FLAG_RESIDUAL = 0x02


class FormatError(ValueError):
    """Raised on any malformed file: bad magic, truncation, bad payload."""


def append_uvarint(buf: bytearray, n: int):
    if n < 0:
        raise ValueError("uvarint requires a nonnegative integer")
    while True:
        b = n & 0x7F
        n >>= 7
        if n:
            buf.append(b | 0x80)
        else:
            buf.append(b)
            return


def read_uvarint(data, offset: int):
    """Returns (value, new_offset)."""
    result = 0
    shift = 0
    while True:
        if offset >= len(data):
            raise FormatError("truncated varint")
        b = data[offset]
        offset += 1
        result |= (b & 0x7F) << shift
        if not b & 0x80:
            return result, offset
        shift += 7
        if shift > 63:
            raise FormatError("varint too long")


def zigzag_encode(n: int) -> int:
    return (n << 1) ^ (n >> 63) if n >= 0 else ((-n) << 1) - 1


def zigzag_decode(n: int) -> int:
    return (n >> 1) if n % 2 == 0 else -((n + 1) >> 1)


def atomic_write(path, data: bytes):
    """Write via a temp file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def sequence_to_bytes(seq: SparseSequence) -> bytes:
    flags = 0
    if seq.config.chroma_downsampled:
        flags |= FLAG_CHROMA
    if seq.residual:
        flags |= FLAG_RESIDUAL
    out = bytearray()
    out += MAGIC
    out.append(VERSION)
    out += _HEADER.pack(
        seq.height,
        seq.width,
        seq.config.block_size,
        seq.config.quality,
        flags,
        0,
        len(seq.elements),
    )
    for c, p, v in seq.elements:
        append_uvarint(out, c)
        append_uvarint(out, p)
        append_uvarint(out, zigzag_encode(v))
    return bytes(out)


def sequence_from_bytes(data: bytes) -> SparseSequence:
    if data[:4] != MAGIC:
        raise FormatError("bad magic")
    if len(data) < 5 + _HEADER.size:
        raise FormatError("truncated header")
    if data[4] != VERSION:
        raise FormatError(f"unsupported version {data[4]}")
    height, width, block, quality, flags, reserved, count = _HEADER.unpack_from(data, 5)
    if flags & ~(FLAG_CHROMA | FLAG_RESIDUAL):
        raise FormatError(f"unknown flags 0x{flags:02x}")
    try:
        config = CodecConfig(
            block_size=block,
            quality=quality,
            chroma_downsampled=bool(flags & FLAG_CHROMA),
        )
    except ValueError as e:
        raise FormatError(str(e)) from e
    offset = 5 + _HEADER.size
    elements = []
    for _ in range(count):
        c, offset = read_uvarint(data, offset)
        p, offset = read_uvarint(data, offset)
        zv, offset = read_uvarint(data, offset)
        elements.append((c, p, zigzag_decode(zv)))
    if offset != len(data):
        raise FormatError("trailing bytes after payload")
    try:
        return SparseSequence(
            config=config,
            height=height,
            width=width,
            residual=bool(flags & FLAG_RESIDUAL),
            elements=tuple(elements),
        )
    except ValueError as e:
        raise FormatError(str(e)) from e


def write_sequence(path, seq: SparseSequence):
    atomic_write(path, sequence_to_bytes(seq))


def read_sequence(path) -> SparseSequence:
    with open(path, "rb") as f:
        return sequence_from_bytes(f.read())


@dataclass(frozen=True)
class ClipRecord:
    clip_id: str
    frame_paths: tuple
    annotation: dict = field(default_factory=dict)
    config_id: str = ""


def write_manifest(path, records):
    lines = []
    for r in records:
        lines.append(
            json.dumps(
                {
                    "clip_id": r.clip_id,
                    "frames": list(r.frame_paths),
                    "annotation": r.annotation,
                    "config_id": r.config_id,
                }
            )
        )
    atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def read_manifest(path):
    records = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise FormatError(f"manifest line {line_no}: {e}") from e
            records.append(
                ClipRecord(
                    clip_id=obj["clip_id"],
                    frame_paths=tuple(obj["frames"]),
                    annotation=obj.get("annotation", {}),
                    config_id=obj.get("config_id", ""),
                )
            )
    return records


def load_image(path) -> np.ndarray:
    """Load a PNG or binary PPM image as (H, W, 3) uint8."""
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def save_image(path, rgb: np.ndarray):
    Image.fromarray(np.asarray(rgb, dtype=np.uint8), mode="RGB").save(path)


def prepare_frame(rgb: np.ndarray, size: int) -> np.ndarray:
    """Central square crop, then resize to size x size."""
    h, w = rgb.shape[:2]
    side = min(h, w)
    top = (h - side) // 2
    left = (w - side) // 2
    crop = rgb[top : top + side, left : left + side]
    if side == size:
        return crop
    im = Image.fromarray(crop).resize((size, size), Image.Resampling.BILINEAR)
    return np.asarray(im)


def ingest(records, config: CodecConfig, stride: int = 1, size: int = None, residual: bool = True):
    """Encode each clip into sparse sequences.

    Yields (clip_id, [SparseSequence]) per clip. The first frame is
    always absolute; later frames are residual when requested.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    for record in records:
        paths = record.frame_paths[::stride]
        sequences = []
        previous = None
        for path in paths:
            rgb = load_image(path)
            if size is not None:
                rgb = prepare_frame(rgb, size)
            qp = encode_planes(rgb_to_yuv(rgb, config.chroma_downsampled), config)
            if residual and previous is not None:
                sequences.append(residual_encode(qp, previous))
            else:
                sequences.append(to_sparse(qp))
            previous = qp
        yield record.clip_id, sequences

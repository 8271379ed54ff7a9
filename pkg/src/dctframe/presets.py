"""Per-domain codec presets: resolution, block size, quality, chroma
downsampling and context-frame bounds."""

from dataclasses import dataclass

from .blockdct import CodecConfig


@dataclass(frozen=True)
class Preset:
    name: str
    resolution: int
    config: CodecConfig
    min_context: int
    max_context: int


def _p(name, res, block, quality, chroma, lo, hi):
    return Preset(
        name=name,
        resolution=res,
        config=CodecConfig(block_size=block, quality=quality, chroma_downsampled=chroma),
        min_context=lo,
        max_context=hi,
    )


PRESETS = {
    p.name: p
    for p in (
        _p("bair", 64, 4, 99, False, 1, 4),
        _p("k600", 64, 4, 85, True, 5, 5),
        _p("robonet64", 64, 4, 95, False, 2, 4),
        _p("robonet128", 128, 4, 95, True, 2, 4),
        _p("kitti", 64, 4, 95, False, 5, 5),
        _p("shapenet", 128, 4, 95, True, 1, 3),
        _p("objectron", 192, 8, 65, True, 1, 3),
        _p("multitask", 256, 8, 72, False, 1, 1),
    )
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None

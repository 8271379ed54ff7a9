import numpy as np

from dctframe import CodecConfig
from dctframe.blockdct import decode_planes, encode_planes
from dctframe.colorspace import rgb_to_yuv, yuv_to_rgb


def encode_rgb(img, config):
    return encode_planes(rgb_to_yuv(img, config.chroma_downsampled), config)


def decode_rgb(qp):
    return yuv_to_rgb(decode_planes(qp))


def random_image(rng, height=64, width=64):
    return rng.integers(0, 256, (height, width, 3)).astype(np.uint8)


def gradient_image(height=64, width=64):
    x = np.linspace(0, 255, width)
    y = np.linspace(0, 255, height)
    grid = (x[None, :] + y[:, None]) / 2
    return np.clip(np.stack([grid, 255 - grid, grid / 2], axis=-1), 0, 255).astype(np.uint8)


def moving_square_clip(n_frames, size=64, square=8, step=2, seed=0):
    """Constant background with one bright square marching across it."""
    rng = np.random.default_rng(seed)
    bg = np.full((size, size, 3), 90, dtype=np.uint8)
    frames = []
    for i in range(n_frames):
        frame = bg.copy()
        top = (i * step) % (size - square)
        left = (i * step * 2) % (size - square)
        frame[top : top + square, left : left + square] = 220
        frames.append(frame)
    return frames


def pan_clip(n_frames, size=64, shift=8, seed=0):
    """A noise texture translating rigidly; every block changes each frame."""
    rng = np.random.default_rng(seed)
    texture = rng.integers(0, 256, (size, size, 3)).astype(np.uint8)
    return [np.roll(texture, i * shift, axis=1) for i in range(n_frames)]


def static_clip(n_frames, size=64, seed=0):
    rng = np.random.default_rng(seed)
    frame = rng.integers(0, 256, (size, size, 3)).astype(np.uint8)
    return [frame.copy() for _ in range(n_frames)]

"""RGB <-> YCbCr conversion with optional 2x chroma downsampling.

Full-range BT.601 (JFIF convention). Images are uint8 numpy arrays:
RGB is (H, W, 3), planes are 2-D.
"""

from dataclasses import dataclass

import numpy as np

# Forward BT.601 full-range matrix, chroma offset +128.
_FWD = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)

# Inverse (exact closed form for the matrix above).
_INV = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)


@dataclass(frozen=True)
class YuvPlanes:
    """Luma plane plus two chroma planes, all uint8.

    When chroma_downsampled, u and v are ceil(half) the luma resolution
    per axis.
    """

    y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    chroma_downsampled: bool

    def __post_init__(self):
        if self.y.ndim != 2 or self.u.ndim != 2 or self.v.ndim != 2:
            raise ValueError("planes must be 2-D")
        if self.chroma_downsampled:
            want = (-(-self.y.shape[0] // 2), -(-self.y.shape[1] // 2))
        else:
            want = self.y.shape
        if self.u.shape != want or self.v.shape != want:
            raise ValueError(
                f"chroma shape {self.u.shape} inconsistent with luma "
                f"{self.y.shape} (downsampled={self.chroma_downsampled})"
            )

    @property
    def height(self):
        return self.y.shape[0]

    @property
    def width(self):
        return self.y.shape[1]


def _to_u8(a):
    return np.clip(np.rint(a), 0, 255).astype(np.uint8)


def _box_downsample(plane):
    """2x2 box average, replicating the last row/column for odd sizes."""
    h, w = plane.shape
    if h % 2 or w % 2:
        plane = np.pad(plane, ((0, h % 2), (0, w % 2)), mode="edge")
        h, w = plane.shape
    f = plane.astype(np.float64)
    avg = (f[0::2, 0::2] + f[0::2, 1::2] + f[1::2, 0::2] + f[1::2, 1::2]) / 4.0
    return _to_u8(avg)


def _nn_upsample(plane, height, width):
    up = np.repeat(np.repeat(plane, 2, axis=0), 2, axis=1)
    return up[:height, :width]


def rgb_to_yuv(img: np.ndarray, downsample: bool = False) -> YuvPlanes:
    """Convert an (H, W, 3) uint8 RGB image to YCbCr planes."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    if img.shape[0] == 0 or img.shape[1] == 0:
        raise ValueError("zero-dimension image")
    f = img.astype(np.float64)
    yuv = f @ _FWD.T
    yuv[..., 1:] += 128.0
    y = _to_u8(yuv[..., 0])
    u = _to_u8(yuv[..., 1])
    v = _to_u8(yuv[..., 2])
    if downsample:
        u = _box_downsample(u)
        v = _box_downsample(v)
    return YuvPlanes(y=y, u=u, v=v, chroma_downsampled=downsample)


def yuv_to_rgb(planes: YuvPlanes) -> np.ndarray:
    """Convert YCbCr planes back to an (H, W, 3) uint8 RGB image."""
    u, v = planes.u, planes.v
    if planes.chroma_downsampled:
        u = _nn_upsample(u, planes.height, planes.width)
        v = _nn_upsample(v, planes.height, planes.width)
    yuv = np.stack(
        [
            planes.y.astype(np.float64),
            u.astype(np.float64) - 128.0,
            v.astype(np.float64) - 128.0,
        ],
        axis=-1,
    )
    return _to_u8(yuv @ _INV.T)

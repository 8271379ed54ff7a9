"""PSNR, SSIM and sparsity analytics.

SSIM is computed on the luma plane with an 11x11 Gaussian window
(sigma 1.5), K1=0.01, K2=0.03, dynamic range 255. Identical images
report math.inf PSNR; callers must skip-and-count infinities when
averaging.
"""

import csv
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from PIL import Image

from .blockdct import encode_planes
from .colorspace import rgb_to_yuv
from .sparse import plane_of, grid_shape, residual_encode, to_sparse
from .store import atomic_write

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
_K1, _K2, _L = 0.01, 0.03, 255.0


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all channels."""
    a, b = _check_pair(a, b)
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(_L * _L / mse)


@lru_cache(maxsize=None)
def _gaussian_window():
    half = SSIM_WINDOW // 2
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * SSIM_SIGMA**2))
    w = np.outer(g, g)
    return w / w.sum()


def _luma(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 3:
        return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]
    return img


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean local SSIM on luma, Gaussian-weighted windows."""
    a, b = _check_pair(a, b)
    x = _luma(a)
    y = _luma(b)
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"image too small for SSIM: {x.shape}")
    w = _gaussian_window()
    xs = np.lib.stride_tricks.sliding_window_view(x, (SSIM_WINDOW, SSIM_WINDOW))
    ys = np.lib.stride_tricks.sliding_window_view(y, (SSIM_WINDOW, SSIM_WINDOW))
    mu_x = np.einsum("abij,ij->ab", xs, w)
    mu_y = np.einsum("abij,ij->ab", ys, w)
    xx = np.einsum("abij,ij->ab", xs * xs, w) - mu_x**2
    yy = np.einsum("abij,ij->ab", ys * ys, w) - mu_y**2
    xy = np.einsum("abij,ij->ab", xs * ys, w) - mu_x * mu_y
    c1 = (_K1 * _L) ** 2
    c2 = (_K2 * _L) ** 2
    s = ((2 * mu_x * mu_y + c1) * (2 * xy + c2)) / (
        (mu_x**2 + mu_y**2 + c1) * (xx + yy + c2)
    )
    return float(np.mean(s))


@dataclass(frozen=True)
class BestOfN:
    index: int
    psnr_db: float
    ssim_score: float


def best_of_n(truth, candidates) -> BestOfN:
    """Pick the candidate with the highest PSNR (ties: lowest index)."""
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates")
    scores = [psnr(truth, c) for c in candidates]
    best = max(range(len(scores)), key=lambda i: (scores[i], -i))
    return BestOfN(index=best, psnr_db=scores[best], ssim_score=ssim(truth, candidates[best]))


@dataclass
class SparsityReport:
    frame_lengths_abs: list
    frame_lengths_resid: list  # aligned with frames 1..n-1
    channel_nonzero_fraction: np.ndarray
    heatmap_abs: np.ndarray  # per-position nonzero counts, block grid
    heatmap_resid: np.ndarray
    ratio: float  # mean residual length / mean absolute length


def sparsity_report(frames, config) -> SparsityReport:
    """Compare absolute and residual encodings over a frame list."""
    frames = list(frames)
    if len(frames) < 2:
        raise ValueError("need at least 2 frames for residual statistics")
    h, w = frames[0].shape[:2]
    gh, gw = grid_shape(h, w, config, 0)
    heat_abs = np.zeros((gh, gw), dtype=np.int64)
    heat_resid = np.zeros((gh, gw), dtype=np.int64)
    n_ch = 3 * config.block_size**2
    channel_counts = np.zeros(n_ch, dtype=np.int64)
    channel_slots = np.zeros(n_ch, dtype=np.int64)
    lengths_abs, lengths_resid = [], []
    previous = None
    for frame in frames:
        qp = encode_planes(rgb_to_yuv(frame, config.chroma_downsampled), config)
        absolute = to_sparse(qp)
        lengths_abs.append(len(absolute))
        for c, p, _ in absolute.elements[:-1]:
            _, pgw = grid_shape(h, w, config, plane_of(c))
            heat_abs[p // pgw, p % pgw] += 1
            channel_counts[c] += 1
        for c in range(n_ch):
            _, pgw = grid_shape(h, w, config, plane_of(c))
            channel_slots[c] += grid_shape(h, w, config, plane_of(c))[0] * pgw
        if previous is not None:
            resid = residual_encode(qp, previous)
            lengths_resid.append(len(resid))
            for c, p, _ in resid.elements[:-1]:
                _, pgw = grid_shape(h, w, config, plane_of(c))
                heat_resid[p // pgw, p % pgw] += 1
        previous = qp
    ratio = (sum(lengths_resid) / len(lengths_resid)) / (sum(lengths_abs) / len(lengths_abs))
    return SparsityReport(
        frame_lengths_abs=lengths_abs,
        frame_lengths_resid=lengths_resid,
        channel_nonzero_fraction=channel_counts / np.maximum(channel_slots, 1),
        heatmap_abs=heat_abs,
        heatmap_resid=heat_resid,
        ratio=ratio,
    )


def write_report_csv(path, frames, config, report: SparsityReport):
    """Schema: frame_index, psnr_db, ssim, L_abs, L_resid, ratio."""
    from .blockdct import decode_planes
    from .colorspace import yuv_to_rgb

    rows = []
    for i, frame in enumerate(frames):
        qp = encode_planes(rgb_to_yuv(frame, config.chroma_downsampled), config)
        decoded = yuv_to_rgb(decode_planes(qp))
        p = psnr(frame, decoded)
        s = ssim(frame, decoded)
        l_resid = report.frame_lengths_resid[i - 1] if i > 0 else ""
        rows.append(
            [i, "inf" if math.isinf(p) else f"{p:.4f}", f"{s:.6f}",
             report.frame_lengths_abs[i], l_resid, f"{report.ratio:.6f}"]
        )
    import io

    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["frame_index", "psnr_db", "ssim", "L_abs", "L_resid", "ratio"])
    writer.writerows(rows)
    atomic_write(path, buf.getvalue().encode("utf-8"))


def write_heatmap(path, counts: np.ndarray):
    """16-bit grayscale PNG, scaled to the full range."""
    peak = int(counts.max())
    scaled = (counts.astype(np.float64) / max(peak, 1) * 65535.0).astype(np.uint16)
    Image.fromarray(scaled).save(path)

"""Autoregressive likelihood and sampling over sparse DCT sequences.

A predictor supplies three conditional categoricals per element: channel
given the prefix, position given the channel, and value given channel
and position. EOS is an extra channel symbol and contributes only the
channel factor. The count-based baseline fills the predictor interface
so likelihood evaluation and sampling run without any neural model.
"""

import math
import struct
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .blockdct import CodecConfig
from .sparse import (
    SparseElement,
    SparseSequence,
    DctImage,
    channel_grid_sizes,
    eos_element,
)
from . import store

_SUM_TOL = 1e-9


@dataclass(frozen=True)
class TokenSpace:
    """Geometry of the token alphabet: per-channel grid sizes plus the
    symmetric nonzero value range [-max_value, max_value] \\ {0}."""

    channel_sizes: tuple
    max_value: int = 1023

    @property
    def n_channels(self):
        # Including the EOS symbol.
        return len(self.channel_sizes) + 1

    @property
    def eos(self):
        return len(self.channel_sizes)

    @property
    def n_values(self):
        return 2 * self.max_value

    def value_to_index(self, v: int) -> int:
        if v == 0 or abs(v) > self.max_value:
            raise ValueError(f"value {v} outside token space")
        return v + self.max_value if v < 0 else v + self.max_value - 1

    def index_to_value(self, i: int) -> int:
        if not 0 <= i < self.n_values:
            raise ValueError(f"value index {i} out of range")
        v = i - self.max_value
        return v if v < 0 else v + 1

    @classmethod
    def for_frame(cls, height, width, config: CodecConfig):
        return cls(channel_sizes=channel_grid_sizes(height, width, config))


@dataclass(frozen=True)
class PredictorDistributions:
    channel_probs: np.ndarray
    position_probs: Optional[np.ndarray]
    value_probs: Optional[np.ndarray]


@dataclass
class PredictorContext:
    """Annotated context frames plus the partially observed target."""

    frames: list = field(default_factory=list)  # [(DctImage, annotation vector)]
    partial_target: Optional[DctImage] = None


class Predictor(ABC):
    """Three-factor conditional distribution over (channel, position, value)."""

    def __init__(self, space: TokenSpace):
        self.space = space

    @abstractmethod
    def channel_probs(self, context, prefix) -> np.ndarray:
        """Categorical over all channels including EOS."""

    @abstractmethod
    def position_probs(self, context, prefix, channel) -> np.ndarray:
        """Categorical over the queried channel's grid positions."""

    @abstractmethod
    def value_probs(self, context, prefix, channel, position) -> np.ndarray:
        """Categorical over the nonzero value bins."""

    def distributions(self, context, prefix, element) -> PredictorDistributions:
        cp = self.channel_probs(context, prefix)
        if element.channel == self.space.eos:
            return PredictorDistributions(cp, None, None)
        pp = self.position_probs(context, prefix, element.channel)
        vp = self.value_probs(context, prefix, element.channel, element.position)
        return PredictorDistributions(cp, pp, vp)


class UniformPredictor(Predictor):
    def channel_probs(self, context, prefix):
        n = self.space.n_channels
        return np.full(n, 1.0 / n)

    def position_probs(self, context, prefix, channel):
        n = self.space.channel_sizes[channel]
        return np.full(n, 1.0 / n)

    def value_probs(self, context, prefix, channel, position):
        n = self.space.n_values
        return np.full(n, 1.0 / n)


@dataclass(frozen=True)
class Chunk:
    start: int
    elements: tuple


def select_chunk(seq: SparseSequence, C: int, rng_seed: int) -> Chunk:
    """Uniformly pick a target chunk of length C; EOS-pads past the end."""
    if C < 1:
        raise ValueError("chunk length must be >= 1")
    L = len(seq)
    if L == 0:
        raise ValueError("empty sequence")
    rng = np.random.default_rng(rng_seed)
    t = int(rng.integers(0, max(1, L - C + 1)))
    eos = eos_element(seq.config.block_size)
    elems = list(seq.elements[t : t + C])
    elems.extend([eos] * (C - len(elems)))
    return Chunk(start=t, elements=tuple(elems))


@dataclass(frozen=True)
class NllBreakdown:
    channel_nats: float
    position_nats: float
    value_nats: float
    n_elements: int

    @property
    def total_nats(self):
        return self.channel_nats + self.position_nats + self.value_nats


def _checked_log(probs, index, what, element_index):
    s = float(np.sum(probs))
    if abs(s - 1.0) > _SUM_TOL or np.any(probs < 0):
        raise ValueError(f"{what} distribution at element {element_index} is not normalized")
    p = float(probs[index])
    if p <= 0.0:
        raise ValueError(
            f"predictor assigned zero probability to realized {what} at element {element_index}"
        )
    return math.log(p)


def nll(
    seq: SparseSequence,
    predictor: Predictor,
    C: int = 256,
    context: Optional[PredictorContext] = None,
) -> NllBreakdown:
    """Total negative log-likelihood in nats, evaluated chunk by chunk.

    The total is invariant to C by the chain rule; chunking only affects
    evaluation order.
    """
    if C < 1:
        raise ValueError("chunk length must be >= 1")
    space = predictor.space
    ch = pos = val = 0.0
    for start in range(0, len(seq), C):
        for l in range(start, min(start + C, len(seq))):
            element = seq.elements[l]
            prefix = seq.elements[:l]
            cp = predictor.channel_probs(context, prefix)
            ch -= _checked_log(cp, element.channel, "channel", l)
            if element.channel == space.eos:
                continue
            pp = predictor.position_probs(context, prefix, element.channel)
            pos -= _checked_log(pp, element.position, "position", l)
            vp = predictor.value_probs(context, prefix, element.channel, element.position)
            val -= _checked_log(vp, space.value_to_index(element.value), "value", l)
    return NllBreakdown(ch, pos, val, len(seq))


def bits_per_dimension(total_nats: float, height: int, width: int) -> float:
    if height <= 0 or width <= 0:
        raise ValueError("dimensions must be positive")
    return total_nats / math.log(2) / (height * width * 3)


def mask_channels(probs: np.ndarray, space: TokenSpace, prefix) -> np.ndarray:
    """Zero out channels that would violate the (c, p) ordering."""
    masked = np.array(probs, dtype=np.float64)
    if prefix:
        last_c, last_p, _ = prefix[-1]
        masked[:last_c] = 0.0
        if last_p >= space.channel_sizes[last_c] - 1:
            masked[last_c] = 0.0
    return masked


def mask_positions(probs: np.ndarray, space: TokenSpace, prefix, channel) -> np.ndarray:
    """Zero out positions at or before the last one used in this channel."""
    masked = np.array(probs, dtype=np.float64)
    if prefix and prefix[-1].channel == channel:
        masked[: prefix[-1].position + 1] = 0.0
    return masked


def _sample_masked(probs, temperature, rng, what):
    total = float(np.sum(probs))
    if total <= 0.0:
        raise ValueError(f"no {what} probability mass left after masking")
    probs = probs / total
    if temperature == 0.0:
        return int(np.argmax(probs))
    if temperature != 1.0:
        logp = np.full_like(probs, -np.inf)
        nz = probs > 0
        logp[nz] = np.log(probs[nz]) / temperature
        logp -= logp.max()
        probs = np.exp(logp)
        probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))


def sample_sequence(
    predictor: Predictor,
    context: Optional[PredictorContext],
    config: CodecConfig,
    height: int,
    width: int,
    *,
    temperature: float = 1.0,
    max_len: int = 4096,
    rng_seed: int = 0,
    residual: bool = False,
) -> SparseSequence:
    """Ancestral channel -> position -> value sampling until EOS.

    Invalid candidates (ordering violations, occupied slots) are masked
    before sampling, so every output decodes. temperature 0 is greedy.
    """
    if temperature < 0:
        raise ValueError("temperature must be >= 0")
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    space = predictor.space
    expected = TokenSpace.for_frame(height, width, config)
    if space.channel_sizes != expected.channel_sizes:
        raise ValueError("predictor token space does not match frame geometry")
    rng = np.random.default_rng(rng_seed)
    elements = []
    for _ in range(max_len - 1):
        cp = mask_channels(predictor.channel_probs(context, tuple(elements)), space, elements)
        c = _sample_masked(cp, temperature, rng, "channel")
        if c == space.eos:
            break
        pp = mask_positions(
            predictor.position_probs(context, tuple(elements), c), space, elements, c
        )
        p = _sample_masked(pp, temperature, rng, "position")
        vp = np.asarray(predictor.value_probs(context, tuple(elements), c, p), dtype=np.float64)
        v = space.index_to_value(_sample_masked(vp, temperature, rng, "value"))
        elements.append(SparseElement(c, p, v))
    elements.append(eos_element(config.block_size))
    return SparseSequence(
        config=config,
        height=height,
        width=width,
        residual=residual,
        elements=tuple(elements),
    )


class CountPredictor(Predictor):
    """Laplace-smoothed back-off count model over the token stream.

    Channel is conditioned on the previous channel (with a start state),
    position on its delta from the previous position in the same channel,
    and value on the channel alone.
    """

    START = -1

    def __init__(self, space: TokenSpace, alpha: float):
        if alpha <= 0:
            raise ValueError("smoothing alpha must be > 0")
        super().__init__(space)
        self.alpha = float(alpha)
        nc = space.n_channels
        max_grid = max(space.channel_sizes)
        # Row nc is the start state.
        self.channel_counts = np.zeros((nc + 1, nc), dtype=np.int64)
        self.delta_counts = np.zeros((nc - 1, max_grid), dtype=np.int64)
        self.value_counts = np.zeros((nc - 1, space.n_values), dtype=np.int64)

    def _prev_channel_row(self, prefix):
        return prefix[-1].channel if prefix else self.space.n_channels

    @staticmethod
    def _position_base(prefix, channel):
        if prefix and prefix[-1].channel == channel:
            return prefix[-1].position + 1
        return 0

    def observe(self, seq: SparseSequence):
        prev_c = self.space.n_channels
        prev_in_channel = {}
        for c, p, v in seq.elements:
            self.channel_counts[prev_c, c] += 1
            prev_c = c
            if c == self.space.eos:
                continue
            base = prev_in_channel.get(c, -1) + 1
            self.delta_counts[c, p - base] += 1
            prev_in_channel[c] = p
            self.value_counts[c, self.space.value_to_index(v)] += 1

    def channel_probs(self, context, prefix):
        counts = self.channel_counts[self._prev_channel_row(prefix)] + self.alpha
        return counts / counts.sum()

    def position_probs(self, context, prefix, channel):
        if channel == self.space.eos:
            raise ValueError("EOS has no position distribution")
        size = self.space.channel_sizes[channel]
        base = self._position_base(prefix, channel)
        probs = np.zeros(size, dtype=np.float64)
        n_valid = size - base
        if n_valid <= 0:
            raise ValueError(f"channel {channel} has no positions left after {base - 1}")
        probs[base:] = self.delta_counts[channel, :n_valid] + self.alpha
        return probs / probs.sum()

    def value_probs(self, context, prefix, channel, position):
        counts = self.value_counts[channel] + self.alpha
        return counts / counts.sum()


def train_baseline(corpus, alpha: float = 1.0, space: Optional[TokenSpace] = None) -> CountPredictor:
    """Fit a CountPredictor on a corpus of SparseSequence."""
    corpus = list(corpus)
    if not corpus:
        raise ValueError("empty corpus")
    if space is None:
        first = corpus[0]
        space = TokenSpace.for_frame(first.height, first.width, first.config)
    predictor = CountPredictor(space, alpha)
    for seq in corpus:
        predictor.observe(seq)
    return predictor


_MODEL_MAGIC = b"DCTP"
_MODEL_VERSION = 1


def save_predictor(predictor: CountPredictor, path):
    """Versioned binary count-table file (varint payload)."""
    out = bytearray()
    out += _MODEL_MAGIC
    out.append(_MODEL_VERSION)
    out += struct.pack("<d", predictor.alpha)
    space = predictor.space
    store.append_uvarint(out, len(space.channel_sizes))
    for s in space.channel_sizes:
        store.append_uvarint(out, s)
    store.append_uvarint(out, space.max_value)
    for table in (predictor.channel_counts, predictor.delta_counts, predictor.value_counts):
        for n in table.ravel():
            store.append_uvarint(out, int(n))
    store.atomic_write(path, bytes(out))


def load_predictor(path) -> CountPredictor:
    data = open(path, "rb").read()
    if data[:4] != _MODEL_MAGIC:
        raise store.FormatError("bad predictor magic")
    if data[4] != _MODEL_VERSION:
        raise store.FormatError(f"unsupported predictor version {data[4]}")
    (alpha,) = struct.unpack_from("<d", data, 5)
    off = 13
    n_sizes, off = store.read_uvarint(data, off)
    sizes = []
    for _ in range(n_sizes):
        s, off = store.read_uvarint(data, off)
        sizes.append(s)
    max_value, off = store.read_uvarint(data, off)
    predictor = CountPredictor(TokenSpace(tuple(sizes), max_value), alpha)
    for table in (predictor.channel_counts, predictor.delta_counts, predictor.value_counts):
        flat = table.ravel()
        for i in range(flat.size):
            flat[i], off = store.read_uvarint(data, off)
    if off != len(data):
        raise store.FormatError("trailing bytes in predictor file")
    return predictor

"""Conditional frame-prediction plans: annotated contexts, plan builders
for video continuation, interpolation, view synthesis and format
translation, plus plan execution against any predictor.

Parallel plans treat targets as conditionally independent; sequential
plans append each generated frame to later contexts, evicting the
oldest entries beyond the context cap.
"""

import json
from dataclasses import dataclass

import numpy as np

from .blockdct import CodecConfig, encode_planes, decode_planes
from .colorspace import rgb_to_yuv, yuv_to_rgb
from .sparse import from_sparse, to_sparse, scatter_partial
from .sequence import PredictorContext, sample_sequence
from .store import atomic_write

FORMAT_IDS = (
    "rgb",
    "depth",
    "semantic_segmentation",
    "detection",
    "scene_parsing",
    "classification",
    "optical_flow",
    "future_frame",
)


@dataclass(frozen=True)
class Annotation:
    """Per-frame metadata vector. kind is one of timestamp, camera,
    format, action."""

    kind: str
    vector: tuple

    @classmethod
    def timestamp(cls, rel_time: int, past_horizon: int, future_horizon: int = 0):
        """One-hot over relative offsets. rel_time = target time - frame
        time: 0 marks the target itself, 1..past_horizon-1 past frames,
        -1..-future_horizon future anchors."""
        vec = [0.0] * (past_horizon + future_horizon)
        if 0 <= rel_time < past_horizon:
            vec[rel_time] = 1.0
        elif -future_horizon <= rel_time <= -1:
            vec[past_horizon - rel_time - 1] = 1.0
        else:
            raise ValueError(f"relative time {rel_time} outside horizon")
        return cls("timestamp", tuple(vec))

    @classmethod
    def camera(cls, matrix):
        flat = tuple(float(x) for x in np.asarray(matrix, dtype=np.float64).ravel())
        if len(flat) != 9:
            raise ValueError(f"camera annotation needs 9 values, got {len(flat)}")
        return cls("camera", flat)

    @classmethod
    def format(cls, format_id: str):
        if format_id not in FORMAT_IDS:
            raise ValueError(f"unknown format {format_id!r}")
        vec = [0.0] * len(FORMAT_IDS)
        vec[FORMAT_IDS.index(format_id)] = 1.0
        return cls("format", tuple(vec))

    @classmethod
    def action(cls, values):
        flat = tuple(float(x) for x in values)
        if len(flat) != 5:
            raise ValueError(f"action annotation needs 5 values, got {len(flat)}")
        return cls("action", flat)


@dataclass(frozen=True)
class PlanStep:
    target: Annotation
    context: tuple  # ((frame_id, Annotation), ...)
    seed_index: int


@dataclass(frozen=True)
class GenerationPlan:
    mode: str  # "parallel" | "sequential"
    steps: tuple
    residual: bool = False
    max_frames: int = 0  # 0 = unbounded

    def __post_init__(self):
        if self.mode not in ("parallel", "sequential"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def __len__(self):
        return len(self.steps)

    def to_manifest(self) -> str:
        """One JSON object per line; first line is the plan header."""
        lines = [
            json.dumps(
                {
                    "mode": self.mode,
                    "residual": self.residual,
                    "max_frames": self.max_frames,
                    "n_steps": len(self.steps),
                }
            )
        ]
        for step in self.steps:
            lines.append(
                json.dumps(
                    {
                        "seed_index": step.seed_index,
                        "target": [step.target.kind, list(step.target.vector)],
                        "context": [
                            [fid, ann.kind, list(ann.vector)] for fid, ann in step.context
                        ],
                    }
                )
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_manifest(cls, text: str):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        header = json.loads(lines[0])
        steps = []
        for line in lines[1:]:
            obj = json.loads(line)
            steps.append(
                PlanStep(
                    target=Annotation(obj["target"][0], tuple(obj["target"][1])),
                    context=tuple(
                        (fid, Annotation(kind, tuple(vec)))
                        for fid, kind, vec in obj["context"]
                    ),
                    seed_index=obj["seed_index"],
                )
            )
        return cls(
            mode=header["mode"],
            steps=tuple(steps),
            residual=header.get("residual", False),
            max_frames=header.get("max_frames", 0),
        )

    def save(self, path):
        atomic_write(path, self.to_manifest().encode("utf-8"))

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as f:
            return cls.from_manifest(f.read())


def _truncate(entries, max_frames):
    if max_frames and len(entries) > max_frames:
        return entries[-max_frames:]
    return entries


def build_video_plan(
    n_context: int,
    n_generate: int,
    mode: str = "sequential",
    max_frames: int = 0,
    residual: bool = True,
) -> GenerationPlan:
    """Continue a video: step k targets time n_context + k, conditioned
    on all prior frames (generated ones included when sequential)."""
    if n_context < 1:
        raise ValueError("need at least one context frame")
    horizon = (max_frames if max_frames else n_context + n_generate) + 1
    timeline = [(f"ctx:{i}", i) for i in range(n_context)]
    steps = []
    for k in range(n_generate):
        target_time = n_context + k
        available = timeline if mode == "sequential" else timeline[:n_context]
        entries = _truncate(list(available), max_frames)
        context = tuple(
            (fid, Annotation.timestamp(target_time - t, horizon)) for fid, t in entries
        )
        steps.append(
            PlanStep(
                target=Annotation.timestamp(0, horizon),
                context=context,
                seed_index=k,
            )
        )
        timeline.append((f"gen:{k}", target_time))
    return GenerationPlan(mode=mode, steps=tuple(steps), residual=residual, max_frames=max_frames)


def build_interpolation_plan(t0: int, target_times, T: int, max_frames: int = 0) -> GenerationPlan:
    """Fill frames between an anchor at t0 and a future anchor at T.

    Context per step: preceding frames from t0 (previously generated
    targets included) plus the anchor at T.
    """
    target_times = list(target_times)
    if not target_times:
        raise ValueError("no targets")
    prev = t0
    for i, t in enumerate(target_times):
        if not t0 < t < T:
            raise ValueError(f"target time {t} not strictly inside ({t0}, {T})")
        if i > 0 and t <= prev:
            raise ValueError("target times must be strictly increasing")
        prev = t
    span = T - t0
    timeline = [("ctx:start", t0)]
    steps = []
    for k, t in enumerate(target_times):
        entries = _truncate(list(timeline), max_frames - 1 if max_frames else 0)
        context = [
            (fid, Annotation.timestamp(t - ft, span + 1, span)) for fid, ft in entries
        ]
        context.append(("ctx:end", Annotation.timestamp(t - T, span + 1, span)))
        steps.append(
            PlanStep(
                target=Annotation.timestamp(0, span + 1, span),
                context=tuple(context),
                seed_index=k,
            )
        )
        timeline.append((f"gen:{k}", t))
    return GenerationPlan(
        mode="sequential", steps=tuple(steps), residual=False, max_frames=max_frames
    )


def build_view_plan(context_views, target_views, mode: str = "parallel", max_frames: int = 0):
    """Novel view synthesis: each step targets one camera."""
    target_views = list(target_views)
    if not target_views:
        raise ValueError("no target views")
    fixed = [(f"ctx:{i}", Annotation.camera(v)) for i, v in enumerate(context_views)]
    steps = []
    generated = []
    for k, view in enumerate(target_views):
        entries = fixed + generated if mode == "sequential" else fixed
        entries = _truncate(entries, max_frames)
        steps.append(
            PlanStep(target=Annotation.camera(view), context=tuple(entries), seed_index=k)
        )
        generated.append((f"gen:{k}", Annotation.camera(view)))
    return GenerationPlan(mode=mode, steps=tuple(steps), residual=False, max_frames=max_frames)


def build_translation_plan(format_id: str) -> GenerationPlan:
    """Single-step format translation from one RGB context frame."""
    step = PlanStep(
        target=Annotation.format(format_id),
        context=(("ctx:0", Annotation.format("rgb")),),
        seed_index=0,
    )
    return GenerationPlan(mode="parallel", steps=(step,), residual=False)


def build_two_stage_plan(n_seconds: int, low_fps: int, high_fps: int, anchor_context_cap: int = 15):
    """Long-video orchestration: low-fps anchors then interpolation.

    Generates n_seconds * low_fps anchors from a single context frame,
    then fills every anchor gap at the high rate; the generated frame
    total is exactly n_seconds * high_fps.
    """
    if high_fps % low_fps:
        raise ValueError("high_fps must be divisible by low_fps")
    n_anchors = n_seconds * low_fps
    anchor_plan = build_video_plan(
        1, n_anchors, mode="sequential", max_frames=anchor_context_cap, residual=True
    )
    ratio = high_fps // low_fps
    interp_steps = []
    seed_index = 0
    # Gap g runs from anchor g-1 (the context frame for g=0) to anchor g,
    # with ratio - 1 intermediate frames on the fine time grid.
    for g in range(n_anchors):
        start_id = "ctx:0" if g == 0 else f"gen:{g - 1}"
        end_id = f"gen:{g}"
        for j in range(1, ratio):
            context = (
                (start_id, Annotation.timestamp(j, ratio + 1, ratio)),
                (end_id, Annotation.timestamp(j - ratio, ratio + 1, ratio)),
            )
            interp_steps.append(
                PlanStep(
                    target=Annotation.timestamp(0, ratio + 1, ratio),
                    context=context,
                    seed_index=seed_index,
                )
            )
            seed_index += 1
    interp_plan = GenerationPlan(mode="sequential", steps=tuple(interp_steps), residual=False)
    return anchor_plan, interp_plan


def total_two_stage_frames(anchor_plan: GenerationPlan, interp_plan: GenerationPlan) -> int:
    """Generated frames across both stages."""
    return len(anchor_plan) + len(interp_plan)


def _step_seed(plan_seed: int, seed_index: int) -> int:
    ss = np.random.SeedSequence([plan_seed, seed_index])
    return int(ss.generate_state(1)[0])


def execute_plan(
    plan: GenerationPlan,
    predictor,
    config: CodecConfig,
    frames: dict,
    height: int,
    width: int,
    *,
    seed: int = 0,
    temperature: float = 1.0,
    max_len: int = 4096,
    step_order=None,
):
    """Run every plan step through the predictor and decode the outputs.

    frames maps frame ids to (H, W, 3) uint8 RGB arrays; generated
    frames are stored under "gen:<k>". Returns the generated RGB frames
    in step order. Per-step seeds derive from (seed, step.seed_index) so
    parallel steps are order-independent.
    """
    available = dict(frames)
    order = list(step_order) if step_order is not None else list(range(len(plan.steps)))
    if step_order is not None and plan.mode == "sequential":
        if order != sorted(order):
            raise ValueError("sequential plans must execute in order")
    outputs = {}
    for idx in order:
        step = plan.steps[idx]
        ctx_frames = []
        last_qp = None
        for fid, ann in step.context:
            if fid not in available:
                raise ValueError(f"step {idx}: context frame {fid!r} not available")
            rgb = available[fid]
            qp = encode_planes(rgb_to_yuv(rgb, config.chroma_downsampled), config)
            full = to_sparse(qp)
            dct_img = scatter_partial(full.elements[:-1], height, width, config)
            ctx_frames.append((dct_img, np.asarray(ann.vector)))
            last_qp = qp
        context = PredictorContext(frames=ctx_frames)
        residual = plan.residual and last_qp is not None
        seq = sample_sequence(
            predictor,
            context,
            config,
            height,
            width,
            temperature=temperature,
            max_len=max_len,
            rng_seed=_step_seed(seed, step.seed_index),
            residual=residual,
        )
        qp = from_sparse(seq, previous=last_qp if residual else None)
        rgb = yuv_to_rgb(decode_planes(qp))
        available[f"gen:{idx}"] = rgb
        outputs[idx] = rgb
    return [outputs[i] for i in sorted(outputs)]

"""Command-line surface: encode/decode, analytics, dataset building,
baseline training, likelihood evaluation, sampling, plan execution."""

import math
import os
import sys

import click
import numpy as np

from .blockdct import CodecConfig, decode_planes, encode_planes
from .colorspace import rgb_to_yuv, yuv_to_rgb
from .metrics import best_of_n as _best_of_n
from .metrics import psnr as _psnr
from .metrics import sparsity_report, ssim as _ssim, write_heatmap, write_report_csv
from .presets import get_preset
from .sequence import (
    TokenSpace,
    UniformPredictor,
    bits_per_dimension,
    load_predictor,
    nll,
    save_predictor,
    train_baseline,
)
from .sparse import from_sparse, residual_encode, to_sparse
from .store import (
    atomic_write,
    load_image,
    read_manifest,
    read_sequence,
    save_image,
    write_sequence,
)
from .store import ingest as _ingest
from .tasks import GenerationPlan, execute_plan


def _codec_options(f):
    f = click.option("--preset", default=None, help="Named preset; overrides codec flags.")(f)
    f = click.option("--quality", type=click.IntRange(1, 100), default=95, show_default=True)(f)
    f = click.option("--block", type=click.Choice(["4", "8"]), default="4", show_default=True)(f)
    f = click.option("--chroma/--no-chroma", default=False, show_default=True,
                     help="2x chroma downsampling.")(f)
    return f


def _config_from(preset, quality, block, chroma):
    if preset is not None:
        return get_preset(preset).config
    return CodecConfig(block_size=int(block), quality=quality, chroma_downsampled=chroma)


@click.group()
def main():
    """Sparse block-DCT frame codec and sequence-model toolkit."""


@main.command()
@click.argument("image", type=click.Path(exists=True))
@_codec_options
@click.option("--residual-against", "previous_image", type=click.Path(exists=True),
              help="Encode differences against this frame.")
@click.option("-o", "--output", required=True, type=click.Path())
def encode(image, preset, quality, block, chroma, previous_image, output):
    """Encode an image to a sparse sequence file."""
    config = _config_from(preset, quality, block, chroma)
    rgb = load_image(image)
    qp = encode_planes(rgb_to_yuv(rgb, config.chroma_downsampled), config)
    if previous_image:
        prev = load_image(previous_image)
        prev_qp = encode_planes(rgb_to_yuv(prev, config.chroma_downsampled), config)
        seq = residual_encode(qp, prev_qp)
    else:
        seq = to_sparse(qp)
    write_sequence(output, seq)
    click.echo(f"L={len(seq)} bytes={os.path.getsize(output)}")


@main.command()
@click.argument("file", type=click.Path(exists=True))
@click.option("--previous", type=click.Path(exists=True),
              help="Previous frame image, required for residual files.")
@click.option("-o", "--output", required=True, type=click.Path())
def decode(file, previous, output):
    """Decode a sparse sequence file back to an image."""
    seq = read_sequence(file)
    prev_qp = None
    if seq.residual:
        if not previous:
            raise click.ClickException("residual sequence requires --previous")
        prev = load_image(previous)
        prev_qp = encode_planes(rgb_to_yuv(prev, seq.config.chroma_downsampled), seq.config)
    qp = from_sparse(seq, previous=prev_qp)
    save_image(output, yuv_to_rgb(decode_planes(qp)))
    click.echo(f"wrote {output}")


@main.command()
@click.argument("frames", nargs=-1, required=True, type=click.Path(exists=True))
@_codec_options
@click.option("-o", "--outdir", required=True, type=click.Path())
def stats(frames, preset, quality, block, chroma, outdir):
    """Absolute-vs-residual sparsity report: CSV plus heatmaps."""
    config = _config_from(preset, quality, block, chroma)
    images = [load_image(p) for p in frames]
    report = sparsity_report(images, config)
    os.makedirs(outdir, exist_ok=True)
    write_report_csv(os.path.join(outdir, "sparsity.csv"), images, config, report)
    write_heatmap(os.path.join(outdir, "heatmap_absolute.png"), report.heatmap_abs)
    write_heatmap(os.path.join(outdir, "heatmap_residual.png"), report.heatmap_resid)
    click.echo(
        f"frames={len(images)} mean_L_abs={np.mean(report.frame_lengths_abs):.1f} "
        f"mean_L_resid={np.mean(report.frame_lengths_resid):.1f} ratio={report.ratio:.4f}"
    )


@main.group()
def dataset():
    """Dataset ingestion."""


@dataset.command("build")
@click.argument("manifest", type=click.Path(exists=True))
@_codec_options
@click.option("--stride", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--size", type=int, default=None, help="Central-crop and resize to this side.")
@click.option("--absolute", is_flag=True, help="Encode every frame absolutely (no residuals).")
@click.option("-o", "--outdir", required=True, type=click.Path())
def dataset_build(manifest, preset, quality, block, chroma, stride, size, absolute, outdir):
    """Encode every clip in a JSON-lines manifest to sequence files."""
    config = _config_from(preset, quality, block, chroma)
    if preset is not None and size is None:
        size = get_preset(preset).resolution
    records = read_manifest(manifest)
    os.makedirs(outdir, exist_ok=True)
    total = 0
    for clip_id, sequences in _ingest(records, config, stride=stride, size=size,
                                      residual=not absolute):
        for i, seq in enumerate(sequences):
            write_sequence(os.path.join(outdir, f"{clip_id}_{i:05d}.dcts"), seq)
            total += 1
    click.echo(f"wrote {total} sequences from {len(records)} clips to {outdir}")


def _load_corpus(directory):
    paths = sorted(
        os.path.join(directory, f) for f in os.listdir(directory) if f.endswith(".dcts")
    )
    if not paths:
        raise click.ClickException(f"no .dcts files in {directory}")
    return [read_sequence(p) for p in paths]


@main.group()
def predictor():
    """Count-baseline training and likelihood evaluation."""


@predictor.command("train")
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--alpha", type=float, default=1.0, show_default=True)
@click.option("-o", "--output", required=True, type=click.Path())
def predictor_train(directory, alpha, output):
    """Fit the count baseline on a directory of sequence files."""
    corpus = _load_corpus(directory)
    model = train_baseline(corpus, alpha=alpha)
    save_predictor(model, output)
    click.echo(f"trained on {len(corpus)} sequences, wrote {output}")


@predictor.command("eval")
@click.argument("model", type=click.Path(exists=True))
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--chunk", "chunk_len", type=click.IntRange(min=1), default=256, show_default=True)
@click.option("--uniform", is_flag=True, help="Also report the uniform-predictor baseline.")
def predictor_eval(model, directory, chunk_len, uniform):
    """Total NLL in nats and bits per dimension over a corpus."""
    corpus = _load_corpus(directory)
    pred = load_predictor(model)
    total = 0.0
    dims = 0
    for seq in corpus:
        total += nll(seq, pred, C=chunk_len).total_nats
        dims += seq.height * seq.width * 3
    bpd = total / math.log(2) / dims
    click.echo(f"nats={total:.4f} bpd={bpd:.6f} sequences={len(corpus)}")
    if uniform:
        upred = UniformPredictor(pred.space)
        utotal = sum(nll(s, upred, C=chunk_len).total_nats for s in corpus)
        click.echo(f"uniform_nats={utotal:.4f} uniform_bpd={utotal / math.log(2) / dims:.6f}")


@main.command()
@click.option("--model", "model_path", required=True, type=click.Path(exists=True))
@click.option("--plan", "plan_path", required=True, type=click.Path(exists=True))
@click.option("--context", "context_images", multiple=True, type=click.Path(exists=True),
              help="Context frames, bound to ctx:0, ctx:1, ... in order.")
@_codec_options
@click.option("--temperature", type=float, default=1.0, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-len", type=click.IntRange(min=1), default=4096, show_default=True)
@click.option("-o", "--outdir", required=True, type=click.Path())
def sample(model_path, plan_path, context_images, preset, quality, block, chroma,
           temperature, seed, max_len, outdir):
    """Execute a generation plan end to end, writing PNG frames."""
    pred = load_predictor(model_path)
    plan = GenerationPlan.load(plan_path)
    config = _config_from(preset, quality, block, chroma)
    if not context_images:
        raise click.ClickException("at least one --context image is required")
    frames = {}
    for i, path in enumerate(context_images):
        frames[f"ctx:{i}"] = load_image(path)
    frames.setdefault("ctx:start", frames["ctx:0"])
    frames.setdefault("ctx:end", load_image(context_images[-1]))
    height, width = frames["ctx:0"].shape[:2]
    if TokenSpace.for_frame(height, width, config).channel_sizes != pred.space.channel_sizes:
        raise click.ClickException(
            "model token space does not match the context frame geometry and codec flags"
        )
    outputs = execute_plan(
        plan, pred, config, frames, height, width,
        seed=seed, temperature=temperature, max_len=max_len,
    )
    os.makedirs(outdir, exist_ok=True)
    for k, rgb in enumerate(outputs):
        save_image(os.path.join(outdir, f"frame_{k:05d}.png"), rgb)
    click.echo(f"wrote {len(outputs)} frames to {outdir}")


@main.group()
def metrics():
    """Image-quality metrics."""


@metrics.command("psnr")
@click.argument("truth", type=click.Path(exists=True))
@click.argument("pred", type=click.Path(exists=True))
def metrics_psnr(truth, pred):
    value = _psnr(load_image(truth), load_image(pred))
    click.echo("inf" if math.isinf(value) else f"{value:.4f}")


@metrics.command("ssim")
@click.argument("truth", type=click.Path(exists=True))
@click.argument("pred", type=click.Path(exists=True))
def metrics_ssim(truth, pred):
    click.echo(f"{_ssim(load_image(truth), load_image(pred)):.6f}")


@metrics.command("best-of-n")
@click.argument("truth", type=click.Path(exists=True))
@click.argument("preds", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", type=click.Path(), help="Write per-candidate scores.")
def metrics_best_of_n(truth, preds, csv_path):
    t = load_image(truth)
    candidates = [load_image(p) for p in preds]
    result = _best_of_n(t, candidates)
    if csv_path:
        lines = ["index,path,psnr_db"]
        for i, p in enumerate(preds):
            v = _psnr(t, candidates[i])
            lines.append(f"{i},{p},{'inf' if math.isinf(v) else f'{v:.4f}'}")
        atomic_write(csv_path, ("\n".join(lines) + "\n").encode("utf-8"))
    p = result.psnr_db
    click.echo(
        f"best_index={result.index} psnr={'inf' if math.isinf(p) else f'{p:.4f}'} "
        f"ssim={result.ssim_score:.6f}"
    )


if __name__ == "__main__":
    main()

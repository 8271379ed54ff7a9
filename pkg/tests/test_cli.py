import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from dctframe.cli import main
from dctframe.store import load_image, read_sequence, save_image
from dctframe.tasks import build_video_plan

from conftest import moving_square_clip, random_image


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def clip_dir(tmp_path):
    frames = moving_square_clip(4, size=32)
    paths = []
    for i, frame in enumerate(frames):
        p = tmp_path / f"frame_{i}.png"
        save_image(p, frame)
        paths.append(str(p))
    return tmp_path, paths


def _ok(result):
    assert result.exit_code == 0, result.output
    return result


def test_encode_decode_roundtrip(runner, clip_dir):
    tmp, paths = clip_dir
    seq_path = tmp / "f0.dcts"
    out = _ok(runner.invoke(main, ["encode", paths[0], "-o", str(seq_path)])).output
    assert out.startswith("L=") and "bytes=" in out
    png_out = tmp / "decoded.png"
    _ok(runner.invoke(main, ["decode", str(seq_path), "-o", str(png_out)]))
    decoded = load_image(png_out)
    original = load_image(paths[0])
    assert decoded.shape == original.shape
    assert np.mean(np.abs(decoded.astype(int) - original.astype(int))) < 5


def test_encode_residual_and_decode_requires_previous(runner, clip_dir):
    tmp, paths = clip_dir
    seq_path = tmp / "resid.dcts"
    _ok(runner.invoke(main, [
        "encode", paths[1], "--residual-against", paths[0], "-o", str(seq_path),
    ]))
    assert read_sequence(seq_path).residual
    out_png = tmp / "out.png"
    bad = runner.invoke(main, ["decode", str(seq_path), "-o", str(out_png)])
    assert bad.exit_code != 0
    assert "previous" in bad.output
    _ok(runner.invoke(main, [
        "decode", str(seq_path), "--previous", paths[0], "-o", str(out_png),
    ]))
    assert load_image(out_png).shape == (32, 32, 3)


def test_encode_with_preset(runner, tmp_path):
    rng = np.random.default_rng(0)
    img_path = tmp_path / "img.png"
    save_image(img_path, random_image(rng, 64, 64))
    seq_path = tmp_path / "img.dcts"
    _ok(runner.invoke(main, ["encode", str(img_path), "--preset", "k600",
                             "-o", str(seq_path)]))
    seq = read_sequence(seq_path)
    assert seq.config.quality == 85
    assert seq.config.chroma_downsampled


def test_stats_writes_csv_and_heatmaps(runner, clip_dir):
    tmp, paths = clip_dir
    outdir = tmp / "report"
    result = _ok(runner.invoke(main, ["stats", *paths, "-o", str(outdir)]))
    assert "ratio=" in result.output
    assert (outdir / "sparsity.csv").exists()
    assert (outdir / "heatmap_absolute.png").exists()
    assert (outdir / "heatmap_residual.png").exists()


def _build_dataset(runner, tmp, paths):
    manifest = tmp / "manifest.jsonl"
    manifest.write_text(json.dumps({"clip_id": "clip", "frames": paths}) + "\n")
    outdir = tmp / "dataset"
    _ok(runner.invoke(main, ["dataset", "build", str(manifest), "--absolute",
                             "-o", str(outdir)]))
    return outdir


def test_dataset_build_and_predictor_train_eval(runner, clip_dir):
    tmp, paths = clip_dir
    outdir = _build_dataset(runner, tmp, paths)
    files = sorted(os.listdir(outdir))
    assert len(files) == 4
    assert all(f.endswith(".dcts") for f in files)
    model_path = tmp / "model.dctp"
    _ok(runner.invoke(main, ["predictor", "train", str(outdir),
                             "-o", str(model_path)]))
    result = _ok(runner.invoke(main, ["predictor", "eval", str(model_path),
                                      str(outdir), "--uniform"]))
    lines = result.output.strip().splitlines()
    assert lines[0].startswith("nats=") and "bpd=" in lines[0]
    assert lines[1].startswith("uniform_nats=")
    nats = float(lines[0].split()[0].split("=")[1])
    uniform_nats = float(lines[1].split()[0].split("=")[1])
    assert nats < uniform_nats


def test_predictor_train_empty_dir_fails(runner, tmp_path):
    result = runner.invoke(main, ["predictor", "train", str(tmp_path),
                                  "-o", str(tmp_path / "m.dctp")])
    assert result.exit_code != 0
    assert "no .dcts files" in result.output


def test_sample_executes_a_plan(runner, clip_dir):
    tmp, paths = clip_dir
    dataset = _build_dataset(runner, tmp, paths)
    model_path = tmp / "model.dctp"
    _ok(runner.invoke(main, ["predictor", "train", str(dataset),
                             "-o", str(model_path)]))
    plan_path = tmp / "plan.jsonl"
    build_video_plan(1, 2, residual=False).save(plan_path)
    outdir = tmp / "samples"
    result = _ok(runner.invoke(main, [
        "sample", "--model", str(model_path), "--plan", str(plan_path),
        "--context", paths[0], "--seed", "3", "--max-len", "256",
        "-o", str(outdir),
    ]))
    assert "wrote 2 frames" in result.output
    frames = sorted(os.listdir(outdir))
    assert frames == ["frame_00000.png", "frame_00001.png"]
    assert load_image(outdir / frames[0]).shape == (32, 32, 3)


def test_sample_rejects_mismatched_geometry(runner, clip_dir, tmp_path):
    tmp, paths = clip_dir
    dataset = _build_dataset(runner, tmp, paths)
    model_path = tmp / "model.dctp"
    _ok(runner.invoke(main, ["predictor", "train", str(dataset),
                             "-o", str(model_path)]))
    rng = np.random.default_rng(1)
    big = tmp_path / "big.png"
    save_image(big, random_image(rng, 64, 64))
    plan_path = tmp / "plan.jsonl"
    build_video_plan(1, 1, residual=False).save(plan_path)
    result = runner.invoke(main, [
        "sample", "--model", str(model_path), "--plan", str(plan_path),
        "--context", str(big), "-o", str(tmp / "out"),
    ])
    assert result.exit_code != 0
    assert "token space" in result.output


def test_metrics_commands(runner, clip_dir):
    tmp, paths = clip_dir
    result = _ok(runner.invoke(main, ["metrics", "psnr", paths[0], paths[0]]))
    assert result.output.strip() == "inf"
    result = _ok(runner.invoke(main, ["metrics", "ssim", paths[0], paths[1]]))
    assert 0.0 < float(result.output) <= 1.0
    csv_path = tmp / "scores.csv"
    result = _ok(runner.invoke(main, [
        "metrics", "best-of-n", paths[0], paths[2], paths[0], paths[1],
        "--csv", str(csv_path),
    ]))
    assert "best_index=1" in result.output
    lines = csv_path.read_text().strip().splitlines()
    assert lines[0] == "index,path,psnr_db"
    assert len(lines) == 4

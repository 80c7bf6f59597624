"""Command-line interface: argument handling, exit codes, output files."""

import json
import os

import numpy as np
import pytest
from PIL import Image

import helpers
from deepanalogy import cli
from deepanalogy.net import FormatError
from deepanalogy.tensor import NNField


@pytest.fixture()
def workdir(tmp_path):
    """Toy network files plus a pair of small images on disk."""
    manifest = tmp_path / "net.manifest"
    weights = tmp_path / "net.diaw"
    manifest.write_text(helpers.toy_manifest(levels=3, channels=8))
    weights.write_bytes(helpers.write_weights(helpers.toy_weights(levels=3, channels=8)))
    content = tmp_path / "content.png"
    style = tmp_path / "style.png"
    Image.fromarray(helpers.structured_image(32, 32, seed=0)).save(content)
    Image.fromarray(helpers.structured_image(32, 32, seed=1)).save(style)
    return tmp_path


def base_args(workdir, out="out", **extra):
    args = ["--content", str(workdir / "content.png"),
            "--style", str(workdir / "style.png"),
            "--weights", str(workdir / "net.diaw"),
            "--manifest", str(workdir / "net.manifest"),
            "--out", str(workdir / out)]
    for flag, value in extra.items():
        args.append("--" + flag.replace("_", "-"))
        if value is not None:
            args.append(str(value))
    return args


# ------------------------------------------------------------- happy path

def test_run_writes_outputs(workdir):
    assert cli.main(base_args(workdir)) == 0
    out = workdir / "out"
    for name in ("A_prime.png", "B.png", "phi_ab.nnf", "phi_ba.nnf"):
        assert (out / name).is_file(), name
    a_prime = np.asarray(Image.open(out / "A_prime.png"))
    assert a_prime.shape == (32, 32, 3)
    assert a_prime.dtype == np.uint8


def test_self_analogy_identical_preset(workdir):
    args = ["--content", str(workdir / "content.png"),
            "--style", str(workdir / "content.png"),
            "--weights", str(workdir / "net.diaw"),
            "--manifest", str(workdir / "net.manifest"),
            "--out", str(workdir / "self"),
            "--preset", "identical"]
    assert cli.main(args) == 0
    original = np.asarray(Image.open(workdir / "content.png"))
    a_prime = np.asarray(Image.open(workdir / "self" / "A_prime.png"))
    assert np.max(np.abs(a_prime.astype(int) - original.astype(int))) <= 2
    nnf = cli.load_nnf(str(workdir / "self" / "phi_ab.nnf"))
    ident = np.stack(np.meshgrid(np.arange(32), np.arange(32), indexing="ij"),
                     axis=-1)
    assert np.mean(np.all(nnf.coords == ident, axis=-1)) >= 0.99


def test_diagnostics_written_and_stable(workdir):
    assert cli.main(base_args(workdir, out="d1", diagnostics=None, seed=7)) == 0
    assert cli.main(base_args(workdir, out="d2", diagnostics=None, seed=7)) == 0
    d1 = (workdir / "d1" / "diagnostics.json").read_bytes()
    d2 = (workdir / "d2" / "diagnostics.json").read_bytes()
    assert d1 == d2
    records = [json.loads(line) for line in d1.decode().splitlines()]
    assert [rec["level"] for rec in records] == [3, 2, 1]
    for rec in records:
        assert "timings" not in rec
        assert "match_costs_ab" in rec


def test_outputs_deterministic(workdir):
    assert cli.main(base_args(workdir, out="r1", seed=3)) == 0
    assert cli.main(base_args(workdir, out="r2", seed=3)) == 0
    for name in ("A_prime.png", "B.png", "phi_ab.nnf", "phi_ba.nnf"):
        b1 = (workdir / "r1" / name).read_bytes()
        b2 = (workdir / "r2" / name).read_bytes()
        assert b1 == b2, name


def test_sweeps_override(workdir):
    assert cli.main(base_args(workdir, out="s", diagnostics=None, sweeps=2)) == 0
    lines = (workdir / "s" / "diagnostics.json").read_text().splitlines()
    for line in lines:
        rec = json.loads(line)
        assert len(rec["match_costs_ab"]) == 3  # initial cost + 2 sweeps


def test_color_transfer_mode(workdir):
    assert cli.main(base_args(workdir, out="ct", mode="color-transfer")) == 0
    assert (workdir / "ct" / "A_prime.png").is_file()


# ------------------------------------------------------------ exit codes

def test_missing_input_is_2(workdir, capsys):
    args = base_args(workdir)
    args[args.index("--weights") + 1] = str(workdir / "nope.diaw")
    assert cli.main(args) == 2
    err = capsys.readouterr().err
    assert "nope.diaw" in err
    assert "no such file" in err


def test_malformed_weights_is_3(workdir, capsys):
    (workdir / "net.diaw").write_bytes(b"JUNKJUNKJUNK")
    assert cli.main(base_args(workdir)) == 3
    assert "error:" in capsys.readouterr().err


def test_malformed_manifest_is_3(workdir, capsys):
    (workdir / "net.manifest").write_text("frobnicate 3 3\n")
    assert cli.main(base_args(workdir)) == 3
    assert "error:" in capsys.readouterr().err


def test_unreadable_image_is_3(workdir, capsys):
    (workdir / "content.png").write_text("this is not an image")
    assert cli.main(base_args(workdir)) == 3
    assert "error:" in capsys.readouterr().err


def test_indivisible_image_is_4(workdir, capsys):
    Image.fromarray(helpers.noise_image(30, 30, seed=2)).save(workdir / "content.png")
    assert cli.main(base_args(workdir)) == 4
    assert "divisible" in capsys.readouterr().err


def test_alpha_offset_out_of_range_is_2(workdir, capsys):
    assert cli.main(base_args(workdir, alpha_offset=0.5)) == 2
    assert "offset" in capsys.readouterr().err


def test_bad_deconv_iters_is_2(workdir, capsys):
    assert cli.main(base_args(workdir, deconv_iters=0)) == 2
    assert "error:" in capsys.readouterr().err


# ------------------------------------------------------- field dump format

def test_nnf_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    coords = np.stack([rng.integers(0, 20, size=(6, 9)),
                       rng.integers(0, 15, size=(6, 9))], axis=-1).astype(np.int32)
    nnf = NNField(coords, (20, 15))
    path = str(tmp_path / "field.nnf")
    cli.save_nnf(path, nnf)
    back = cli.load_nnf(path)
    assert np.array_equal(back.coords, nnf.coords)
    assert back.target_shape == nnf.target_shape


def test_nnf_header_layout(tmp_path):
    nnf = NNField.identity(2, 3)
    path = str(tmp_path / "field.nnf")
    cli.save_nnf(path, nnf)
    data = open(path, "rb").read()
    assert data[:4] == b"DNNF"
    assert len(data) == 24 + 2 * 3 * 8
    # first pair is position (0, 0) mapping to itself, little-endian u32
    assert data[24:32] == b"\x00" * 8


def test_nnf_bad_magic(tmp_path):
    path = tmp_path / "bad.nnf"
    path.write_bytes(b"XXXX" + b"\x00" * 40)
    with pytest.raises(FormatError, match="magic"):
        cli.load_nnf(str(path))


def test_nnf_bad_version(tmp_path):
    nnf = NNField.identity(2, 2)
    path = str(tmp_path / "v.nnf")
    cli.save_nnf(path, nnf)
    data = bytearray(open(path, "rb").read())
    data[4] = 9
    open(path, "wb").write(bytes(data))
    with pytest.raises(FormatError, match="version"):
        cli.load_nnf(path)


def test_nnf_truncated(tmp_path):
    nnf = NNField.identity(4, 4)
    path = str(tmp_path / "t.nnf")
    cli.save_nnf(path, nnf)
    data = open(path, "rb").read()
    open(path, "wb").write(data[:-8])
    with pytest.raises(FormatError, match="expected"):
        cli.load_nnf(path)

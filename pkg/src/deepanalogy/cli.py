"""Command-line front end: load inputs, run the transfer, write outputs.

Outputs land in the chosen directory as A_prime.png, B.png and the two
pixel-level fields phi_ab.nnf / phi_ba.nnf; --diagnostics adds a
line-oriented diagnostics.json with one JSON record per pyramid level
(cost and loss traces only, no timings, so reruns are byte-identical).

Exit codes: 0 success, 2 missing input file, 3 unreadable/malformed
input, 4 pipeline failure.  Expected failures print a one-line cause to
stderr, never a stack trace.
"""

import argparse
import json
import os
import struct
import sys
from dataclasses import replace

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import net as _net
from .deconv import DeconvError, DeconvSettings
from .fuse import AlphaSchedule
from .pipeline import PipelineConfig, run
from .tensor import DimensionError, NNField

NNF_MAGIC = b"DNNF"
NNF_VERSION = 1


def save_nnf(path, nnf):
    """Write a field as DNNF: magic, version, dims, (row, col) pairs."""
    with open(path, "wb") as fh:
        fh.write(NNF_MAGIC)
        fh.write(struct.pack("<5I", NNF_VERSION, nnf.height, nnf.width,
                             nnf.target_shape[0], nnf.target_shape[1]))
        fh.write(np.ascontiguousarray(nnf.coords, dtype="<u4").tobytes())


def load_nnf(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != NNF_MAGIC:
        raise _net.FormatError(f"{path}: not a field dump (bad magic)")
    if len(data) < 24:
        raise _net.FormatError(f"{path}: truncated header")
    version, h, w, th, tw = struct.unpack_from("<5I", data, 4)
    if version != NNF_VERSION:
        raise _net.FormatError(f"{path}: unsupported version {version}")
    expected = 24 + h * w * 8
    if len(data) != expected:
        raise _net.FormatError(
            f"{path}: expected {expected} bytes for {h}x{w} field, got {len(data)}")
    coords = np.frombuffer(data, dtype="<u4", offset=24)
    coords = coords.reshape(h, w, 2).astype(np.int32)
    return NNField(coords, (th, tw))


def build_parser():
    parser = argparse.ArgumentParser(
        prog="deepanalogy",
        description="Bidirectional visual attribute transfer between two images.")
    parser.add_argument("--content", required=True, help="content image A (png)")
    parser.add_argument("--style", required=True, help="style image B' (png)")
    parser.add_argument("--weights", required=True, help="network weight bundle")
    parser.add_argument("--manifest", required=True, help="network architecture manifest")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--alpha-offset", type=float, default=None,
                        help="global blend-strength offset in [-0.1, 0.2]; "
                             "overrides the preset's offset")
    parser.add_argument("--preset", choices=["default", "photo", "identical"],
                        default="default", help="blend-strength profile")
    parser.add_argument("--mode", choices=["full", "color-transfer"],
                        default="full")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--sweeps", type=int, default=None,
                        help="override refinement sweeps at every level")
    parser.add_argument("--deconv-iters", type=int, default=None,
                        help="override reconstruction iteration cap")
    parser.add_argument("--diagnostics", action="store_true",
                        help="also write diagnostics.json")
    return parser


def _fail(code, message):
    print(f"error: {message}", file=sys.stderr)
    return code


def _load_image(path):
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def main(argv=None):
    args = build_parser().parse_args(argv)

    for path in (args.content, args.style, args.weights, args.manifest):
        if not os.path.isfile(path):
            return _fail(2, f"no such file: {path}")

    try:
        schedule = AlphaSchedule.preset(args.preset)
        if args.alpha_offset is not None:
            schedule = replace(schedule, global_offset=args.alpha_offset)
    except ValueError as exc:
        return _fail(2, str(exc))

    try:
        network = _net.load_network_files(args.manifest, args.weights)
    except _net.FormatError as exc:
        return _fail(3, str(exc))

    try:
        content = _load_image(args.content)
        style = _load_image(args.style)
    except (UnidentifiedImageError, OSError) as exc:
        return _fail(3, str(exc))

    deconv = DeconvSettings()
    if args.deconv_iters is not None:
        try:
            deconv = DeconvSettings(max_iterations=args.deconv_iters)
        except ValueError as exc:
            return _fail(2, str(exc))

    try:
        levels = len(network.tags)
        cfg = PipelineConfig.for_levels(
            levels,
            sweeps=args.sweeps if args.sweeps is not None else 10,
            seed=args.seed,
            mode=args.mode.replace("-", "_"),
            alpha_schedule=schedule,
            deconv_settings=deconv)
        result = run(content, style, network, cfg)
    except (DimensionError, DeconvError, ValueError, RuntimeError) as exc:
        return _fail(4, str(exc))

    os.makedirs(args.out, exist_ok=True)
    Image.fromarray(result.a_prime).save(os.path.join(args.out, "A_prime.png"))
    Image.fromarray(result.b).save(os.path.join(args.out, "B.png"))
    save_nnf(os.path.join(args.out, "phi_ab.nnf"), result.phi_ab)
    save_nnf(os.path.join(args.out, "phi_ba.nnf"), result.phi_ba)

    if args.diagnostics:
        with open(os.path.join(args.out, "diagnostics.json"), "w") as fh:
            for record in result.diagnostics:
                entry = {k: v for k, v in record.items() if k != "timings"}
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    return 0


if __name__ == "__main__":
    sys.exit(main())

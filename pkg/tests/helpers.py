"""Shared builders and oracles for the test suite.

The weight-file writer here is an independent implementation of the
binary format (the library only reads it), and the reference functions
are deliberately naive double loops.
"""

import struct

import numpy as np

from deepanalogy import net as dnet


def write_weights(tensors):
    """Serialize an ordered name -> float32 array mapping to DIAW bytes."""
    parts = [b"DIAW", struct.pack("<II", 1, len(tensors))]
    for name, arr in tensors.items():
        arr = np.asarray(arr, dtype=np.float32)
        raw = name.encode("utf-8")
        parts.append(struct.pack("<H", len(raw)))
        parts.append(raw)
        parts.append(struct.pack("<B", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        parts.append(arr.astype("<f4").tobytes())
    return b"".join(parts)


def toy_manifest(levels=3, channels=8, mean=(0.0, 0.0, 0.0)):
    """Manifest text for a conv+relu(tagged)+pool tower."""
    lines = [f"mean {mean[0]} {mean[1]} {mean[2]}"]
    in_c = 3
    for level in range(1, levels + 1):
        lines.append(f"conv conv{level} {channels} {in_c} 3 3 1 1")
        lines.append("relu")
        lines.append(f"tag lvl{level}")
        if level < levels:
            lines.append("maxpool 2 2")
        in_c = channels
    return "\n".join(lines) + "\n"


def toy_weights(levels=3, channels=8, seed=0):
    """He-scaled Gaussian conv weights for the toy tower.

    The first conv gets a positive bias so its relu units stay responsive
    across the whole image; without it a few percent of positions fall
    below the detail threshold and carry no content signal, which real
    networks on natural images rarely exhibit.
    """
    rng = np.random.default_rng(seed)
    tensors = {}
    in_c = 3
    for level in range(1, levels + 1):
        fan_in = in_c * 9
        w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(channels, in_c, 3, 3))
        tensors[f"conv{level}.weight"] = w
        bias = 80.0 if level == 1 else 0.0
        tensors[f"conv{level}.bias"] = np.full(channels, bias)
        in_c = channels
    return tensors


def toy_network(levels=3, channels=8, seed=0, mean=(0.0, 0.0, 0.0)):
    manifest = toy_manifest(levels, channels, mean).encode()
    weights = write_weights(toy_weights(levels, channels, seed))
    return dnet.load_network(manifest, weights)


def noise_image(height, width, seed):
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)


def structured_image(height, width, seed):
    """Smooth ramps plus a sinusoidal texture and faint noise.

    Every patch is globally unique (coordinates are encoded in the ramps)
    while neighboring pixels stay within a few intensity levels, which is
    the regime natural photographs live in.
    """
    rr, cc = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
    rng = np.random.default_rng(seed)
    ch0 = 40 + 170 * rr / max(height - 1, 1)
    ch1 = 40 + 170 * cc / max(width - 1, 1)
    ch2 = 128 + 90 * np.sin(2 * np.pi * rr / 16) * np.cos(2 * np.pi * cc / 16)
    img = np.stack([ch0, ch1, ch2], axis=-1)
    img = img + rng.normal(0.0, 2.0, size=img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def numeric_grad(fn, x, h=1e-3):
    """Central finite differences of a scalar function, element by element."""
    g = np.zeros_like(x, dtype=np.float64)
    flat = x.reshape(-1)
    gflat = g.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = fn(x)
        flat[i] = orig - h
        fm = fn(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return g


def rel_error(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


def patch_cost_ref(p, q, fa, fb, fa2, fb2, radius, bidirectional=True):
    """Direct double-loop evaluation of the patch dissimilarity."""
    ah, aw = fa.shape[:2]
    bh, bw = fb.shape[:2]
    total = 0.0
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            xr = min(max(p[0] + dy, 0), ah - 1)
            xc = min(max(p[1] + dx, 0), aw - 1)
            yr = min(max(q[0] + dy, 0), bh - 1)
            yc = min(max(q[1] + dx, 0), bw - 1)
            if bidirectional:
                total += float(np.sum((fa[xr, xc] - fb[yr, yc]) ** 2))
            total += float(np.sum((fa2[xr, xc] - fb2[yr, yc]) ** 2))
    return total


def aggregate_ref(source, nnf, radius=2):
    """Direct double-loop patch-vote aggregation."""
    h, w = nnf.height, nnf.width
    sh, sw = source.shape[:2]
    out = np.zeros((h, w, 3))
    n = (2 * radius + 1) ** 2
    for pr in range(h):
        for pc in range(w):
            acc = np.zeros(3)
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    xr = min(max(pr + dy, 0), h - 1)
                    xc = min(max(pc + dx, 0), w - 1)
                    tr = nnf.coords[xr, xc, 0] + (pr - xr)
                    tc = nnf.coords[xr, xc, 1] + (pc - xc)
                    tr = min(max(tr, 0), sh - 1)
                    tc = min(max(tc, 0), sw - 1)
                    acc += source[tr, tc].astype(np.float64)
            out[pr, pc] = acc / n
    return np.clip(np.floor(out + 0.5), 0, 255).astype(np.uint8)


def shifted_with_clamp(arr, dr, dc):
    """b[r, c] = arr[clamp(r - dr), clamp(c - dc)]: content moves by (dr, dc)."""
    h, w = arr.shape[:2]
    rows = np.clip(np.arange(h) - dr, 0, h - 1)
    cols = np.clip(np.arange(w) - dc, 0, w - 1)
    return arr[rows[:, None], cols[None, :]]

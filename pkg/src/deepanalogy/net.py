"""Minimal feed-forward conv/relu/maxpool network.

The network is loaded from a two-part description: a line-oriented text
manifest naming the layers, and a binary weight file.  Tagged layers
define the feature pyramid (fine to coarse); sub-networks between two
tags can be run forward, and backward as a vector-Jacobian product,
which is all the feature-inversion step needs.

Weight file layout (little-endian): magic "DIAW", version u32 (=1),
tensor count u32, then per tensor: name length u16, name UTF-8,
ndim u8, dims u32 x ndim, payload f32 x prod(dims) row-major.
Conv weights are shaped [outC, inC, kH, kW]; biases [outC].

Manifest directives, one per line ('#' starts a comment):
    mean R G B
    conv <name> <outC> <inC> <kH> <kW> <stride> <pad>
    relu
    maxpool <k> <stride>
    tag <label>
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .tensor import DimensionError

MAGIC = b"DIAW"
VERSION = 1


class FormatError(ValueError):
    """Raised for malformed manifests or weight files."""


@dataclass
class LayerDescriptor:
    kind: str                      # "conv" | "relu" | "maxpool"
    name: str = ""
    out_channels: int = 0
    in_channels: int = 0
    kernel_h: int = 0
    kernel_w: int = 0
    stride: int = 1
    padding: int = 0
    weight: np.ndarray = None
    bias: np.ndarray = None
    pool_size: int = 0
    pool_stride: int = 0
    tag: str = ""


@dataclass
class Network:
    layers: list
    mean: np.ndarray
    tags: list = field(default_factory=list)   # fine -> coarse

    def tag_layer_index(self, tag):
        for i, layer in enumerate(self.layers):
            if layer.tag == tag:
                return i
        raise FormatError(f"unknown pyramid tag '{tag}'")

    def subnet_layers(self, from_tag, to_tag):
        """Layers strictly after ``from_tag`` through ``to_tag`` inclusive."""
        i = self.tag_layer_index(from_tag)
        j = self.tag_layer_index(to_tag)
        if j <= i:
            raise FormatError(f"tag '{to_tag}' does not come after '{from_tag}'")
        return self.layers[i + 1:j + 1]

    def pooling_factor(self):
        """Product of maxpool strides up to the deepest tagged layer."""
        if not self.tags:
            return 1
        last = self.tag_layer_index(self.tags[-1])
        f = 1
        for layer in self.layers[:last + 1]:
            if layer.kind == "maxpool":
                f *= layer.pool_stride
        return f


# ---------------------------------------------------------------------------
# manifest / weight parsing

def _parse_manifest(text):
    mean = np.zeros(3)
    layers = []
    seen_mean = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "mean":
                if seen_mean:
                    raise FormatError(f"line {lineno}: duplicate mean directive")
                if len(parts) != 4:
                    raise FormatError(f"line {lineno}: mean needs 3 values")
                mean = np.array([float(v) for v in parts[1:4]])
                seen_mean = True
            elif kind == "conv":
                if len(parts) != 8:
                    raise FormatError(f"line {lineno}: conv needs name + 6 integers")
                name = parts[1]
                oc, ic, kh, kw, st, pad = (int(v) for v in parts[2:8])
                if min(oc, ic, kh, kw, st) < 1 or pad < 0:
                    raise FormatError(f"line {lineno}: bad conv geometry for '{name}'")
                layers.append(LayerDescriptor(
                    "conv", name=name, out_channels=oc, in_channels=ic,
                    kernel_h=kh, kernel_w=kw, stride=st, padding=pad))
            elif kind == "relu":
                layers.append(LayerDescriptor("relu"))
            elif kind == "maxpool":
                if len(parts) != 3:
                    raise FormatError(f"line {lineno}: maxpool needs size + stride")
                k, st = int(parts[1]), int(parts[2])
                if k < 1 or st < 1:
                    raise FormatError(f"line {lineno}: bad maxpool geometry")
                layers.append(LayerDescriptor("maxpool", pool_size=k, pool_stride=st))
            elif kind == "tag":
                if len(parts) != 2:
                    raise FormatError(f"line {lineno}: tag needs a label")
                if not layers:
                    raise FormatError(f"line {lineno}: dangling tag '{parts[1]}' before any layer")
                if layers[-1].tag:
                    raise FormatError(f"line {lineno}: layer already tagged '{layers[-1].tag}'")
                layers[-1].tag = parts[1]
            else:
                raise FormatError(f"line {lineno}: unknown layer kind '{kind}'")
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"line {lineno}: {exc}") from None
    return mean, layers


def _parse_weights(blob):
    if len(blob) < 12:
        raise FormatError("weight file truncated before header")
    if blob[:4] != MAGIC:
        raise FormatError(f"bad magic {blob[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise FormatError(f"unsupported weight file version {version}, expected {VERSION}")
    tensors = {}
    off = 12
    for i in range(count):
        if off + 2 > len(blob):
            raise FormatError(f"truncated payload at tensor {i}: missing name length")
        (nlen,) = struct.unpack_from("<H", blob, off)
        off += 2
        if off + nlen > len(blob):
            raise FormatError(f"truncated payload at tensor {i}: missing name")
        name = blob[off:off + nlen].decode("utf-8")
        off += nlen
        if off + 1 > len(blob):
            raise FormatError(f"truncated payload in tensor '{name}': missing ndim")
        ndim = blob[off]
        off += 1
        if off + 4 * ndim > len(blob):
            raise FormatError(f"truncated payload in tensor '{name}': missing dims")
        dims = struct.unpack_from(f"<{ndim}I", blob, off)
        off += 4 * ndim
        n = int(np.prod(dims)) if ndim else 1
        if off + 4 * n > len(blob):
            raise FormatError(f"truncated payload in tensor '{name}': "
                              f"expected {n} floats")
        data = np.frombuffer(blob, dtype="<f4", count=n, offset=off).astype(np.float64)
        off += 4 * n
        if name in tensors:
            raise FormatError(f"duplicate tensor '{name}'")
        tensors[name] = data.reshape(dims)
    if off != len(blob):
        raise FormatError(f"trailing data after last tensor ({len(blob) - off} bytes)")
    return tensors


def load_network(manifest_bytes, weight_bytes):
    """Parse and cross-validate a manifest + weight blob into a Network."""
    text = manifest_bytes.decode("utf-8") if isinstance(manifest_bytes, bytes) else manifest_bytes
    mean, layers = _parse_manifest(text)
    tensors = _parse_weights(weight_bytes)

    used = set()
    prev_out = None
    for layer in layers:
        if layer.kind != "conv":
            continue
        if prev_out is not None and layer.in_channels != prev_out:
            raise FormatError(
                f"layer '{layer.name}': in channels {layer.in_channels} do not chain "
                f"from previous conv's {prev_out}")
        prev_out = layer.out_channels
        wname, bname = layer.name + ".weight", layer.name + ".bias"
        for tname in (wname, bname):
            if tname not in tensors:
                raise FormatError(f"layer '{layer.name}': missing tensor '{tname}'")
        w, b = tensors[wname], tensors[bname]
        wshape = (layer.out_channels, layer.in_channels, layer.kernel_h, layer.kernel_w)
        if w.shape != wshape:
            raise FormatError(
                f"shape mismatch for layer '{layer.name}': weight {w.shape} "
                f"vs declared {wshape}")
        if b.shape != (layer.out_channels,):
            raise FormatError(
                f"shape mismatch for layer '{layer.name}': bias {b.shape} "
                f"vs declared ({layer.out_channels},)")
        layer.weight = w
        layer.bias = b
        used.update((wname, bname))

    unused = set(tensors) - used
    if unused:
        raise FormatError(f"tensors match no conv layer: {sorted(unused)}")

    tags = [layer.tag for layer in layers if layer.tag]
    return Network(layers=layers, mean=mean, tags=tags)


def load_network_files(manifest_path, weights_path):
    with open(manifest_path, "rb") as f:
        manifest = f.read()
    with open(weights_path, "rb") as f:
        weights = f.read()
    return load_network(manifest, weights)


# ---------------------------------------------------------------------------
# layer evaluation

def _conv_out_dims(h, w, layer):
    oh = (h + 2 * layer.padding - layer.kernel_h) // layer.stride + 1
    ow = (w + 2 * layer.padding - layer.kernel_w) // layer.stride + 1
    if oh < 1 or ow < 1:
        raise DimensionError(
            f"layer '{layer.name}': input {h}x{w} too small for its kernel")
    return oh, ow


def _conv_forward(x, layer):
    h, w, cin = x.shape
    if cin != layer.in_channels:
        raise DimensionError(
            f"layer '{layer.name}': expected {layer.in_channels} channels, got {cin}")
    oh, ow = _conv_out_dims(h, w, layer)
    p, s = layer.padding, layer.stride
    if p:
        xp = np.zeros((h + 2 * p, w + 2 * p, cin))
        xp[p:p + h, p:p + w] = x
    else:
        xp = x
    acc = np.zeros((oh * ow, layer.out_channels))
    for ky in range(layer.kernel_h):
        for kx in range(layer.kernel_w):
            patch = xp[ky:ky + s * oh:s, kx:kx + s * ow:s, :]
            acc += patch.reshape(-1, cin) @ layer.weight[:, :, ky, kx].T
    acc += layer.bias
    return acc.reshape(oh, ow, layer.out_channels)


def _conv_backward(x_shape, g, layer):
    h, w, cin = x_shape
    oh, ow, _ = g.shape
    p, s = layer.padding, layer.stride
    gxp = np.zeros((h + 2 * p, w + 2 * p, cin))
    gflat = g.reshape(-1, g.shape[2])
    for ky in range(layer.kernel_h):
        for kx in range(layer.kernel_w):
            gxp[ky:ky + s * oh:s, kx:kx + s * ow:s, :] += \
                (gflat @ layer.weight[:, :, ky, kx]).reshape(oh, ow, cin)
    return gxp[p:p + h, p:p + w] if p else gxp


def _pool_forward(x, layer):
    h, w, c = x.shape
    k, s = layer.pool_size, layer.pool_stride
    oh = (h - k) // s + 1
    ow = (w - k) // s + 1
    if oh < 1 or ow < 1:
        raise DimensionError(f"input {h}x{w} too small for {k}x{k} maxpool")
    taps = np.empty((k * k, oh, ow, c))
    for i in range(k):
        for j in range(k):
            taps[i * k + j] = x[i:i + s * oh:s, j:j + s * ow:s, :]
    # argmax over taps in (row, col) window order: ties go to the first
    # row-major maximal element
    arg = np.argmax(taps, axis=0)
    out = np.take_along_axis(taps, arg[None], axis=0)[0]
    return out, arg


def _pool_backward(x_shape, g, arg, layer):
    h, w, c = x_shape
    k, s = layer.pool_size, layer.pool_stride
    oh, ow, _ = g.shape
    gx = np.zeros((h, w, c))
    for i in range(k):
        for j in range(k):
            view = gx[i:i + s * oh:s, j:j + s * ow:s, :]
            view += np.where(arg == i * k + j, g, 0.0)
    return gx


def _apply_layers(layers, x, keep_cache=False):
    """Run ``x`` through ``layers``; optionally keep what backward needs."""
    caches = [] if keep_cache else None
    for layer in layers:
        if layer.kind == "conv":
            y = _conv_forward(x, layer)
            if keep_cache:
                caches.append(("conv", x.shape, layer))
        elif layer.kind == "relu":
            y = np.maximum(x, 0.0)
            if keep_cache:
                caches.append(("relu", x > 0, None))
        elif layer.kind == "maxpool":
            y, arg = _pool_forward(x, layer)
            if keep_cache:
                caches.append(("maxpool", (x.shape, arg), layer))
        else:  # pragma: no cover - load_network rejects unknown kinds
            raise FormatError(f"unknown layer kind '{layer.kind}'")
        x = y
    return (x, caches) if keep_cache else x


def _backprop_layers(caches, g):
    for kind, info, layer in reversed(caches):
        if kind == "conv":
            g = _conv_backward(info, g, layer)
        elif kind == "relu":
            g = np.where(info, g, 0.0)
        else:
            x_shape, arg = info
            g = _pool_backward(x_shape, g, arg, layer)
    return g


# ---------------------------------------------------------------------------
# public passes

def forward(net, img):
    """Compute the feature pyramid of an image, one map per pyramid tag.

    The image must be uint8 RGB with dims divisible by the total pooling
    factor up to the deepest tag.  Returns maps in tag order (fine to
    coarse), so index L-1 holds layer L.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"expected an RGB image (H, W, 3), got {img.shape}")
    factor = net.pooling_factor()
    h, w = img.shape[:2]
    if h % factor or w % factor:
        raise DimensionError(
            f"image dims {h}x{w} must be divisible by {factor} "
            f"(total pooling up to the deepest pyramid tag)")
    x = img.astype(np.float64) - net.mean
    feats = []
    if not net.tags:
        return feats
    last = net.tag_layer_index(net.tags[-1])
    for layer in net.layers[:last + 1]:
        x = _apply_layers([layer], x)
        if layer.tag:
            feats.append(x)
    return feats


def forward_subnet(net, from_tag, to_tag, x):
    """Apply the layers strictly after ``from_tag`` through ``to_tag``."""
    return _apply_layers(net.subnet_layers(from_tag, to_tag), np.asarray(x, dtype=np.float64))


def backward_subnet(net, from_tag, to_tag, x, upstream_grad):
    """Gradient of a scalar loss w.r.t. the subnet input.

    ``upstream_grad`` is the loss gradient w.r.t. the subnet output for
    this same ``x``.  ReLU gates by the forward sign, maxpool routes to
    the recorded argmax, conv backward is the transposed convolution.
    """
    layers = net.subnet_layers(from_tag, to_tag)
    y, caches = _apply_layers(layers, np.asarray(x, dtype=np.float64), keep_cache=True)
    g = np.asarray(upstream_grad, dtype=np.float64)
    if g.shape != y.shape:
        raise DimensionError(
            f"upstream gradient shape {g.shape} does not match subnet output {y.shape}")
    return _backprop_layers(caches, g)


def subnet_input_shape(net, from_tag, to_tag, out_shape):
    """Invert the shape algebra: input dims producing ``out_shape``.

    Conv inverts as (out-1)*stride + kernel - 2*pad; maxpool likewise
    without padding.  Channels come from the earliest conv's input side.
    """
    h, w, c = out_shape
    for layer in reversed(net.subnet_layers(from_tag, to_tag)):
        if layer.kind == "conv":
            h = (h - 1) * layer.stride + layer.kernel_h - 2 * layer.padding
            w = (w - 1) * layer.stride + layer.kernel_w - 2 * layer.padding
            c = layer.in_channels
        elif layer.kind == "maxpool":
            h = (h - 1) * layer.pool_stride + layer.pool_size
            w = (w - 1) * layer.pool_stride + layer.pool_size
    return h, w, c

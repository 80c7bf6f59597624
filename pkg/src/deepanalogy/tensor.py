"""Core value types and coordinate-level primitives.

Images are uint8 arrays of shape (H, W, 3).  Feature maps are float
arrays of shape (H, W, C), row-major.  A nearest-neighbor field (NNF)
assigns to each source position an integer (row, col) coordinate in a
target grid; it is the only type that needs more than a bare ndarray,
because the target bounds cannot be recovered from the coordinates.

All operations here are pure functions on immutable inputs.
"""

from dataclasses import dataclass

import numpy as np

NORM_EPS = 1e-12


class DimensionError(ValueError):
    """Raised when grid / map dimensions do not line up."""


@dataclass(frozen=True)
class NNField:
    """Dense field of target coordinates, one (row, col) per source position.

    coords : int32 array of shape (H, W, 2), last axis is (row, col).
    target_shape : (height, width) bounds every coordinate must lie in.
    """

    coords: np.ndarray
    target_shape: tuple

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=np.int32)
        if c.ndim != 3 or c.shape[2] != 2:
            raise DimensionError(f"NNF coords must be (H, W, 2), got {c.shape}")
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "target_shape", (int(self.target_shape[0]), int(self.target_shape[1])))
        th, tw = self.target_shape
        if th <= 0 or tw <= 0:
            raise DimensionError(f"NNF target bounds must be positive, got {self.target_shape}")
        rows, cols = c[..., 0], c[..., 1]
        if rows.min(initial=0) < 0 or cols.min(initial=0) < 0 \
                or rows.max(initial=0) >= th or cols.max(initial=0) >= tw:
            raise DimensionError("NNF coordinates fall outside the target bounds")

    @property
    def height(self):
        return self.coords.shape[0]

    @property
    def width(self):
        return self.coords.shape[1]

    @staticmethod
    def identity(height, width):
        """NNF mapping every position to itself (target grid == source grid)."""
        r, c = np.meshgrid(np.arange(height), np.arange(width), indexing="ij")
        return NNField(np.stack([r, c], axis=-1).astype(np.int32), (height, width))

    @staticmethod
    def random(height, width, target_shape, rng):
        """NNF with coordinates drawn uniformly over the target grid."""
        th, tw = target_shape
        r = rng.integers(0, th, size=(height, width))
        c = rng.integers(0, tw, size=(height, width))
        return NNField(np.stack([r, c], axis=-1).astype(np.int32), (th, tw))


def warp(src, nnf):
    """Gather ``src`` through an NNF: out[p] = src[nnf[p]].

    The NNF's target bounds must equal src's spatial dims; the output
    takes the NNF's spatial dims and src's channel count.
    """
    src = np.asarray(src)
    if nnf.target_shape != src.shape[:2]:
        raise DimensionError(
            f"NNF target bounds {nnf.target_shape} do not match source dims {src.shape[:2]}")
    return src[nnf.coords[..., 0], nnf.coords[..., 1]]


def upsample_nnf(nnf, new_height, new_width, new_target_height, new_target_width):
    """Upscale an NNF to a finer grid by nearest-neighbor interpolation.

    Each fine position p reads the nearest coarse source cell c and keeps
    that cell's displacement: the coarse target coordinate is rescaled by
    the exact ratio of target dims, and the sub-cell offset of p relative
    to the rescaled c is added back, so an identity NNF stays an identity
    NNF at the finer resolution.  Results are clamped into the new target
    bounds.
    """
    if new_height <= 0 or new_width <= 0 or new_target_height <= 0 or new_target_width <= 0:
        raise DimensionError("upsampled NNF dims must be positive")
    old_h, old_w = nnf.height, nnf.width
    old_th, old_tw = nnf.target_shape

    fine_r = np.arange(new_height)
    fine_c = np.arange(new_width)
    src_r = np.minimum((fine_r * old_h) // new_height, old_h - 1)
    src_c = np.minimum((fine_c * old_w) // new_width, old_w - 1)
    rr, cc = np.meshgrid(src_r, src_c, indexing="ij")

    ratio_th = new_target_height / old_th
    ratio_tw = new_target_width / old_tw
    ratio_sh = new_height / old_h
    ratio_sw = new_width / old_w

    coarse = nnf.coords[rr, cc]
    base_r = np.floor(coarse[..., 0] * ratio_th + 0.5).astype(np.int64)
    base_c = np.floor(coarse[..., 1] * ratio_tw + 0.5).astype(np.int64)
    # sub-cell offset of the fine position relative to its rescaled coarse cell
    off_r = fine_r[:, None] - np.floor(rr * ratio_sh + 0.5).astype(np.int64)
    off_c = fine_c[None, :] - np.floor(cc * ratio_sw + 0.5).astype(np.int64)

    out_r = np.clip(base_r + off_r, 0, new_target_height - 1)
    out_c = np.clip(base_c + off_c, 0, new_target_width - 1)
    return NNField(np.stack([out_r, out_c], axis=-1).astype(np.int32),
                   (new_target_height, new_target_width))


def normalize(src):
    """Scale each position's channel vector to unit Euclidean norm.

    Positions whose norm is <= 1e-12 come out all-zero instead of blowing
    up; relative channel patterns are what the patch metric compares.
    """
    src = np.asarray(src, dtype=np.float64)
    norm = np.sqrt(np.sum(src * src, axis=2))
    safe = np.where(norm > NORM_EPS, norm, 1.0)
    out = src / safe[..., None]
    out[norm <= NORM_EPS] = 0.0
    return out


def response_magnitude(src):
    """Per-position squared norm across channels, scaled into [0, 1].

    Division is by the spatial maximum, so the strongest response maps to
    exactly 1.  An all-zero map returns all zeros.
    """
    src = np.asarray(src, dtype=np.float64)
    mag = np.sum(src * src, axis=2)
    peak = mag.max()
    if peak <= 0.0:
        return np.zeros_like(mag)
    return mag / peak

"""Weighted fusion of warped and reconstructed latent features.

At each pyramid level the latent map is a convex blend of the warped
counterpart features and the deconvolved estimate.  The per-position
weight is a layer strength alpha times a steep sigmoid of the feature
response magnitude, so content structures keep their own appearance
and flat regions take the counterpart's.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .tensor import DimensionError, response_magnitude

DEFAULT_ALPHAS = {4: 0.8, 3: 0.7, 2: 0.6, 1: 0.1}

OFFSET_MIN = -0.1
OFFSET_MAX = 0.2


@dataclass
class AlphaSchedule:
    """Per-layer blend strengths with an optional global offset.

    The offset shifts every layer's alpha by the same amount and is the
    single user-facing control; effective values are clipped to [0, 1].
    """

    per_layer: dict = field(default_factory=lambda: dict(DEFAULT_ALPHAS))
    global_offset: float = 0.0

    def __post_init__(self):
        for layer, alpha in self.per_layer.items():
            if not 0.0 <= alpha <= 1.0:
                raise ValueError(f"alpha for layer {layer} must be in [0, 1], got {alpha}")
        if not OFFSET_MIN <= self.global_offset <= OFFSET_MAX:
            raise ValueError(
                f"global offset must be in [{OFFSET_MIN}, {OFFSET_MAX}], "
                f"got {self.global_offset}")

    def effective(self, layer):
        if layer not in self.per_layer:
            raise KeyError(f"no alpha configured for layer {layer}")
        return float(np.clip(self.per_layer[layer] + self.global_offset, 0.0, 1.0))

    @classmethod
    def preset(cls, name):
        """Named schedules: default, photo (+0.1), identical (all 1)."""
        if name == "default":
            return cls()
        if name == "photo":
            return cls(global_offset=0.1)
        if name == "identical":
            return cls(per_layer={k: 1.0 for k in DEFAULT_ALPHAS})
        raise ValueError(f"unknown preset '{name}'")


@dataclass
class SigmoidParams:
    kappa: float = 300.0
    tau: float = 0.05

    def __post_init__(self):
        if self.kappa <= 0:
            raise ValueError("kappa must be positive")


def weight_map(features, alpha, params=None):
    """Blend weights alpha * sigmoid(kappa * (m - tau)) from a feature map.

    m is the normalized squared response magnitude of ``features``, in
    [0, 1]; the steep sigmoid acts as a soft threshold around tau.
    Output values lie in [0, alpha].
    """
    if params is None:
        params = SigmoidParams()
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be in [0, 1], got {alpha}")
    m = response_magnitude(features)
    return alpha * expit(params.kappa * (m - params.tau))


def blend(content, detail, weights):
    """Convex combination weights * content + (1 - weights) * detail."""
    content = np.asarray(content, dtype=np.float64)
    detail = np.asarray(detail, dtype=np.float64)
    weights = np.asarray(weights, dtype=np.float64)
    if content.shape != detail.shape:
        raise DimensionError(
            f"maps to blend disagree: {content.shape} vs {detail.shape}")
    if weights.shape != content.shape[:2]:
        raise DimensionError(
            f"weights {weights.shape} do not match map grid {content.shape[:2]}")
    if weights.min() < 0.0 or weights.max() > 1.0:
        raise ValueError("weights must lie in [0, 1]")
    w = weights[:, :, None]
    return w * content + (1.0 - w) * detail

"""End-to-end visual attribute transfer between an image pair.

Given A (content) and B' (style), forwards both through the network,
then refines two nearest-neighbor fields coarse to fine.  At each level
the latent pyramids F_A' and F_B are rebuilt by warping the counterpart
features through the current field, deconvolving them one level down
and blending with the content features.  The coarsest level bypasses
fusion entirely (F_A' = F_A, F_B = F_B').  The finest field, carried to
pixel resolution, drives patch aggregation over the style image; the
reverse field produces B the same way from A.

Color-transfer mode post-processes both outputs with an edge-preserving
decomposition so only the low-frequency appearance is transferred.
"""

import time
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import net as _net
from .deconv import DeconvError, DeconvSettings, deconvolve
from .fuse import DEFAULT_ALPHAS, AlphaSchedule, SigmoidParams, blend, weight_map
from .match import MatchSettings, patchmatch
from .tensor import DimensionError, NNField, normalize, upsample_nnf, warp

# sentinel: random search spans the whole target grid (coarsest level)
FULL_GRID = 0

_SEED_MATCH_AB = 0
_SEED_MATCH_BA = 1
# one init stream feeds both directions' reconstructions at a level: their
# roles are symmetric, and independent draws would break that symmetry (for
# identical inputs the two latent pyramids must coincide exactly)
_SEED_DECONV = 2

MODES = ("full", "color_transfer")


def _sub_seed(seed, layer, code):
    # stable per-(layer, purpose) stream split of the user seed
    entropy = (int(seed) & 0xFFFFFFFFFFFFFFFF, int(layer), int(code))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def _check_image(img, name):
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimensionError(f"{name} must be (H, W, 3) RGB, got {img.shape}")
    if img.dtype != np.uint8:
        raise DimensionError(f"{name} must be 8-bit, got dtype {img.dtype}")
    return img


@dataclass
class PipelineConfig:
    """Per-level knobs for the coarse-to-fine refinement.

    Levels are indexed 1 (finest) to N (coarsest); every level tagged by
    the network needs an entry in each per-layer map.  A search radius
    of FULL_GRID (0) means the random search spans the whole target
    grid, which is the default at the coarsest level.
    """

    patch_radius_per_layer: dict
    search_radius_per_layer: dict
    sweeps_per_layer: dict
    alpha_schedule: AlphaSchedule = field(default_factory=AlphaSchedule)
    sigmoid_params: SigmoidParams = field(default_factory=SigmoidParams)
    deconv_settings: DeconvSettings = field(default_factory=DeconvSettings)
    seed: int = 0
    mode: str = "full"

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got '{self.mode}'")

    @classmethod
    def for_levels(cls, levels, sweeps=10, seed=0, mode="full",
                   alpha_schedule=None, deconv_settings=None):
        """Standard configuration for a network with `levels` tags.

        Patch radius 1 except at the two finest levels (radius 2, a
        5x5 patch); search radius 6 down to level 3, then 4, full-grid
        at the top.
        """
        if levels < 2:
            raise ValueError("need at least two pyramid levels")
        patch = {}
        search = {}
        sweep = {}
        for level in range(1, levels + 1):
            patch[level] = 2 if level <= 2 else 1
            if level == levels:
                search[level] = FULL_GRID
            else:
                search[level] = 6 if level >= 3 else 4
            sweep[level] = sweeps
        if alpha_schedule is None:
            per_layer = {}
            for level in range(1, levels):
                per_layer[level] = DEFAULT_ALPHAS.get(level, 0.8)
            alpha_schedule = AlphaSchedule(per_layer=per_layer)
        if deconv_settings is None:
            deconv_settings = DeconvSettings()
        return cls(patch_radius_per_layer=patch,
                   search_radius_per_layer=search,
                   sweeps_per_layer=sweep,
                   alpha_schedule=alpha_schedule,
                   deconv_settings=deconv_settings,
                   seed=seed, mode=mode)

    def validate_for(self, levels):
        for level in range(1, levels + 1):
            for name, table in (("patch radius", self.patch_radius_per_layer),
                                ("search radius", self.search_radius_per_layer),
                                ("sweeps", self.sweeps_per_layer)):
                if level not in table:
                    raise ValueError(f"no {name} configured for level {level}")
        for level in range(1, levels):
            if level not in self.alpha_schedule.per_layer:
                raise ValueError(f"no alpha configured for level {level}")


@dataclass
class AnalogyResult:
    """Both transfer outputs, the pixel-level fields, and diagnostics.

    diagnostics is a list of per-level records (finest last) holding the
    match cost trace per sweep, the deconvolution loss traces, and wall
    times; timings are informational only and excluded from any
    serialized form.
    """

    a_prime: np.ndarray
    b: np.ndarray
    phi_ab: NNField
    phi_ba: NNField
    diagnostics: list


def run(a, bprime, network, cfg=None):
    """Transfer appearance between A and B', returning both directions.

    Images may differ in size; both must be RGB with dims divisible by
    the network's total pooling factor.
    """
    a = _check_image(a, "A")
    bp = _check_image(bprime, "Bprime")
    levels = len(network.tags)
    if levels < 2:
        raise ValueError(
            f"network tags {levels} pyramid level(s); at least two are needed")
    if cfg is None:
        cfg = PipelineConfig.for_levels(levels)
    cfg.validate_for(levels)

    factor = network.pooling_factor()
    for name, img in (("A", a), ("Bprime", bp)):
        if img.shape[0] % factor or img.shape[1] % factor:
            raise DimensionError(
                f"{name} dims {img.shape[:2]} not divisible by the network "
                f"pooling factor {factor}")

    pyr_a = _net.forward(network, a)
    pyr_bp = _net.forward(network, bp)

    f_ap = [None] * levels
    f_b = [None] * levels
    f_ap[levels - 1] = pyr_a[levels - 1]
    f_b[levels - 1] = pyr_bp[levels - 1]

    phi_ab = None
    phi_ba = None
    diagnostics = []

    for level in range(levels, 0, -1):
        i = level - 1
        try:
            record = {"level": level}
            fa_n = normalize(pyr_a[i])
            fap_n = normalize(f_ap[i])
            fb_n = normalize(f_b[i])
            fbp_n = normalize(pyr_bp[i])

            patch_radius = cfg.patch_radius_per_layer[level]
            sweeps = cfg.sweeps_per_layer[level]
            search = cfg.search_radius_per_layer[level]
            search_ab = max(fb_n.shape[0], fb_n.shape[1]) if search == FULL_GRID else search
            search_ba = max(fa_n.shape[0], fa_n.shape[1]) if search == FULL_GRID else search

            t0 = time.perf_counter()
            phi_ab, costs_ab = patchmatch(
                fa_n, fap_n, fb_n, fbp_n, phi_ab,
                MatchSettings(patch_radius=patch_radius, iterations=sweeps,
                              search_radius=search_ab,
                              seed=_sub_seed(cfg.seed, level, _SEED_MATCH_AB)))
            phi_ba, costs_ba = patchmatch(
                fb_n, fbp_n, fa_n, fap_n, phi_ba,
                MatchSettings(patch_radius=patch_radius, iterations=sweeps,
                              search_radius=search_ba,
                              seed=_sub_seed(cfg.seed, level, _SEED_MATCH_BA)))
            t_match = time.perf_counter() - t0
            record["match_costs_ab"] = [float(c) for c in costs_ab]
            record["match_costs_ba"] = [float(c) for c in costs_ba]

            t_deconv = 0.0
            if level > 1:
                from_tag = network.tags[i - 1]
                to_tag = network.tags[i]
                alpha = cfg.alpha_schedule.effective(level - 1)

                t0 = time.perf_counter()
                r_bp, losses_ab = deconvolve(
                    network, from_tag, to_tag, warp(pyr_bp[i], phi_ab),
                    replace(cfg.deconv_settings,
                            seed=_sub_seed(cfg.seed, level, _SEED_DECONV)))
                w_a = weight_map(pyr_a[i - 1], alpha, cfg.sigmoid_params)
                f_ap[i - 1] = blend(pyr_a[i - 1], r_bp, w_a)

                r_a, losses_ba = deconvolve(
                    network, from_tag, to_tag, warp(pyr_a[i], phi_ba),
                    replace(cfg.deconv_settings,
                            seed=_sub_seed(cfg.seed, level, _SEED_DECONV)))
                w_bp = weight_map(pyr_bp[i - 1], alpha, cfg.sigmoid_params)
                f_b[i - 1] = blend(pyr_bp[i - 1], r_a, w_bp)
                t_deconv = time.perf_counter() - t0

                record["deconv_losses_ab"] = [float(v) for v in losses_ab]
                record["deconv_losses_ba"] = [float(v) for v in losses_ba]

                ah, aw = pyr_a[i - 1].shape[:2]
                bh, bw = pyr_bp[i - 1].shape[:2]
                phi_ab = upsample_nnf(phi_ab, ah, aw, bh, bw)
                phi_ba = upsample_nnf(phi_ba, bh, bw, ah, aw)

            record["timings"] = {"match": t_match, "deconv": t_deconv}
            diagnostics.append(record)
        except (DimensionError, DeconvError) as exc:
            raise type(exc)(f"level {level}: {exc}") from exc

    if (phi_ab.height, phi_ab.width) != a.shape[:2]:
        phi_ab = upsample_nnf(phi_ab, a.shape[0], a.shape[1],
                              bp.shape[0], bp.shape[1])
        phi_ba = upsample_nnf(phi_ba, bp.shape[0], bp.shape[1],
                              a.shape[0], a.shape[1])

    a_prime = aggregate_output(bp, phi_ab)
    b_out = aggregate_output(a, phi_ba)
    if cfg.mode == "color_transfer":
        a_prime = wls_refine(a, a_prime)
        b_out = wls_refine(bp, b_out)

    return AnalogyResult(a_prime=a_prime, b=b_out, phi_ab=phi_ab,
                         phi_ba=phi_ba, diagnostics=diagnostics)


def aggregate_output(source, nnf, patch_radius=2):
    """Render an image by averaging patch votes through the field.

    Output pixel p averages source(nnf(x) + (p - x)) over the patch
    neighborhood x around p, with both x and the source coordinate
    clamped; every neighborhood contributes exactly (2r+1)^2 votes.
    With the identity field the votes all land on p and the source is
    reproduced exactly.  Rounds half away from zero per channel.
    """
    source = _check_image(source, "source")
    if nnf.target_shape != source.shape[:2]:
        raise DimensionError(
            f"field target bounds {nnf.target_shape} do not match source dims "
            f"{source.shape[:2]}")
    h, w = nnf.height, nnf.width
    sh, sw = source.shape[:2]
    rows = np.arange(h)[:, None]
    cols = np.arange(w)[None, :]
    coords = nnf.coords
    src = source.astype(np.float64)
    acc = np.zeros((h, w, 3))
    r = int(patch_radius)
    for dy in range(-r, r + 1):
        xr = np.clip(rows + dy, 0, h - 1)
        for dx in range(-r, r + 1):
            xc = np.clip(cols + dx, 0, w - 1)
            tr = np.clip(coords[xr, xc, 0] + (rows - xr), 0, sh - 1)
            tc = np.clip(coords[xr, xc, 1] + (cols - xc), 0, sw - 1)
            acc += src[tr, tc]
    mean = acc / float((2 * r + 1) ** 2)
    return np.clip(np.floor(mean + 0.5), 0.0, 255.0).astype(np.uint8)


WLS_EPS = 1e-4
WLS_RESIDUAL_TOL = 1e-6


def _wls_matrix(guide, lam, alpha_exp):
    # smoothness weights from the guide's log-luminance gradients
    g = guide.astype(np.float64) / 255.0
    lum = 0.299 * g[:, :, 0] + 0.587 * g[:, :, 1] + 0.114 * g[:, :, 2]
    log_l = np.log(lum + WLS_EPS)
    h, w = log_l.shape
    gx = np.zeros((h, w))
    gy = np.zeros((h, w))
    gx[:, :-1] = lam / (np.abs(np.diff(log_l, axis=1)) ** alpha_exp + WLS_EPS)
    gy[:-1, :] = lam / (np.abs(np.diff(log_l, axis=0)) ** alpha_exp + WLS_EPS)

    w_right = gx.ravel()
    w_down = gy.ravel()
    w_left = np.roll(w_right, 1)
    w_left[0] = 0.0
    w_up = np.roll(w_down, w)
    w_up[:w] = 0.0
    main = 1.0 + w_right + w_left + w_down + w_up
    return sparse.diags(
        [-w_up[w:], -w_left[1:], main, -w_right[:-1], -w_down[:-w]],
        [-w, -1, 0, 1, w], format="csc")


def wls_refine(guide, image, lam=1.0, alpha_exp=1.2):
    """Replace the image's base layer while keeping the guide's detail.

    Computes guide + (smooth(image) - smooth(guide)) where smooth is an
    edge-preserving least-squares filter steered by the guide; when
    image == guide the two smooth terms cancel and the guide is
    returned unchanged.
    """
    guide = _check_image(guide, "guide")
    image = _check_image(image, "image")
    if guide.shape != image.shape:
        raise DimensionError(
            f"guide dims {guide.shape} do not match image dims {image.shape}")

    mat = _wls_matrix(guide, lam, alpha_exp)
    solver = splu(mat)

    def smooth(img):
        out = np.empty(img.shape)
        for c in range(3):
            b = img[:, :, c].astype(np.float64).ravel()
            x = solver.solve(b)
            scale = np.linalg.norm(b)
            residual = np.linalg.norm(mat @ x - b)
            if scale > 0:
                residual /= scale
            if residual > WLS_RESIDUAL_TOL:
                raise RuntimeError(
                    f"smoothing solve residual {residual:.3e} exceeds "
                    f"{WLS_RESIDUAL_TOL}")
            out[:, :, c] = x.reshape(img.shape[:2])
        return out

    base_shift = smooth(image) - smooth(guide)
    out = guide.astype(np.float64) + base_shift
    return np.clip(np.floor(out + 0.5), 0.0, 255.0).astype(np.uint8)

"""Bidirectional visual attribute transfer over CNN feature pyramids.

A pair of images is matched through nearest-neighbor fields refined
coarse to fine across the network's tagged activation levels; latent
feature pyramids reconstructed by warping, deconvolution and weighted
fusion tie the two directions together.  See pipeline.run for the
orchestration and cli for the command-line front end.
"""

from .deconv import DeconvError, DeconvSettings, deconvolve, init_guess
from .fuse import (DEFAULT_ALPHAS, AlphaSchedule, SigmoidParams, blend,
                   weight_map)
from .match import (MatchSettings, exhaustive_nnf, patch_cost, patchmatch,
                    total_cost)
from .net import (FormatError, LayerDescriptor, Network, backward_subnet,
                  forward, forward_subnet, load_network, load_network_files,
                  subnet_input_shape)
from .pipeline import (FULL_GRID, AnalogyResult, PipelineConfig,
                       aggregate_output, run, wls_refine)
from .tensor import (DimensionError, NNField, normalize, response_magnitude,
                     upsample_nnf, warp)

__all__ = [
    "AlphaSchedule",
    "AnalogyResult",
    "DEFAULT_ALPHAS",
    "DeconvError",
    "DeconvSettings",
    "DimensionError",
    "FULL_GRID",
    "FormatError",
    "LayerDescriptor",
    "MatchSettings",
    "NNField",
    "Network",
    "PipelineConfig",
    "SigmoidParams",
    "aggregate_output",
    "backward_subnet",
    "blend",
    "deconvolve",
    "exhaustive_nnf",
    "forward",
    "forward_subnet",
    "init_guess",
    "load_network",
    "load_network_files",
    "normalize",
    "patch_cost",
    "patchmatch",
    "response_magnitude",
    "run",
    "subnet_input_shape",
    "total_cost",
    "upsample_nnf",
    "warp",
    "weight_map",
    "wls_refine",
]

__version__ = "0.1.0"

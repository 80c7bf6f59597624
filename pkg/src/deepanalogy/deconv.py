"""Feature inversion for the reconstruction step.

Given target features at layer L, recover an input feature map at layer
L-1 whose forward pass through the L-1 -> L sub-network reproduces the
target in the least-squares sense.  Plain gradient descent with a
backtracking (Armijo) line search is enough here: the loss at accepted
steps is guaranteed non-increasing, which is the contract the rest of
the pipeline relies on.
"""

from dataclasses import dataclass

import numpy as np

from . import net as _net


class DeconvError(RuntimeError):
    """Raised when the inversion hits a non-finite loss or gradient."""


@dataclass
class DeconvSettings:
    max_iterations: int = 400
    rel_tolerance: float = 1e-5
    initial_step: float = 1.0
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 40
    seed: int = 0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.rel_tolerance <= 0:
            raise ValueError("rel_tolerance must be > 0")


def init_guess(target_std, dims, seed):
    """Gaussian starting point matched to the target's overall spread.

    Zero-mean with standard deviation equal to the target map's; a
    constant target (std 0) starts from all zeros.  Deterministic for a
    fixed seed.
    """
    rng = np.random.default_rng(seed)
    if target_std <= 0:
        return np.zeros(dims)
    return rng.normal(0.0, target_std, size=dims)


def deconvolve(network, from_tag, to_tag, target, settings=None):
    """Invert a sub-network: find R minimizing ||subnet(R) - target||^2.

    Returns ``(R, losses)`` where ``losses`` is the loss after the
    initial point and after every accepted step; it is monotonically
    non-increasing.  Iteration stops when the relative loss change drops
    below ``rel_tolerance`` or ``max_iterations`` is reached; the final
    loss is never worse than the initial one.
    """
    if settings is None:
        settings = DeconvSettings()
    target = np.asarray(target, dtype=np.float64)
    dims = _net.subnet_input_shape(network, from_tag, to_tag, target.shape)
    layers = network.subnet_layers(from_tag, to_tag)

    r = init_guess(float(target.std()), dims, settings.seed)

    def value_and_cache(x):
        y, caches = _net._apply_layers(layers, x, keep_cache=True)
        resid = y - target
        return float(np.sum(resid * resid)), resid, caches

    loss, resid, caches = value_and_cache(r)
    if not np.isfinite(loss):
        raise DeconvError("non-finite loss at iteration 0")
    losses = [loss]
    step = settings.initial_step

    for it in range(1, settings.max_iterations + 1):
        grad = _net._backprop_layers(caches, 2.0 * resid)
        if not np.all(np.isfinite(grad)):
            raise DeconvError(f"non-finite gradient at iteration {it}")
        gnorm2 = float(np.sum(grad * grad))
        if gnorm2 == 0.0:
            break

        # backtracking line search, growing the step again after success
        step = step * 2.0
        accepted = False
        for _ in range(settings.max_backtracks):
            cand = r - step * grad
            cand_loss, cand_resid, cand_caches = value_and_cache(cand)
            if not np.isfinite(cand_loss):
                raise DeconvError(f"non-finite loss at iteration {it}")
            if cand_loss <= loss - settings.armijo_c * step * gnorm2:
                accepted = True
                break
            step *= settings.backtrack_factor
        if not accepted:
            break  # no descent at machine scale: treat as converged

        rel_change = (loss - cand_loss) / max(loss, 1e-300)
        r, loss, resid, caches = cand, cand_loss, cand_resid, cand_caches
        losses.append(loss)
        if rel_change < settings.rel_tolerance:
            break

    return r, losses

"""Laplacian-weighted gradient descent (LGD) and its noisy variant (NLGD).

Thin wrapper around the compiled ``_nlgd`` extension. Stacked vectors are
flat numpy arrays of length m*n with agent blocks of size n.
"""

from ._nlgd import *  # noqa: F401,F403
from ._nlgd import Algorithm, RunConfig, run

__all__ = [name for name in dir() if not name.startswith("_")]


def config(algorithm="LGD", step_size=1e-3, noise_std=0.0, max_iters=1, seed=0, record_every=1, **extra):
    """RunConfig from keyword arguments; ``noise_std`` is the per-coordinate standard deviation."""
    c = RunConfig()
    c.algorithm = getattr(Algorithm, algorithm.upper()) if isinstance(algorithm, str) else algorithm
    c.step_size = step_size
    c.noise_variance = noise_std ** 2
    c.max_iters = max_iters
    c.seed = seed
    c.record_every = record_every
    for key, value in extra.items():
        setattr(c, key, value)
    return c


def solve(problem, net, theta0, **kwargs):
    """Shorthand for ``run(problem, net, theta0, config(**kwargs))``."""
    return run(problem, net, theta0, config(**kwargs))

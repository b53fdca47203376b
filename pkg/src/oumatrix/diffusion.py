"""Ornstein-Uhlenbeck integrators and exact transition samplers for GUE and Ginibre matrices.

Noise conventions (per unit time):

* GUE: diagonal entries are real with increment variance dt/N; each of the
  real and imaginary parts of an off-diagonal entry has variance dt/(2N).
* Ginibre: every entry is complex with variance dt/(2N) on each part.

Both processes drift as dX = -a X dtau.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConfigurationError,
    ContractError,
    EnsembleBatch,
    GinibreMatrix,
    HermitianMatrix,
    OUParams,
    rng_stream,
)

BLOCK_SIZE = 256


def gue_noise(rng: np.random.Generator, shape: tuple, n: int) -> np.ndarray:
    """Standard GUE draws of trailing size n with <|W_ij|^2> = 1/N and diagonal variance 1/N."""
    size = tuple(shape) + (n, n)
    g = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return (g + np.swapaxes(g, -1, -2).conj()) / (2.0 * np.sqrt(n))


def ginibre_noise(rng: np.random.Generator, shape: tuple, n: int) -> np.ndarray:
    """Standard complex Ginibre draws with <|W_ij|^2> = 1/N."""
    size = tuple(shape) + (n, n)
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2.0 * n)


def transition_variance(tau: float, a: float) -> float:
    """sigma^2 = (1 - exp(-2 a tau)) / (2a), with the free-diffusion limit tau at a = 0."""
    if tau < 0:
        raise ContractError(f"tau must be >= 0, got {tau}")
    if a == 0:
        if np.isinf(tau):
            raise ContractError("free diffusion has no stationary state (a = 0, tau = inf)")
        return float(tau)
    return float(-np.expm1(-2.0 * a * tau) / (2.0 * a))


@dataclass(frozen=True)
class DiffusionState:
    matrix: np.ndarray
    tau: float
    params: OUParams
    kind: str = "hermitian"

    def __post_init__(self):
        m = self.matrix
        if isinstance(m, (HermitianMatrix, GinibreMatrix)):
            m = m.entries
        object.__setattr__(self, "matrix", np.asarray(m, dtype=np.complex128))
        if self.tau < 0:
            raise ContractError("tau must be >= 0")


def _check_stability(params: OUParams, dt: float):
    if dt * params.a >= 1:
        raise ConfigurationError(f"explicit Euler drift is unstable for dt*a = {dt * params.a} >= 1")


def _euler(m, params: OUParams, rng, noise, dt=None, noise_scale=1.0, w=None):
    dt = params.dt if dt is None else dt
    _check_stability(params, dt)
    if w is None:
        w = noise(rng, m.shape[:-2], m.shape[-1])
    return m * (1.0 - params.a * dt) + (noise_scale * np.sqrt(dt)) * w


def step_gue(state: DiffusionState, rng: np.random.Generator, noise_scale: float = 1.0) -> DiffusionState:
    """One Euler-Maruyama step of the hermitian OU process.

    Works on a single matrix or a stack of shape (..., N, N). Hermiticity is
    preserved bit-exactly because the noise is built as (G + G^dagger)/2.
    """
    m = _euler(state.matrix, state.params, rng, gue_noise, noise_scale=noise_scale)
    return replace(state, matrix=m, tau=state.tau + state.params.dt)


def step_ginibre(
    state: DiffusionState, rng: np.random.Generator | None, noise_scale: float = 1.0, noise: np.ndarray | None = None
) -> DiffusionState:
    """One Euler-Maruyama step of the Ginibre OU process.

    ``noise`` may carry pre-drawn standard Ginibre increments (as from
    :func:`ginibre_noise`); ``rng`` is then unused.
    """
    m = _euler(state.matrix, state.params, rng, ginibre_noise, noise_scale=noise_scale, w=noise)
    return replace(state, matrix=m, tau=state.tau + state.params.dt)


def _transition(x0, tau, params, rng, noise, shape=()):
    sigma2 = transition_variance(tau, params.a)
    x0 = np.asarray(x0.entries if hasattr(x0, "entries") else x0, dtype=np.complex128)
    decay = np.exp(-params.a * tau) if params.a > 0 else 1.0
    w = noise(rng, shape, x0.shape[-1])
    return x0 * decay + np.sqrt(sigma2) * w


def sample_gue_transition(h0, tau: float, params: OUParams, rng: np.random.Generator, shape: tuple = ()) -> np.ndarray:
    """Draw H(tau) given H(0) = h0 from the exact Gaussian transition kernel.

    ``shape`` adds leading sample dimensions. With tau = inf (and a > 0)
    this samples the stationary ensemble.
    """
    return _transition(h0, tau, params, rng, gue_noise, shape)


def sample_ginibre_transition(x0, tau: float, params: OUParams, rng: np.random.Generator, shape: tuple = ()) -> np.ndarray:
    return _transition(x0, tau, params, rng, ginibre_noise, shape)


def _blocks(n_samples: int, block_size: int):
    starts = range(0, n_samples, block_size)
    return [(i, s, min(block_size, n_samples - s)) for i, s in enumerate(starts)]


def map_blocks(fn, n_samples: int, workers: int = 1, block_size: int = BLOCK_SIZE) -> list:
    """Run fn(block_index, count) over fixed-size blocks and return results in block order.

    Block boundaries depend only on n_samples and block_size, so results do
    not depend on ``workers``.
    """
    jobs = _blocks(n_samples, block_size)
    if workers <= 1 or len(jobs) == 1:
        return [fn(i, c) for i, _, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(job[0], job[2]), jobs))


def sample_ensemble(
    kind: str,
    initial,
    tau: float,
    params: OUParams,
    n_samples: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
    stream_offset: int = 0,
) -> EnsembleBatch:
    """Exact-transition samples, one RNG stream per fixed-size block."""
    if n_samples < 1:
        raise ContractError("n_samples must be >= 1")
    if kind == "hermitian":
        sampler = sample_gue_transition
    elif kind == "ginibre":
        sampler = sample_ginibre_transition
    else:
        raise ContractError(f"unknown ensemble kind {kind!r}")
    x0 = np.asarray(initial.entries if hasattr(initial, "entries") else initial, dtype=np.complex128)

    def block(i, count):
        rng = rng_stream(params.seed, stream_offset + i)
        return sampler(x0, tau, params, rng, shape=(count,))

    samples = np.concatenate(map_blocks(block, n_samples, workers, block_size))
    return EnsembleBatch(params=params, tau=tau, samples=samples, initial=x0, kind=kind)


def integrate(state: DiffusionState, n_steps: int, rng: np.random.Generator, noise_scale: float = 1.0) -> DiffusionState:
    step = step_gue if state.kind == "hermitian" else step_ginibre
    for _ in range(n_steps):
        state = step(state, rng, noise_scale)
    return state

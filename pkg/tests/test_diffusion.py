import numpy as np
import pytest

from oumatrix.core import ConfigurationError, ContractError, OUParams, rng_stream
from oumatrix.diffusion import (
    DiffusionState,
    ginibre_noise,
    gue_noise,
    integrate,
    map_blocks,
    sample_ensemble,
    sample_ginibre_transition,
    sample_gue_transition,
    step_ginibre,
    step_gue,
    transition_variance,
)


def test_gue_noise_is_exactly_hermitian(rng):
    w = gue_noise(rng, (10,), 5)
    assert np.array_equal(w, np.swapaxes(w, -1, -2).conj())


def test_gue_noise_moments(rng):
    n = 4
    w = gue_noise(rng, (200_000,), n)
    diag = w[:, 0, 0].real
    off = w[:, 0, 1]
    # diagonal variance 1/N, each part of an off-diagonal entry 1/(2N)
    assert diag.var() == pytest.approx(1 / n, rel=0.02)
    assert off.real.var() == pytest.approx(1 / (2 * n), rel=0.02)
    assert off.imag.var() == pytest.approx(1 / (2 * n), rel=0.02)
    assert abs(np.mean(off.real * off.imag)) < 0.005


def test_ginibre_noise_moments(rng):
    n = 3
    w = ginibre_noise(rng, (200_000,), n)
    assert np.mean(np.abs(w[:, 1, 2]) ** 2) == pytest.approx(1 / n, rel=0.02)
    assert abs(np.mean(w[:, 1, 2] ** 2)) < 0.005  # circular: <X^2> = 0


def test_transition_variance_values():
    assert transition_variance(0.0, 0.5) == 0.0
    assert transition_variance(1.3, 0.0) == 1.3
    assert transition_variance(np.inf, 0.5) == 1.0
    assert transition_variance(1.0, 0.5) == pytest.approx(1 - np.exp(-1.0))
    with pytest.raises(ContractError):
        transition_variance(-1.0, 0.5)
    with pytest.raises(ContractError):
        transition_variance(np.inf, 0.0)


def test_step_gue_preserves_hermiticity_exactly(rng):
    p = OUParams(a=0.5, n=5)
    s = DiffusionState(np.zeros((5, 5)), 0.0, p)
    for _ in range(50):
        s = step_gue(s, rng)
    assert np.array_equal(s.matrix, s.matrix.conj().T)
    assert s.tau == pytest.approx(50 * p.dt)


def test_unstable_step_rejected(rng):
    p = OUParams(a=2.0, n=2, dt=0.6)
    with pytest.raises(ConfigurationError):
        step_gue(DiffusionState(np.zeros((2, 2)), 0.0, p), rng)


def test_step_ginibre_with_predrawn_noise():
    p = OUParams(a=0.5, n=2, dt=0.01)
    w = np.array([[1, 2j], [0, -1]], dtype=complex)
    s = step_ginibre(DiffusionState(np.eye(2), 0.0, p, "ginibre"), None, noise=w)
    assert np.allclose(s.matrix, np.eye(2) * (1 - 0.005) + 0.1 * w)


def test_exact_transition_moments(rng):
    p = OUParams(a=0.5, n=3)
    h0 = np.diag([1.0, 0.0, -1.0])
    tau = 0.8
    x = sample_gue_transition(h0, tau, p, rng, shape=(100_000,))
    decay = np.exp(-0.5 * tau)
    var = transition_variance(tau, 0.5)
    assert x[:, 0, 0].real.mean() == pytest.approx(decay, abs=0.01)
    assert x[:, 0, 0].real.var() == pytest.approx(var / 3, rel=0.02)
    assert x[:, 0, 1].real.var() == pytest.approx(var / 6, rel=0.02)
    g = sample_ginibre_transition(np.zeros((3, 3)), np.inf, p, rng, shape=(100_000,))
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1 / 3, rel=0.01)


def test_euler_matches_exact_transition():
    # integrator and sampler are independent routes to the same law
    p = OUParams(a=1.0, n=2, dt=1e-3, seed=9)
    h0 = np.diag([1.0, -1.0]).astype(complex)
    s = DiffusionState(np.broadcast_to(h0, (20_000, 2, 2)).copy(), 0.0, p)
    s = integrate(s, 500, rng_stream(9, 0))
    exact = sample_gue_transition(h0, 0.5, p, rng_stream(9, 1), shape=(20_000,))
    for sel in (lambda m: m[:, 0, 0].real, lambda m: m[:, 0, 1].real, lambda m: m[:, 1, 1].real):
        a, b = sel(s.matrix), sel(exact)
        assert a.mean() == pytest.approx(b.mean(), abs=0.015)
        assert a.var() == pytest.approx(b.var(), rel=0.05)


def test_map_blocks_order_and_worker_invariance():
    out1 = map_blocks(lambda i, c: (i, c), 1000, workers=1, block_size=256)
    out4 = map_blocks(lambda i, c: (i, c), 1000, workers=4, block_size=256)
    assert out1 == out4 == [(0, 256), (1, 256), (2, 256), (3, 232)]


def test_sample_ensemble_worker_invariance():
    p = OUParams(a=0.5, n=4, seed=3)
    a = sample_ensemble("ginibre", np.zeros((4, 4)), 1.0, p, 700, workers=1)
    b = sample_ensemble("ginibre", np.zeros((4, 4)), 1.0, p, 700, workers=3)
    assert np.array_equal(a.samples, b.samples)
    c = sample_ensemble("ginibre", np.zeros((4, 4)), 1.0, p, 700, stream_offset=1)
    assert not np.array_equal(a.samples, c.samples)
    with pytest.raises(ContractError):
        sample_ensemble("orthogonal", np.zeros((4, 4)), 1.0, p, 10)

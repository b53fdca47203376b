import warnings

import numpy as np
import pytest

from oumatrix import analytic as an
from oumatrix import observables as ob
from oumatrix.core import ContractError, OUParams, QuaternionArgument
from oumatrix.diffusion import sample_ensemble
from oumatrix.eigen import batch_eigen_overlaps


@pytest.fixture(scope="module")
def gue64():
    return sample_ensemble("hermitian", np.zeros((64, 64)), np.inf, OUParams(0.5, 64, seed=21), 200)


@pytest.fixture(scope="module")
def gin64():
    return sample_ensemble("ginibre", np.zeros((64, 64)), np.inf, OUParams(0.5, 64, seed=22), 200)


def test_jackknife_mean_matches_standard_error(rng):
    x = rng.normal(size=500)
    est = ob.jackknife(x)
    assert est.value == pytest.approx(x.mean())
    assert est.se == pytest.approx(x.std(ddof=1) / np.sqrt(500), rel=1e-10)


def test_jackknife_nonlinear_matches_delta_method(rng):
    x = rng.normal(2.0, 0.3, size=(4000, 2))
    est = ob.jackknife(x, lambda m: m[0] * m[1])
    # delta method: var(m0 m1) ~ (m1^2 s0^2 + m0^2 s1^2)/n
    m = x.mean(axis=0)
    s = x.std(axis=0, ddof=1)
    delta = np.sqrt((m[1] ** 2 * s[0] ** 2 + m[0] ** 2 * s[1] ** 2) / 4000)
    assert est.se == pytest.approx(delta, rel=0.05)


def test_resolvent_trivial_and_asymptotic(gue64):
    zero = np.zeros((3, 4, 4))
    assert ob.resolvent_mc(2.0, zero).value == pytest.approx(0.5)
    assert abs(100j * ob.resolvent_mc(100j, gue64).value - 1) < 0.01


def test_resolvent_gue_against_closed_form(gue64):
    est = ob.resolvent_mc(3.0, gue64)
    assert abs(est.value - (3 - np.sqrt(5)) / 2) <= 3 * est.se


def test_resolvent_skips_singular_samples():
    h = np.stack([np.diag([1.0, -1.0]), np.diag([0.5, 2.0]), np.diag([0.5, 3.0])])
    with pytest.warns(RuntimeWarning):
        est = ob.resolvent_mc(1.0, h)
    assert est.skipped == 1
    assert est.value == pytest.approx(np.mean([0.5 * (1 / 0.5 + 1 / -1.0), 0.5 * (1 / 0.5 + 1 / -2.0)]))


def test_standard_error_scales_with_sample_count():
    p = OUParams(0.5, 8, seed=4)
    small = sample_ensemble("hermitian", np.zeros((8, 8)), np.inf, p, 2000)
    large = sample_ensemble("hermitian", np.zeros((8, 8)), np.inf, p, 4000, stream_offset=100)
    for f in (lambda b: ob.resolvent_mc(0.5 + 0.5j, b), lambda b: ob.acp_mc(0.7 + 0.2j, b)):
        ratio = f(small).se / f(large).se
        assert ratio == pytest.approx(np.sqrt(2), rel=0.2)


def test_density_real_examples(gue64):
    ones = np.broadcast_to(np.eye(3), (4, 3, 3))
    h = ob.density_real(ones, bins=4, range=(0.0, 2.0))
    assert list(h.counts) == [0, 0, 12, 0]
    assert h.integral() == pytest.approx(1.0, abs=1e-12)
    g = ob.density_real(gue64)
    assert g.integral() == pytest.approx(1.0, abs=1e-12)
    theory = np.diff(an.wigner_cdf(g.edges)) / np.diff(g.edges)
    assert np.sum(np.abs(g.density - theory) * np.diff(g.edges)) < 0.05


def test_density_real_free_diffusion_radius():
    # a = 0 from H0 = 0 at tau = 1: semicircle of radius 2
    b = sample_ensemble("hermitian", np.zeros((32, 32)), 1.0, OUParams(0.0, 32, seed=5), 100)
    h = ob.density_real(b, 40, (-2.2, 2.2))
    theory = np.diff(an.wigner_cdf(h.edges, 0.5)) / np.diff(h.edges)
    assert np.sum(np.abs(h.density - theory) * np.diff(h.edges)) < 0.06


def test_density_complex_examples(gin64):
    h = ob.density_complex(np.zeros((5, 3, 3)), ob.equal_area_edges(1.0, 4))
    assert list(h.counts) == [15, 0, 0, 0]
    assert h.integral() == pytest.approx(1.0, abs=1e-12)
    vals = np.linalg.eigvals(gin64.samples)
    h = ob.density_complex(vals, ob.equal_area_edges(0.8, 8))
    assert np.all(np.abs(h.density * np.pi * h.counts.sum() / vals.size - 1) < 0.1)
    grid = ob.density_complex(vals, grid=(np.linspace(-1.5, 1.5, 13), np.linspace(-1.5, 1.5, 13)))
    assert grid.density.shape == (12, 12)
    assert grid.integral() == pytest.approx(1.0, abs=1e-12)


def test_density_complex_free_ginibre():
    b = sample_ensemble("ginibre", np.zeros((48, 48)), 1.0, OUParams(0.0, 48, seed=6), 150)
    h = ob.density_complex(b, np.concatenate([ob.equal_area_edges(0.8, 6), [3.0]]))
    assert np.all(np.abs(h.density[:6] * np.pi - 1) < 0.1)


def test_gauss_law_on_closed_forms():
    x = np.linspace(0.5, 1.5, 41)
    xx, yy = np.meshgrid(x, x)
    z = xx + 1j * yy
    rho = ob.density_from_gauss_law(1 / z, x[1] - x[0])
    assert np.abs(rho[1:-1, 1:-1]).max() < 1e-3
    assert np.abs(rho).max() < 2e-2  # one-sided differences on the boundary
    assert np.allclose(ob.density_from_gauss_law(np.conj(z), x[1] - x[0]), 1 / np.pi)
    with pytest.warns(RuntimeWarning):
        ob.density_from_gauss_law(np.conj(z[:3, :3]), 0.2)


def test_gauss_law_on_monte_carlo_field():
    b = sample_ensemble("ginibre", np.zeros((64, 64)), np.inf, OUParams(0.5, 64, seed=23), 16)
    x = np.linspace(-1.2, 1.2, 25)
    h = x[1] - x[0]
    field = np.array([[ob.generalized_resolvent_mc(QuaternionArgument(complex(xi, yi), 0.01), b).g11 for xi in x] for yi in x])
    rho = ob.density_from_gauss_law(field, h)
    interior = np.abs(x[:, None] + 1j * x[None, :]) < 0.6
    assert np.abs(rho[interior].mean() * np.pi - 1) < 0.15
    assert np.sum(rho) * h * h == pytest.approx(1.0, abs=0.05)


def test_generalized_resolvent_trivial():
    g = ob.generalized_resolvent_mc(QuaternionArgument(0.0, 1.0), np.zeros((3, 5, 5)))
    assert np.allclose(g.matrix(), [[0, 1], [-1, 0]])
    with pytest.raises(ContractError):
        ob.generalized_resolvent_mc(QuaternionArgument(0.5, 0.0), np.zeros((3, 5, 5)))


def test_generalized_resolvent_structure(gin64):
    g = ob.generalized_resolvent_mc(QuaternionArgument(0.3 + 0.2j, 0.1), gin64)
    assert np.array_equal(g.per_sample[:, 1, 1], np.conj(g.per_sample[:, 0, 0]))
    assert g.g1bar1bar == np.conj(g.g11)


def test_generalized_resolvent_overlap_density(gin64):
    z, w = 0.5, ob.DEFAULT_REGULATOR
    est = ob.generalized_resolvent_mc(QuaternionArgument(z, w), gin64).overlap_density()
    g = an.ginibre_generalized_resolvent(z, w)
    assert abs(est.value - (-(g[0, 1] * g[1, 0]) / np.pi).real) <= 3 * est.se
    assert est.value.real == pytest.approx(0.75 / np.pi, rel=0.1)


def test_generalized_resolvent_outside_disc(gin64):
    w = 1e-6
    g = ob.generalized_resolvent_mc(QuaternionArgument(2.0, w), gin64)
    assert abs(g.g11 - 0.5) <= 3 * g.se[0, 0]
    # off-diagonals are a deterministic O(|w|) term, not noise: they vanish with w
    th = an.ginibre_generalized_resolvent(2.0, w)
    assert abs(g.g11bar) < 10 * w
    assert g.g11bar.real == pytest.approx(th[0, 1].real, rel=0.05)
    assert abs(ob.generalized_resolvent_mc(QuaternionArgument(2.0, w / 10), gin64).g11bar) < abs(g.g11bar) / 5


def test_acp_mc_examples():
    h = np.broadcast_to(np.diag([1.0, -1.0]), (5, 2, 2))
    est = ob.acp_mc(2.0, h)
    assert est.value == pytest.approx(3.0)
    b = sample_ensemble("hermitian", np.zeros((2, 2)), 1.0, OUParams(0.0, 2, seed=8), 50_000)
    est = ob.acp_mc(0.8, b)
    assert abs(est.value - (0.64 - 0.5)) <= 3 * est.se
    big = ob.acp_mc(50.0, b)
    assert abs(big.value / 2500 - 1) < 1e-3


def test_acp_mc_real_axis_phases(rng):
    sym = rng.normal(size=(20, 4, 4))
    sym = sym + np.swapaxes(sym, -1, -2)
    s, _ = np.linalg.slogdet(0.3 * np.eye(4) - sym.astype(complex))
    assert np.all(s.imag == 0)
    b = sample_ensemble("hermitian", np.zeros((4, 4)), np.inf, OUParams(0.5, 4, seed=9), 20_000)
    est = ob.acp_mc(0.4, b)
    assert abs(est.value.imag) <= 3 * est.se_im


def test_acp_mc_large_n_does_not_overflow():
    b = sample_ensemble("hermitian", np.zeros((200, 200)), np.inf, OUParams(0.5, 200, seed=10), 4)
    est = ob.acp_mc(20.0, b)
    assert np.isfinite(est.value)
    with pytest.raises(OverflowError):
        ob.acp_mc(1e4, b)


def test_qdet_mc_examples():
    z, w = 0.6 - 0.3j, 0.4 + 0.2j
    est = ob.qdet_mc(QuaternionArgument(z, w), np.zeros((3, 4, 4)))
    assert est.value == pytest.approx((abs(z) ** 2 + abs(w) ** 2) ** 4)
    b = sample_ensemble("ginibre", np.zeros((2, 2)), 0.5, OUParams(0.0, 2, seed=11), 50_000)
    est = ob.qdet_mc(QuaternionArgument(1.0, 0.3), b)
    exact = an.qdet_from_initial(np.zeros((2, 2)), 1.0, 0.3, 0.5, 0.0)
    assert abs(est.value - exact) <= 3 * est.se
    assert abs(est.value.imag) <= 3 * est.se_im + 1e-12


def test_correlator_hermitian_and_conservation(gue64, gin64):
    lam = np.linalg.eigvalsh(gue64.samples[:50])
    fld = ob.correlator_estimate(lam, np.ones_like(lam), np.array([0.0, 0.5, 1.0, 1.5, 2.5]))
    # O = 1: the field carries rho/N
    assert fld.integral() == pytest.approx(1 / 64, abs=1e-12)
    vals, od = batch_eigen_overlaps(gin64.samples)
    fld = ob.correlator_estimate(vals, od, np.concatenate([ob.equal_area_edges(1.0, 10), [5.0]]))
    assert fld.integral() == pytest.approx(fld.total, abs=1e-12)
    assert np.all(fld.se[fld.counts > 1] > 0)
    empty = ob.correlator_estimate(vals, od, np.array([6.0, 7.0]))
    assert empty.counts[0] == 0


def test_correlator_free_ginibre():
    b = sample_ensemble("ginibre", np.zeros((64, 64)), 1.0, OUParams(0.0, 64, seed=31), 200)
    vals, od = batch_eigen_overlaps(b.samples)
    edges = np.concatenate([ob.equal_area_edges(0.7, 3), [1.0, 3.0]])
    fld = ob.correlator_estimate(vals, od, edges)
    theory = (1 - 0.5 * (edges[1:4] ** 2 + edges[:3] ** 2)) / np.pi
    assert np.all(np.abs(fld.value[:3] / theory - 1) < 0.15)


def test_edge_profile_plateau_and_tail():
    b = sample_ensemble("ginibre", np.zeros((64, 64)), np.inf, OUParams(0.5, 64, seed=12), 300)
    prof = ob.edge_profile(np.linalg.eigvals(b.samples), 64, (-6.0, 6.0), 0.5)
    deep = prof.centers < -4
    assert np.all(np.abs(prof.density[deep] * np.pi - 1) < 0.1)
    assert np.all(prof.density[prof.centers > 4] < 1e-3)
    with pytest.warns(RuntimeWarning):
        ob.edge_profile(np.zeros((1, 10)), 64)

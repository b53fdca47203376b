import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import quad

from oumatrix import analytic as an
from oumatrix.core import ContractError
from oumatrix.diffusion import transition_variance


def test_wigner_green_values():
    # a(z - sqrt(z^2 - 2/a)) at a = 1/2, z = 3 gives (3 - sqrt 5)/2
    assert an.wigner_green(3.0) == pytest.approx(0.3819660112501051, abs=1e-15)
    assert an.wigner_green(-3.0) == pytest.approx(-0.3819660112501051, abs=1e-15)
    g = an.wigner_green(0.5)
    assert g.real == pytest.approx(0.25)
    assert g.imag == pytest.approx(-np.sqrt(3.75) / 2)
    assert abs(100j * an.wigner_green(100j) - 1) < 1e-3


def test_wigner_density_is_boundary_value_and_normalized():
    for x in (-1.5, 0.0, 0.7, 1.9):
        assert an.wigner_density(x) == pytest.approx(-an.wigner_green(x).imag / np.pi)
        assert an.wigner_density(x) == pytest.approx(np.sqrt(4 - x * x) / (2 * np.pi))
    assert quad(an.wigner_density, -2, 2)[0] == pytest.approx(1.0, abs=1e-10)
    assert an.wigner_cdf(0.3) == pytest.approx(quad(an.wigner_density, -2, 0.3)[0], abs=1e-10)
    assert an.wigner_density(2.5) == 0.0


def test_ginibre_laws():
    rho, o = an.ginibre_macroscopic(0.5)
    assert rho == pytest.approx(1 / np.pi)
    assert o == pytest.approx(0.75 / np.pi)  # (1/pi)(1 - 0.25) = 0.2387
    assert an.ginibre_macroscopic(1.0)[0] == pytest.approx(1 / np.pi)  # closed disc
    assert an.ginibre_macroscopic(1.01) == (0.0, 0.0)
    rho, o = an.free_ginibre_laws(0.5, 2.0)
    assert rho == pytest.approx(1 / (2 * np.pi))
    assert o == pytest.approx(1.75 / (4 * np.pi))
    # the free law at tau' is the Lamperti image of the stationary one
    tau = 0.9
    tp = np.expm1(2 * 0.5 * tau) / (2 * 0.5)
    z = 0.3
    zp = np.exp(0.5 * tau) * z
    # equal-time ensembles coincide after rescaling by e^{a tau}
    assert an.free_ginibre_laws(zp, tp)[0] * np.exp(tau) == pytest.approx(1 / (np.pi * transition_variance(tau, 0.5)))


def test_lamperti_map_values():
    im = an.lamperti_map(1.0 + 1j, 1.0, 0.5, 4)
    assert im.z_prime == pytest.approx(np.exp(0.5) * (1 + 1j))
    assert im.tau_prime == pytest.approx(1.718281828459045)
    assert im.prefactor == pytest.approx(np.exp(-2.0))
    assert im.prefactor == pytest.approx((1 + 2 * 0.5 * im.tau_prime) ** (-2))
    gi = an.lamperti_map(1.0, 1.0, 0.5, 4, "ginibre")
    assert gi.prefactor == pytest.approx(np.exp(-4.0))
    free = an.lamperti_map(2.0, 0.3, 0.0, 3)
    assert (free.z_prime, free.tau_prime, free.prefactor) == (2.0, 0.3, 1.0)
    with pytest.raises(ContractError):
        an.lamperti_map(1.0, 1.0, 0.5, 2, "orthogonal")


def test_heat_evolve_acp_examples():
    p = an.PolynomialInZ([0, 0, 1])  # z^2
    # exp(-(tau/2N) d^2) z^2 = z^2 - tau/N
    assert np.allclose(an.heat_evolve_acp(p, 1.0, 2).coeffs, [-0.5, 0, 1])
    # z^4 -> z^4 - 6 c z^2 + 3 c^2 with c = tau/N (Hermite structure)
    q = an.heat_evolve_acp(an.PolynomialInZ([0, 0, 0, 0, 1]), 1.0, 2)
    assert np.allclose(q.coeffs, [0.75, 0, -3.0, 0, 1])


def test_acp_closed_form_n2():
    # det(z - H) = (z - h11)(z - h22) - |h12|^2, so U = z^2 - sigma^2/2 from H0 = 0
    for a, tau in ((0.0, 1.0), (0.5, 0.7), (1.3, 2.0)):
        s2 = transition_variance(tau, a)
        for z in (0.0, 1.5, 0.3 + 0.8j):
            assert an.acp_from_initial(np.zeros((2, 2)), z, tau, a) == pytest.approx(z * z - s2 / 2, abs=1e-12)


def test_acp_at_zero_time_is_the_characteristic_polynomial():
    h0 = np.diag([1.0, -0.5, 2.0])
    z = np.array([0.1, 1.7 + 0.2j])
    assert np.allclose(an.acp_from_initial(h0, z, 0.0, 0.5), [np.linalg.det(zz * np.eye(3) - h0) for zz in z])


def test_qdet_closed_form_n1():
    # N = 1: D = |z - x0 e^{-a tau}|^2 + sigma^2 + |w|^2
    x0 = np.array([[0.3 + 0.1j]])
    for a, tau in ((0.0, 0.4), (0.5, 0.7)):
        s2 = transition_variance(tau, a)
        for z, w in ((0.2, 0.5), (1 + 1j, 0.1j)):
            want = abs(z - x0[0, 0] * np.exp(-a * tau)) ** 2 + s2 + abs(w) ** 2
            assert an.qdet_from_initial(x0, z, w, tau, a) == pytest.approx(want, rel=1e-12)


def test_qdet_at_zero_time_and_block_identity(rng):
    x0 = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    z, w = 0.4 - 0.2j, 0.7 + 0.1j
    blk = np.block([[z * np.eye(3) - x0, -np.conj(w) * np.eye(3)], [w * np.eye(3), np.conj(z) * np.eye(3) - x0.conj().T]])
    assert an.qdet_from_initial(x0, z, w, 0.0, 0.5) == pytest.approx(np.linalg.det(blk), rel=1e-10)
    # X0 = 0: D = (|z|^2 + |w|^2)^N
    assert an.qdet_from_initial(np.zeros((3, 3)), z, w, 0.0, 0.5) == pytest.approx((abs(z) ** 2 + abs(w) ** 2) ** 3)


def test_pde_residuals_and_controls():
    h0 = np.diag([0.5, -0.5])
    good = lambda z, t: an.acp_from_initial(h0, z, t, 0.5)  # noqa: E731
    bad = lambda z, t: an.acp_from_initial(h0, z, t, 0.5, sign=1.0)  # noqa: E731
    assert an.pde_residual_acp(good, 0.3 + 0.7j, 0.8, 0.5, 2) < 1e-5
    assert an.pde_residual_acp(bad, 0.3 + 0.7j, 0.8, 0.5, 2) > 0.1
    free = lambda z, t: an.acp_from_initial(h0, z, t, 0.0)  # noqa: E731
    assert an.pde_residual_acp(free, 0.3 + 0.7j, 0.8, 0.0, 2) < 1e-5
    x0 = np.zeros((2, 2))
    d = lambda z, r, t: an.qdet_from_initial(x0, z, r, t, 0.5)  # noqa: E731
    db = lambda z, r, t: an.qdet_from_initial(x0, z, r, t, 0.5, sign=-1.0)  # noqa: E731
    assert an.pde_residual_qdet(d, 0.4 + 0.2j, 0.5, 0.6, 0.5, 2) < 1e-5
    assert an.pde_residual_qdet(db, 0.4 + 0.2j, 0.5, 0.6, 0.5, 2) > 0.1


def test_pde_residual_errors():
    with pytest.raises(ContractError):
        an.pde_residual_acp(lambda z, t: 0.0, 0.1, 1.0, 0.5, 2)
    with pytest.raises(ContractError):
        an.pde_residual_acp(lambda z, t: 1.0, 0.1, 1e-4, 0.5, 2)
    with pytest.raises(ContractError):
        an.pde_residual_qdet(lambda z, r, t: 1.0, 0.1, 0.01, 1.0, 0.5, 2)


@given(st.floats(-3, 3), st.floats(0.05, 3).flatmap(lambda y: st.sampled_from([y, -y])))
def test_stationary_burgers_property(x, y):
    res = an.stationary_burgers_residual(complex(x, y))
    assert res.algebraic < 1e-12
    assert res.pde < 1e-6


@given(st.floats(0.01, 3), st.floats(0.05, 4))
def test_characteristics_closed_root_at_origin(r, tau):
    v = an.burgers_characteristics(0.0, r, tau)
    assert v == pytest.approx((-r + np.sqrt(r * r + 4 * tau)) / (2 * tau), abs=1e-10)


@given(st.floats(0.05, 4), st.floats(0, 0.95), st.floats(0, 2 * np.pi))
def test_characteristics_interior_overlap_identity(tau, frac, phase):
    z = np.sqrt(tau) * frac * np.exp(1j * phase)
    v = an.burgers_characteristics(z, 0.0, tau)
    assert v * v == pytest.approx((tau - abs(z) ** 2) / tau**2, abs=1e-6)
    # pi times the overlap correlator of the free law
    assert v * v == pytest.approx(np.pi * an.free_ginibre_laws(z, tau)[1], abs=1e-6)


def test_characteristics_outside_support_and_failure():
    assert an.burgers_characteristics(2.0, 0.0, 1.0) == 0.0
    with pytest.raises(RuntimeError):
        an.burgers_characteristics(0.0, 0.5, 1.0, v0=lambda r: 1.0 + r)


def test_erfc_edge_values():
    assert an.erfc_edge(0.0) == pytest.approx(1 / (2 * np.pi))
    assert an.erfc_edge(-8.0) == pytest.approx(1 / np.pi)
    assert an.erfc_edge(8.0) < 1e-40


def test_finite_n_density_limits():
    assert an.ginibre_finite_density(0.5, 64) == pytest.approx(1 / np.pi, rel=1e-10)
    assert quad(lambda r: 2 * np.pi * r * an.ginibre_finite_density(r, 8), 0, 5)[0] == pytest.approx(1.0, abs=1e-8)
    # near the edge it approaches the erfc law as N grows
    eta = 0.5
    dev = [abs(an.ginibre_finite_density(1 + eta / np.sqrt(n), n) / an.erfc_edge(eta) - 1) for n in (64, 1024, 16384)]
    assert dev[0] > dev[1] > dev[2]


def test_generalized_resolvent_theory():
    for z, w in ((0.5, 0.1), (0.2 + 0.3j, 0.05j), (1.5, 0.2), (0.0, 1.0)):
        g = an.ginibre_generalized_resolvent(z, w)
        assert an.r_transform_residual(g, z, w) < 1e-10
        assert g[1, 1] == pytest.approx(np.conj(g[0, 0]))
    g = an.ginibre_generalized_resolvent(0.5, 1e-7)
    assert (-(g[0, 1] * g[1, 0]) / np.pi).real == pytest.approx(0.75 / np.pi, rel=1e-6)
    assert g[0, 0] == pytest.approx(0.5, rel=1e-6)  # zbar inside the disc
    g = an.ginibre_generalized_resolvent(2.0, 1e-7)
    assert g[0, 0] == pytest.approx(0.5, rel=1e-6)  # 1/z outside
    assert abs(g[0, 1]) < 1e-6
    with pytest.raises(ContractError):
        an.ginibre_generalized_resolvent(0.5, 0.0)

"""Closed-form side: macroscopic laws, Lamperti maps, exact polynomial solutions and PDE residuals."""

from __future__ import annotations

from dataclasses import dataclass
from math import factorial
from typing import Callable, NamedTuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.optimize import brentq
from scipy.special import erfc, gammaincc

from .core import ContractError

__all__ = [
    "PolynomialInZ",
    "RadialPolynomial",
    "LampertiImage",
    "wigner_green",
    "wigner_density",
    "wigner_cdf",
    "ginibre_macroscopic",
    "free_ginibre_laws",
    "ginibre_finite_density",
    "ginibre_generalized_resolvent",
    "r_transform_residual",
    "lamperti_map",
    "heat_evolve_acp",
    "heat_evolve_qdet",
    "acp_from_initial",
    "qdet_from_initial",
    "pde_residual_acp",
    "pde_residual_qdet",
    "burgers_characteristics",
    "erfc_edge",
    "stationary_burgers_residual",
]


# -- polynomial containers ---------------------------------------------------


@dataclass(frozen=True)
class PolynomialInZ:
    """Polynomial sum_k c_k z^k (ascending coefficients)."""

    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, z):
        return P.polyval(np.asarray(z, dtype=np.complex128), self.coeffs)

    @classmethod
    def characteristic(cls, m) -> "PolynomialInZ":
        """det(z - m) for a square matrix m."""
        m = np.atleast_2d(np.asarray(m, dtype=np.complex128))
        return cls(np.poly(m)[::-1])


@dataclass(frozen=True)
class RadialPolynomial:
    """Polynomial sum_k d_k s^k in s = |w|^2 at a fixed probe z."""

    z: complex
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coeffs", np.atleast_1d(np.asarray(self.coeffs, dtype=np.complex128)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, s):
        return P.polyval(np.asarray(s, dtype=np.complex128), self.coeffs)

    @classmethod
    def from_initial(cls, x0, z: complex) -> "RadialPolynomial":
        """det[(z - X0)(conj(z) - X0^dagger) + s] as a polynomial in s."""
        x0 = np.atleast_2d(np.asarray(x0, dtype=np.complex128))
        a = z * np.eye(len(x0)) - x0
        m = a @ a.conj().T
        # np.poly(-m) gives det(s + m)
        return cls(complex(z), np.poly(-m)[::-1])


# -- GUE closed forms --------------------------------------------------------


def wigner_green(z, a: float = 0.5):
    """Stationary resolvent G(z) = a (z - sqrt(z^2 - 2/a)), branch with G ~ 1/z.

    Points on the real axis are read as z + i0+.
    """
    if a <= 0:
        raise ContractError("wigner_green needs a > 0")
    z = np.asarray(z, dtype=np.complex128)
    # turn a signed-zero imaginary part into +0 so the cut is approached from above
    z = z.real + 1j * np.where(z.imag == 0, 0.0, z.imag)
    r = np.sqrt(2.0 / a)
    g = a * (z - np.sqrt(z - r) * np.sqrt(z + r))
    return g[()] if g.ndim == 0 else g


def wigner_density(x, a: float = 0.5):
    if a <= 0:
        raise ContractError("wigner_density needs a > 0")
    x = np.asarray(x, dtype=float)
    r2 = 2.0 / a
    out = (a / np.pi) * np.sqrt(np.clip(r2 - x * x, 0.0, None))
    return out[()] if out.ndim == 0 else out


def wigner_cdf(x, a: float = 0.5):
    r = np.sqrt(2.0 / a)
    u = np.clip(np.asarray(x, dtype=float) / r, -1.0, 1.0)
    return 0.5 + (u * np.sqrt(1 - u * u) + np.arcsin(u)) / np.pi


# -- Ginibre closed forms ----------------------------------------------------


def ginibre_macroscopic(z, a: float = 0.5):
    """(density, overlap correlator) of the stationary ensemble; the disc is closed."""
    if a <= 0:
        raise ContractError("ginibre_macroscopic needs a > 0")
    r2 = np.abs(np.asarray(z)) ** 2
    inside = r2 <= 1.0 / (2 * a)
    rho = np.where(inside, 2 * a / np.pi, 0.0)
    overlap = np.where(inside, 4 * a * a / np.pi * (1.0 / (2 * a) - r2), 0.0)
    return rho[()], overlap[()]


def free_ginibre_laws(z, tau: float):
    """(density, overlap correlator) for free diffusion from X0 = 0 after time tau."""
    if tau <= 0:
        raise ContractError("free_ginibre_laws needs tau > 0")
    r2 = np.abs(np.asarray(z)) ** 2
    inside = r2 <= tau
    rho = np.where(inside, 1.0 / (np.pi * tau), 0.0)
    overlap = np.where(inside, (tau - r2) / (np.pi * tau * tau), 0.0)
    return rho[()], overlap[()]


def ginibre_finite_density(r, n: int, variance: float = 1.0):
    """Exact one-point density of an N x N Ginibre matrix with <|X_ij|^2> = variance/N."""
    r = np.asarray(r, dtype=float)
    return gammaincc(n, n * r * r / variance) / (np.pi * variance)


def ginibre_generalized_resolvent(z: complex, w: complex, variance: float = 1.0) -> np.ndarray:
    """Large-N 2x2 generalized resolvent of a centred Ginibre matrix with <|X_ij|^2> = variance/N.

    Solves G = (Q - R[G])^-1 with R[G] = variance * [[0, G_11bar], [G_1bar1, 0]].
    Writing t = 1 - variance/Delta, Delta = det(Q - R), the fixed point reduces
    to |z|^2 t^3 + (variance - |z|^2) t^2 + |w|^2 t - |w|^2 = 0; the physical
    root is the largest one in (0, 1].
    """
    if abs(w) == 0:
        raise ContractError("the regulator w must be non-zero")
    zz, ww = abs(z) ** 2, abs(w) ** 2
    roots = np.roots([zz, variance - zz, ww, -ww]) if zz > 0 else np.roots([variance, ww, -ww])
    real = roots[np.abs(roots.imag) <= 1e-9 * max(1.0, np.abs(roots).max())].real
    t = real[(real > 0) & (real <= 1 + 1e-12)].max()
    delta = variance / (1 - t) if t < 1 else np.inf
    if np.isinf(delta):
        return np.zeros((2, 2), dtype=np.complex128)
    z, w = complex(z), complex(w)
    return np.array(
        [[z.conjugate() / delta, w.conjugate() / (t * delta)], [-w / (t * delta), z / delta]],
        dtype=np.complex128,
    )


def r_transform_residual(g: np.ndarray, z: complex, w: complex, variance: float = 1.0) -> float:
    """|| R[G] + G^-1 - Q || for the Ginibre R-transform R[G] = variance * offdiag(G)."""
    z, w = complex(z), complex(w)
    q = np.array([[z, -w.conjugate()], [w, z.conjugate()]])
    r = variance * np.array([[0, g[0, 1]], [g[1, 0], 0]])
    return float(np.linalg.norm(r + np.linalg.inv(g) - q))


def erfc_edge(eta):
    """Microscopic edge profile (1/2pi) erfc(sqrt(2) eta)."""
    return erfc(np.sqrt(2.0) * np.asarray(eta, dtype=float)) / (2 * np.pi)


# -- Lamperti map --------------------------------------------------------------


@dataclass(frozen=True)
class LampertiImage:
    z_prime: complex
    tau_prime: float
    prefactor: float
    exponent: float  # prefactor = (1 + 2a tau')**(-exponent)


def lamperti_map(z, tau: float, a: float, n: int, variant: str = "hermitian") -> LampertiImage:
    """z' = e^{a tau} z, tau' = (e^{2 a tau} - 1)/(2a), prefactor (1 + 2 a tau')^(-N/2).

    The ginibre variant doubles the exponent (N -> 2N).
    """
    if a < 0:
        raise ContractError("a must be >= 0")
    if variant not in ("hermitian", "ginibre"):
        raise ContractError(f"unknown variant {variant!r}")
    exponent = n / 2 if variant == "hermitian" else float(n)
    if a == 0:
        return LampertiImage(complex(z), float(tau), 1.0, exponent)
    tau_p = float(np.expm1(2 * a * tau) / (2 * a))
    # (1 + 2a tau') = e^{2 a tau}
    prefactor = float(np.exp(-2 * a * tau * exponent))
    return LampertiImage(complex(np.exp(a * tau) * z), tau_p, prefactor, exponent)


# -- exact heat-operator solutions ---------------------------------------------


def heat_evolve_acp(p0: PolynomialInZ, tau_prime: float, n: int, sign: float = -1.0) -> PolynomialInZ:
    """Apply exp(sign * tau'/(2N) d^2/dz^2) to p0 (terminating series).

    sign = -1 solves dU'/dtau' = -(1/2N) U'_zz exactly; sign = +1 is the
    wrong-sign control.
    """
    c = np.asarray(p0.coeffs, dtype=np.complex128)
    out = c.copy()
    term = c
    k = 0
    while True:
        k += 1
        term = P.polyder(term, 2) if len(term) > 2 else np.zeros(1, dtype=np.complex128)
        if not np.any(term):
            break
        coef = (sign * tau_prime / (2 * n)) ** k / factorial(k)
        out[: len(term)] += coef * term
    return PolynomialInZ(out)


def _radial_laplacian(d: np.ndarray) -> np.ndarray:
    # d_w d_wbar s^k = k^2 s^(k-1)
    k = np.arange(1, len(d))
    return d[1:] * k * k if len(d) > 1 else np.zeros(1, dtype=np.complex128)


def heat_evolve_qdet(d0: RadialPolynomial, tau_prime: float, n: int, sign: float = 1.0) -> RadialPolynomial:
    """Apply exp(sign * (tau'/N) d_w d_wbar) to a polynomial in s = |w|^2."""
    c = np.asarray(d0.coeffs, dtype=np.complex128)
    out = c.copy()
    term = c
    j = 0
    while len(term) > 1:
        j += 1
        term = _radial_laplacian(term)
        out[: len(term)] += (sign * tau_prime / n) ** j / factorial(j) * term
    return RadialPolynomial(d0.z, out)


def acp_from_initial(h0, z, tau: float, a: float, n: int | None = None, sign: float = -1.0):
    """<det(z - H)>_tau for the OU process started at h0, exact for any N."""
    h0 = np.atleast_2d(np.asarray(h0, dtype=np.complex128))
    n = len(h0) if n is None else n
    if len(h0) != n:
        raise ContractError("h0 dimension does not match n")
    lm = lamperti_map(1.0, tau, a, n, "hermitian")
    evolved = heat_evolve_acp(PolynomialInZ.characteristic(h0), lm.tau_prime, n, sign)
    scale = lm.z_prime  # e^{a tau}
    out = lm.prefactor * evolved(scale * np.asarray(z, dtype=np.complex128))
    return out[()] if np.ndim(out) == 0 else out


def qdet_from_initial(x0, z: complex, w, tau: float, a: float, n: int | None = None, sign: float = 1.0):
    """<det(Q - X)>_tau for the Ginibre OU process started at x0, exact for any N.

    ``w`` may be an array; the result depends on it only through |w|^2.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.complex128))
    n = len(x0) if n is None else n
    if len(x0) != n:
        raise ContractError("x0 dimension does not match n")
    lm = lamperti_map(z, tau, a, n, "ginibre")
    d0 = RadialPolynomial.from_initial(x0, lm.z_prime)
    evolved = heat_evolve_qdet(d0, lm.tau_prime, n, sign)
    growth = np.exp(2 * a * tau)
    s_prime = growth * np.abs(np.asarray(w)) ** 2
    out = lm.prefactor * evolved(s_prime)
    return out[()] if np.ndim(out) == 0 else out


# -- PDE residuals -------------------------------------------------------------


def pde_residual_acp(u: Callable, z: complex, tau: float, a: float, n: int, h_z: float = 1e-3, h_tau: float = 1e-3) -> float:
    """Relative residual of dU/dtau = -(1/2N) U_zz + a z U_z - a N U by central differences.

    ``u(z, tau)`` must be holomorphic in z; derivatives are taken along the
    real direction.
    """
    if tau < h_tau:
        raise ContractError("tau must exceed the time step of the stencil")
    u0 = u(z, tau)
    if abs(u0) < 1e-30:
        raise ContractError("U vanishes at the probe; relative residual undefined")
    up, um = u(z + h_z, tau), u(z - h_z, tau)
    u_t = (u(z, tau + h_tau) - u(z, tau - h_tau)) / (2 * h_tau)
    u_z = (up - um) / (2 * h_z)
    u_zz = (up - 2 * u0 + um) / h_z**2
    res = u_t + u_zz / (2 * n) - a * z * u_z + a * n * u0
    return float(abs(res) / abs(u0))


def pde_residual_qdet(d: Callable, z: complex, w: complex, tau: float, a: float, n: int, h: float = 1e-3) -> float:
    """Relative residual of dD/dtau = (1/N) d_w d_wbar D - 2 N a D + a (z d_z + zbar d_zbar + w d_w + wbar d_wbar) D.

    ``d(z, r, tau)`` is evaluated with r = |w|. Radial derivatives are taken
    in s = |w|^2, where d_w d_wbar = s D_ss + D_s and w d_w + wbar d_wbar = 2 s D_s;
    the z part of the Euler operator is x D_x + y D_y.
    """
    s0 = abs(w) ** 2
    if s0 <= h:
        raise ContractError("|w|^2 must exceed the radial step")
    if tau < h:
        raise ContractError("tau must exceed the time step of the stencil")
    z = complex(z)
    r0 = np.sqrt(s0)
    d0 = d(z, r0, tau)
    if abs(d0) < 1e-30:
        raise ContractError("D vanishes at the probe; relative residual undefined")
    d_t = (d(z, r0, tau + h) - d(z, r0, tau - h)) / (2 * h)
    d_x = (d(z + h, r0, tau) - d(z - h, r0, tau)) / (2 * h)
    d_y = (d(z + 1j * h, r0, tau) - d(z - 1j * h, r0, tau)) / (2 * h)
    sp, sm = d(z, np.sqrt(s0 + h), tau), d(z, np.sqrt(s0 - h), tau)
    d_s = (sp - sm) / (2 * h)
    d_ss = (sp - 2 * d0 + sm) / h**2
    lap = s0 * d_ss + d_s
    euler = z.real * d_x + z.imag * d_y + 2 * s0 * d_s
    res = d_t - lap / n + 2 * n * a * d0 - a * euler
    return float(abs(res) / abs(d0))


class BurgersResidual(NamedTuple):
    algebraic: float
    pde: float


def stationary_burgers_residual(z: complex, a: float = 0.5, green: Callable | None = None, h: float = 1e-4) -> BurgersResidual:
    """Residuals of (1/2) G^2 - a z G + a = 0 and of G G_z - a (z G)_z = 0 (time derivative dropped)."""
    if a <= 0:
        raise ContractError("a must be > 0")
    g = (lambda x: wigner_green(x, a)) if green is None else green
    g0 = g(z)
    alg = abs(0.5 * g0 * g0 - a * z * g0 + a)
    gp, gm = g(z + h), g(z - h)
    g_z = (gp - gm) / (2 * h)
    zg_z = ((z + h) * gp - (z - h) * gm) / (2 * h)
    return BurgersResidual(float(alg), float(abs(g0 * g_z - a * zg_z)))


# -- characteristics -------------------------------------------------------------


def initial_profile(z_prime: complex) -> Callable[[float], float]:
    """v0(r) = r / (|z|^2 + r^2), the profile for X0 = 0."""
    zz = abs(z_prime) ** 2

    def v0(r):
        return r / (zz + r * r)

    return v0


def burgers_characteristics(
    z_prime: complex, r_prime: float, tau_prime: float, v0: Callable[[float], float] | None = None, v_max: float | None = None
) -> float:
    """Smallest non-negative root of v = v0(r' + tau' v).

    Returns 0 when v = 0 is the only admissible root (outside the support at
    r' = 0). Raises RuntimeError when no sign change is found in the bracket,
    which signals a post-shock configuration.
    """
    if r_prime < 0 or tau_prime <= 0:
        raise ContractError("need r' >= 0 and tau' > 0")
    v0 = initial_profile(z_prime) if v0 is None else v0

    def f(v):
        return v - v0(r_prime + tau_prime * v)

    lo = 0.0 if r_prime > 0 else 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        f_lo = f(lo)
    if not np.isfinite(f_lo):
        lo = 1e-150
        f_lo = f(lo)
    if f_lo >= 0:
        return 0.0
    hi = v_max if v_max is not None else 1.0
    for _ in range(200):
        if f(hi) > 0:
            break
        hi *= 2
    else:
        raise RuntimeError("no root of the characteristic equation in the bracket")
    # smallest root: scan for the first sign change before refining
    grid = lo + (hi - lo) * np.linspace(0, 1, 257)[1:]
    vals = np.array([f(v) for v in grid])
    first = int(np.argmax(vals > 0))
    a_ = lo if first == 0 else grid[first - 1]
    return float(brentq(f, a_, grid[first], xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500))
